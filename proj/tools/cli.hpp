#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include "vdg/calibration.hpp"
#include "vdg/io.hpp"

namespace vdg::cli {

struct Streams {
  std::istream& in;
  std::ostream& out;
  std::ostream& err;
  bool prompt = false;  ///< print protocol prompts for an operator at a terminal
};

/// Runs one `vdg` invocation; `args` excludes the program name. Returns the exit code.
int run(const std::vector<std::string>& args, Streams io);

json point_calibration_to_json(const PointCalibration& c);
PointCalibration point_calibration_from_json(const json& j, const std::string& where);

}  // namespace vdg::cli
