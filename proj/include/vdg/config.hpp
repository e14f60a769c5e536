#pragma once

#include <filesystem>

#include "vdg/io.hpp"
#include "vdg/outer_loop.hpp"
#include "vdg/robot.hpp"
#include "vdg/vm_controller.hpp"

namespace vdg {

/// Robot description. Lengths and angles carry explicit units
/// (`units: {length: "mm"|"m", angle: "deg"|"rad"}`); inertia is always kg·m²
/// and gravity m/s².
RobotModel robot_from_json(const json& j);
RobotModel load_robot(const std::filesystem::path& path);
/// SI units with full rotation matrices, so reading it back reproduces the model bit for bit.
json robot_to_json(const RobotModel& model);

/// Missing sections keep their defaults. Values are SI.
ControllerParams controller_params_from_json(const json& j);
json controller_params_to_json(const ControllerParams& p);
ControllerParams load_controller_params(const std::filesystem::path& path);

OuterLoopParams outer_loop_params_from_json(const json& j);
json outer_loop_params_to_json(const OuterLoopParams& p);

}  // namespace vdg
