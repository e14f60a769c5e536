#pragma once

#include "json.hpp"

#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "vdg/calibration.hpp"
#include "vdg/geometry.hpp"

namespace vdg {

using json = nlohmann::json;

/// Field access that raises SchemaError naming `where.key` on absence or type mismatch.
const json& require(const json& j, std::string_view key, const std::string& where);
double require_number(const json& j, std::string_view key, const std::string& where);
Eigen::Vector3d require_vec3(const json& j, std::string_view key, const std::string& where);
Eigen::Vector3d as_vec3(const json& j, const std::string& where);
json vec_to_json(const Eigen::VectorXd& v);

/// `{from, to, q: [w,x,y,z], t: [x,y,z]}`; the quaternion is normalised on read.
json transform_to_json(const RigidTransform& t);
RigidTransform transform_from_json(const json& j, const std::string& where);

/// Recording line `{t, from, to, q, tr, valid}`.
json entry_to_json(const RecordingEntry& e);
RecordingEntry entry_from_json(const json& j, const std::string& where);

Recording read_recording(const std::filesystem::path& path);
void write_recording(const std::filesystem::path& path, const Recording& rec);

/// Non-empty lines of a JSON Lines file, parsed. Errors carry the line number.
std::vector<json> read_jsonl(const std::filesystem::path& path);
json read_json(const std::filesystem::path& path);
void write_text(const std::filesystem::path& path, const std::string& text);

std::string sha256_file(const std::filesystem::path& path);

/// Shortest text that parses back to exactly `v`.
std::string format_double(double v);

}  // namespace vdg
