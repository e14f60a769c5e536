#include "vdg/io.hpp"

#include <openssl/evp.h>

#include <array>
#include <charconv>
#include <fstream>
#include <sstream>

namespace vdg {

const json& require(const json& j, std::string_view key, const std::string& where) {
  const std::string field = where.empty() ? std::string(key) : where + "." + std::string(key);
  if (!j.is_object()) throw SchemaError(where + ": expected an object");
  const auto it = j.find(key);
  if (it == j.end()) throw SchemaError(field + ": missing field");
  return *it;
}

double require_number(const json& j, std::string_view key, const std::string& where) {
  const auto& v = require(j, key, where);
  if (!v.is_number())
    throw SchemaError((where.empty() ? "" : where + ".") + std::string(key) + ": expected a number");
  return v.get<double>();
}

Eigen::Vector3d as_vec3(const json& j, const std::string& where) {
  if (!j.is_array() || j.size() != 3) throw SchemaError(where + ": expected an array of 3 numbers");
  Eigen::Vector3d v;
  for (int i = 0; i < 3; ++i) {
    if (!j[static_cast<std::size_t>(i)].is_number())
      throw SchemaError(where + ": expected an array of 3 numbers");
    v(i) = j[static_cast<std::size_t>(i)].get<double>();
  }
  return v;
}

Eigen::Vector3d require_vec3(const json& j, std::string_view key, const std::string& where) {
  return as_vec3(require(j, key, where),
                 where.empty() ? std::string(key) : where + "." + std::string(key));
}

json vec_to_json(const Eigen::VectorXd& v) {
  json out = json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) out.push_back(v(i));
  return out;
}

namespace {

FrameId frame_field(const json& j, std::string_view key, const std::string& where) {
  const auto& v = require(j, key, where);
  if (!v.is_string() || v.get<std::string>().empty())
    throw SchemaError(where + "." + std::string(key) + ": expected a non-empty frame name");
  return FrameId(v.get<std::string>());
}

Eigen::Quaterniond quat_field(const json& j, std::string_view key, const std::string& where) {
  const auto& v = require(j, key, where);
  const std::string field = where + "." + std::string(key);
  if (!v.is_array() || v.size() != 4) throw SchemaError(field + ": expected [w, x, y, z]");
  for (const auto& c : v)
    if (!c.is_number()) throw SchemaError(field + ": expected [w, x, y, z]");
  Eigen::Quaterniond q(v[0].get<double>(), v[1].get<double>(), v[2].get<double>(),
                       v[3].get<double>());
  if (!(q.norm() > 1e-12)) throw SchemaError(field + ": zero quaternion");
  return q;
}

json quat_to_json(const Eigen::Quaterniond& q) { return json::array({q.w(), q.x(), q.y(), q.z()}); }

}  // namespace

json transform_to_json(const RigidTransform& t) {
  return json{{"from", t.from().name()},
              {"to", t.to().name()},
              {"q", quat_to_json(t.quaternion())},
              {"t", vec_to_json(t.translation())}};
}

RigidTransform transform_from_json(const json& j, const std::string& where) {
  return RigidTransform::from_quaternion(frame_field(j, "to", where), frame_field(j, "from", where),
                                         quat_field(j, "q", where), require_vec3(j, "t", where));
}

json entry_to_json(const RecordingEntry& e) {
  const auto& t = e.transform;
  return json{{"t", e.timestamp},
              {"from", t.from().name()},
              {"to", t.to().name()},
              {"q", quat_to_json(t.quaternion())},
              {"tr", vec_to_json(t.translation())},
              {"valid", e.valid}};
}

RecordingEntry entry_from_json(const json& j, const std::string& where) {
  const double t = require_number(j, "t", where);
  const auto& valid = require(j, "valid", where);
  if (!valid.is_boolean()) throw SchemaError(where + ".valid: expected true or false");
  auto transform = RigidTransform::from_quaternion(frame_field(j, "to", where),
                                                   frame_field(j, "from", where),
                                                   quat_field(j, "q", where),
                                                   require_vec3(j, "tr", where));
  return RecordingEntry{t, std::move(transform), valid.get<bool>()};
}

std::vector<json> read_jsonl(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open " + path.string());
  std::vector<json> out;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      out.push_back(json::parse(line));
    } catch (const json::parse_error& e) {
      throw SchemaError(path.filename().string() + " line " + std::to_string(lineno) +
                        ": invalid JSON");
    }
  }
  return out;
}

json read_json(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open " + path.string());
  try {
    return json::parse(in);
  } catch (const json::parse_error& e) {
    throw SchemaError(path.filename().string() + ": invalid JSON (" + e.what() + ")");
  }
}

void write_text(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path);
  if (!out) throw Error("cannot write " + path.string());
  out << text;
}

Recording read_recording(const std::filesystem::path& path) {
  const auto lines = read_jsonl(path);
  if (lines.empty()) throw EmptyInput(path.string() + " contains no measurements");
  Recording rec;
  for (std::size_t i = 0; i < lines.size(); ++i)
    rec.push_back(entry_from_json(lines[i], "line " + std::to_string(i + 1)));
  rec.validate();
  return rec;
}

void write_recording(const std::filesystem::path& path, const Recording& rec) {
  std::ostringstream os;
  for (const auto& e : rec.entries()) os << entry_to_json(e).dump() << '\n';
  write_text(path, os.str());
}

std::string sha256_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open " + path.string());
  EVP_MD_CTX* ctx = EVP_MD_CTX_new();
  EVP_DigestInit_ex(ctx, EVP_sha256(), nullptr);
  std::array<char, 8192> buf{};
  while (in) {
    in.read(buf.data(), buf.size());
    EVP_DigestUpdate(ctx, buf.data(), static_cast<std::size_t>(in.gcount()));
  }
  std::array<unsigned char, EVP_MAX_MD_SIZE> md{};
  unsigned int len = 0;
  EVP_DigestFinal_ex(ctx, md.data(), &len);
  EVP_MD_CTX_free(ctx);
  static constexpr char hex[] = "0123456789abcdef";
  std::string out;
  for (unsigned int i = 0; i < len; ++i) {
    out += hex[md[i] >> 4];
    out += hex[md[i] & 0xf];
  }
  return out;
}

std::string format_double(double v) {
  std::array<char, 32> buf{};
  const auto res = std::to_chars(buf.data(), buf.data() + buf.size(), v);
  return std::string(buf.data(), res.ptr);
}

}  // namespace vdg
