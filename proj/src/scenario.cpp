#include <algorithm>

#include "vdg/config.hpp"
#include "vdg/sim.hpp"

namespace vdg {

namespace {

std::string field(const std::string& where, std::string_view key) {
  return where.empty() ? std::string(key) : where + "." + std::string(key);
}

void check_keys(const json& j, std::initializer_list<std::string_view> allowed, const std::string& where) {
  if (!j.is_object()) throw SchemaError((where.empty() ? std::string("scenario") : where) + ": expected an object");
  for (auto it = j.begin(); it != j.end(); ++it)
    if (std::find(allowed.begin(), allowed.end(), it.key()) == allowed.end())
      throw SchemaError(field(where, it.key()) + ": unknown field");
}

void read(const json& j, std::string_view key, const std::string& where, double& out) {
  if (j.contains(key)) out = require_number(j, key, where);
}

void read(const json& j, std::string_view key, const std::string& where, int& out) {
  if (!j.contains(key)) return;
  const auto& v = j[std::string(key)];
  if (!v.is_number_integer()) throw SchemaError(field(where, key) + ": expected an integer");
  out = v.get<int>();
}

void read(const json& j, std::string_view key, const std::string& where, bool& out) {
  if (!j.contains(key)) return;
  const auto& v = j[std::string(key)];
  if (!v.is_boolean()) throw SchemaError(field(where, key) + ": expected true or false");
  out = v.get<bool>();
}

void read(const json& j, std::string_view key, const std::string& where, Eigen::Vector3d& out) {
  if (j.contains(key)) out = require_vec3(j, key, where);
}

json resolve(const json& v, const std::string& where, const std::filesystem::path& base_dir) {
  if (v.is_string()) return read_json(base_dir / v.get<std::string>());
  if (v.is_object()) return v;
  throw SchemaError(where + ": expected a file name or an object");
}

ForcePoint force_point(const json& j, const std::string& where) {
  if (!j.contains("point")) return ForcePoint::tip;
  const auto& p = j["point"];
  if (p == "tip") return ForcePoint::tip;
  if (p == "base") return ForcePoint::base;
  throw SchemaError(where + ".point: expected \"tip\" or \"base\"");
}

}  // namespace

Scenario scenario_from_json(const json& j, const std::filesystem::path& base_dir) {
  check_keys(j,
             {"robot", "robot_true", "controller", "outer_loop", "model_error", "tool", "home_q", "vision",
              "registration", "plan", "feed", "bone_motion", "forces", "duration", "dt", "substeps",
              "outer_loop_enabled", "seed", "trials"},
             "");
  Scenario sc(robot_from_json(resolve(require(j, "robot", ""), "robot", base_dir)));
  if (j.contains("robot_true")) sc.plant = robot_from_json(resolve(j["robot_true"], "robot_true", base_dir));
  if (j.contains("controller"))
    sc.controller = controller_params_from_json(resolve(j["controller"], "controller", base_dir));
  if (j.contains("outer_loop")) sc.outer = outer_loop_params_from_json(j["outer_loop"]);

  if (j.contains("model_error")) {
    const auto& m = j["model_error"];
    const std::string w = "model_error";
    check_keys(m, {"link_translation", "link_rotation", "tool_translation", "tool_rotation", "tool_bias"}, w);
    read(m, "link_translation", w, sc.model_error.link_translation);
    read(m, "link_rotation", w, sc.model_error.link_rotation);
    read(m, "tool_translation", w, sc.model_error.tool_translation);
    read(m, "tool_rotation", w, sc.model_error.tool_rotation);
    read(m, "tool_bias", w, sc.model_error.tool_bias);
  }
  if (j.contains("tool")) {
    const auto& t = j["tool"];
    check_keys(t, {"tip_e", "axis_e"}, "tool");
    read(t, "tip_e", "tool", sc.tool.tip_e);
    read(t, "axis_e", "tool", sc.tool.axis_e);
  }
  if (j.contains("home_q")) {
    const auto& q = j["home_q"];
    if (!q.is_array() || static_cast<int>(q.size()) != sc.nominal.dof())
      throw SchemaError("home_q: expected " + std::to_string(sc.nominal.dof()) + " numbers");
    for (int i = 0; i < sc.nominal.dof(); ++i) {
      const auto& x = q[static_cast<std::size_t>(i)];
      if (!x.is_number()) throw SchemaError("home_q: expected numbers");
      sc.home_q(i) = x.get<double>();
    }
  }
  if (j.contains("vision")) {
    const auto& v = j["vision"];
    const std::string w = "vision";
    check_keys(v, {"sigma", "rot_sigma", "dropout_prob", "latency_frames"}, w);
    read(v, "sigma", w, sc.vision.noise.sigma);
    read(v, "rot_sigma", w, sc.vision.noise.rot_sigma);
    read(v, "dropout_prob", w, sc.vision.noise.dropout_prob);
    read(v, "latency_frames", w, sc.vision.latency_frames);
  }
  if (j.contains("registration")) {
    const auto& r = j["registration"];
    const std::string w = "registration";
    check_keys(r, {"landmarks", "per_landmark", "sigma", "bias", "handeye_poses", "handeye_spread",
                   "calibration_samples", "ideal"},
               w);
    auto& p = sc.registration;
    read(r, "landmarks", w, p.landmarks);
    read(r, "per_landmark", w, p.per_landmark);
    read(r, "sigma", w, p.sigma);
    read(r, "bias", w, p.bias);
    read(r, "handeye_poses", w, p.handeye_poses);
    read(r, "handeye_spread", w, p.handeye_spread);
    read(r, "calibration_samples", w, p.calibration_samples);
    read(r, "ideal", w, p.ideal);
  }
  if (j.contains("plan")) {
    const auto& p = j["plan"];
    check_keys(p, {"standoff", "depth", "misplacement", "misalignment"}, "plan");
    read(p, "standoff", "plan", sc.plan.standoff);
    read(p, "depth", "plan", sc.plan.depth);
    read(p, "misplacement", "plan", sc.plan.misplacement);
    read(p, "misalignment", "plan", sc.plan.misalignment);
  }
  if (j.contains("feed")) {
    const auto& f = j["feed"];
    const std::string w = "feed";
    check_keys(f, {"enabled", "settle", "duration", "force_max", "k_h", "b_h", "overshoot"}, w);
    read(f, "enabled", w, sc.feed.enabled);
    read(f, "settle", w, sc.feed.settle);
    read(f, "duration", w, sc.feed.duration);
    read(f, "force_max", w, sc.feed.force_max);
    read(f, "k_h", w, sc.feed.k_h);
    read(f, "b_h", w, sc.feed.b_h);
    read(f, "overshoot", w, sc.feed.overshoot);
  }
  if (j.contains("bone_motion")) {
    const auto& list = j["bone_motion"];
    if (!list.is_array()) throw SchemaError("bone_motion: expected an array");
    for (std::size_t i = 0; i < list.size(); ++i) {
      const std::string w = "bone_motion[" + std::to_string(i) + "]";
      check_keys(list[i], {"t_start", "t_end", "dp", "axis", "angle"}, w);
      BoneMove m;
      m.t_start = require_number(list[i], "t_start", w);
      m.t_end = m.t_start;
      read(list[i], "t_end", w, m.t_end);
      read(list[i], "dp", w, m.dp);
      read(list[i], "axis", w, m.axis);
      read(list[i], "angle", w, m.angle);
      sc.bone_motion.push_back(m);
    }
  }
  if (j.contains("forces")) {
    const auto& list = j["forces"];
    if (!list.is_array()) throw SchemaError("forces: expected an array");
    for (std::size_t i = 0; i < list.size(); ++i) {
      const std::string w = "forces[" + std::to_string(i) + "]";
      check_keys(list[i], {"t_start", "t_end", "point", "force"}, w);
      ForceEvent e;
      e.t_start = require_number(list[i], "t_start", w);
      e.t_end = require_number(list[i], "t_end", w);
      e.point = force_point(list[i], w);
      e.force = require_vec3(list[i], "force", w);
      sc.forces.push_back(e);
    }
  }
  read(j, "duration", "", sc.duration);
  read(j, "dt", "", sc.dt);
  read(j, "substeps", "", sc.substeps);
  read(j, "outer_loop_enabled", "", sc.outer_loop_enabled);
  if (j.contains("seed")) {
    if (!j["seed"].is_number_unsigned()) throw SchemaError("seed: expected a non-negative integer");
    sc.seed = j["seed"].get<std::uint64_t>();
  }
  read(j, "trials", "", sc.trials);
  sc.validate();
  return sc;
}

Scenario load_scenario(const std::filesystem::path& path) {
  return scenario_from_json(read_json(path), path.parent_path());
}

}  // namespace vdg
