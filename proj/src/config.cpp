#include "vdg/config.hpp"

#include <numbers>

namespace vdg {

namespace {

struct Units {
  double length = 1.0;
  double angle = 1.0;
};

Units units_from(const json& j) {
  Units u;
  const auto& units = require(j, "units", "");
  const auto& len = require(units, "length", "units");
  const auto& ang = require(units, "angle", "units");
  if (len == "mm")
    u.length = 1e-3;
  else if (len != "m")
    throw SchemaError("units.length: expected \"mm\" or \"m\"");
  if (ang == "deg")
    u.angle = std::numbers::pi / 180.0;
  else if (ang != "rad")
    throw SchemaError("units.angle: expected \"deg\" or \"rad\"");
  return u;
}

Eigen::Isometry3d pose_from(const json& j, const std::string& where, const Units& u) {
  Eigen::Isometry3d t = Eigen::Isometry3d::Identity();
  if (j.contains("xyz")) t.translation() = u.length * as_vec3(j["xyz"], where + ".xyz");
  if (j.contains("rpy") && j.contains("R")) throw SchemaError(where + ": give either rpy or R");
  if (j.contains("rpy")) {
    const Eigen::Vector3d rpy = u.angle * as_vec3(j["rpy"], where + ".rpy");
    t.linear() = rpy_to_matrix(rpy.x(), rpy.y(), rpy.z());
  }
  if (j.contains("R")) {
    const auto& r = j["R"];
    if (!r.is_array() || r.size() != 9) throw SchemaError(where + ".R: expected 9 numbers, row-major");
    for (int i = 0; i < 9; ++i) {
      if (!r[static_cast<std::size_t>(i)].is_number()) throw SchemaError(where + ".R: expected numbers");
      t.linear()(i / 3, i % 3) = r[static_cast<std::size_t>(i)].get<double>();
    }
    if (orthonormality_defect(t.linear()) > 1e-9) throw SchemaError(where + ".R: not a rotation");
  }
  return t;
}

json pose_to_json(const Eigen::Isometry3d& t) {
  json r = json::array();
  for (int i = 0; i < 9; ++i) r.push_back(t.linear()(i / 3, i % 3));
  return {{"xyz", vec_to_json(t.translation())}, {"R", r}};
}

double positive(const json& j, std::string_view key, const std::string& where) {
  const double v = require_number(j, key, where);
  if (!(v > 0.0)) throw SchemaError(where + "." + std::string(key) + ": must be positive");
  return v;
}

double non_negative(const json& j, std::string_view key, const std::string& where) {
  const double v = require_number(j, key, where);
  if (!(v >= 0.0)) throw SchemaError(where + "." + std::string(key) + ": must be non-negative");
  return v;
}

}  // namespace

RobotModel robot_from_json(const json& j) {
  const Units u = units_from(j);
  const auto& js = require(j, "joints", "");
  if (!js.is_array() || js.empty()) throw SchemaError("joints: expected a non-empty array");

  std::vector<Joint> joints;
  std::vector<LinkInertial> links;
  for (std::size_t i = 0; i < js.size(); ++i) {
    const std::string where = "joints[" + std::to_string(i) + "]";
    const auto& jj = js[i];
    Joint joint;
    const auto& name = require(jj, "name", where);
    if (!name.is_string()) throw SchemaError(where + ".name: expected a string");
    joint.name = name.get<std::string>();
    const auto& type = require(jj, "type", where);
    if (type == "revolute")
      joint.type = JointType::revolute;
    else if (type == "prismatic")
      joint.type = JointType::prismatic;
    else
      throw SchemaError(where + ".type: expected \"revolute\" or \"prismatic\"");
    if (jj.contains("origin")) joint.origin = pose_from(jj["origin"], where + ".origin", u);
    joint.axis = require_vec3(jj, "axis", where);
    if (!(joint.axis.norm() > 0.0)) throw SchemaError(where + ".axis: zero vector");
    const auto& lim = require(jj, "limits", where);
    if (!lim.is_array() || lim.size() != 2 || !lim[0].is_number() || !lim[1].is_number())
      throw SchemaError(where + ".limits: expected [lower, upper]");
    const double scale = joint.type == JointType::revolute ? u.angle : u.length;
    joint.lower = scale * lim[0].get<double>();
    joint.upper = scale * lim[1].get<double>();
    if (!(joint.lower < joint.upper)) throw SchemaError(where + ".limits: lower must be below upper");
    joint.torque_max = require_number(jj, "torque_max", where);
    if (!(joint.torque_max > 0.0)) throw SchemaError(where + ".torque_max: must be positive");

    const auto& lj = require(jj, "link", where);
    const std::string lw = where + ".link";
    LinkInertial link;
    link.mass = require_number(lj, "mass", lw);
    if (!(link.mass > 0.0)) throw SchemaError(lw + ".mass: must be positive");
    link.com = u.length * require_vec3(lj, "com", lw);
    const auto& in = require(lj, "inertia", lw);
    if (!in.is_array() || in.size() != 6)
      throw SchemaError(lw + ".inertia: expected [ixx, iyy, izz, ixy, ixz, iyz]");
    for (const auto& c : in)
      if (!c.is_number()) throw SchemaError(lw + ".inertia: expected numbers");
    link.inertia << in[0].get<double>(), in[3].get<double>(), in[4].get<double>(),
        in[3].get<double>(), in[1].get<double>(), in[5].get<double>(), in[4].get<double>(),
        in[5].get<double>(), in[2].get<double>();
    Eigen::SelfAdjointEigenSolver<Eigen::Matrix3d> es(link.inertia);
    if (!(es.eigenvalues().minCoeff() > 0.0))
      throw SchemaError(lw + ".inertia: must be positive definite");
    joints.push_back(joint);
    links.push_back(link);
  }

  Eigen::Isometry3d ee = Eigen::Isometry3d::Identity();
  if (j.contains("ee_offset")) ee = pose_from(j["ee_offset"], "ee_offset", u);
  Eigen::Vector3d gravity(0.0, 0.0, -9.81);
  if (j.contains("gravity")) gravity = as_vec3(j["gravity"], "gravity");
  return RobotModel(std::move(joints), std::move(links), ee, gravity);
}

RobotModel load_robot(const std::filesystem::path& path) { return robot_from_json(read_json(path)); }

json robot_to_json(const RobotModel& model) {
  json joints = json::array();
  for (int i = 0; i < model.dof(); ++i) {
    const auto& jt = model.joints()[static_cast<std::size_t>(i)];
    const auto& l = model.links()[static_cast<std::size_t>(i)];
    const auto& I = l.inertia;
    joints.push_back({{"name", jt.name},
                      {"type", jt.type == JointType::revolute ? "revolute" : "prismatic"},
                      {"origin", pose_to_json(jt.origin)},
                      {"axis", vec_to_json(jt.axis)},
                      {"limits", {jt.lower, jt.upper}},
                      {"torque_max", jt.torque_max},
                      {"link",
                       {{"mass", l.mass},
                        {"com", vec_to_json(l.com)},
                        {"inertia", {I(0, 0), I(1, 1), I(2, 2), I(0, 1), I(0, 2), I(1, 2)}}}}});
  }
  return {{"units", {{"length", "m"}, {"angle", "rad"}}},
          {"gravity", vec_to_json(model.gravity())},
          {"joints", joints},
          {"ee_offset", pose_to_json(model.ee_offset())}};
}

ControllerParams controller_params_from_json(const json& j) {
  ControllerParams p = ControllerParams::defaults();
  if (j.contains("virtual_drill")) {
    const auto& v = j["virtual_drill"];
    p.drill.m_v = positive(v, "m_v", "virtual_drill");
    p.drill.b_v = non_negative(v, "b_v", "virtual_drill");
    p.drill.L = positive(v, "L", "virtual_drill");
  }
  for (auto [key, sd] : {std::pair{"tip", &p.tip}, std::pair{"base", &p.base}}) {
    if (!j.contains(key)) continue;
    const auto& v = j[key];
    sd->k = positive(v, "k", key);
    sd->sigma = positive(v, "sigma", key);
    sd->b = non_negative(v, "b", key);
  }
  if (j.contains("joint_buffers")) {
    const auto& rows = j["joint_buffers"];
    if (!rows.is_array()) throw SchemaError("joint_buffers: expected an array");
    p.buffers.clear();
    for (std::size_t i = 0; i < rows.size(); ++i) {
      const std::string w = "joint_buffers[" + std::to_string(i) + "]";
      p.buffers.push_back({non_negative(rows[i], "k", w), non_negative(rows[i], "b_min", w),
                           non_negative(rows[i], "b_plus", w), non_negative(rows[i], "theta", w),
                           positive(rows[i], "phi", w)});
    }
  }
  if (j.contains("buffer_form")) {
    const auto& f = j["buffer_form"];
    if (f == "corrected")
      p.buffer_form = BufferForm::corrected;
    else if (f == "printed")
      p.buffer_form = BufferForm::printed;
    else
      throw SchemaError("buffer_form: expected \"corrected\" or \"printed\"");
  }
  return p;
}

json controller_params_to_json(const ControllerParams& p) {
  json rows = json::array();
  for (const auto& b : p.buffers)
    rows.push_back({{"k", b.k}, {"b_min", b.b_min}, {"b_plus", b.b_plus}, {"theta", b.theta}, {"phi", b.phi}});
  return {{"virtual_drill", {{"m_v", p.drill.m_v}, {"b_v", p.drill.b_v}, {"L", p.drill.L}}},
          {"tip", {{"k", p.tip.k}, {"sigma", p.tip.sigma}, {"b", p.tip.b}}},
          {"base", {{"k", p.base.k}, {"sigma", p.base.sigma}, {"b", p.base.b}}},
          {"joint_buffers", rows},
          {"buffer_form", p.buffer_form == BufferForm::corrected ? "corrected" : "printed"}};
}

ControllerParams load_controller_params(const std::filesystem::path& path) {
  return controller_params_from_json(read_json(path));
}

OuterLoopParams outer_loop_params_from_json(const json& j) {
  OuterLoopParams p;
  const std::string w = "outer_loop";
  if (j.contains("k_i")) p.k_i = non_negative(j, "k_i", w);
  if (j.contains("rate")) p.rate = positive(j, "rate", w);
  if (j.contains("filter_cutoff")) p.filter_cutoff = positive(j, "filter_cutoff", w);
  if (j.contains("clamp_tip")) p.clamp_tip = positive(j, "clamp_tip", w);
  if (j.contains("clamp_base")) p.clamp_base = positive(j, "clamp_base", w);
  if (j.contains("terminate_translation")) p.terminate_translation = positive(j, "terminate_translation", w);
  if (j.contains("terminate_rotation")) p.terminate_rotation = positive(j, "terminate_rotation", w);
  p.validate();
  return p;
}

json outer_loop_params_to_json(const OuterLoopParams& p) {
  return {{"k_i", p.k_i},
          {"rate", p.rate},
          {"filter_cutoff", p.filter_cutoff},
          {"clamp_tip", p.clamp_tip},
          {"clamp_base", p.clamp_base},
          {"terminate_translation", p.terminate_translation},
          {"terminate_rotation", p.terminate_rotation}};
}

}  // namespace vdg
