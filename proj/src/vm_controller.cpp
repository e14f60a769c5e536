#include "vdg/vm_controller.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace vdg {

ControllerParams ControllerParams::defaults() {
  ControllerParams p;
  p.buffers = {
      {50.0, 0.5, 4.0, 0.3, 0.4},   {50.0, 0.5, 4.0, 0.2, 0.2},   {50.0, 0.3, 4.0, 0.2, 0.2},
      {60.0, 0.3, 5.0, 0.3, 0.3},   {35.0, 0.2, 2.0, 0.35, 0.35}, {30.0, 0.2, 1.5, 0.35, 0.35},
      {30.0, 0.1, 1.0, 0.35, 0.35},
  };
  return p;
}

void ControllerParams::validate(const RobotModel& model) const {
  auto positive = [](double v, const std::string& field) {
    if (!(v > 0.0) || !std::isfinite(v)) throw SchemaError(field + ": must be positive");
  };
  auto non_negative = [](double v, const std::string& field) {
    if (!(v >= 0.0) || !std::isfinite(v)) throw SchemaError(field + ": must be non-negative");
  };
  positive(drill.m_v, "virtual_drill.m_v");
  non_negative(drill.b_v, "virtual_drill.b_v");
  positive(drill.L, "virtual_drill.L");
  for (const auto& [name, sd] : {std::pair{"tip", tip}, std::pair{"base", base}}) {
    positive(sd.k, std::string(name) + ".k");
    positive(sd.sigma, std::string(name) + ".sigma");
    non_negative(sd.b, std::string(name) + ".b");
  }
  if (static_cast<int>(buffers.size()) != model.dof())
    throw SchemaError("joint_buffers: expected " + std::to_string(model.dof()) + " rows");
  for (std::size_t i = 0; i < buffers.size(); ++i) {
    const auto& b = buffers[i];
    const std::string w = "joint_buffers[" + std::to_string(i) + "]";
    non_negative(b.k, w + ".k");
    non_negative(b.b_min, w + ".b_min");
    non_negative(b.b_plus, w + ".b_plus");
    non_negative(b.theta, w + ".theta");
    positive(b.phi, w + ".phi");
    const auto& j = model.joints()[i];
    if (!(b.theta + b.phi < 0.5 * (j.upper - j.lower)))
      throw SchemaError(w + ": theta + phi must be less than half the joint range");
  }
}

const char* to_string(Status s) { return s == Status::running ? "running" : "terminated"; }

const char* to_string(TerminationReason r) {
  switch (r) {
    case TerminationReason::none:
      return "none";
    case TerminationReason::bone_motion:
      return "bone_motion";
    case TerminationReason::non_finite:
      return "non_finite";
  }
  return "none";
}

Eigen::Vector3d spring_force(const SpringDamperParams& p, const Eigen::Vector3d& delta) {
  const double n = delta.norm();
  if (n < 1e-12) return Eigen::Vector3d::Zero();
  Eigen::Vector3d f = (p.sigma * std::tanh(p.k * n / p.sigma) / n) * delta;
  // Rounding can push the saturated norm an ulp past sigma.
  while (f.norm() > p.sigma) f *= std::nextafter(1.0, 0.0);
  return f;
}

Eigen::Vector3d damper_force(double b, const Eigen::Vector3d& delta_dot) { return b * delta_dot; }

double buffer_displacement(const JointBufferParams& p, double lower, double upper, double q,
                           BufferForm form) {
  if (q > upper - p.theta)
    return form == BufferForm::corrected ? q - (upper - p.theta) : q - upper - p.theta;
  if (q < lower + p.theta)
    return form == BufferForm::corrected ? q - (lower + p.theta) : q - lower + p.theta;
  return 0.0;
}

double buffer_damping(const JointBufferParams& p, double lower, double upper, double q) {
  auto sat = [](double x) { return std::clamp(x, 0.0, 1.0); };
  return p.b_min + p.b_plus * sat((q - (upper - p.phi - p.theta)) / p.phi) +
         p.b_plus * sat((-q + (lower + p.phi + p.theta)) / p.phi);
}

double buffer_torque(const JointBufferParams& p, double lower, double upper, double q, double qd,
                     BufferForm form) {
  return p.k * buffer_displacement(p, lower, upper, q, form) +
         buffer_damping(p, lower, upper, q) * qd;
}

std::pair<Eigen::Vector3d, Eigen::Vector3d> tool_points(const RobotModel& model,
                                                        const ToolCalibration& tool, double L,
                                                        const Eigen::VectorXd& q) {
  const auto ee = model.frames(q).back();
  return {ee * tool.tip_e, ee * (tool.tip_e + L * tool.axis_e)};
}

ControllerState init_controller(const RobotModel& nominal, const ToolCalibration& tool,
                                const ControllerParams& params, const Eigen::VectorXd& q,
                                const Eigen::Vector3d& axis_origin,
                                const Eigen::Vector3d& axis_dir) {
  ControllerState s;
  s.axis_origin = axis_origin;
  s.axis_dir = axis_dir.normalized();
  const auto [z_tip, z_base] = tool_points(nominal, tool, params.drill.L, q);
  s.q_v = (z_tip - axis_origin).dot(s.axis_dir);
  return s;
}

namespace {

Eigen::VectorXd buffer_torques(const RobotModel& model, const ControllerParams& params,
                               const JointState& js) {
  Eigen::VectorXd nu(model.dof());
  for (int i = 0; i < model.dof(); ++i) {
    const auto ui = static_cast<std::size_t>(i);
    const auto& j = model.joints()[ui];
    nu(i) = buffer_torque(params.buffers[ui], j.lower, j.upper, js.q(i), js.qdot(i),
                          params.buffer_form);
  }
  return nu;
}

void clamp_torques(const RobotModel& model, ControllerOutput& out) {
  out.saturated.assign(static_cast<std::size_t>(model.dof()), false);
  for (int i = 0; i < model.dof(); ++i) {
    const double lim = model.joints()[static_cast<std::size_t>(i)].torque_max;
    if (std::abs(out.u_r(i)) > lim) {
      out.u_r(i) = std::clamp(out.u_r(i), -lim, lim);
      out.saturated[static_cast<std::size_t>(i)] = true;
    }
  }
}

ControllerStep abort_non_finite(const RobotModel& model, const ControllerState& state) {
  ControllerStep r;
  r.out.u_r = Eigen::VectorXd::Zero(model.dof());
  r.out.nu = Eigen::VectorXd::Zero(model.dof());
  r.out.saturated.assign(static_cast<std::size_t>(model.dof()), false);
  r.next = state;
  r.next.status = Status::terminated;
  r.next.reason = TerminationReason::non_finite;
  return r;
}

}  // namespace

ControllerStep controller_step(const RobotModel& nominal, const ToolCalibration& tool,
                               const ControllerParams& params, const JointState& joints,
                               const ControllerState& state, double dt) {
  const bool finite_in = joints.q.size() == nominal.dof() && joints.qdot.size() == nominal.dof() &&
                         joints.q.allFinite() && joints.qdot.allFinite() &&
                         std::isfinite(state.q_v) && std::isfinite(state.qd_v) &&
                         state.o_tip.allFinite() && state.o_base.allFinite() &&
                         state.axis_origin.allFinite() && state.axis_dir.allFinite();
  if (!finite_in) return abort_non_finite(nominal, state);

  ControllerStep r;
  r.next = state;
  auto& out = r.out;
  out.nu = buffer_torques(nominal, params, joints);
  const Eigen::VectorXd g = nominal.gravity_torque(joints.q);

  if (state.status == Status::terminated) {
    out.u_r = g - out.nu;
    clamp_torques(nominal, out);
    if (!out.u_r.allFinite()) return abort_non_finite(nominal, state);
    return r;
  }

  const double L = params.drill.L;
  const auto f = nominal.frames(joints.q);
  out.z_tip = f.back() * tool.tip_e;
  out.z_base = f.back() * (tool.tip_e + L * tool.axis_e);
  const Eigen::MatrixXd j_tip = nominal.jacobian_at(f, out.z_tip);
  const Eigen::MatrixXd j_base = nominal.jacobian_at(f, out.z_base);

  const Eigen::Vector3d& dir = state.axis_dir;
  out.delta_tip = out.z_tip - state.z_v_tip();
  out.delta_base = out.z_base - state.z_v_base(L);
  out.delta_dot_tip = j_tip * joints.qdot - dir * state.qd_v;
  out.delta_dot_base = j_base * joints.qdot - dir * state.qd_v;

  out.f_tip = spring_force(params.tip, out.delta_tip + state.o_tip) +
              damper_force(params.tip.b, out.delta_dot_tip);
  out.f_base = spring_force(params.base, out.delta_base + state.o_base) +
               damper_force(params.base.b, out.delta_dot_base);
  out.u_v = dir.dot(out.f_tip + out.f_base);

  out.u_r = g - out.nu - (j_tip.transpose() * out.f_tip + j_base.transpose() * out.f_base);
  clamp_torques(nominal, out);

  r.next.qd_v = state.qd_v + dt * (out.u_v - params.drill.b_v * state.qd_v) / params.drill.m_v;
  r.next.q_v = state.q_v + dt * r.next.qd_v;

  if (!out.u_r.allFinite() || !std::isfinite(r.next.q_v) || !std::isfinite(r.next.qd_v))
    return abort_non_finite(nominal, state);
  return r;
}

std::pair<std::complex<double>, std::complex<double>> linearize_virtual_drill(
    const VirtualDrillParams& p, const SpringDamperParams& tip) {
  const double b = p.b_v + tip.b;
  const std::complex<double> disc(b * b - 4.0 * p.m_v * tip.k, 0.0);
  const std::complex<double> root = std::sqrt(disc);
  return {(-b + root) / (2.0 * p.m_v), (-b - root) / (2.0 * p.m_v)};
}

}  // namespace vdg
