#include "vdg/passivity.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

namespace vdg {

namespace {

// ln cosh x without overflow.
double log_cosh(double x) {
  const double a = std::abs(x);
  if (a < 1.0) {
    const double s = std::sinh(0.5 * a);
    return std::log1p(2.0 * s * s);
  }
  return a + std::log1p(std::exp(-2.0 * a)) - std::numbers::ln2;
}

}  // namespace

double spring_energy(const SpringDamperParams& p, const Eigen::Vector3d& delta) {
  return p.sigma * p.sigma / p.k * log_cosh(p.k * delta.norm() / p.sigma);
}

EnergyReport energy(const RobotModel& plant, const RobotModel& nominal, const ToolCalibration& tool,
                    const ControllerParams& params, const JointState& js,
                    const ControllerState& cs) {
  EnergyReport e;
  e.e_robot = plant.kinetic_energy(js.q, js.qdot);
  e.e_drill_kinetic = 0.5 * params.drill.m_v * cs.qd_v * cs.qd_v;
  for (int i = 0; i < nominal.dof(); ++i) {
    const auto ui = static_cast<std::size_t>(i);
    const auto& j = nominal.joints()[ui];
    const auto& b = params.buffers[ui];
    const double a = buffer_displacement(b, j.lower, j.upper, js.q(i), params.buffer_form);
    e.e_buffer += 0.5 * b.k * a * a;
  }
  const auto [z_tip, z_base] = tool_points(nominal, tool, params.drill.L, js.q);
  e.e_spring_tip = spring_energy(params.tip, z_tip - cs.z_v_tip() + cs.o_tip);
  e.e_spring_base = spring_energy(params.base, z_base - cs.z_v_base(params.drill.L) + cs.o_base);
  e.e_model_mismatch = plant.potential_energy(js.q) - nominal.potential_energy(js.q);
  e.total = e.e_robot + e.e_drill_kinetic + e.e_buffer + e.e_spring_tip + e.e_spring_base +
            e.e_model_mismatch;
  return e;
}

double discrete_energy(const RobotModel& plant, const RobotModel& nominal, const ToolCalibration& tool,
                       const ControllerParams& params, const JointState& js, const ControllerState& cs,
                       double dt) {
  const double L = params.drill.L;
  const auto f = nominal.frames(js.q);
  const Eigen::Vector3d z_tip = f.back() * tool.tip_e;
  const Eigen::Vector3d z_base = f.back() * (tool.tip_e + L * tool.axis_e);
  const Eigen::Vector3d dd_tip = nominal.jacobian_at(f, z_tip) * js.qdot - cs.axis_dir * cs.qd_v;
  const Eigen::Vector3d dd_base = nominal.jacobian_at(f, z_base) * js.qdot - cs.axis_dir * cs.qd_v;

  double power = -dd_tip.dot(spring_force(params.tip, z_tip - cs.z_v_tip() + cs.o_tip)) -
                 dd_base.dot(spring_force(params.base, z_base - cs.z_v_base(L) + cs.o_base));
  const Eigen::VectorXd g_gap = nominal.gravity_torque(js.q) - plant.gravity_torque(js.q);
  power += js.qdot.dot(g_gap);
  for (int i = 0; i < nominal.dof(); ++i) {
    const auto ui = static_cast<std::size_t>(i);
    const auto& j = nominal.joints()[ui];
    const auto& b = params.buffers[ui];
    power -= js.qdot(i) * b.k * buffer_displacement(b, j.lower, j.upper, js.q(i), params.buffer_form);
  }
  return energy(plant, nominal, tool, params, js, cs).total + 0.5 * dt * power;
}

AuditReport energy_audit(const RobotModel& plant, const RobotModel& nominal,
                         const ToolCalibration& tool, const ControllerParams& params,
                         const std::vector<AuditSample>& log, double dt) {
  AuditReport rep;
  if (log.empty()) return rep;
  const double L = params.drill.L;
  std::vector<double> storage;
  storage.reserve(log.size());
  for (const auto& s : log) {
    rep.energy.push_back(energy(plant, nominal, tool, params, s.js, s.ctrl).total);
    storage.push_back(discrete_energy(plant, nominal, tool, params, s.js, s.ctrl, dt));
  }

  double raw = 0.0;
  for (std::size_t k = 0; k + 1 < log.size(); ++k) {
    const auto& a = log[k];
    const auto& b = log[k + 1];
    AuditStep st;
    st.t = a.t;

    // State the inner loop produced, before any outer-loop change at k+1.
    ControllerState inner = b.ctrl;
    inner.axis_origin = a.ctrl.axis_origin;
    inner.axis_dir = a.ctrl.axis_dir;
    inner.o_tip = a.ctrl.o_tip;
    inner.o_base = a.ctrl.o_base;
    st.injected = storage[k + 1] - discrete_energy(plant, nominal, tool, params, b.js, inner, dt);
    st.delta_e = storage[k + 1] - storage[k];

    const auto f = nominal.frames(a.js.q);
    const Eigen::Vector3d z_tip = f.back() * tool.tip_e;
    const Eigen::Vector3d z_base = f.back() * (tool.tip_e + L * tool.axis_e);
    const Eigen::MatrixXd j_tip = nominal.jacobian_at(f, z_tip);
    const Eigen::MatrixXd j_base = nominal.jacobian_at(f, z_base);
    const Eigen::Vector3d& dir = a.ctrl.axis_dir;
    const Eigen::VectorXd qd_mid = 0.5 * (a.js.qdot + b.js.qdot);
    const double qdv_mid = 0.5 * (a.ctrl.qd_v + b.ctrl.qd_v);
    const Eigen::Vector3d dd_tip = j_tip * a.js.qdot - dir * a.ctrl.qd_v;
    const Eigen::Vector3d dd_base = j_base * a.js.qdot - dir * a.ctrl.qd_v;
    const Eigen::Vector3d dd_tip_mid = j_tip * qd_mid - dir * qdv_mid;
    const Eigen::Vector3d dd_base_mid = j_base * qd_mid - dir * qdv_mid;

    double diss = params.drill.b_v * a.ctrl.qd_v * qdv_mid + params.tip.b * dd_tip.dot(dd_tip_mid) +
                  params.base.b * dd_base.dot(dd_base_mid);
    for (int i = 0; i < nominal.dof(); ++i) {
      const auto& j = nominal.joints()[static_cast<std::size_t>(i)];
      diss += buffer_damping(params.buffers[static_cast<std::size_t>(i)], j.lower, j.upper, a.js.q(i)) *
              a.js.qdot(i) * qd_mid(i);
    }
    st.dissipated = dt * diss;
    st.supplied = a.u_e.size() == qd_mid.size() ? dt * a.u_e.dot(qd_mid) : 0.0;
    st.residual = st.delta_e - st.supplied + st.dissipated - st.injected;
    raw += (rep.energy[k + 1] - rep.energy[k]) - st.supplied + st.dissipated - st.injected;

    rep.cumulative_residual += st.residual;
    rep.max_abs_residual = std::max(rep.max_abs_residual, std::abs(st.residual));
    if (st.supplied == 0.0 && st.injected == 0.0)
      rep.max_unforced_increase =
          std::max(rep.max_unforced_increase, rep.energy[k + 1] - rep.energy[k]);
    if (a.torque_saturated) ++rep.saturated_steps;
    rep.steps.push_back(st);
  }
  rep.duration = log.back().t - log.front().t;
  if (rep.duration > 0.0) {
    rep.residual_rate = std::abs(rep.cumulative_residual) / rep.duration;
    rep.raw_residual_rate = std::abs(raw) / rep.duration;
  }
  return rep;
}

}  // namespace vdg
