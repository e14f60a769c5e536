#include "vdg/outer_loop.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "vdg/passivity.hpp"

namespace vdg {

void OuterLoopParams::validate() const {
  auto positive = [](double v, const char* field) {
    if (!(v > 0.0) || !std::isfinite(v)) throw SchemaError(std::string(field) + ": must be positive");
  };
  if (!(k_i >= 0.0) || !std::isfinite(k_i)) throw SchemaError("outer_loop.k_i: must be non-negative");
  positive(rate, "outer_loop.rate");
  positive(filter_cutoff, "outer_loop.filter_cutoff");
  positive(clamp_tip, "outer_loop.clamp_tip");
  positive(clamp_base, "outer_loop.clamp_base");
  positive(terminate_translation, "outer_loop.terminate_translation");
  positive(terminate_rotation, "outer_loop.terminate_rotation");
  if (!(clamp_tip < clamp_base)) throw SchemaError("outer_loop.clamp_tip: must be below clamp_base");
}

double OuterLoopParams::smoothing() const {
  return 1.0 - std::exp(-2.0 * std::numbers::pi * filter_cutoff / rate);
}

bool bone_motion_exceeded(const RigidTransform& reference, const RigidTransform& current,
                          const OuterLoopParams& params) {
  const double moved = (current.translation() - reference.translation()).norm();
  const double turned = rotation_angle_between(reference.rotation(), current.rotation());
  return moved > params.terminate_translation || turned > params.terminate_rotation;
}

double max_angular_correction(const OuterLoopParams& params, double L) {
  return std::atan(params.clamp_base / L);
}

OuterLoop::OuterLoop(OuterLoopParams params, PlanGeometry plan, DrillCalibration drill,
                     ControllerParams ctrl)
    : params_(params), plan_(std::move(plan)), drill_(std::move(drill)), ctrl_(std::move(ctrl)) {
  params_.validate();
  if (plan_.t_rv.to() != frames::robot() || plan_.t_rv.from() != frames::vision())
    throw FrameError("outer loop needs T^{rv}");
  if (plan_.t_bs.to() != frames::bone() || plan_.t_bs.from() != frames::scan())
    throw FrameError("outer loop needs T^{bs}");
}

std::pair<Eigen::Vector3d, Eigen::Vector3d> OuterLoop::plan_in_robot(const RigidTransform& t_vb) const {
  const auto t_rs = compose(compose(plan_.t_rv, t_vb), plan_.t_bs);
  return {t_rs * plan_.entry_s, t_rs * plan_.exit_s};
}

void OuterLoop::reset_filter(const RigidTransform& t_vb, ControllerState& state) {
  const auto [entry, exit] = plan_in_robot(t_vb);
  entry_ = entry;
  exit_ = exit;
  reference_ = t_vb;
  state.axis_origin = entry;
  state.axis_dir = (exit - entry).normalized();
}

OuterLoopReport OuterLoop::update(const VisionFrame& frame, const Eigen::Vector3d& z_tip,
                                  const Eigen::Vector3d& z_base, ControllerState& state) {
  OuterLoopReport report;
  if (state.status == Status::terminated) return report;

  if (frame.t_vb) {
    if (!reference_) reference_ = *frame.t_vb;
    if (bone_motion_exceeded(*reference_, *frame.t_vb, params_)) {
      state.status = Status::terminated;
      state.reason = TerminationReason::bone_motion;
      report.terminated_now = true;
      return report;
    }
    const auto [entry, exit] = plan_in_robot(*frame.t_vb);
    if (!entry_) {
      entry_ = entry;
      exit_ = exit;
    } else {
      const double a = params_.smoothing();
      *entry_ += a * (entry - *entry_);
      *exit_ += a * (exit - *exit_);
    }
    state.axis_origin = *entry_;
    state.axis_dir = (*exit_ - *entry_).normalized();
    report.axis_updated = true;
  }

  if (!frame.t_vd || params_.k_i == 0.0) return report;

  auto& u = report.offsets;
  const double L = ctrl_.drill.L;
  const auto t_rd = compose(plan_.t_rv, *frame.t_vd);
  u.zbar_tip = t_rd * drill_.tip_d;
  u.zbar_base = t_rd * (drill_.tip_d + L * drill_.axis_d);
  u.e_tip = state.z_v_tip() - u.zbar_tip;
  u.e_base = state.z_v_base(L) - u.zbar_base;

  const double dt = params_.dt();
  const Eigen::Vector3d o_tip_old = state.o_tip;
  const Eigen::Vector3d o_base_old = state.o_base;
  // ȯ = k_i (z̄ − z_v): drives the measured tool onto the virtual drill.
  const Eigen::Vector3d o_tip_new =
      (o_tip_old - dt * params_.k_i * u.e_tip).cwiseMax(-params_.clamp_tip).cwiseMin(params_.clamp_tip);
  const Eigen::Vector3d o_base_new = (o_base_old - dt * params_.k_i * u.e_base)
                                         .cwiseMax(-params_.clamp_base)
                                         .cwiseMin(params_.clamp_base);
  u.odot_tip = (o_tip_new - o_tip_old) / dt;
  u.odot_base = (o_base_new - o_base_old) / dt;

  const Eigen::Vector3d d_tip = z_tip - state.z_v_tip();
  const Eigen::Vector3d d_base = z_base - state.z_v_base(L);
  u.injected_power = u.odot_tip.dot(spring_force(ctrl_.tip, d_tip + o_tip_old)) +
                     u.odot_base.dot(spring_force(ctrl_.base, d_base + o_base_old));
  u.injected_energy_rate = (spring_energy(ctrl_.tip, d_tip + o_tip_new) -
                            spring_energy(ctrl_.tip, d_tip + o_tip_old) +
                            spring_energy(ctrl_.base, d_base + o_base_new) -
                            spring_energy(ctrl_.base, d_base + o_base_old)) /
                           dt;
  u.power_bound = params_.k_i * (ctrl_.tip.sigma * u.e_tip.norm() + ctrl_.base.sigma * u.e_base.norm());

  state.o_tip = o_tip_new;
  state.o_base = o_base_new;
  u.applied = true;
  return report;
}

}  // namespace vdg
