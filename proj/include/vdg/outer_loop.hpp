#pragma once

#include <Eigen/Core>

#include <optional>

#include "vdg/geometry.hpp"
#include "vdg/vm_controller.hpp"

namespace vdg {

struct OuterLoopParams {
  double k_i = 1.0;               ///< 1/s
  double rate = 20.0;             ///< Hz
  double filter_cutoff = 2.0;     ///< Hz
  double clamp_tip = 0.025;       ///< m, per component
  double clamp_base = 0.150;      ///< m, per component
  double terminate_translation = 0.075;  ///< m
  double terminate_rotation = 0.3490658503988659;  ///< rad (20°)

  void validate() const;
  double dt() const { return 1.0 / rate; }
  /// Exponential smoothing factor per frame for the cutoff.
  double smoothing() const;
};

struct VisionFrame {
  double timestamp = 0.0;
  std::optional<RigidTransform> t_vb;  ///< bone tracker; empty when occluded
  std::optional<RigidTransform> t_vd;  ///< drill tracker; empty when occluded
};

/// Calibrated drill in the drill-tracker frame.
struct DrillCalibration {
  Eigen::Vector3d tip_d;
  Eigen::Vector3d axis_d;
};

/// Planned entry/exit in the scan frame plus the registrations that place it.
struct PlanGeometry {
  Eigen::Vector3d entry_s;
  Eigen::Vector3d exit_s;
  RigidTransform t_rv;  ///< robot ← vision (inverse of hand-eye)
  RigidTransform t_bs;  ///< bone tracker ← scan
};

struct OffsetUpdate {
  bool applied = false;
  Eigen::Vector3d zbar_tip = Eigen::Vector3d::Zero();
  Eigen::Vector3d zbar_base = Eigen::Vector3d::Zero();
  Eigen::Vector3d e_tip = Eigen::Vector3d::Zero();   ///< z_v − z̄
  Eigen::Vector3d e_base = Eigen::Vector3d::Zero();
  Eigen::Vector3d odot_tip = Eigen::Vector3d::Zero();   ///< effective rate after clamping
  Eigen::Vector3d odot_base = Eigen::Vector3d::Zero();
  /// ȯ_tipᵀf_tip + ȯ_baseᵀf_base with the spring forces at the update instant.
  double injected_power = 0.0;
  /// Spring-energy increment from the offset jump, divided by the frame period.
  double injected_energy_rate = 0.0;
  /// k_i(σ_tip|e_tip| + σ_base|e_base|).
  double power_bound = 0.0;
};

struct OuterLoopReport {
  bool axis_updated = false;
  bool terminated_now = false;
  OffsetUpdate offsets;
};

/// The 20 Hz vision loop: axis tracking, offset integration and safety termination.
class OuterLoop {
 public:
  OuterLoop(OuterLoopParams params, PlanGeometry plan, DrillCalibration drill, ControllerParams ctrl);

  /// Processes one frame. `z_tip`/`z_base` are the controller's tool points at this instant.
  OuterLoopReport update(const VisionFrame& frame, const Eigen::Vector3d& z_tip,
                         const Eigen::Vector3d& z_base, ControllerState& state);

  /// Entry/exit of the plan in the robot frame for a bone pose.
  std::pair<Eigen::Vector3d, Eigen::Vector3d> plan_in_robot(const RigidTransform& t_vb) const;

  const OuterLoopParams& params() const { return params_; }
  OuterLoopParams& mutable_params() { return params_; }
  const std::optional<RigidTransform>& reference_bone_pose() const { return reference_; }
  const std::optional<Eigen::Vector3d>& filtered_entry() const { return entry_; }
  const std::optional<Eigen::Vector3d>& filtered_exit() const { return exit_; }

  /// Re-seeds the axis filter and offsets from the given bone pose.
  void reset_filter(const RigidTransform& t_vb, ControllerState& state);

 private:
  OuterLoopParams params_;
  PlanGeometry plan_;
  DrillCalibration drill_;
  ControllerParams ctrl_;
  std::optional<Eigen::Vector3d> entry_;
  std::optional<Eigen::Vector3d> exit_;
  std::optional<RigidTransform> reference_;
};

/// Returns true when the bone pose moved beyond the termination thresholds.
bool bone_motion_exceeded(const RigidTransform& reference, const RigidTransform& current,
                          const OuterLoopParams& params);

/// Largest axis-angle correction the base clamp allows: atan(clamp_base / L).
double max_angular_correction(const OuterLoopParams& params, double L);

}  // namespace vdg
