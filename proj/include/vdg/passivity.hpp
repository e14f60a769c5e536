#pragma once

#include <Eigen/Core>

#include <vector>

#include "vdg/robot.hpp"
#include "vdg/vm_controller.hpp"

namespace vdg {

/// Energy stored by a saturating spring: (σ²/k)·ln cosh(k|δ|/σ).
double spring_energy(const SpringDamperParams& p, const Eigen::Vector3d& delta);

struct EnergyReport {
  double e_robot = 0.0;          ///< ½ q̇ᵀ M q̇
  double e_drill_kinetic = 0.0;  ///< ½ m_v q̇_v²
  double e_buffer = 0.0;         ///< Σ ½ k_j a_j²
  double e_spring_tip = 0.0;
  double e_spring_base = 0.0;
  /// V_plant − V_controller: gravity the controller does not compensate. Zero when the
  /// plant and controller models share their inertial data. May be negative.
  double e_model_mismatch = 0.0;
  double total = 0.0;
};

/// Storage function of the closed loop. `plant` supplies the kinetic and potential
/// terms, `nominal` the controller's kinematics and gravity compensation.
EnergyReport energy(const RobotModel& plant, const RobotModel& nominal, const ToolCalibration& tool,
                    const ControllerParams& params, const JointState& js, const ControllerState& cs);

/// Storage plus the first-order correction (dt/2)·q̇ᵀF_c of the semi-implicit Euler
/// scheme, where F_c is the conservative generalized force. This is the quantity the
/// discrete closed loop actually balances.
double discrete_energy(const RobotModel& plant, const RobotModel& nominal, const ToolCalibration& tool,
                       const ControllerParams& params, const JointState& js, const ControllerState& cs,
                       double dt);

/// One logged 1 kHz sample: state at the start of the step and the external joint torque
/// applied during it. `ctrl` is the controller state the inner loop used for this step.
struct AuditSample {
  double t = 0.0;
  JointState js;
  ControllerState ctrl;
  Eigen::VectorXd u_e;
  bool torque_saturated = false;
};

struct AuditStep {
  double t = 0.0;
  double delta_e = 0.0;       ///< change of the discrete storage
  double supplied = 0.0;     ///< ∫ q̇ᵀu_e dt over the step
  double dissipated = 0.0;   ///< ≥ 0
  double injected = 0.0;     ///< energy added by outer-loop axis/offset changes
  double residual = 0.0;     ///< ΔE − supplied + dissipated − injected
};

struct AuditReport {
  std::vector<AuditStep> steps;
  std::vector<double> energy;  ///< storage at each sample
  double max_abs_residual = 0.0;
  double cumulative_residual = 0.0;
  double duration = 0.0;
  /// |cumulative residual| / duration, J/s.
  double residual_rate = 0.0;
  /// Same balance using the uncorrected storage; carries the O(dt) integrator oscillation.
  double raw_residual_rate = 0.0;
  /// Largest single-step increase of the storage when nothing is supplied or injected.
  double max_unforced_increase = 0.0;
  std::size_t saturated_steps = 0;
};

/// Energy balance over a 1 kHz log. Power terms use the force applied at the start of
/// the step against the mean of the velocities before and after it.
AuditReport energy_audit(const RobotModel& plant, const RobotModel& nominal,
                         const ToolCalibration& tool, const ControllerParams& params,
                         const std::vector<AuditSample>& log, double dt);

}  // namespace vdg
