#pragma once

#include <Eigen/Core>

#include <complex>
#include <utility>
#include <vector>

#include "vdg/robot.hpp"

namespace vdg {

struct SpringDamperParams {
  double k;      ///< N/m
  double sigma;  ///< saturation force, N
  double b;      ///< N·s/m
};

struct VirtualDrillParams {
  double m_v;  ///< kg
  double b_v;  ///< N·s/m
  double L;    ///< m
};

struct JointBufferParams {
  double k;       ///< N·m/rad
  double b_min;   ///< N·m·s/rad
  double b_plus;  ///< N·m·s/rad
  double theta;   ///< rad
  double phi;     ///< rad
};

/// `printed` reproduces the literal buffer displacement, which jumps at engagement.
enum class BufferForm { corrected, printed };

struct ControllerParams {
  VirtualDrillParams drill{1.0, 0.5, 2.0};
  SpringDamperParams tip{4000.0, 20.0, 40.0};
  SpringDamperParams base{100.0, 3.0, 0.2};
  std::vector<JointBufferParams> buffers;
  BufferForm buffer_form = BufferForm::corrected;

  /// Default inner-loop gains for the 7-joint arm.
  static ControllerParams defaults();
  /// Throws SchemaError describing the first invalid field.
  void validate(const RobotModel& model) const;
};

/// Calibrated drill in the end-effector frame: tip p^e_tip and bit direction a^e_bit.
struct ToolCalibration {
  Eigen::Vector3d tip_e;
  Eigen::Vector3d axis_e;
};

enum class Status { running, terminated };
enum class TerminationReason { none, bone_motion, non_finite };

const char* to_string(Status s);
const char* to_string(TerminationReason r);

struct ControllerState {
  double q_v = 0.0;
  double qd_v = 0.0;
  Eigen::Vector3d o_tip = Eigen::Vector3d::Zero();
  Eigen::Vector3d o_base = Eigen::Vector3d::Zero();
  Eigen::Vector3d axis_origin = Eigen::Vector3d::Zero();    ///< robot frame
  Eigen::Vector3d axis_dir = Eigen::Vector3d::UnitZ();      ///< unit, entry→exit
  Status status = Status::running;
  TerminationReason reason = TerminationReason::none;

  Eigen::Vector3d z_v_tip() const { return axis_origin + q_v * axis_dir; }
  Eigen::Vector3d z_v_base(double L) const { return z_v_tip() + L * axis_dir; }
};

/// Quantities the controller computed on one step.
struct ControllerOutput {
  Eigen::VectorXd u_r;
  std::vector<bool> saturated;
  Eigen::VectorXd nu;
  Eigen::Vector3d z_tip = Eigen::Vector3d::Zero();
  Eigen::Vector3d z_base = Eigen::Vector3d::Zero();
  Eigen::Vector3d delta_tip = Eigen::Vector3d::Zero();
  Eigen::Vector3d delta_base = Eigen::Vector3d::Zero();
  Eigen::Vector3d delta_dot_tip = Eigen::Vector3d::Zero();
  Eigen::Vector3d delta_dot_base = Eigen::Vector3d::Zero();
  Eigen::Vector3d f_tip = Eigen::Vector3d::Zero();
  Eigen::Vector3d f_base = Eigen::Vector3d::Zero();
  double u_v = 0.0;
};

struct ControllerStep {
  ControllerOutput out;
  ControllerState next;
};

/// f = σ·tanh(k|δ|/σ)·δ/|δ|, exactly zero for |δ| < 1e-12.
Eigen::Vector3d spring_force(const SpringDamperParams& p, const Eigen::Vector3d& delta);
Eigen::Vector3d damper_force(double b, const Eigen::Vector3d& delta_dot);

/// Buffer spring displacement a_j.
double buffer_displacement(const JointBufferParams& p, double lower, double upper, double q,
                           BufferForm form = BufferForm::corrected);
/// Scheduled buffer damping b_j(q).
double buffer_damping(const JointBufferParams& p, double lower, double upper, double q);
/// ν_j = k_j a_j + b_j(q) q̇_j.
double buffer_torque(const JointBufferParams& p, double lower, double upper, double q, double qd,
                     BufferForm form = BufferForm::corrected);

/// Tool points in the robot frame from the controller's kinematic model.
std::pair<Eigen::Vector3d, Eigen::Vector3d> tool_points(const RobotModel& model,
                                                        const ToolCalibration& tool,
                                                        double L, const Eigen::VectorXd& q);

/// Fresh running state with q_v chosen so the virtual tip sits at the projection of
/// the current tool tip onto the axis.
ControllerState init_controller(const RobotModel& nominal, const ToolCalibration& tool,
                                const ControllerParams& params, const Eigen::VectorXd& q,
                                const Eigen::Vector3d& axis_origin,
                                const Eigen::Vector3d& axis_dir);

/// One inner-loop step. A terminated state yields hold torques g − ν; a non-finite
/// state or result terminates with zero torque.
ControllerStep controller_step(const RobotModel& nominal, const ToolCalibration& tool,
                               const ControllerParams& params, const JointState& joints,
                               const ControllerState& state, double dt = 1e-3);

/// Roots of m_v s² + (b_v + b_tip) s + k_tip.
std::pair<std::complex<double>, std::complex<double>> linearize_virtual_drill(
    const VirtualDrillParams& p, const SpringDamperParams& tip);

}  // namespace vdg
