#pragma once

#include <Eigen/Core>
#include <Eigen/Eigenvalues>
#include <Eigen/Geometry>

#include <random>
#include <string>
#include <vector>

#include "vdg/geometry.hpp"

namespace vdg {

enum class JointType { revolute, prismatic };

struct Joint {
  std::string name;
  /// Pose of this joint's zero-position frame in the parent frame.
  Eigen::Isometry3d origin = Eigen::Isometry3d::Identity();
  Eigen::Vector3d axis = Eigen::Vector3d::UnitZ();
  JointType type = JointType::revolute;
  double lower = 0.0;  ///< ľ_j
  double upper = 0.0;  ///< l̂_j
  double torque_max = 0.0;
};

/// Inertial data of the link carried by a joint, expressed in that joint's frame.
struct LinkInertial {
  double mass = 0.0;
  Eigen::Vector3d com = Eigen::Vector3d::Zero();
  Eigen::Matrix3d inertia = Eigen::Matrix3d::Zero();  ///< about the centre of mass, kg·m²
};

struct DynamicsTerms {
  Eigen::MatrixXd M;
  Eigen::VectorXd c;  ///< C(q, q̇)·q̇
  Eigen::VectorXd g;  ///< ∂V/∂q
};

struct JointState {
  Eigen::VectorXd q;
  Eigen::VectorXd qdot;
};

/// Serial chain with revolute/prismatic joints. All quantities SI.
class RobotModel {
 public:
  RobotModel(std::vector<Joint> joints, std::vector<LinkInertial> links,
             Eigen::Isometry3d ee_offset = Eigen::Isometry3d::Identity(),
             Eigen::Vector3d gravity = Eigen::Vector3d(0.0, 0.0, -9.81));

  int dof() const { return static_cast<int>(joints_.size()); }
  const std::vector<Joint>& joints() const { return joints_; }
  const std::vector<LinkInertial>& links() const { return links_; }
  const Eigen::Isometry3d& ee_offset() const { return ee_offset_; }
  const Eigen::Vector3d& gravity() const { return gravity_; }

  /// World pose of every joint frame (after joint motion), followed by the end effector.
  std::vector<Eigen::Isometry3d> frames(const Eigen::VectorXd& q) const;

  /// T^{re}.
  RigidTransform ee_pose(const Eigen::VectorXd& q) const;
  Point3 forward_kinematics(const Eigen::VectorXd& q, const Point3& point_in_ee) const;
  /// 3×n matrix with ż = J q̇ for a point fixed in the end-effector frame.
  Eigen::MatrixXd point_jacobian(const Eigen::VectorXd& q, const Point3& point_in_ee) const;

  /// Same as point_jacobian for a world point moving with the end effector, reusing `frames(q)`.
  Eigen::MatrixXd jacobian_at(const std::vector<Eigen::Isometry3d>& frames,
                              const Eigen::Vector3d& x_world) const;

  DynamicsTerms dynamics(const Eigen::VectorXd& q, const Eigen::VectorXd& qdot) const;
  Eigen::MatrixXd mass_matrix(const Eigen::VectorXd& q) const;
  Eigen::VectorXd gravity_torque(const Eigen::VectorXd& q) const;
  /// Inverse dynamics M q̈ + c + g.
  Eigen::VectorXd inverse_dynamics(const Eigen::VectorXd& q, const Eigen::VectorXd& qdot,
                                   const Eigen::VectorXd& qddot) const;

  /// q̈ = M⁻¹(τ − c − g).
  Eigen::VectorXd forward_dynamics(const Eigen::VectorXd& q, const Eigen::VectorXd& qdot,
                                   const Eigen::VectorXd& tau) const;

  double kinetic_energy(const Eigen::VectorXd& q, const Eigen::VectorXd& qdot) const;
  double potential_energy(const Eigen::VectorXd& q) const;

  bool within_limits(const Eigen::VectorXd& q) const;

  /// Copy with every joint origin displaced by up to `link_m` / `link_rad` and the
  /// end-effector offset by up to `tool_m` / `tool_rad` (uniform directions).
  RobotModel perturbed(std::mt19937_64& rng, double link_m, double link_rad, double tool_m,
                       double tool_rad) const;

  RobotModel with_ee_offset(const Eigen::Isometry3d& ee) const;

 private:
  void check_size(const Eigen::VectorXd& v, const char* what) const;
  Eigen::VectorXd rnea(const Eigen::VectorXd& q, const Eigen::VectorXd& qdot,
                       const Eigen::VectorXd& qddot, const Eigen::Vector3d& base_accel) const;

  std::vector<Joint> joints_;
  std::vector<LinkInertial> links_;
  Eigen::Isometry3d ee_offset_;
  Eigen::Vector3d gravity_;
};

/// Rotation from roll-pitch-yaw (R = Rz(yaw)·Ry(pitch)·Rx(roll)).
Eigen::Matrix3d rpy_to_matrix(double roll, double pitch, double yaw);

}  // namespace vdg
