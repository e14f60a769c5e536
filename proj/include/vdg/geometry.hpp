#pragma once

#include <Eigen/Core>
#include <Eigen/Geometry>

#include <string>

#include "vdg/errors.hpp"

namespace vdg {

/// Symbolic coordinate-frame tag. Comparisons are exact string matches.
class FrameId {
 public:
  explicit FrameId(std::string name);

  const std::string& name() const { return name_; }

  friend bool operator==(const FrameId&, const FrameId&) = default;

 private:
  std::string name_;
};

/// The frames used by the drill-guide system.
namespace frames {
inline FrameId vision() { return FrameId("v"); }
inline FrameId robot() { return FrameId("r"); }
inline FrameId scan() { return FrameId("s"); }
inline FrameId probe() { return FrameId("p"); }
inline FrameId bone() { return FrameId("b"); }
inline FrameId rod() { return FrameId("m"); }
inline FrameId drill() { return FrameId("d"); }
inline FrameId end_effector() { return FrameId("e"); }
}  // namespace frames

struct Point3 {
  Point3(Eigen::Vector3d coords, FrameId frame);

  Eigen::Vector3d coords;
  FrameId frame;
};

struct UnitVec3 {
  /// Throws InvalidTransform unless |dir| = 1 within 1e-9.
  UnitVec3(Eigen::Vector3d dir, FrameId frame);
  static UnitVec3 normalized(const Eigen::Vector3d& v, FrameId frame);

  Eigen::Vector3d dir;
  FrameId frame;
};

/// T^{ab}: maps coordinates expressed in `from` (b) into `to` (a), p^a = R p^b + o.
///
/// The rotation is validated on construction (R Rᵀ = I and det R = +1, both
/// within 1e-9). Noisy matrices go through `project`, which snaps them to the
/// nearest rotation and reports how far it had to move.
class RigidTransform {
 public:
  static constexpr double kOrthonormalTolerance = 1e-9;
  static constexpr double kMaxRepairableDefect = 1e-3;

  RigidTransform(FrameId to, FrameId from, const Eigen::Matrix3d& rotation,
                 const Eigen::Vector3d& translation);

  static RigidTransform identity(FrameId to, FrameId from);
  static RigidTransform from_quaternion(FrameId to, FrameId from, Eigen::Quaterniond q,
                                        const Eigen::Vector3d& translation);

  struct Projection;
  static Projection project(FrameId to, FrameId from, const Eigen::Matrix3d& noisy_rotation,
                            const Eigen::Vector3d& translation);

  const Eigen::Matrix3d& rotation() const { return rotation_; }
  const Eigen::Vector3d& translation() const { return translation_; }
  const FrameId& to() const { return to_; }
  const FrameId& from() const { return from_; }

  Eigen::Quaterniond quaternion() const;
  Eigen::Isometry3d isometry() const;

  /// Applies the transform to raw coordinates, without frame checks.
  Eigen::Vector3d operator*(const Eigen::Vector3d& p) const { return rotation_ * p + translation_; }

 private:
  Eigen::Matrix3d rotation_;
  Eigen::Vector3d translation_;
  FrameId to_;
  FrameId from_;
};

struct RigidTransform::Projection {
  RigidTransform transform;
  /// Frobenius norm of (projected − input) rotation.
  double correction;
};

/// max(|R Rᵀ − I|_max, |det R − 1|).
double orthonormality_defect(const Eigen::Matrix3d& r);

Point3 apply(const RigidTransform& t, const Point3& p);
UnitVec3 apply(const RigidTransform& t, const UnitVec3& v);
/// a ∘ b; requires a.from == b.to.
RigidTransform compose(const RigidTransform& a, const RigidTransform& b);
RigidTransform inverse(const RigidTransform& t);

/// Angle of the rotation Rᵀ_a R_b (axis-angle magnitude), in radians.
double rotation_angle_between(const Eigen::Matrix3d& a, const Eigen::Matrix3d& b);

}  // namespace vdg
