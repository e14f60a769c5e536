#include "vdg/geometry.hpp"

#include <Eigen/SVD>

#include <cmath>
#include <utility>

namespace vdg {

FrameId::FrameId(std::string name) : name_(std::move(name)) {
  if (name_.empty()) throw FrameError("frame id must be non-empty");
}

Point3::Point3(Eigen::Vector3d c, FrameId f) : coords(std::move(c)), frame(std::move(f)) {
  if (!coords.allFinite()) throw InvalidTransform("point has non-finite coordinates");
}

UnitVec3::UnitVec3(Eigen::Vector3d d, FrameId f) : dir(std::move(d)), frame(std::move(f)) {
  if (!dir.allFinite() || std::abs(dir.norm() - 1.0) > 1e-9)
    throw InvalidTransform("unit vector does not have unit length");
}

UnitVec3 UnitVec3::normalized(const Eigen::Vector3d& v, FrameId frame) {
  const double n = v.norm();
  if (!(n > 0.0) || !std::isfinite(n)) throw InvalidTransform("cannot normalize a zero vector");
  return UnitVec3(v / n, std::move(frame));
}

double orthonormality_defect(const Eigen::Matrix3d& r) {
  const double ortho = (r * r.transpose() - Eigen::Matrix3d::Identity()).cwiseAbs().maxCoeff();
  return std::max(ortho, std::abs(r.determinant() - 1.0));
}

RigidTransform::RigidTransform(FrameId to, FrameId from, const Eigen::Matrix3d& rotation,
                               const Eigen::Vector3d& translation)
    : rotation_(rotation), translation_(translation), to_(std::move(to)), from_(std::move(from)) {
  if (!rotation_.allFinite() || !translation_.allFinite())
    throw InvalidTransform("transform has non-finite entries");
  const double defect = orthonormality_defect(rotation_);
  if (defect > kOrthonormalTolerance)
    throw InvalidTransform("rotation is not orthonormal (defect " + std::to_string(defect) + ")");
}

RigidTransform RigidTransform::identity(FrameId to, FrameId from) {
  return RigidTransform(std::move(to), std::move(from), Eigen::Matrix3d::Identity(),
                        Eigen::Vector3d::Zero());
}

RigidTransform RigidTransform::from_quaternion(FrameId to, FrameId from, Eigen::Quaterniond q,
                                               const Eigen::Vector3d& translation) {
  const double n = q.norm();
  if (!(n > 0.0) || !std::isfinite(n)) throw InvalidTransform("quaternion has zero norm");
  q.coeffs() /= n;
  return RigidTransform(std::move(to), std::move(from), q.toRotationMatrix(), translation);
}

RigidTransform::Projection RigidTransform::project(FrameId to, FrameId from,
                                                   const Eigen::Matrix3d& noisy,
                                                   const Eigen::Vector3d& translation) {
  if (!noisy.allFinite()) throw InvalidTransform("rotation has non-finite entries");
  const double defect = orthonormality_defect(noisy);
  if (defect > kMaxRepairableDefect)
    throw InvalidTransform("rotation defect " + std::to_string(defect) +
                           " too large to repair");
  Eigen::JacobiSVD<Eigen::Matrix3d> svd(noisy, Eigen::ComputeFullU | Eigen::ComputeFullV);
  Eigen::Matrix3d d = Eigen::Matrix3d::Identity();
  d(2, 2) = (svd.matrixU() * svd.matrixV().transpose()).determinant() < 0 ? -1.0 : 1.0;
  const Eigen::Matrix3d r = svd.matrixU() * d * svd.matrixV().transpose();
  return {RigidTransform(std::move(to), std::move(from), r, translation), (r - noisy).norm()};
}

Eigen::Quaterniond RigidTransform::quaternion() const {
  Eigen::Quaterniond q(rotation_);
  if (q.w() < 0) q.coeffs() *= -1.0;
  return q;
}

Eigen::Isometry3d RigidTransform::isometry() const {
  Eigen::Isometry3d iso = Eigen::Isometry3d::Identity();
  iso.linear() = rotation_;
  iso.translation() = translation_;
  return iso;
}

Point3 apply(const RigidTransform& t, const Point3& p) {
  if (p.frame != t.from())
    throw FrameError("cannot apply T^{" + t.to().name() + t.from().name() + "} to a point in frame " +
                     p.frame.name());
  return Point3(t * p.coords, t.to());
}

UnitVec3 apply(const RigidTransform& t, const UnitVec3& v) {
  if (v.frame != t.from())
    throw FrameError("cannot rotate a vector in frame " + v.frame.name() + " by T^{" +
                     t.to().name() + t.from().name() + "}");
  return UnitVec3::normalized(t.rotation() * v.dir, t.to());
}

RigidTransform compose(const RigidTransform& a, const RigidTransform& b) {
  if (a.from() != b.to())
    throw FrameError("cannot compose T^{" + a.to().name() + a.from().name() + "} with T^{" +
                     b.to().name() + b.from().name() + "}");
  return RigidTransform(a.to(), b.from(), a.rotation() * b.rotation(),
                        a.rotation() * b.translation() + a.translation());
}

RigidTransform inverse(const RigidTransform& t) {
  const Eigen::Matrix3d rt = t.rotation().transpose();
  return RigidTransform(t.from(), t.to(), rt, -rt * t.translation());
}

double rotation_angle_between(const Eigen::Matrix3d& a, const Eigen::Matrix3d& b) {
  const Eigen::Matrix3d rel = a.transpose() * b;
  const Eigen::Vector3d vee(rel(2, 1) - rel(1, 2), rel(0, 2) - rel(2, 0), rel(1, 0) - rel(0, 1));
  return std::atan2(0.5 * vee.norm(), 0.5 * (rel.trace() - 1.0));
}

}  // namespace vdg
