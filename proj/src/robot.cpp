#include "vdg/robot.hpp"

#include <Eigen/Cholesky>

#include <cmath>
#include <string>

namespace vdg {

namespace {

Eigen::Isometry3d joint_motion(const Joint& j, double q) {
  Eigen::Isometry3d m = Eigen::Isometry3d::Identity();
  if (j.type == JointType::revolute)
    m.linear() = Eigen::AngleAxisd(q, j.axis).toRotationMatrix();
  else
    m.translation() = q * j.axis;
  return m;
}

Eigen::Vector3d random_unit(std::mt19937_64& rng) {
  std::normal_distribution<double> n(0.0, 1.0);
  Eigen::Vector3d v;
  do {
    v = Eigen::Vector3d(n(rng), n(rng), n(rng));
  } while (v.norm() < 1e-9);
  return v.normalized();
}

Eigen::Isometry3d random_offset(std::mt19937_64& rng, double max_t, double max_r) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  Eigen::Isometry3d d = Eigen::Isometry3d::Identity();
  d.translation() = max_t * u(rng) * random_unit(rng);
  const double angle = max_r * u(rng);
  d.linear() = Eigen::AngleAxisd(angle, random_unit(rng)).toRotationMatrix();
  return d;
}

}  // namespace

Eigen::Matrix3d rpy_to_matrix(double roll, double pitch, double yaw) {
  return (Eigen::AngleAxisd(yaw, Eigen::Vector3d::UnitZ()) *
          Eigen::AngleAxisd(pitch, Eigen::Vector3d::UnitY()) *
          Eigen::AngleAxisd(roll, Eigen::Vector3d::UnitX()))
      .toRotationMatrix();
}

RobotModel::RobotModel(std::vector<Joint> joints, std::vector<LinkInertial> links,
                       Eigen::Isometry3d ee_offset, Eigen::Vector3d gravity)
    : joints_(std::move(joints)),
      links_(std::move(links)),
      ee_offset_(std::move(ee_offset)),
      gravity_(std::move(gravity)) {
  if (joints_.empty()) throw Error("robot model has no joints");
  if (links_.size() != joints_.size())
    throw LengthMismatch("robot model needs one link per joint");
  for (std::size_t i = 0; i < joints_.size(); ++i) {
    auto& j = joints_[i];
    const std::string where = "joint " + (j.name.empty() ? std::to_string(i) : j.name);
    if (!(j.axis.norm() > 0.0)) throw Error(where + ": zero axis");
    j.axis.normalize();
    if (!(j.lower < j.upper)) throw Error(where + ": lower limit must be below upper limit");
    if (!(j.torque_max > 0.0)) throw Error(where + ": torque_max must be positive");
    const auto& l = links_[i];
    if (!(l.mass > 0.0)) throw Error(where + ": link mass must be positive");
    if ((l.inertia - l.inertia.transpose()).cwiseAbs().maxCoeff() > 1e-12)
      throw Error(where + ": inertia must be symmetric");
    Eigen::SelfAdjointEigenSolver<Eigen::Matrix3d> es(l.inertia);
    if (!(es.eigenvalues().minCoeff() > 0.0))
      throw Error(where + ": inertia must be positive definite");
  }
}

void RobotModel::check_size(const Eigen::VectorXd& v, const char* what) const {
  if (v.size() != dof())
    throw LengthMismatch(std::string(what) + " has " + std::to_string(v.size()) +
                         " entries, model has " + std::to_string(dof()) + " joints");
  if (!v.allFinite()) throw Error(std::string(what) + " is not finite");
}

std::vector<Eigen::Isometry3d> RobotModel::frames(const Eigen::VectorXd& q) const {
  check_size(q, "q");
  std::vector<Eigen::Isometry3d> out;
  out.reserve(joints_.size() + 1);
  Eigen::Isometry3d t = Eigen::Isometry3d::Identity();
  for (std::size_t i = 0; i < joints_.size(); ++i) {
    t = t * joints_[i].origin * joint_motion(joints_[i], q(static_cast<Eigen::Index>(i)));
    out.push_back(t);
  }
  out.push_back(t * ee_offset_);
  return out;
}

RigidTransform RobotModel::ee_pose(const Eigen::VectorXd& q) const {
  const auto ee = frames(q).back();
  return RigidTransform::project(frames::robot(), frames::end_effector(), ee.linear(),
                                 ee.translation())
      .transform;
}

Point3 RobotModel::forward_kinematics(const Eigen::VectorXd& q, const Point3& point_in_ee) const {
  if (point_in_ee.frame != frames::end_effector())
    throw FrameError("forward kinematics needs a point in the end-effector frame");
  return Point3(frames(q).back() * point_in_ee.coords, frames::robot());
}

Eigen::MatrixXd RobotModel::point_jacobian(const Eigen::VectorXd& q,
                                           const Point3& point_in_ee) const {
  if (point_in_ee.frame != frames::end_effector())
    throw FrameError("point Jacobian needs a point in the end-effector frame");
  const auto f = frames(q);
  return jacobian_at(f, f.back() * point_in_ee.coords);
}

Eigen::MatrixXd RobotModel::jacobian_at(const std::vector<Eigen::Isometry3d>& f,
                                        const Eigen::Vector3d& x) const {
  Eigen::MatrixXd j(3, dof());
  for (int i = 0; i < dof(); ++i) {
    const auto& joint = joints_[static_cast<std::size_t>(i)];
    const Eigen::Vector3d z = f[static_cast<std::size_t>(i)].linear() * joint.axis;
    if (joint.type == JointType::revolute)
      j.col(i) = z.cross(x - f[static_cast<std::size_t>(i)].translation());
    else
      j.col(i) = z;
  }
  return j;
}

Eigen::VectorXd RobotModel::rnea(const Eigen::VectorXd& q, const Eigen::VectorXd& qdot,
                                 const Eigen::VectorXd& qddot,
                                 const Eigen::Vector3d& base_accel) const {
  check_size(qdot, "qdot");
  check_size(qddot, "qddot");
  const auto f = frames(q);
  const std::size_t n = joints_.size();

  std::vector<Eigen::Vector3d> p(n), z(n), c(n), force(n), moment(n);
  Eigen::Vector3d w = Eigen::Vector3d::Zero();
  Eigen::Vector3d wd = Eigen::Vector3d::Zero();
  Eigen::Vector3d a = base_accel;
  Eigen::Vector3d p_prev = Eigen::Vector3d::Zero();

  for (std::size_t i = 0; i < n; ++i) {
    const auto idx = static_cast<Eigen::Index>(i);
    const auto& joint = joints_[i];
    p[i] = f[i].translation();
    z[i] = f[i].linear() * joint.axis;
    const Eigen::Vector3d r = p[i] - p_prev;
    a += wd.cross(r) + w.cross(w.cross(r));
    if (joint.type == JointType::revolute) {
      wd += z[i] * qddot(idx) + w.cross(z[i]) * qdot(idx);
      w += z[i] * qdot(idx);
    } else {
      a += z[i] * qddot(idx) + 2.0 * w.cross(z[i]) * qdot(idx);
    }
    p_prev = p[i];

    const auto& link = links_[i];
    c[i] = f[i] * link.com;
    const Eigen::Vector3d rc = c[i] - p[i];
    const Eigen::Vector3d ac = a + wd.cross(rc) + w.cross(w.cross(rc));
    const Eigen::Matrix3d iw = f[i].linear() * link.inertia * f[i].linear().transpose();
    force[i] = link.mass * ac;
    moment[i] = iw * wd + w.cross(iw * w);
  }

  Eigen::VectorXd tau(static_cast<Eigen::Index>(n));
  Eigen::Vector3d f_next = Eigen::Vector3d::Zero();
  Eigen::Vector3d n_next = Eigen::Vector3d::Zero();
  Eigen::Vector3d p_next = Eigen::Vector3d::Zero();
  for (std::size_t k = n; k-- > 0;) {
    const Eigen::Vector3d fi = force[k] + f_next;
    Eigen::Vector3d ni = moment[k] + (c[k] - p[k]).cross(force[k]) + n_next;
    if (k + 1 < n) ni += (p_next - p[k]).cross(f_next);
    tau(static_cast<Eigen::Index>(k)) =
        joints_[k].type == JointType::revolute ? z[k].dot(ni) : z[k].dot(fi);
    f_next = fi;
    n_next = ni;
    p_next = p[k];
  }
  return tau;
}

Eigen::VectorXd RobotModel::gravity_torque(const Eigen::VectorXd& q) const {
  const Eigen::VectorXd zero = Eigen::VectorXd::Zero(dof());
  return rnea(q, zero, zero, -gravity_);
}

Eigen::VectorXd RobotModel::inverse_dynamics(const Eigen::VectorXd& q, const Eigen::VectorXd& qdot,
                                             const Eigen::VectorXd& qddot) const {
  return rnea(q, qdot, qddot, -gravity_);
}

Eigen::MatrixXd RobotModel::mass_matrix(const Eigen::VectorXd& q) const {
  const auto f = frames(q);
  const int n = dof();
  std::vector<Eigen::Vector3d> p(static_cast<std::size_t>(n)), z(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) {
    const auto ui = static_cast<std::size_t>(i);
    p[ui] = f[ui].translation();
    z[ui] = f[ui].linear() * joints_[ui].axis;
  }

  Eigen::MatrixXd m = Eigen::MatrixXd::Zero(n, n);
  // Composite body of links i..n-1, accumulated from the tip.
  double mc = 0.0;
  Eigen::Vector3d first_moment = Eigen::Vector3d::Zero();
  std::vector<std::size_t> members;
  for (int i = n - 1; i >= 0; --i) {
    const auto ui = static_cast<std::size_t>(i);
    mc += links_[ui].mass;
    first_moment += links_[ui].mass * (f[ui] * links_[ui].com);
    members.push_back(ui);
    const Eigen::Vector3d cc = first_moment / mc;
    Eigen::Matrix3d ic = Eigen::Matrix3d::Zero();
    for (auto k : members) {
      const auto& l = links_[k];
      const Eigen::Vector3d d = f[k] * l.com - cc;
      ic += f[k].linear() * l.inertia * f[k].linear().transpose() +
            l.mass * (d.squaredNorm() * Eigen::Matrix3d::Identity() - d * d.transpose());
    }

    Eigen::Vector3d force, moment;
    if (joints_[ui].type == JointType::revolute) {
      force = mc * z[ui].cross(cc - p[ui]);
      moment = ic * z[ui];
    } else {
      force = mc * z[ui];
      moment = Eigen::Vector3d::Zero();
    }
    for (int j = 0; j <= i; ++j) {
      const auto uj = static_cast<std::size_t>(j);
      const double v = joints_[uj].type == JointType::revolute
                           ? z[uj].dot(moment + (cc - p[uj]).cross(force))
                           : z[uj].dot(force);
      m(j, i) = v;
      m(i, j) = v;
    }
  }
  return m;
}

DynamicsTerms RobotModel::dynamics(const Eigen::VectorXd& q, const Eigen::VectorXd& qdot) const {
  const Eigen::VectorXd zero = Eigen::VectorXd::Zero(dof());
  return DynamicsTerms{mass_matrix(q), rnea(q, qdot, zero, Eigen::Vector3d::Zero()),
                       gravity_torque(q)};
}

Eigen::VectorXd RobotModel::forward_dynamics(const Eigen::VectorXd& q, const Eigen::VectorXd& qdot,
                                             const Eigen::VectorXd& tau) const {
  check_size(tau, "tau");
  const Eigen::VectorXd bias = rnea(q, qdot, Eigen::VectorXd::Zero(dof()), -gravity_);
  return mass_matrix(q).llt().solve(tau - bias);
}

double RobotModel::kinetic_energy(const Eigen::VectorXd& q, const Eigen::VectorXd& qdot) const {
  check_size(qdot, "qdot");
  return 0.5 * qdot.dot(mass_matrix(q) * qdot);
}

double RobotModel::potential_energy(const Eigen::VectorXd& q) const {
  const auto f = frames(q);
  double v = 0.0;
  for (std::size_t i = 0; i < joints_.size(); ++i)
    v -= links_[i].mass * gravity_.dot(f[i] * links_[i].com);
  return v;
}

bool RobotModel::within_limits(const Eigen::VectorXd& q) const {
  check_size(q, "q");
  for (int i = 0; i < dof(); ++i) {
    const auto& j = joints_[static_cast<std::size_t>(i)];
    if (q(i) < j.lower || q(i) > j.upper) return false;
  }
  return true;
}

RobotModel RobotModel::perturbed(std::mt19937_64& rng, double link_m, double link_rad,
                                 double tool_m, double tool_rad) const {
  auto joints = joints_;
  for (auto& j : joints) j.origin = j.origin * random_offset(rng, link_m, link_rad);
  const Eigen::Isometry3d ee = ee_offset_ * random_offset(rng, tool_m, tool_rad);
  return RobotModel(std::move(joints), links_, ee, gravity_);
}

RobotModel RobotModel::with_ee_offset(const Eigen::Isometry3d& ee) const {
  return RobotModel(joints_, links_, ee, gravity_);
}

}  // namespace vdg
