#include "doctest.h"

#include <Eigen/Dense>

#include <cmath>
#include <numbers>

#include "support.hpp"
#include "vdg/config.hpp"
#include "vdg/robot.hpp"

using namespace vdg;

namespace {

const RobotModel& panda() {
  static const RobotModel m = load_robot(VDG_CONFIG_DIR "/panda.json");
  return m;
}

Eigen::VectorXd random_q(std::mt19937_64& rng, const RobotModel& m) {
  Eigen::VectorXd q(m.dof());
  for (int i = 0; i < m.dof(); ++i) {
    const auto& j = m.joints()[static_cast<std::size_t>(i)];
    std::uniform_real_distribution<double> u(j.lower, j.upper);
    q(i) = u(rng);
  }
  return q;
}

Eigen::VectorXd random_qd(std::mt19937_64& rng, int n, double scale) {
  std::uniform_real_distribution<double> u(-scale, scale);
  Eigen::VectorXd v(n);
  for (int i = 0; i < n; ++i) v(i) = u(rng);
  return v;
}

Point3 ee_point(const Eigen::Vector3d& p) { return Point3(p, frames::end_effector()); }

// Two-joint chain: a revolute shoulder followed by a prismatic slide.
RobotModel rp_chain() {
  Joint j1;
  j1.name = "rev";
  j1.axis = Eigen::Vector3d::UnitZ();
  j1.lower = -3;
  j1.upper = 3;
  j1.torque_max = 10;
  Joint j2;
  j2.name = "slide";
  j2.type = JointType::prismatic;
  j2.origin.translation() = Eigen::Vector3d(0.3, 0, 0);
  j2.origin.linear() = Eigen::AngleAxisd(std::numbers::pi / 2, Eigen::Vector3d::UnitY()).toRotationMatrix();
  j2.axis = Eigen::Vector3d::UnitZ();
  j2.lower = -0.5;
  j2.upper = 0.5;
  j2.torque_max = 100;
  LinkInertial l1{2.0, {0.15, 0, 0}, Eigen::Vector3d(0.01, 0.02, 0.02).asDiagonal()};
  LinkInertial l2{1.0, {0.0, 0.05, 0.1}, Eigen::Vector3d(0.005, 0.005, 0.001).asDiagonal()};
  return RobotModel({j1, j2}, {l1, l2}, Eigen::Isometry3d::Identity(), {0, -9.81, -3.0});
}

}  // namespace

TEST_CASE("bundled config loads") {
  const auto& m = panda();
  CHECK(m.dof() == 7);
  CHECK(m.joints()[3].upper == doctest::Approx(-4.0 * std::numbers::pi / 180));
  CHECK(m.joints()[4].torque_max == 12.0);
}

TEST_CASE("forward kinematics golden value at zero configuration") {
  const auto p = panda().forward_kinematics(Eigen::VectorXd::Zero(7), ee_point(Eigen::Vector3d::Zero()));
  CHECK(p.frame == frames::robot());
  CHECK((p.coords - Eigen::Vector3d(0.088, 0.0, 0.926)).norm() < 1e-12);
  const auto pose = panda().ee_pose(Eigen::VectorXd::Zero(7));
  // Flange points straight down at zero configuration.
  CHECK((pose.rotation() * Eigen::Vector3d::UnitZ() - Eigen::Vector3d(0, 0, -1)).norm() < 1e-12);
}

TEST_CASE("forward kinematics is a rigid map") {
  auto rng = test::rng_for(61);
  for (int i = 0; i < 50; ++i) {
    const auto q = random_q(rng, panda());
    const Eigen::Vector3d a = test::random_vec(rng, 0.2);
    const Eigen::Vector3d v = test::random_vec(rng, 0.1);
    const auto pose = panda().ee_pose(q);
    const auto pa = panda().forward_kinematics(q, ee_point(a));
    const auto pb = panda().forward_kinematics(q, ee_point(a + v));
    CHECK((pb.coords - pa.coords - pose.rotation() * v).norm() < 1e-12);
    CHECK(std::abs((pb.coords - pa.coords).norm() - v.norm()) < 1e-12);
  }
  CHECK_THROWS_AS(panda().forward_kinematics(Eigen::VectorXd::Zero(7), Point3({0, 0, 0}, frames::drill())),
                  FrameError);
  CHECK_THROWS_AS(panda().forward_kinematics(Eigen::VectorXd::Zero(6), ee_point({0, 0, 0})), LengthMismatch);
}

TEST_CASE("point Jacobian matches central differences") {
  auto rng = test::rng_for(62);
  const double h = 1e-6;
  double worst = 0.0;
  for (int trial = 0; trial < 100; ++trial) {
    const auto q = random_q(rng, panda());
    const auto p = ee_point(test::random_vec(rng, 0.2));
    const auto j = panda().point_jacobian(q, p);
    for (int k = 0; k < 7; ++k) {
      Eigen::VectorXd qp = q, qm = q;
      qp(k) += h;
      qm(k) -= h;
      const Eigen::Vector3d fd =
          (panda().forward_kinematics(qp, p).coords - panda().forward_kinematics(qm, p).coords) / (2 * h);
      worst = std::max(worst, (fd - j.col(k)).cwiseAbs().maxCoeff());
    }
  }
  CHECK(worst < 1e-6);
}

TEST_CASE("point Jacobian special cases") {
  const auto m = rp_chain();
  const Eigen::VectorXd q = Eigen::Vector2d(0.4, 0.1);
  const auto j = m.point_jacobian(q, ee_point({0.1, 0.2, 0.0}));
  const Eigen::Vector3d slide_axis = m.frames(q)[1].linear() * Eigen::Vector3d::UnitZ();
  CHECK((j.col(1) - slide_axis).norm() < 1e-15);

  // A point on the last joint's axis does not move with that joint.
  auto rng = test::rng_for(63);
  const auto q7 = random_q(rng, panda());
  const auto f = panda().frames(q7);
  const Eigen::Vector3d on_axis_world = f[6].translation() + 0.3 * (f[6].linear() * Eigen::Vector3d::UnitZ());
  const Eigen::Vector3d on_axis_ee = f[7].inverse() * on_axis_world;
  const auto j7 = panda().point_jacobian(q7, ee_point(on_axis_ee));
  CHECK(j7.col(6).norm() < 1e-12);
}

TEST_CASE("mass matrix is symmetric positive definite and matches the kinetic energy Hessian") {
  auto rng = test::rng_for(64);
  for (int trial = 0; trial < 20; ++trial) {
    const auto q = random_q(rng, panda());
    const Eigen::MatrixXd m = panda().mass_matrix(q);
    CHECK((m - m.transpose()).cwiseAbs().maxCoeff() < 1e-12);
    CHECK(Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd>(m).eigenvalues().minCoeff() > 0.0);

    // Kinetic energy from link velocities, independent of the composite-body recursion.
    auto ke = [&](const Eigen::VectorXd& qd) {
      const auto f = panda().frames(q);
      double e = 0.0;
      Eigen::Vector3d w = Eigen::Vector3d::Zero();
      for (int i = 0; i < 7; ++i) {
        const auto ui = static_cast<std::size_t>(i);
        const auto& link = panda().links()[ui];
        w += f[ui].linear() * Eigen::Vector3d::UnitZ() * qd(i);
        const Eigen::Vector3d c = f[ui] * link.com;
        Eigen::Vector3d v = Eigen::Vector3d::Zero();
        for (int k = 0; k <= i; ++k) {
          const auto uk = static_cast<std::size_t>(k);
          v += (f[uk].linear() * Eigen::Vector3d::UnitZ()).cross(c - f[uk].translation()) * qd(k);
        }
        const Eigen::Matrix3d iw = f[ui].linear() * link.inertia * f[ui].linear().transpose();
        e += 0.5 * link.mass * v.squaredNorm() + 0.5 * w.dot(iw * w);
      }
      return e;
    };
    const double h = 1e-3;
    Eigen::MatrixXd hess(7, 7);
    for (int a = 0; a < 7; ++a)
      for (int b = 0; b < 7; ++b) {
        Eigen::VectorXd pp = Eigen::VectorXd::Zero(7), pm = pp, mp = pp, mm = pp;
        pp(a) += h; pp(b) += h;
        pm(a) += h; pm(b) -= h;
        mp(a) -= h; mp(b) += h;
        mm(a) -= h; mm(b) -= h;
        hess(a, b) = (ke(pp) - ke(pm) - ke(mp) + ke(mm)) / (4 * h * h);
      }
    CHECK((hess - m).norm() / m.norm() < 1e-5);
  }
}

TEST_CASE("Coriolis term") {
  auto rng = test::rng_for(65);
  for (int trial = 0; trial < 20; ++trial) {
    const auto q = random_q(rng, panda());
    const auto qd = random_qd(rng, 7, 1.5);
    CHECK(panda().dynamics(q, Eigen::VectorXd::Zero(7)).c.norm() == 0.0);

    // Christoffel form from finite differences of M.
    const double h = 1e-6;
    std::vector<Eigen::MatrixXd> dm;
    for (int k = 0; k < 7; ++k) {
      Eigen::VectorXd qp = q, qm = q;
      qp(k) += h;
      qm(k) -= h;
      dm.push_back((panda().mass_matrix(qp) - panda().mass_matrix(qm)) / (2 * h));
    }
    Eigen::VectorXd c_oracle = Eigen::VectorXd::Zero(7);
    for (int i = 0; i < 7; ++i)
      for (int j = 0; j < 7; ++j)
        for (int k = 0; k < 7; ++k)
          c_oracle(i) += (dm[static_cast<std::size_t>(k)](i, j) - 0.5 * dm[static_cast<std::size_t>(i)](j, k)) * qd(j) * qd(k);
    const auto c = panda().dynamics(q, qd).c;
    CHECK((c - c_oracle).norm() < 1e-6 * std::max(1.0, c.norm()));

    // q̇ᵀ(Ṁ − 2C)q̇ = 0
    const Eigen::MatrixXd mdot = (panda().mass_matrix(q + h * qd) - panda().mass_matrix(q - h * qd)) / (2 * h);
    CHECK(std::abs(qd.dot(mdot * qd) - 2.0 * qd.dot(c)) < 1e-6);
  }
}

TEST_CASE("gravity torque is the gradient of potential energy") {
  auto rng = test::rng_for(66);
  for (const auto* m : {&panda()}) {
    for (int trial = 0; trial < 20; ++trial) {
      const auto q = random_q(rng, *m);
      const auto g = m->gravity_torque(q);
      const double h = 1e-6;
      for (int k = 0; k < m->dof(); ++k) {
        Eigen::VectorXd qp = q, qm = q;
        qp(k) += h;
        qm(k) -= h;
        const double fd = (m->potential_energy(qp) - m->potential_energy(qm)) / (2 * h);
        CHECK(std::abs(fd - g(k)) < 1e-6);
      }
    }
  }
  const auto m = rp_chain();
  const Eigen::VectorXd q = Eigen::Vector2d(0.7, -0.2);
  const auto g = m.gravity_torque(q);
  for (int k = 0; k < 2; ++k) {
    Eigen::VectorXd qp = q, qm = q;
    qp(k) += 1e-6;
    qm(k) -= 1e-6;
    CHECK(std::abs((m.potential_energy(qp) - m.potential_energy(qm)) / 2e-6 - g(k)) < 1e-6);
  }
}

TEST_CASE("mixed revolute/prismatic chain dynamics") {
  const auto m = rp_chain();
  auto rng = test::rng_for(67);
  for (int trial = 0; trial < 20; ++trial) {
    const Eigen::VectorXd q = random_qd(rng, 2, 0.4);
    const Eigen::VectorXd qd = random_qd(rng, 2, 2.0);
    const Eigen::VectorXd qdd = random_qd(rng, 2, 2.0);
    const auto d = m.dynamics(q, qd);
    const Eigen::VectorXd tau = m.inverse_dynamics(q, qd, qdd);
    CHECK((tau - (d.M * qdd + d.c + d.g)).norm() < 1e-10);
    const double h = 1e-6;
    const Eigen::MatrixXd mdot = (m.mass_matrix(q + h * qd) - m.mass_matrix(q - h * qd)) / (2 * h);
    CHECK(std::abs(qd.dot(mdot * qd) - 2.0 * qd.dot(d.c)) < 1e-6);
  }
}

TEST_CASE("free fall conserves energy") {
  auto rng = test::rng_for(68);
  const auto& m = panda();
  Eigen::VectorXd q = random_q(rng, m);
  Eigen::VectorXd qd = random_qd(rng, 7, 0.5);
  const Eigen::VectorXd zero = Eigen::VectorXd::Zero(7);
  auto energy = [&](const Eigen::VectorXd& a, const Eigen::VectorXd& b) {
    return m.kinetic_energy(a, b) + m.potential_energy(a);
  };
  const double e0 = energy(q, qd);
  const double dt = 2e-4;
  for (int step = 0; step < 1000; ++step) {
    // RK4
    auto f = [&](const Eigen::VectorXd& x, const Eigen::VectorXd& v) { return m.forward_dynamics(x, v, zero); };
    const Eigen::VectorXd k1v = f(q, qd), k1x = qd;
    const Eigen::VectorXd k2v = f(q + 0.5 * dt * k1x, qd + 0.5 * dt * k1v), k2x = qd + 0.5 * dt * k1v;
    const Eigen::VectorXd k3v = f(q + 0.5 * dt * k2x, qd + 0.5 * dt * k2v), k3x = qd + 0.5 * dt * k2v;
    const Eigen::VectorXd k4v = f(q + dt * k3x, qd + dt * k3v), k4x = qd + dt * k3v;
    q += dt / 6 * (k1x + 2 * k2x + 2 * k3x + k4x);
    qd += dt / 6 * (k1v + 2 * k2v + 2 * k3v + k4v);
  }
  CHECK(std::abs(energy(q, qd) - e0) < 1e-6);
}

TEST_CASE("perturbed model stays close") {
  auto rng = test::rng_for(69);
  const auto p = panda().perturbed(rng, 0.0, 0.0, 0.003, 0.3 * std::numbers::pi / 180);
  const Eigen::VectorXd q = Eigen::VectorXd::Zero(7);
  const double d = (p.ee_pose(q).translation() - panda().ee_pose(q).translation()).norm();
  CHECK(d <= 0.003 + 1e-12);
  CHECK(p.gravity_torque(q).isApprox(panda().gravity_torque(q)));
}
