#include "doctest.h"

#include <cmath>
#include <numbers>

#include "support.hpp"
#include "vdg/geometry.hpp"

using namespace vdg;
using vdg::test::random_transform;
using vdg::test::random_vec;

namespace {

const FrameId A("a");
const FrameId B("b");
const FrameId C("c");
const FrameId D("d");

Eigen::Matrix3d rot_z(double angle) {
  return Eigen::AngleAxisd(angle, Eigen::Vector3d::UnitZ()).toRotationMatrix();
}

}  // namespace

TEST_CASE("frame ids") {
  CHECK_THROWS_AS(FrameId(""), FrameError);
  CHECK(frames::vision() == FrameId("v"));
  CHECK_FALSE(frames::vision() == frames::robot());
}

TEST_CASE("transform construction validates the rotation") {
  Eigen::Matrix3d bad = Eigen::Matrix3d::Identity();
  bad(0, 1) = 1e-6;
  CHECK_THROWS_AS(RigidTransform(A, B, bad, Eigen::Vector3d::Zero()), InvalidTransform);
  Eigen::Matrix3d reflection = Eigen::Matrix3d::Identity();
  reflection(2, 2) = -1.0;
  CHECK_THROWS_AS(RigidTransform(A, B, reflection, Eigen::Vector3d::Zero()), InvalidTransform);
  CHECK_THROWS_AS(
      RigidTransform(A, B, Eigen::Matrix3d::Identity(), Eigen::Vector3d(NAN, 0.0, 0.0)),
      InvalidTransform);
}

TEST_CASE("projection repairs small defects and rejects large ones") {
  auto rng = test::rng_for(1);
  const Eigen::Matrix3d r = test::random_rotation(rng);
  Eigen::Matrix3d noisy = r;
  noisy(0, 0) += 2e-5;
  noisy(1, 2) -= 1e-5;
  const auto proj = RigidTransform::project(A, B, noisy, Eigen::Vector3d::Zero());
  CHECK(orthonormality_defect(proj.transform.rotation()) < 1e-12);
  CHECK(proj.correction > 0.0);
  CHECK(proj.correction < 1e-4);

  Eigen::Matrix3d broken = r;
  broken(0, 0) += 0.1;
  CHECK_THROWS_AS(RigidTransform::project(A, B, broken, Eigen::Vector3d::Zero()),
                  InvalidTransform);
}

TEST_CASE("apply") {
  const Point3 p(Eigen::Vector3d(1, 2, 3), B);
  CHECK(apply(RigidTransform::identity(A, B), p).coords.isApprox(Eigen::Vector3d(1, 2, 3)));

  const RigidTransform shift(A, B, Eigen::Matrix3d::Identity(), Eigen::Vector3d(0.1, 0, 0));
  const auto moved = apply(shift, Point3(Eigen::Vector3d::Zero(), B));
  CHECK(moved.frame == A);
  CHECK((moved.coords - Eigen::Vector3d(0.1, 0, 0)).norm() == doctest::Approx(0.0));

  const RigidTransform quarter(A, B, rot_z(std::numbers::pi / 2), Eigen::Vector3d::Zero());
  const auto turned = apply(quarter, Point3(Eigen::Vector3d(1, 0, 0), B));
  CHECK((turned.coords - Eigen::Vector3d(0, 1, 0)).norm() < 1e-15);

  CHECK_THROWS_AS(apply(shift, Point3(Eigen::Vector3d::Zero(), A)), FrameError);
}

TEST_CASE("compose and inverse") {
  auto rng = test::rng_for(2);
  const auto t = random_transform(rng, A, B);
  const auto u = random_transform(rng, B, C);

  const auto ti = compose(t, RigidTransform::identity(B, B));
  CHECK((ti.rotation() - t.rotation()).norm() == 0.0);
  CHECK((ti.translation() - t.translation()).norm() == 0.0);

  const auto round = compose(t, inverse(t));
  CHECK((round.rotation() - Eigen::Matrix3d::Identity()).norm() < 1e-12);
  CHECK(round.translation().norm() < 1e-12);
  const auto round2 = compose(inverse(t), t);
  CHECK((round2.rotation() - Eigen::Matrix3d::Identity()).norm() < 1e-12);
  CHECK(round2.translation().norm() < 1e-12);

  const auto tu = compose(t, u);
  CHECK(tu.to() == A);
  CHECK(tu.from() == C);
  for (int i = 0; i < 10; ++i) {
    const Point3 p(random_vec(rng), C);
    CHECK((apply(tu, p).coords - apply(t, apply(u, p)).coords).norm() < 1e-12);
  }
  CHECK_THROWS_AS(compose(u, t), FrameError);

  const RigidTransform shift(A, B, Eigen::Matrix3d::Identity(), Eigen::Vector3d(0.1, 0, 0));
  const auto back = inverse(shift);
  CHECK(back.to() == B);
  CHECK(back.from() == A);
  CHECK((back.translation() - Eigen::Vector3d(-0.1, 0, 0)).norm() < 1e-15);
}

TEST_CASE("property: apply preserves distances") {
  auto rng = test::rng_for(3);
  for (int i = 0; i < 1000; ++i) {
    const auto t = random_transform(rng, A, B, 2.0);
    const Point3 p(random_vec(rng, 3.0), B);
    const Point3 q(random_vec(rng, 3.0), B);
    const double before = (p.coords - q.coords).norm();
    const double after = (apply(t, p).coords - apply(t, q).coords).norm();
    REQUIRE(std::abs(before - after) < 1e-9);
  }
}

TEST_CASE("property: compose is associative") {
  auto rng = test::rng_for(4);
  for (int i = 0; i < 1000; ++i) {
    const auto t1 = random_transform(rng, A, B);
    const auto t2 = random_transform(rng, B, C);
    const auto t3 = random_transform(rng, C, D);
    const auto left = compose(compose(t1, t2), t3);
    const auto right = compose(t1, compose(t2, t3));
    REQUIRE((left.rotation() - right.rotation()).cwiseAbs().maxCoeff() < 1e-12);
    REQUIRE((left.translation() - right.translation()).cwiseAbs().maxCoeff() < 1e-12);
  }
}

TEST_CASE("quaternion round trip") {
  auto rng = test::rng_for(5);
  for (int i = 0; i < 100; ++i) {
    const auto t = random_transform(rng, A, B);
    const auto q = t.quaternion();
    CHECK(q.w() >= 0.0);
    Eigen::Quaterniond scaled = q;
    scaled.coeffs() *= 3.0;
    const auto back = RigidTransform::from_quaternion(A, B, scaled, t.translation());
    CHECK((back.rotation() - t.rotation()).norm() < 1e-12);
  }
}

TEST_CASE("rotation angle between") {
  CHECK(rotation_angle_between(Eigen::Matrix3d::Identity(), rot_z(0.3)) ==
        doctest::Approx(0.3).epsilon(1e-12));
  CHECK(rotation_angle_between(rot_z(0.1), rot_z(-0.2)) == doctest::Approx(0.3).epsilon(1e-12));
  CHECK(rotation_angle_between(Eigen::Matrix3d::Identity(), rot_z(std::numbers::pi)) ==
        doctest::Approx(std::numbers::pi));
}

TEST_CASE("unit vectors") {
  CHECK_THROWS_AS(UnitVec3(Eigen::Vector3d(1, 1, 0), A), InvalidTransform);
  const auto v = UnitVec3::normalized(Eigen::Vector3d(3, 4, 0), A);
  CHECK(v.dir.norm() == doctest::Approx(1.0));
  CHECK_THROWS_AS(UnitVec3::normalized(Eigen::Vector3d::Zero(), A), InvalidTransform);
  const RigidTransform quarter(B, A, rot_z(std::numbers::pi / 2), Eigen::Vector3d(5, 5, 5));
  const auto w = apply(quarter, UnitVec3(Eigen::Vector3d::UnitX(), A));
  CHECK((w.dir - Eigen::Vector3d::UnitY()).norm() < 1e-15);
}
