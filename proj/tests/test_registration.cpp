#include "doctest.h"

#include <algorithm>
#include <cmath>

#include "support.hpp"
#include "vdg/registration.hpp"
#include "vdg/synthetic.hpp"

using namespace vdg;

namespace {

PointCalibration tip_at(const Eigen::Vector3d& p, FrameId body, FrameId fixed) {
  return PointCalibration{Point3(p, std::move(body)), Point3(Eigen::Vector3d::Zero(), std::move(fixed)),
                          0.0, 3, 0, 1.0};
}

RegistrationSession session_from(const LandmarkData& data) {
  RegistrationSession s(data.set);
  for (const auto& m : data.samples) {
    if (!m.t_vb.valid || !m.t_vp.valid) continue;
    s.add(m.landmark, probe_measure({m.t_vb.timestamp, inverse(m.t_vb.transform), true}, m.t_vp,
                                    data.probe_tip));
  }
  return s;
}

bool same_fit(const TransformFit& a, const TransformFit& b, double tol) {
  return (a.transform.rotation() - b.transform.rotation()).cwiseAbs().maxCoeff() < tol &&
         (a.transform.translation() - b.transform.translation()).cwiseAbs().maxCoeff() < tol &&
         std::abs(a.rms - b.rms) < tol;
}

}  // namespace

TEST_CASE("probe_measure") {
  const auto tip = tip_at({0, 0, 0.1}, frames::probe(), frames::vision());
  const RecordingEntry bv{0.0, RigidTransform::identity(frames::bone(), frames::vision()), true};
  const RecordingEntry vp{0.0, RigidTransform::identity(frames::vision(), frames::probe()), true};
  const auto p = probe_measure(bv, vp, tip);
  CHECK(p.frame == frames::bone());
  CHECK((p.coords - Eigen::Vector3d(0, 0, 0.1)).norm() == 0.0);

  const RecordingEntry shifted{0.0,
                               RigidTransform(frames::vision(), frames::probe(),
                                              Eigen::Matrix3d::Identity(), {0.2, 0, 0}),
                               true};
  CHECK((probe_measure(bv, shifted, tip).coords - Eigen::Vector3d(0.2, 0, 0.1)).norm() < 1e-15);

  CHECK_THROWS_AS(probe_measure({0.0, bv.transform, false}, vp, tip), MeasurementFailed);
  CHECK_THROWS_AS(probe_measure(bv, {0.0, vp.transform, false}, tip), MeasurementFailed);
  CHECK_THROWS_AS(probe_measure(bv, {0.06, vp.transform, true}, tip), MeasurementFailed);
  CHECK_NOTHROW(probe_measure(bv, {0.04, vp.transform, true}, tip));
}

TEST_CASE("landmark set validation") {
  const FrameId s = frames::scan();
  std::vector<Point3> two{Point3({0, 0, 0}, s), Point3({1, 0, 0}, s)};
  CHECK_THROWS_AS(LandmarkSet(two, Point3({0, 0, 0}, s), Point3({0, 0, 1}, s)), TooFewMeasurements);
  std::vector<Point3> three{Point3({0, 0, 0}, s), Point3({1, 0, 0}, s), Point3({0, 1, 0}, s)};
  CHECK_THROWS_AS(LandmarkSet(three, Point3({0, 0, 0}, s), Point3({0, 0, 0}, s)), Error);
}

TEST_CASE("session: fit appears with the third distinct landmark") {
  const auto data = generate_landmarks(LandmarkSpec{3, 1, 0.04, 0.0}, NoiseModel{}, 1);
  RegistrationSession s(data.set);
  const auto& truth = data.t_bs;
  s.add(0, Point3(truth * data.set.landmarks[0].coords, frames::bone()));
  s.add(0, Point3(truth * data.set.landmarks[0].coords, frames::bone()));
  s.add(1, Point3(truth * data.set.landmarks[1].coords, frames::bone()));
  CHECK_FALSE(s.fit().has_value());
  s.add(2, Point3(truth * data.set.landmarks[2].coords, frames::bone()));
  REQUIRE(s.fit().has_value());
  CHECK(rotation_angle_between(s.fit()->transform.rotation(), truth.rotation()) < 1e-9);
  CHECK((s.fit()->transform.translation() - truth.translation()).norm() < 1e-12);
  CHECK(s.fit()->rms < 1e-12);
  CHECK_THROWS_AS(s.add(3, Point3({0, 0, 0}, frames::bone())), Error);
}

TEST_CASE("session: undo restores the previous fit bit-exactly") {
  const auto data = generate_landmarks(LandmarkSpec{}, NoiseModel{5e-4, 0.0, 0.0}, 2);
  auto s = session_from(data);
  const TransformFit before = *s.fit();
  s.add(4, Point3(Eigen::Vector3d(0.3, 0.1, -0.2), frames::bone()));
  CHECK_FALSE(same_fit(before, *s.fit(), 1e-9));
  s.undo();
  CHECK((s.fit()->transform.rotation().array() == before.transform.rotation().array()).all());
  CHECK((s.fit()->transform.translation().array() == before.transform.translation().array()).all());
  CHECK(s.fit()->rms == before.rms);

  RegistrationSession empty(data.set);
  CHECK_THROWS_AS(empty.undo(), EmptyInput);
}

TEST_CASE("session: 105 measurement protocol") {
  NoiseModel noise{0.5e-3 * std::sqrt(3.0), 0.0, 0.0};
  const auto data = generate_landmarks(LandmarkSpec{}, noise, 3);
  const auto s = session_from(data);
  CHECK(s.measurements().size() == 105);
  REQUIRE(s.fit().has_value());
  CHECK(s.fit()->rms > 1.1e-3);
  CHECK(s.fit()->rms < 1.5e-3);
  const auto res = s.residuals_by_landmark();
  CHECK(res.size() == 7);
  for (const auto& [idx, v] : res) CHECK(v.size() == 15);
}

TEST_CASE("property: session fit is permutation invariant and duplicate invariant") {
  auto rng = test::rng_for(51);
  for (int trial = 0; trial < 10; ++trial) {
    const auto data = generate_landmarks(LandmarkSpec{5, 4, 0.04, 0.001},
                                         NoiseModel{4e-4, 0.0, 0.0}, 60 + trial);
    const auto base = session_from(data);
    auto ms = base.measurements();
    std::shuffle(ms.begin(), ms.end(), rng);
    RegistrationSession shuffled(data.set);
    for (const auto& m : ms) shuffled.add(m.landmark_index, m.point_b);
    CHECK(same_fit(*base.fit(), *shuffled.fit(), 1e-12));

    RegistrationSession doubled(data.set);
    for (const auto& m : base.measurements()) {
      doubled.add(m.landmark_index, m.point_b);
      doubled.add(m.landmark_index, m.point_b);
    }
    CHECK(same_fit(*base.fit(), *doubled.fit(), 1e-12));
  }
}

TEST_CASE("histogram binning") {
  const auto h = make_histogram({0.0, 0.05e-3, 0.1e-3, 0.15e-3, 0.35e-3}, 0.1e-3);
  REQUIRE(h.counts.size() == 4);
  CHECK(h.counts[0] == 2);
  CHECK(h.counts[1] == 2);
  CHECK(h.counts[2] == 0);
  CHECK(h.counts[3] == 1);
}

TEST_CASE("hand-eye: noiseless recovery") {
  const auto data = generate_handeye(HandEyeSpec{}, NoiseModel{}, 1);
  const auto r = hand_eye_register(data.pairs, data.tip_e, data.tip_d);
  CHECK(r.n_poses == 10);
  CHECK(r.fit.rms < 1e-9);
  CHECK(rotation_angle_between(r.fit.transform.rotation(), data.t_vr.rotation()) < 1e-9);
  CHECK((r.fit.transform.translation() - data.t_vr.translation()).norm() < 1e-12);
  CHECK(r.fit.transform.to() == frames::vision());
  CHECK(r.fit.transform.from() == frames::robot());
}

TEST_CASE("hand-eye: kinematic error shows up in the rms") {
  HandEyeSpec spec;
  spec.kinematic_error = 3e-3;
  int inside = 0;
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const auto data = generate_handeye(spec, NoiseModel{}, seed);
    const auto r = hand_eye_register(data.pairs, data.tip_e, data.tip_d);
    inside += (r.fit.rms > 3e-3 && r.fit.rms < 6e-3) ? 1 : 0;
  }
  CHECK(inside >= 16);
  const auto one = generate_handeye(spec, NoiseModel{}, 0);
  const auto r = hand_eye_register(one.pairs, one.tip_e, one.tip_d);
  CHECK(r.fit.rms > 3e-3);
  CHECK(r.fit.rms < 6e-3);
}

TEST_CASE("hand-eye: two poses are too few") {
  auto data = generate_handeye(HandEyeSpec{}, NoiseModel{}, 2);
  data.pairs.erase(data.pairs.begin() + 2, data.pairs.end());
  CHECK_THROWS_AS(hand_eye_register(data.pairs, data.tip_e, data.tip_d), TooFewMeasurements);
}
