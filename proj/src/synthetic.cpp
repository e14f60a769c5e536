#include "vdg/synthetic.hpp"

#include <cmath>
#include <numbers>

namespace vdg {

namespace {

Eigen::Vector3d unit_from(std::mt19937_64& rng) {
  std::normal_distribution<double> n(0.0, 1.0);
  Eigen::Vector3d v;
  do {
    v = Eigen::Vector3d(n(rng), n(rng), n(rng));
  } while (v.norm() < 1e-9);
  return v.normalized();
}

Eigen::Matrix3d random_rotation(std::mt19937_64& rng) {
  std::normal_distribution<double> n(0.0, 1.0);
  Eigen::Quaterniond q(n(rng), n(rng), n(rng), n(rng));
  q.normalize();
  return q.toRotationMatrix();
}

Eigen::Matrix3d tilted(std::mt19937_64& rng, double max_tilt) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  const double az = 2.0 * std::numbers::pi * u(rng);
  const double tilt = max_tilt * std::sqrt(u(rng));
  const double spin = std::numbers::pi * (2.0 * u(rng) - 1.0);
  const Eigen::Vector3d axis(std::cos(az), std::sin(az), 0.0);
  return (Eigen::AngleAxisd(tilt, axis) * Eigen::AngleAxisd(spin, Eigen::Vector3d::UnitZ()))
      .toRotationMatrix();
}

PointCalibration exact_point(const Eigen::Vector3d& body, FrameId body_frame, FrameId fixed_frame) {
  return PointCalibration{Point3(body, std::move(body_frame)),
                          Point3(Eigen::Vector3d::Zero(), std::move(fixed_frame)), 0.0, 0, 0, 0.0};
}

}  // namespace

std::mt19937_64 make_rng(std::uint64_t seed, std::uint64_t stream) {
  std::seed_seq seq{seed, stream};
  return std::mt19937_64(seq);
}

Eigen::Vector3d sample_position_noise(std::mt19937_64& rng, double sigma) {
  if (sigma <= 0.0) return Eigen::Vector3d::Zero();
  std::normal_distribution<double> n(0.0, sigma / std::sqrt(3.0));
  return {n(rng), n(rng), n(rng)};
}

Eigen::Matrix3d sample_rotation_noise(std::mt19937_64& rng, double rot_sigma) {
  if (rot_sigma <= 0.0) return Eigen::Matrix3d::Identity();
  const Eigen::Vector3d w = sample_position_noise(rng, rot_sigma);
  const double angle = w.norm();
  if (angle == 0.0) return Eigen::Matrix3d::Identity();
  return Eigen::AngleAxisd(angle, w / angle).toRotationMatrix();
}

RigidTransform noisy_pose(std::mt19937_64& rng, const RigidTransform& truth,
                          const NoiseModel& noise) {
  const Eigen::Matrix3d dr = sample_rotation_noise(rng, noise.rot_sigma);
  const Eigen::Vector3d dt = sample_position_noise(rng, noise.sigma);
  return RigidTransform::project(truth.to(), truth.from(), dr * truth.rotation(),
                                 truth.translation() + dt)
      .transform;
}

Recording generate_pivot(const PivotSpec& spec, const NoiseModel& noise, std::uint64_t seed) {
  auto rng = make_rng(seed, 1);
  std::bernoulli_distribution drop(noise.dropout_prob);
  Recording rec;
  for (int i = 0; i < spec.samples; ++i) {
    const Eigen::Matrix3d r = tilted(rng, spec.max_tilt);
    const RigidTransform truth(spec.to, spec.from, r, spec.pivot_fixed - r * spec.tip_body);
    const auto measured = noisy_pose(rng, truth, noise);
    const bool valid = !drop(rng);
    rec.push_back({i / spec.rate, measured, valid});
  }
  return rec;
}

Recording generate_axis(const AxisSpec& spec, const NoiseModel& noise, std::uint64_t seed) {
  auto rng = make_rng(seed, 2);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::bernoulli_distribution drop(noise.dropout_prob);
  const Eigen::Vector3d a = spec.axis.normalized();
  const RigidTransform base(spec.to, spec.from, random_rotation(rng), Eigen::Vector3d(0.0, 0.0, 1.0));
  Recording rec;
  for (int i = 0; i < spec.samples; ++i) {
    const double frac = spec.samples > 1 ? static_cast<double>(i) / (spec.samples - 1) : 0.0;
    // Back and forth along the bit while turning about it.
    const double s = spec.slide * 0.5 * (1.0 - std::cos(2.0 * std::numbers::pi * 2.0 * frac));
    const double spin = spec.rotate ? spec.max_spin * (2.0 * u(rng) - 1.0) : 0.0;
    const Eigen::Matrix3d rs = Eigen::AngleAxisd(spin, a).toRotationMatrix();
    const Eigen::Vector3d ts = spec.known_point + s * a - rs * spec.known_point;
    const RigidTransform truth(spec.to, spec.from, base.rotation() * rs,
                               base.rotation() * ts + base.translation());
    rec.push_back({i / spec.rate, noisy_pose(rng, truth, noise), !drop(rng)});
  }
  return rec;
}

LandmarkData generate_landmarks(const LandmarkSpec& spec, const NoiseModel& noise,
                                std::uint64_t seed) {
  auto rng = make_rng(seed, 3);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  std::uniform_real_distribution<double> u01(0.0, 1.0);

  const FrameId s = frames::scan();
  std::vector<Point3> landmarks;
  for (int i = 0; i < spec.landmarks; ++i)
    landmarks.emplace_back(spec.extent * Eigen::Vector3d(u(rng), u(rng), 0.5 * u(rng)), s);
  const Point3 entry(Eigen::Vector3d(0.0, 0.0, 0.01), s);
  const Point3 exit(Eigen::Vector3d(0.0, 0.005, -0.02), s);

  const RigidTransform t_bs(frames::bone(), s, random_rotation(rng),
                            0.05 * Eigen::Vector3d(u(rng), u(rng), u(rng)));
  const RigidTransform t_vb(frames::vision(), frames::bone(), random_rotation(rng),
                            Eigen::Vector3d(0.1 * u(rng), 0.1 * u(rng), 1.2));
  const Eigen::Vector3d probe_tip(0.0, 0.0, 0.12);

  std::vector<Eigen::Vector3d> bias;
  for (int i = 0; i < spec.landmarks; ++i)
    bias.push_back(spec.bias * Eigen::Vector3d(u(rng), u(rng), u(rng)));

  LandmarkData out{LandmarkSet(landmarks, entry, exit), t_bs, {},
                   exact_point(probe_tip, frames::probe(), frames::vision())};
  double t = 0.0;
  for (int l = 0; l < spec.landmarks; ++l) {
    const auto ul = static_cast<std::size_t>(l);
    for (int k = 0; k < spec.per_landmark; ++k) {
      const Eigen::Vector3d target_b = t_bs * landmarks[ul].coords + bias[ul] +
                                       sample_position_noise(rng, noise.sigma);
      const Eigen::Vector3d target_v = t_vb * target_b;
      const Eigen::Matrix3d rp = tilted(rng, 0.5);
      const RigidTransform t_vp(frames::vision(), frames::probe(), rp, target_v - rp * probe_tip);
      // A failed sample is retried, as an operator would.
      while (u01(rng) < noise.dropout_prob) {
        out.samples.push_back({ul, {t, t_vb, false}, {t, t_vp, true}});
        t += 1.0;
      }
      out.samples.push_back({ul, {t, t_vb, true}, {t, t_vp, true}});
      t += 1.0;
    }
  }
  return out;
}

HandEyeData generate_handeye(const HandEyeSpec& spec, const NoiseModel& noise,
                             std::uint64_t seed) {
  auto rng = make_rng(seed, 4);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  std::normal_distribution<double> kin(0.0, 1.0);

  const RigidTransform t_vr(frames::vision(), frames::robot(), random_rotation(rng),
                            Eigen::Vector3d(1.0 + 0.2 * u(rng), 0.5 * u(rng), 1.0));
  const Eigen::Matrix3d r_ed = Eigen::AngleAxisd(0.3 * u(rng), unit_from(rng)).toRotationMatrix();
  const RigidTransform t_ed(frames::end_effector(), frames::drill(), r_ed,
                            spec.tip_e - r_ed * spec.tip_d);
  const Eigen::Matrix3d down = Eigen::AngleAxisd(std::numbers::pi, Eigen::Vector3d::UnitX()).toRotationMatrix();

  HandEyeData out{{}, t_vr, exact_point(spec.tip_e, frames::end_effector(), frames::robot()),
                  exact_point(spec.tip_d, frames::drill(), frames::vision())};
  for (int i = 0; i < spec.poses; ++i) {
    const Eigen::Vector3d pos(0.5 + 0.15 * u(rng), 0.15 * u(rng), 0.35 + 0.15 * u(rng));
    const RigidTransform true_re(frames::robot(), frames::end_effector(),
                                 down * tilted(rng, 0.5), pos);
    const Eigen::Vector3d err =
        spec.kinematic_error * Eigen::Vector3d(kin(rng), kin(rng), kin(rng));
    const RigidTransform reported_re(frames::robot(), frames::end_effector(), true_re.rotation(),
                                     true_re.translation() + err);
    const auto true_vd = compose(compose(t_vr, true_re), t_ed);
    out.pairs.push_back({reported_re, noisy_pose(rng, true_vd, noise)});
  }
  return out;
}

}  // namespace vdg
