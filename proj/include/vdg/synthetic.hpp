#pragma once

#include <Eigen/Core>

#include <cstdint>
#include <random>
#include <vector>

#include "vdg/calibration.hpp"
#include "vdg/registration.hpp"

namespace vdg {

/// Tracker noise. `sigma` is the RMS norm of the 3-D position error, so each
/// axis gets σ/√3. Rotation noise is an axis-angle perturbation with RMS angle `rot_sigma`.
struct NoiseModel {
  double sigma = 0.0;
  double rot_sigma = 0.0;
  double dropout_prob = 0.0;
};

/// Seeded stream: seed_seq{seed, stream}.
std::mt19937_64 make_rng(std::uint64_t seed, std::uint64_t stream = 0);

Eigen::Vector3d sample_position_noise(std::mt19937_64& rng, double sigma);
Eigen::Matrix3d sample_rotation_noise(std::mt19937_64& rng, double rot_sigma);
/// Applies NoiseModel position and rotation noise to a pose.
RigidTransform noisy_pose(std::mt19937_64& rng, const RigidTransform& truth, const NoiseModel& noise);

struct PivotSpec {
  Eigen::Vector3d pivot_fixed{0.1, 0.2, 0.3};
  Eigen::Vector3d tip_body{0.0, 0.0, 0.15};
  int samples = 600;
  double rate = 20.0;
  double max_tilt = 0.6;  ///< rad, cone half-angle around the mean tool direction
  FrameId to = frames::vision();
  FrameId from = frames::probe();
};

Recording generate_pivot(const PivotSpec& spec, const NoiseModel& noise, std::uint64_t seed);

struct AxisSpec {
  Eigen::Vector3d known_point{0.0, 0.0, 0.15};
  Eigen::Vector3d axis{0.0, 0.0, 1.0};
  double slide = 0.1;       ///< total travel along the axis, m
  double max_spin = 3.0;    ///< rad, rotation about the axis
  bool rotate = true;
  int samples = 600;
  double rate = 20.0;
  FrameId to = frames::vision();
  FrameId from = frames::drill();
};

Recording generate_axis(const AxisSpec& spec, const NoiseModel& noise, std::uint64_t seed);

struct LandmarkSpec {
  int landmarks = 7;
  int per_landmark = 15;
  double extent = 0.04;  ///< landmarks spread over ±extent in the scan frame
  double bias = 0.001;   ///< per-landmark bias, uniform per component in ±bias
};

struct LandmarkData {
  LandmarkSet set;
  RigidTransform t_bs;  ///< ground truth
  /// Raw simultaneous tracker samples for each measurement.
  struct Sample {
    std::size_t landmark;
    RecordingEntry t_vb;
    RecordingEntry t_vp;
  };
  std::vector<Sample> samples;
  PointCalibration probe_tip;
};

LandmarkData generate_landmarks(const LandmarkSpec& spec, const NoiseModel& noise,
                                std::uint64_t seed);

struct HandEyeSpec {
  int poses = 10;
  double kinematic_error = 0.0;  ///< per-axis std of the per-pose robot position error, m
  Eigen::Vector3d tip_e{0.0, 0.0, 0.2};
  Eigen::Vector3d tip_d{0.0, 0.0, 0.15};
};

struct HandEyeData {
  std::vector<PosePair> pairs;  ///< t_re as reported by the robot, t_vd as seen by the tracker
  RigidTransform t_vr;          ///< ground truth
  PointCalibration tip_e;
  PointCalibration tip_d;
};

HandEyeData generate_handeye(const HandEyeSpec& spec, const NoiseModel& noise, std::uint64_t seed);

}  // namespace vdg
