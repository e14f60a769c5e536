#pragma once

#include <cstddef>
#include <map>
#include <optional>
#include <vector>

#include "vdg/calibration.hpp"
#include "vdg/geometry.hpp"

namespace vdg {

/// Planned landmarks plus drill entry and exit, all in the scan frame.
struct LandmarkSet {
  LandmarkSet(std::vector<Point3> landmarks, Point3 entry, Point3 exit);

  std::vector<Point3> landmarks;
  Point3 entry;
  Point3 exit;
};

struct LandmarkMeasurement {
  std::size_t landmark_index;
  Point3 point_b;
};

/// Simultaneity window for pairing bone and probe tracker samples.
inline constexpr double kSimultaneityWindow = 0.050;

/// r^b = T^{bv}(T^{vp}(p^p_probe)).
/// Throws MeasurementFailed when either sample is invalid or they are more than 50 ms apart.
Point3 probe_measure(const RecordingEntry& t_bv, const RecordingEntry& t_vp,
                     const PointCalibration& probe_tip);

/// Landmark probing session. Measurements accumulate; every change refits
/// T^{bs} from scratch so that the fit depends only on the measurement list.
class RegistrationSession {
 public:
  explicit RegistrationSession(LandmarkSet landmarks);

  void add(std::size_t landmark_index, const Point3& point_b);
  /// Removes the most recent measurement. Throws EmptyInput if there is none.
  void undo();

  const LandmarkSet& landmark_set() const { return landmarks_; }
  const std::vector<LandmarkMeasurement>& measurements() const { return measurements_; }
  /// Present once at least three distinct landmarks have been measured.
  const std::optional<TransformFit>& fit() const { return fit_; }
  std::size_t distinct_landmarks() const;

  /// Per-landmark residual |T^{bs}(r^s_i) − r^b| of each measurement, in metres.
  std::map<std::size_t, std::vector<double>> residuals_by_landmark() const;

 private:
  void refit();

  LandmarkSet landmarks_;
  std::vector<LandmarkMeasurement> measurements_;
  std::optional<TransformFit> fit_;
};

/// Fixed-width histogram of non-negative values.
struct Histogram {
  double bin_width;
  std::vector<std::size_t> counts;  ///< counts[i] covers [i·w, (i+1)·w)
};
Histogram make_histogram(const std::vector<double>& values, double bin_width);

struct PosePair {
  RigidTransform t_re;
  RigidTransform t_vd;
};

struct HandEyeResult {
  TransformFit fit;  ///< T^{vr}
  std::size_t n_poses;
};

HandEyeResult hand_eye_register(const std::vector<PosePair>& pairs, const PointCalibration& tip_e,
                                const PointCalibration& tip_d);

}  // namespace vdg
