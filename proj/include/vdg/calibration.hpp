#pragma once

#include <Eigen/Core>

#include <cstddef>
#include <span>
#include <vector>

#include "vdg/geometry.hpp"

namespace vdg {

/// One tracked pose sample.
struct RecordingEntry {
  double timestamp;
  RigidTransform transform;
  bool valid;
};

/// Time-ordered sequence of T^{ab} samples sharing one pair of frames.
/// Invalid (dropout) entries stay in the sequence; the solvers skip and count them.
class Recording {
 public:
  Recording() = default;
  explicit Recording(std::vector<RecordingEntry> entries);

  void push_back(RecordingEntry entry);

  const std::vector<RecordingEntry>& entries() const { return entries_; }
  std::size_t size() const { return entries_.size(); }
  bool empty() const { return entries_.empty(); }
  std::size_t valid_count() const;

  /// Non-decreasing timestamps, common frames and at least one valid entry.
  void validate() const;

 private:
  std::vector<RecordingEntry> entries_;
};

struct PointCalibration {
  Point3 point_body;   ///< p^b, in the moving body's frame
  Point3 point_fixed;  ///< p^a, in the sensor frame
  double rms;
  std::size_t n_used;
  std::size_t n_skipped;
  double min_singular_value;
};

struct AxisCalibration {
  UnitVec3 axis;
  double rms;
  std::size_t n_used;
  std::size_t n_skipped;
  /// First over second singular value of the centred point matrix.
  double singular_ratio;
};

struct TransformFit {
  RigidTransform transform;
  double rms;
  std::size_t n_used;
};

/// Degeneracy thresholds. Defaults are the documented ones.
struct SolverOptions {
  double pivot_min_singular_value = 1e-8;
  double axis_min_singular_ratio = 3.0;
  double collinear_ratio = 1e-10;
};

/// sqrt(mean |e_i|²). Throws EmptyInput on an empty list.
double rms_error(std::span<const Eigen::Vector3d> errors);

/// Fixed-point (pivot) calibration: finds p^b and p^a minimising
/// Σ |p^a − (R_i p^b + o_i)|² from the stacked 3N×6 system.
PointCalibration pivot_calibrate(const Recording& rec, const SolverOptions& options = {});

/// Axis direction through a known body point, from the dominant right-singular
/// vector of the centred back-projected centroids. The sign is chosen so the
/// result has a positive dot product with `hint` (body frame).
AxisCalibration axis_calibrate(const Recording& rec, const Point3& known_point,
                               const Eigen::Vector3d& hint = Eigen::Vector3d::UnitZ(),
                               const SolverOptions& options = {});

/// Arun's SVD registration: T^{ab} minimising Σ |T(p_i^b) − p_i^a|².
TransformFit register_transform(std::span<const Point3> points_a, std::span<const Point3> points_b,
                                const SolverOptions& options = {});

}  // namespace vdg
