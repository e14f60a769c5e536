#include "vdg/calibration.hpp"

#include <Eigen/SVD>

#include <cmath>
#include <string>

namespace vdg {

Recording::Recording(std::vector<RecordingEntry> entries) : entries_(std::move(entries)) {}

void Recording::push_back(RecordingEntry entry) { entries_.push_back(std::move(entry)); }

std::size_t Recording::valid_count() const {
  std::size_t n = 0;
  for (const auto& e : entries_) n += e.valid ? 1 : 0;
  return n;
}

void Recording::validate() const {
  if (entries_.empty()) throw EmptyInput("recording is empty");
  const auto& first = entries_.front().transform;
  for (std::size_t i = 0; i < entries_.size(); ++i) {
    const auto& e = entries_[i];
    if (e.transform.to() != first.to() || e.transform.from() != first.from())
      throw FrameError("recording entry " + std::to_string(i) + " changes frames");
    if (i > 0 && e.timestamp < entries_[i - 1].timestamp)
      throw Error("recording timestamps decrease at entry " + std::to_string(i));
  }
  if (valid_count() == 0) throw TooFewMeasurements("recording has no valid entries");
}

double rms_error(std::span<const Eigen::Vector3d> errors) {
  if (errors.empty()) throw EmptyInput("rms_error of an empty list");
  double sum = 0.0;
  for (const auto& e : errors) sum += e.squaredNorm();
  return std::sqrt(sum / static_cast<double>(errors.size()));
}

namespace {

std::vector<const RecordingEntry*> usable_entries(const Recording& rec, std::size_t minimum) {
  rec.validate();
  std::vector<const RecordingEntry*> used;
  for (const auto& e : rec.entries())
    if (e.valid) used.push_back(&e);
  if (used.size() < minimum)
    throw TooFewMeasurements("need at least " + std::to_string(minimum) +
                             " valid measurements, got " + std::to_string(used.size()));
  return used;
}

}  // namespace

PointCalibration pivot_calibrate(const Recording& rec, const SolverOptions& options) {
  const auto used = usable_entries(rec, 3);
  const auto n = static_cast<Eigen::Index>(used.size());

  //  [-R_i  I] [p^b; p^a] = o_i
  Eigen::MatrixXd a(3 * n, 6);
  Eigen::VectorXd y(3 * n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const auto& t = used[static_cast<std::size_t>(i)]->transform;
    a.block<3, 3>(3 * i, 0) = -t.rotation();
    a.block<3, 3>(3 * i, 3).setIdentity();
    y.segment<3>(3 * i) = t.translation();
  }

  Eigen::JacobiSVD<Eigen::MatrixXd> svd(a, Eigen::ComputeThinU | Eigen::ComputeThinV);
  const double smallest = svd.singularValues()(5);
  if (smallest < options.pivot_min_singular_value)
    throw DegenerateMotion("pivot motion too small: smallest singular value " +
                           std::to_string(smallest));
  const Eigen::VectorXd x = svd.solve(y);
  const Eigen::Vector3d p_body = x.head<3>();
  const Eigen::Vector3d p_fixed = x.tail<3>();

  std::vector<Eigen::Vector3d> errors;
  errors.reserve(used.size());
  for (const auto* e : used) errors.push_back(p_fixed - (e->transform * p_body));

  const auto& frames = used.front()->transform;
  return PointCalibration{Point3(p_body, frames.from()), Point3(p_fixed, frames.to()),
                          rms_error(errors), used.size(), rec.size() - used.size(), smallest};
}

AxisCalibration axis_calibrate(const Recording& rec, const Point3& known_point,
                               const Eigen::Vector3d& hint, const SolverOptions& options) {
  const auto used = usable_entries(rec, 3);
  if (known_point.frame != used.front()->transform.from())
    throw FrameError("known point must be in the body frame " +
                     used.front()->transform.from().name());
  const auto n = static_cast<Eigen::Index>(used.size());

  Eigen::Vector3d centroid_fixed = Eigen::Vector3d::Zero();
  for (const auto* e : used) centroid_fixed += e->transform * known_point.coords;
  centroid_fixed /= static_cast<double>(n);

  // Centroid mapped back into the body frame by each measurement.
  Eigen::MatrixXd back(n, 3);
  for (Eigen::Index i = 0; i < n; ++i) {
    const auto& t = used[static_cast<std::size_t>(i)]->transform;
    back.row(i) = (t.rotation().transpose() * (centroid_fixed - t.translation())).transpose();
  }
  const Eigen::RowVector3d mean = back.colwise().mean();
  const Eigen::MatrixXd centred = back.rowwise() - mean;

  Eigen::JacobiSVD<Eigen::MatrixXd> svd(centred, Eigen::ComputeThinU | Eigen::ComputeThinV);
  const Eigen::Vector3d sv = svd.singularValues();
  const double ratio = sv(1) > 0.0 ? sv(0) / sv(1) : (sv(0) > 0.0 ? INFINITY : 0.0);
  if (!(ratio >= options.axis_min_singular_ratio))
    throw DegenerateMotion("axis motion does not single out a direction: singular ratio " +
                           std::to_string(ratio));

  Eigen::Vector3d axis = svd.matrixV().col(0).normalized();
  if (axis.dot(hint) < 0.0) axis = -axis;

  std::vector<Eigen::Vector3d> errors;
  errors.reserve(used.size());
  for (Eigen::Index i = 0; i < n; ++i) {
    const Eigen::Vector3d d = back.row(i).transpose() - known_point.coords;
    errors.push_back(d - d.dot(axis) * axis);
  }
  return AxisCalibration{UnitVec3(axis, known_point.frame), rms_error(errors), used.size(),
                         rec.size() - used.size(), ratio};
}

TransformFit register_transform(std::span<const Point3> points_a, std::span<const Point3> points_b,
                                const SolverOptions& options) {
  if (points_a.size() != points_b.size())
    throw LengthMismatch("point sets differ in length: " + std::to_string(points_a.size()) +
                         " vs " + std::to_string(points_b.size()));
  if (points_a.size() < 3)
    throw TooFewMeasurements("registration needs at least 3 point pairs");
  const FrameId frame_a = points_a.front().frame;
  const FrameId frame_b = points_b.front().frame;
  for (std::size_t i = 0; i < points_a.size(); ++i) {
    if (points_a[i].frame != frame_a || points_b[i].frame != frame_b)
      throw FrameError("point " + std::to_string(i) + " is in an unexpected frame");
  }

  const double n = static_cast<double>(points_a.size());
  Eigen::Vector3d mean_a = Eigen::Vector3d::Zero();
  Eigen::Vector3d mean_b = Eigen::Vector3d::Zero();
  for (std::size_t i = 0; i < points_a.size(); ++i) {
    mean_a += points_a[i].coords;
    mean_b += points_b[i].coords;
  }
  mean_a /= n;
  mean_b /= n;

  Eigen::Matrix3d h = Eigen::Matrix3d::Zero();
  for (std::size_t i = 0; i < points_a.size(); ++i)
    h += (points_b[i].coords - mean_b) * (points_a[i].coords - mean_a).transpose();

  Eigen::JacobiSVD<Eigen::Matrix3d> svd(h, Eigen::ComputeFullU | Eigen::ComputeFullV);
  const Eigen::Vector3d sv = svd.singularValues();
  if (!(sv(0) > 0.0) || sv(1) < options.collinear_ratio * sv(0))
    throw CollinearPoints("registration points are collinear or coincident");

  const Eigen::Matrix3d& u = svd.matrixU();
  const Eigen::Matrix3d& v = svd.matrixV();
  Eigen::Matrix3d d = Eigen::Matrix3d::Identity();
  d(2, 2) = (v * u.transpose()).determinant() < 0.0 ? -1.0 : 1.0;
  const Eigen::Matrix3d r = v * d * u.transpose();
  const RigidTransform t(frame_a, frame_b, r, mean_a - r * mean_b);

  std::vector<Eigen::Vector3d> errors;
  errors.reserve(points_a.size());
  for (std::size_t i = 0; i < points_a.size(); ++i)
    errors.push_back(t * points_b[i].coords - points_a[i].coords);
  return TransformFit{t, rms_error(errors), points_a.size()};
}

}  // namespace vdg
