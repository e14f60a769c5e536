#include "vdg/registration.hpp"

#include <cmath>
#include <set>
#include <string>

namespace vdg {

LandmarkSet::LandmarkSet(std::vector<Point3> lm, Point3 en, Point3 ex)
    : landmarks(std::move(lm)), entry(std::move(en)), exit(std::move(ex)) {
  if (landmarks.size() < 3) throw TooFewMeasurements("a landmark set needs at least 3 landmarks");
  const FrameId s = entry.frame;
  if (exit.frame != s) throw FrameError("entry and exit must share a frame");
  for (const auto& p : landmarks)
    if (p.frame != s) throw FrameError("landmarks must be in the entry/exit frame");
  if ((entry.coords - exit.coords).norm() == 0.0)
    throw Error("entry and exit points coincide");
}

Point3 probe_measure(const RecordingEntry& t_bv, const RecordingEntry& t_vp,
                     const PointCalibration& probe_tip) {
  if (!t_bv.valid) throw MeasurementFailed("bone tracker not visible");
  if (!t_vp.valid) throw MeasurementFailed("probe tracker not visible");
  if (std::abs(t_bv.timestamp - t_vp.timestamp) > kSimultaneityWindow)
    throw MeasurementFailed("bone and probe samples are not simultaneous");
  return apply(t_bv.transform, apply(t_vp.transform, probe_tip.point_body));
}

RegistrationSession::RegistrationSession(LandmarkSet landmarks) : landmarks_(std::move(landmarks)) {}

void RegistrationSession::add(std::size_t landmark_index, const Point3& point_b) {
  if (landmark_index >= landmarks_.landmarks.size())
    throw Error("landmark index " + std::to_string(landmark_index) + " out of range");
  if (!measurements_.empty() && measurements_.front().point_b.frame != point_b.frame)
    throw FrameError("measurement frame differs from earlier measurements");
  measurements_.push_back({landmark_index, point_b});
  refit();
}

void RegistrationSession::undo() {
  if (measurements_.empty()) throw EmptyInput("no measurement to undo");
  measurements_.pop_back();
  refit();
}

std::size_t RegistrationSession::distinct_landmarks() const {
  std::set<std::size_t> seen;
  for (const auto& m : measurements_) seen.insert(m.landmark_index);
  return seen.size();
}

void RegistrationSession::refit() {
  fit_.reset();
  if (distinct_landmarks() < 3) return;
  std::vector<Point3> measured;
  std::vector<Point3> planned;
  for (const auto& m : measurements_) {
    measured.push_back(m.point_b);
    planned.push_back(landmarks_.landmarks[m.landmark_index]);
  }
  try {
    fit_ = register_transform(measured, planned);
  } catch (const CollinearPoints&) {
    fit_.reset();
  }
}

std::map<std::size_t, std::vector<double>> RegistrationSession::residuals_by_landmark() const {
  std::map<std::size_t, std::vector<double>> out;
  if (!fit_) return out;
  for (const auto& m : measurements_) {
    const auto& r = landmarks_.landmarks[m.landmark_index];
    out[m.landmark_index].push_back((fit_->transform * r.coords - m.point_b.coords).norm());
  }
  return out;
}

Histogram make_histogram(const std::vector<double>& values, double bin_width) {
  if (!(bin_width > 0.0)) throw Error("histogram bin width must be positive");
  Histogram h{bin_width, {}};
  for (double v : values) {
    const auto bin = static_cast<std::size_t>(std::floor(std::max(v, 0.0) / bin_width));
    if (h.counts.size() <= bin) h.counts.resize(bin + 1, 0);
    ++h.counts[bin];
  }
  return h;
}

HandEyeResult hand_eye_register(const std::vector<PosePair>& pairs, const PointCalibration& tip_e,
                                const PointCalibration& tip_d) {
  if (pairs.size() < 3)
    throw TooFewMeasurements("hand-eye registration needs at least 3 poses, got " +
                             std::to_string(pairs.size()));
  std::vector<Point3> in_vision;
  std::vector<Point3> in_robot;
  for (const auto& p : pairs) {
    in_vision.push_back(apply(p.t_vd, tip_d.point_body));
    in_robot.push_back(apply(p.t_re, tip_e.point_body));
  }
  return HandEyeResult{register_transform(in_vision, in_robot), pairs.size()};
}

}  // namespace vdg
