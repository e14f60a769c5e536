#include "vdg/sim.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <limits>
#include <numbers>
#include <sstream>
#include <thread>

#include "vdg/registration.hpp"

namespace vdg {

namespace {

constexpr std::uint64_t kStreamsPerTrial = 16;
constexpr std::size_t kMaxLiveUpdates = 72000;
constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

Eigen::Vector3d uniform_vec(std::mt19937_64& rng, double scale) {
  std::uniform_real_distribution<double> u(-scale, scale);
  const double x = u(rng);
  const double y = u(rng);
  const double z = u(rng);
  return {x, y, z};
}

Eigen::Matrix3d random_rotation(std::mt19937_64& rng) {
  std::normal_distribution<double> n(0.0, 1.0);
  const double w = n(rng);
  const double x = n(rng);
  const double y = n(rng);
  const double z = n(rng);
  return Eigen::Quaterniond(w, x, y, z).normalized().toRotationMatrix();
}

double uniform_angle(std::mt19937_64& rng) {
  return std::uniform_real_distribution<double>(0.0, 2.0 * std::numbers::pi)(rng);
}

RigidTransform from_isometry(FrameId to, FrameId from, const Eigen::Isometry3d& t) {
  return RigidTransform(std::move(to), std::move(from), t.linear(), t.translation());
}

TrialMetrics failed_metrics(std::string why) {
  TrialMetrics m;
  m.entry_translation_err = m.exit_translation_err = m.angular_deviation = kNaN;
  m.failed = true;
  m.diagnostics = std::move(why);
  return m;
}

}  // namespace

Scenario::Scenario(RobotModel nominal_model)
    : nominal(std::move(nominal_model)), home_q(Eigen::VectorXd::Zero(nominal.dof())) {
  if (nominal.dof() == 7) {
    home_q << 0.0, -0.3, 0.0, -2.2, 0.0, 2.0, 0.785;
  } else {
    for (int i = 0; i < nominal.dof(); ++i) {
      const auto& j = nominal.joints()[static_cast<std::size_t>(i)];
      home_q(i) = 0.5 * (j.lower + j.upper);
    }
  }
}

void Scenario::validate() const {
  auto fail = [](const std::string& field, const char* what) { throw SchemaError(field + ": " + what); };
  auto positive = [&](double v, const char* field) {
    if (!(v > 0.0) || !std::isfinite(v)) fail(field, "must be positive");
  };
  auto non_negative = [&](double v, const char* field) {
    if (!(v >= 0.0) || !std::isfinite(v)) fail(field, "must be non-negative");
  };
  positive(duration, "duration");
  positive(dt, "dt");
  if (substeps < 1) fail("substeps", "must be at least 1");
  if (trials < 1) fail("trials", "must be at least 1");
  non_negative(vision.noise.sigma, "vision.sigma");
  non_negative(vision.noise.rot_sigma, "vision.rot_sigma");
  if (!(vision.noise.dropout_prob >= 0.0 && vision.noise.dropout_prob <= 1.0))
    fail("vision.dropout_prob", "must lie in [0, 1]");
  if (vision.latency_frames < 0) fail("vision.latency_frames", "must be non-negative");
  non_negative(model_error.link_translation, "model_error.link_translation");
  non_negative(model_error.link_rotation, "model_error.link_rotation");
  non_negative(model_error.tool_translation, "model_error.tool_translation");
  non_negative(model_error.tool_rotation, "model_error.tool_rotation");
  if (!model_error.tool_bias.allFinite()) fail("model_error.tool_bias", "must be finite");
  if (plant && plant->dof() != nominal.dof()) fail("robot_true", "joint count differs from the nominal robot");
  if (home_q.size() != nominal.dof()) fail("home_q", "wrong number of joints");
  if (!nominal.within_limits(home_q)) fail("home_q", "outside the joint limits");
  if (!(tool.axis_e.norm() > 0.0)) fail("tool.axis_e", "zero vector");
  controller.validate(nominal);
  outer.validate();
  const double frame_steps = 1.0 / (outer.rate * dt);
  if (frame_steps < 1.0 || std::abs(frame_steps - std::round(frame_steps)) > 1e-9)
    fail("outer_loop.rate", "vision period must be a whole number of control steps");

  const auto& r = registration;
  if (r.landmarks < 3) fail("registration.landmarks", "need at least 3");
  if (r.per_landmark < 1) fail("registration.per_landmark", "need at least 1");
  non_negative(r.sigma, "registration.sigma");
  non_negative(r.bias, "registration.bias");
  if (r.handeye_poses < 3) fail("registration.handeye_poses", "need at least 3");
  non_negative(r.handeye_spread, "registration.handeye_spread");
  if (r.calibration_samples < 10) fail("registration.calibration_samples", "need at least 10");

  non_negative(plan.standoff, "plan.standoff");
  positive(plan.depth, "plan.depth");
  non_negative(plan.misplacement, "plan.misplacement");
  non_negative(plan.misalignment, "plan.misalignment");

  non_negative(feed.settle, "feed.settle");
  positive(feed.duration, "feed.duration");
  positive(feed.force_max, "feed.force_max");
  positive(feed.k_h, "feed.k_h");
  non_negative(feed.b_h, "feed.b_h");
  non_negative(feed.overshoot, "feed.overshoot");

  for (std::size_t i = 0; i < bone_motion.size(); ++i) {
    const auto& m = bone_motion[i];
    const std::string w = "bone_motion[" + std::to_string(i) + "]";
    if (!(m.t_end >= m.t_start)) fail(w + ".t_end", "must not precede t_start");
    if (m.angle != 0.0 && !(m.axis.norm() > 0.0)) fail(w + ".axis", "zero vector");
  }
  for (std::size_t i = 0; i < forces.size(); ++i) {
    if (!(forces[i].t_end >= forces[i].t_start))
      fail("forces[" + std::to_string(i) + "].t_end", "must not precede t_start");
    if (!forces[i].force.allFinite()) fail("forces[" + std::to_string(i) + "].force", "must be finite");
  }
}

TrialSetup prepare_trial(const Scenario& sc, int trial) {
  sc.validate();
  if (trial < 0) throw SchemaError("trial: must be non-negative");
  auto rng = make_rng(sc.seed, kStreamsPerTrial * static_cast<std::uint64_t>(trial));
  std::uniform_int_distribution<std::uint64_t> seeds;

  const auto& me = sc.model_error;
  RobotModel plant = sc.plant ? *sc.plant
                              : sc.nominal.perturbed(rng, me.link_translation, me.link_rotation,
                                                     me.tool_translation, me.tool_rotation);
  if (!me.tool_bias.isZero())
    plant = plant.with_ee_offset(plant.ee_offset() * Eigen::Translation3d(me.tool_bias));

  const FrameId v = frames::vision(), r = frames::robot(), s = frames::scan(), b = frames::bone(),
                e = frames::end_effector(), d = frames::drill();

  // Camera above and in front of the arm, looking down at the work area.
  const RigidTransform t_vr(v, r, rpy_to_matrix(-2.0, 0.3, 1.2), Eigen::Vector3d(0.2, -0.1, 1.6));
  const Eigen::Matrix3d r_ed =
      Eigen::AngleAxisd(0.5, Eigen::Vector3d(1.0, 1.0, 0.0).normalized()).toRotationMatrix();
  const RigidTransform t_ed(e, d, r_ed, Eigen::Vector3d(0.06, -0.03, 0.08));
  const Eigen::Vector3d axis_e = sc.tool.axis_e.normalized();
  const Eigen::Vector3d tip_d = inverse(t_ed) * sc.tool.tip_e;
  const Eigen::Vector3d axis_d = r_ed.transpose() * axis_e;

  // The planned hole sits just ahead of the tool at the home pose.
  const auto home = sc.nominal.ee_pose(sc.home_q);
  const Eigen::Vector3d tip_home = home * sc.tool.tip_e;
  const Eigen::Vector3d dir_home = home.rotation() * axis_e;
  const Eigen::Vector3d tilt_axis = Eigen::AngleAxisd(uniform_angle(rng), dir_home) * dir_home.unitOrthogonal();
  const Eigen::Vector3d dir_r = Eigen::AngleAxisd(sc.plan.misalignment, tilt_axis) * dir_home;
  const Eigen::Vector3d lateral = Eigen::AngleAxisd(uniform_angle(rng), dir_r) * dir_r.unitOrthogonal();
  const Eigen::Vector3d entry_r = tip_home + sc.plan.standoff * dir_home + sc.plan.misplacement * lateral;

  const Eigen::Vector3d entry_s(0.012, -0.004, 0.018);
  const Eigen::Vector3d u_s = Eigen::Vector3d(0.1, 0.2, -1.0).normalized();
  const Eigen::Vector3d exit_s = entry_s + sc.plan.depth * u_s;
  const Eigen::Matrix3d r_rs = Eigen::AngleAxisd(uniform_angle(rng), dir_r).toRotationMatrix() *
                               Eigen::Quaterniond::FromTwoVectors(u_s, dir_r).toRotationMatrix();
  const RigidTransform t_rs(r, s, r_rs, entry_r - r_rs * entry_s);
  const RigidTransform t_bs(b, s, random_rotation(rng), uniform_vec(rng, 0.05));
  const auto t_rb = compose(t_rs, inverse(t_bs));

  TrialSetup out{plant,  t_vr,   t_rb, t_bs, t_ed, entry_s, exit_s, PlanGeometry{entry_s, exit_s, inverse(t_vr), t_bs},
                 DrillCalibration{tip_d, axis_d}, 0.0, 0.0};
  if (sc.registration.ideal) return out;

  const auto& rp = sc.registration;
  const NoiseModel& noise = sc.vision.noise;

  // Drill tracker: pivot about a divot for the tip, then slide and spin for the bit axis.
  PivotSpec ps;
  ps.pivot_fixed = Eigen::Vector3d(0.3, 0.1, 0.2) + uniform_vec(rng, 0.05);
  ps.tip_body = tip_d;
  ps.samples = rp.calibration_samples;
  ps.from = d;
  const auto pivot = pivot_calibrate(generate_pivot(ps, noise, seeds(rng)));
  AxisSpec as;
  as.known_point = tip_d;
  as.axis = axis_d;
  as.samples = rp.calibration_samples;
  const auto axis = axis_calibrate(generate_axis(as, noise, seeds(rng)), pivot.point_body, axis_d);
  out.drill_cal = {pivot.point_body.coords, axis.axis.dir};

  // Hand-eye: the arm reports its nominal pose, the tracker sees the true one.
  std::uniform_real_distribution<double> spread(-rp.handeye_spread, rp.handeye_spread);
  std::bernoulli_distribution drop(noise.dropout_prob);
  std::vector<PosePair> pairs;
  for (int i = 0; i < rp.handeye_poses; ++i) {
    Eigen::VectorXd q = sc.home_q;
    for (int k = 0; k < q.size(); ++k) {
      const auto& jt = sc.nominal.joints()[static_cast<std::size_t>(k)];
      const double margin = std::min(0.05, 0.25 * (jt.upper - jt.lower));
      q(k) = std::clamp(q(k) + spread(rng), jt.lower + margin, jt.upper - margin);
    }
    const auto truth = compose(compose(t_vr, plant.ee_pose(q)), t_ed);
    auto seen = noisy_pose(rng, truth, noise);
    while (drop(rng)) seen = noisy_pose(rng, truth, noise);
    pairs.push_back({sc.nominal.ee_pose(q), seen});
  }
  const PointCalibration tip_e{Point3(sc.tool.tip_e, e), Point3(Eigen::Vector3d::Zero(), r), 0.0, 0, 0, 0.0};
  const auto he = hand_eye_register(pairs, tip_e, pivot);
  out.plan.t_rv = inverse(he.fit.transform);
  out.handeye_rms = he.fit.rms;

  // Bone: probe each landmark repeatedly; each landmark carries its own bias.
  std::vector<Point3> marks;
  for (int i = 0; i < rp.landmarks; ++i) {
    const Eigen::Vector3d off = uniform_vec(rng, 0.04);
    marks.emplace_back(entry_s + Eigen::Vector3d(off.x(), off.y(), 0.5 * off.z()), s);
  }
  RegistrationSession session(LandmarkSet(marks, Point3(entry_s, s), Point3(exit_s, s)));
  for (std::size_t i = 0; i < marks.size(); ++i) {
    const Eigen::Vector3d bias = uniform_vec(rng, rp.bias);
    for (int k = 0; k < rp.per_landmark; ++k)
      session.add(i, Point3(t_bs * marks[i].coords + bias + sample_position_noise(rng, rp.sigma), b));
  }
  out.plan.t_bs = session.fit()->transform;
  out.registration_rms = session.fit()->rms;
  return out;
}

TrialMetrics compute_metrics(const std::vector<MetricSample>& samples, const Eigen::Vector3d& entry_s,
                             const Eigen::Vector3d& exit_s) {
  const double depth = (exit_s - entry_s).norm();
  const Eigen::Vector3d u = (exit_s - entry_s) / depth;
  double max_offset = 0.0;
  bool terminated = false;
  std::vector<Eigen::Vector3d> pts;
  for (const auto& s : samples) {
    max_offset = std::max(max_offset, s.o_tip.norm());
    if (!s.running) terminated = true;
    if (s.phase != 1 || !s.running) continue;
    const double a = (s.tip_scan - entry_s).dot(u);
    if (a >= 0.0 && a <= depth) pts.push_back(s.tip_scan);
  }

  TrialMetrics m;
  if (pts.size() < 10) {
    m = failed_metrics("drill did not traverse the planned hole");
  } else {
    Eigen::Vector3d c = Eigen::Vector3d::Zero();
    for (const auto& p : pts) c += p;
    c /= static_cast<double>(pts.size());
    Eigen::MatrixXd a(static_cast<Eigen::Index>(pts.size()), 3);
    for (std::size_t i = 0; i < pts.size(); ++i) a.row(static_cast<Eigen::Index>(i)) = (pts[i] - c).transpose();
    Eigen::JacobiSVD<Eigen::MatrixXd> svd(a, Eigen::ComputeThinV);
    Eigen::Vector3d dir = svd.matrixV().col(0);
    if (dir.dot(u) < 0.0) dir = -dir;
    auto crossing = [&](const Eigen::Vector3d& p) { return c + ((p - c).dot(u) / dir.dot(u)) * dir; };
    m.entry_translation_err = 1e3 * (crossing(entry_s) - entry_s).norm();
    m.exit_translation_err = 1e3 * (crossing(exit_s) - exit_s).norm();
    m.angular_deviation = std::acos(std::clamp(dir.dot(u), -1.0, 1.0)) * 180.0 / std::numbers::pi;
  }
  m.max_spring_offset = max_offset;
  m.terminated_early = terminated;
  return m;
}

Simulation::Simulation(Scenario scenario, int trial, bool keep_log)
    : sc_(std::move(scenario)),
      trial_(trial),
      keep_log_(keep_log),
      setup_(prepare_trial(sc_, trial)),
      outer_(sc_.outer, setup_.plan, setup_.drill_cal, sc_.controller),
      vision_rng_(make_rng(sc_.seed, kStreamsPerTrial * static_cast<std::uint64_t>(trial) + 1)),
      frame_steps_(std::llround(1.0 / (sc_.outer.rate * sc_.dt))),
      recording_(keep_log || sc_.feed.enabled) {
  js_.q = sc_.home_q;
  js_.qdot = Eigen::VectorXd::Zero(sc_.nominal.dof());
  last_sat_.assign(static_cast<std::size_t>(sc_.nominal.dof()), false);

  const auto t_rs = compose(setup_.t_rb_true, setup_.t_bs_true);
  entry0_r_ = t_rs * setup_.entry_s;
  const Eigen::Vector3d dir = t_rs.rotation() * (setup_.exit_s - setup_.entry_s).normalized();
  const auto ee = setup_.plant.frames(js_.q).back();
  feed_start_depth_ = (ee * sc_.tool.tip_e - entry0_r_).dot(dir);

  // The guide starts from one tracker reading of the bone.
  std::bernoulli_distribution drop(sc_.vision.noise.dropout_prob);
  const auto t_vb = compose(setup_.t_vr_true, setup_.t_rb_true);
  auto seen = noisy_pose(vision_rng_, t_vb, sc_.vision.noise);
  while (drop(vision_rng_)) seen = noisy_pose(vision_rng_, t_vb, sc_.vision.noise);
  const auto [entry, exit] = outer_.plan_in_robot(seen);
  cs_ = init_controller(sc_.nominal, sc_.tool, sc_.controller, js_.q, entry, (exit - entry).normalized());
  outer_.reset_filter(seen, cs_);
  zbar_tip_ = tool_points(sc_.nominal, sc_.tool, sc_.controller.drill.L, js_.q).first;

  if (keep_log_) {
    auto& h = log_.header;
    h.dt = sc_.dt;
    h.seed = sc_.seed;
    h.trial = trial_;
    h.entry_s = setup_.entry_s;
    h.exit_s = setup_.exit_s;
    h.tool = sc_.tool;
    h.controller = sc_.controller;
    h.plant = setup_.plant;
    h.nominal = sc_.nominal;
  }
}

bool Simulation::finished() const {
  return failed_ || k_ >= std::llround(sc_.duration / sc_.dt);
}

void Simulation::run() {
  while (!finished()) step();
}

int Simulation::phase(double t) const {
  if (!sc_.feed.enabled || t < sc_.feed.settle) return 0;
  return t < sc_.feed.settle + sc_.feed.duration ? 1 : 2;
}

Eigen::Isometry3d Simulation::bone_offset(double t) const {
  Eigen::Isometry3d m = Eigen::Isometry3d::Identity();
  for (const auto& mv : sc_.bone_motion) {
    if (t < mv.t_start) continue;
    const double f = mv.t_end > mv.t_start ? std::min(1.0, (t - mv.t_start) / (mv.t_end - mv.t_start)) : 1.0;
    Eigen::Isometry3d step = Eigen::Isometry3d::Identity();
    step.translate(f * mv.dp);
    if (mv.angle != 0.0) {
      step.translate(entry0_r_);
      step.rotate(Eigen::AngleAxisd(f * mv.angle, mv.axis.normalized()));
      step.translate(-entry0_r_);
    }
    m = step * m;
  }
  return m;
}

RigidTransform Simulation::true_t_rb(double t) const {
  if (sc_.bone_motion.empty()) return setup_.t_rb_true;
  return from_isometry(frames::robot(), frames::bone(), bone_offset(t) * setup_.t_rb_true.isometry());
}

RigidTransform Simulation::true_t_vd() const {
  return compose(compose(setup_.t_vr_true, setup_.plant.ee_pose(js_.q)), setup_.t_ed_true);
}

double Simulation::feed_reference(double t) const {
  const auto& f = sc_.feed;
  const double target = sc_.plan.depth + f.overshoot;
  const double frac = std::clamp((t - f.settle) / f.duration, 0.0, 1.0);
  return feed_start_depth_ + frac * (target - feed_start_depth_);
}

Eigen::VectorXd Simulation::external_torque(const std::vector<Eigen::Isometry3d>& pf) const {
  const auto& plant = setup_.plant;
  const double t = time();
  Eigen::VectorXd u = Eigen::VectorXd::Zero(plant.dof());
  const Eigen::Isometry3d& ee = pf.back();
  const Eigen::Vector3d axis = ee.linear() * sc_.tool.axis_e.normalized();
  const Eigen::Vector3d tip = ee * sc_.tool.tip_e;

  if (sc_.feed.enabled && cs_.status == Status::running) {
    const auto t_rs = compose(true_t_rb(t), setup_.t_bs_true);
    const Eigen::Vector3d entry = t_rs * setup_.entry_s;
    const Eigen::Vector3d dir = t_rs.rotation() * (setup_.exit_s - setup_.entry_s).normalized();
    const Eigen::MatrixXd j = plant.jacobian_at(pf, tip);
    const double s = (tip - entry).dot(dir);
    const double sd = (j * js_.qdot).dot(dir);
    const double push = std::clamp(sc_.feed.k_h * (feed_reference(t) - s) - sc_.feed.b_h * sd,
                                   -sc_.feed.force_max, sc_.feed.force_max);
    u += j.transpose() * (push * axis);
  }
  for (const auto& ev : sc_.forces) {
    if (t < ev.t_start || t >= ev.t_end) continue;
    const Eigen::Vector3d p = ev.point == ForcePoint::tip ? tip : Eigen::Vector3d(tip + sc_.controller.drill.L * axis);
    u += plant.jacobian_at(pf, p).transpose() * ev.force;
  }
  return u;
}

void Simulation::vision_frame() {
  const auto& noise = sc_.vision.noise;
  std::bernoulli_distribution drop(noise.dropout_prob);
  VisionFrame f;
  f.timestamp = time();
  const auto t_vb = noisy_pose(vision_rng_, compose(setup_.t_vr_true, true_t_rb(f.timestamp)), noise);
  if (!drop(vision_rng_)) f.t_vb = t_vb;
  const auto t_vd = noisy_pose(vision_rng_, true_t_vd(), noise);
  if (!drop(vision_rng_)) f.t_vd = t_vd;
  pending_.push_back(std::move(f));
  if (static_cast<int>(pending_.size()) <= sc_.vision.latency_frames) return;

  const VisionFrame frame = std::move(pending_.front());
  pending_.pop_front();
  if (frame.t_vd) zbar_tip_ = compose(setup_.plan.t_rv, *frame.t_vd) * setup_.drill_cal.tip_d;
  if (!sc_.outer_loop_enabled) return;
  const auto [z_tip, z_base] = tool_points(sc_.nominal, sc_.tool, sc_.controller.drill.L, js_.q);
  const auto rep = outer_.update(frame, z_tip, z_base, cs_);
  if (!rep.offsets.applied) return;
  // A live session keeps only the recent history.
  if (!recording_ && updates_.size() >= 2 * kMaxLiveUpdates)
    updates_.erase(updates_.begin(), updates_.begin() + static_cast<std::ptrdiff_t>(kMaxLiveUpdates));
  updates_.push_back(rep.offsets);
}

void Simulation::step() {
  if (failed_) return;
  const double t = time();
  try {
    if (k_ % frame_steps_ == 0) vision_frame();
    const auto& plant = setup_.plant;
    const auto pf = plant.frames(js_.q);
    const Eigen::VectorXd u_e = external_torque(pf);
    const auto r = controller_step(sc_.nominal, sc_.tool, sc_.controller, js_, cs_, sc_.dt);
    last_sat_ = r.out.saturated;
    const bool sat = std::any_of(last_sat_.begin(), last_sat_.end(), [](bool b) { return b; });

    if (recording_) {
      const auto t_rs = compose(true_t_rb(t), setup_.t_bs_true);
      const Eigen::Vector3d tip_scan = inverse(t_rs) * (pf.back() * sc_.tool.tip_e);
      const int ph = phase(t);
      samples_.push_back({ph, cs_.status == Status::running, tip_scan, cs_.o_tip});
      if (keep_log_) {
        LogRow row;
        row.t = t;
        row.phase = ph;
        row.audit = {t, js_, cs_, u_e, sat};
        row.z_tip = r.out.z_tip;
        row.zbar_tip = zbar_tip_;
        row.tip_scan = tip_scan;
        row.u_r = r.out.u_r;
        row.energy = energy(plant, sc_.nominal, sc_.tool, sc_.controller, js_, cs_);
        log_.rows.push_back(std::move(row));
      }
    }

    const double h = sc_.dt / sc_.substeps;
    const Eigen::VectorXd tau = r.out.u_r + u_e;
    for (int i = 0; i < sc_.substeps; ++i) {
      const Eigen::VectorXd qdd = plant.forward_dynamics(js_.q, js_.qdot, tau);
      js_.qdot += h * qdd;
      js_.q += h * js_.qdot;
    }
    cs_ = r.next;
    if (!js_.q.allFinite() || !js_.qdot.allFinite()) throw Error("non-finite joint state");
  } catch (const std::exception& e) {
    failed_ = true;
    diagnostics_ = "diverged at t = " + format_double(t) + " s: " + e.what();
  }
  ++k_;
}

TrialMetrics Simulation::metrics() const {
  TrialMetrics m = compute_metrics(samples_, setup_.entry_s, setup_.exit_s);
  if (failed_) {
    const bool terminated = m.terminated_early;
    const double offset = m.max_spring_offset;
    m = failed_metrics(diagnostics_);
    m.terminated_early = terminated;
    m.max_spring_offset = offset;
  }
  return m;
}

Snapshot Simulation::snapshot() const {
  Snapshot s;
  s.t = time();
  s.q = js_.q;
  s.q_v = cs_.q_v;
  std::tie(s.tip, s.base) = tool_points(setup_.plant, sc_.tool, sc_.controller.drill.L, js_.q);
  s.tip_measured = zbar_tip_;
  s.axis_origin = cs_.axis_origin;
  s.axis_dir = cs_.axis_dir;
  s.o_tip = cs_.o_tip;
  s.o_base = cs_.o_base;
  s.energy = energy(setup_.plant, sc_.nominal, sc_.tool, sc_.controller, js_, cs_);
  s.status = cs_.status;
  s.reason = cs_.reason;
  s.torque_sat = last_sat_;
  return s;
}

void Simulation::apply_force(ForcePoint point, const Eigen::Vector3d& force, double hold) {
  if (!force.allFinite() || !(hold >= 0.0)) throw SchemaError("apply_force: force must be finite and hold non-negative");
  const double t = time();
  std::erase_if(sc_.forces, [t](const ForceEvent& e) { return e.t_end <= t; });
  for (auto& e : sc_.forces)
    if (e.point == point && e.t_start <= t) e.t_end = t;
  sc_.forces.push_back({t, t + hold, point, force});
}

void Simulation::set_force_script(std::vector<ForceEvent> events) {
  Scenario probe = sc_;
  probe.forces = events;
  probe.validate();
  sc_.forces = std::move(events);
}

void Simulation::move_bone(const Eigen::Vector3d& dp, const Eigen::Vector3d& axis, double angle, double ramp) {
  if (!dp.allFinite() || !axis.allFinite() || !std::isfinite(angle) || !(ramp >= 0.0))
    throw SchemaError("move_bone: values must be finite");
  if (angle != 0.0 && !(axis.norm() > 0.0)) throw SchemaError("move_bone: rotation axis is zero");
  const double t = time();
  sc_.bone_motion.push_back({t, t + ramp, dp, angle != 0.0 ? Eigen::Vector3d(axis.normalized()) : Eigen::Vector3d::UnitZ(), angle});
}

TrialResult run_trial(const Scenario& sc, int trial, bool keep_log) {
  sc.validate();
  TrialResult out;
  out.trial = trial;
  try {
    Simulation sim(sc, trial, keep_log);
    sim.run();
    out.metrics = sim.metrics();
    if (keep_log) out.log = sim.log();
  } catch (const SchemaError&) {
    throw;
  } catch (const std::exception& e) {
    out.metrics = failed_metrics(std::string("setup failed: ") + e.what());
  }
  return out;
}

std::vector<TrialResult> run_batch(const Scenario& sc, int n, bool keep_logs, unsigned threads) {
  sc.validate();
  if (n < 1) throw SchemaError("trials: must be at least 1");
  std::vector<TrialResult> out(static_cast<std::size_t>(n));
  if (threads == 0) threads = std::max(1u, std::thread::hardware_concurrency());
  threads = std::min(threads, static_cast<unsigned>(n));
  std::atomic<int> next{0};
  auto worker = [&] {
    for (int i = next++; i < n; i = next++) out[static_cast<std::size_t>(i)] = run_trial(sc, i, keep_logs);
  };
  if (threads == 1) {
    worker();
  } else {
    std::vector<std::jthread> pool;
    for (unsigned i = 0; i < threads; ++i) pool.emplace_back(worker);
  }
  return out;
}

std::string metrics_csv(const std::vector<TrialResult>& results, std::uint64_t seed) {
  std::ostringstream os;
  os << "trial,seed,entry_translation_err_mm,exit_translation_err_mm,angular_deviation_deg,"
        "max_spring_offset_m,terminated_early,failed\n";
  for (const auto& r : results) {
    const auto& m = r.metrics;
    os << r.trial << ',' << seed << ',' << format_double(m.entry_translation_err) << ','
       << format_double(m.exit_translation_err) << ',' << format_double(m.angular_deviation) << ','
       << format_double(m.max_spring_offset) << ',' << (m.terminated_early ? 1 : 0) << ','
       << (m.failed ? 1 : 0) << '\n';
  }
  return os.str();
}

}  // namespace vdg
