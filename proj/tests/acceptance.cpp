// Acceptance suite: one PASS/FAIL line per criterion, exit status 1 if any fails.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <numbers>
#include <sstream>
#include <string>

#include "closed_loop.hpp"
#include "support.hpp"
#include "vdg/calibration.hpp"
#include "vdg/config.hpp"
#include "vdg/outer_loop.hpp"
#include "vdg/passivity.hpp"
#include "vdg/sim.hpp"
#include "vdg/synthetic.hpp"

using namespace vdg;

namespace {

using clock_type = std::chrono::steady_clock;

struct Outcome {
  bool pass = true;
  std::string detail;
};

// Collects failed checks with a short note; the first few are kept for the report line.
struct Checker {
  Outcome out;
  int failures = 0;
  void check(bool ok, const std::string& what) {
    if (ok) return;
    out.pass = false;
    if (failures++ < 3) out.detail += (out.detail.empty() ? "" : "; ") + what;
  }
};

std::string fmt(const char* f, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, v);
  return buf;
}

double seconds_since(clock_type::time_point t0) {
  return std::chrono::duration<double>(clock_type::now() - t0).count();
}

const RobotModel& panda() {
  static const RobotModel m = load_robot(VDG_CONFIG_DIR "/panda.json");
  return m;
}

Scenario bundled() { return load_scenario(VDG_CONFIG_DIR "/scenario.json"); }

Scenario quiet(double duration) {
  Scenario sc = bundled();
  sc.model_error = {0.0, 0.0, 0.0, 0.0};
  sc.vision.noise = {0.0, 0.0, 0.0};
  sc.registration.ideal = true;
  sc.feed.enabled = false;
  sc.duration = duration;
  return sc;
}

double angle_between(const Eigen::Vector3d& a, const Eigen::Vector3d& b) {
  return std::atan2(a.cross(b).norm(), a.dot(b));
}

Outcome pivot_recovery() {
  Checker c;
  const double sigma = 1e-4;
  double worst_err = 0.0, worst_time = 0.0, rms_lo = 1e9, rms_hi = 0.0;
  PivotSpec spec;
  spec.samples = 100;
  for (std::uint64_t seed = 1; seed <= 100; ++seed) {
    const Recording rec = generate_pivot(spec, {sigma, 0.0, 0.0}, seed);
    const auto t0 = clock_type::now();
    const PointCalibration cal = pivot_calibrate(rec);
    worst_time = std::max(worst_time, seconds_since(t0));
    const double err = (cal.point_body.coords - spec.tip_body).norm();
    worst_err = std::max(worst_err, err);
    rms_lo = std::min(rms_lo, cal.rms);
    rms_hi = std::max(rms_hi, cal.rms);
    c.check(err < 5e-5, "seed " + std::to_string(seed) + " tip error " + fmt("%.4f mm", err * 1e3));
    c.check(cal.rms >= 0.5 * sigma && cal.rms <= 1.5 * sigma,
            "seed " + std::to_string(seed) + " rms " + fmt("%.4f mm", cal.rms * 1e3));
  }
  c.check(worst_time < 1.0, "slowest calibration " + fmt("%.3f s", worst_time));
  if (c.out.pass)
    c.out.detail = "100/100 seeds, worst tip error " + fmt("%.4f mm", worst_err * 1e3) + ", rms " +
                   fmt("%.4f", rms_lo * 1e3) + ".." + fmt("%.4f mm", rms_hi * 1e3) + ", slowest " +
                   fmt("%.4f s", worst_time);
  return c.out;
}

Outcome axis_recovery() {
  Checker c;
  AxisSpec spec;
  double worst = 0.0;
  auto rng = test::rng_for(202);
  for (std::uint64_t seed = 1; seed <= 50; ++seed) {
    spec.axis = test::random_unit(rng);
    const Recording rec = generate_axis(spec, {1e-4, 0.0, 0.0}, seed);
    const auto cal = axis_calibrate(rec, Point3(spec.known_point, frames::drill()), spec.axis);
    const double a = angle_between(cal.axis.dir, spec.axis);
    worst = std::max(worst, a);
    c.check(a < 0.1 * std::numbers::pi / 180.0, "seed " + std::to_string(seed) + fmt(" off by %.4f deg", a * 180 / std::numbers::pi));
  }
  spec.axis = Eigen::Vector3d(0.3, -0.2, 0.9).normalized();
  const auto exact = axis_calibrate(generate_axis(spec, {}, 7), Point3(spec.known_point, frames::drill()), spec.axis);
  const double a0 = angle_between(exact.axis.dir, spec.axis);
  c.check(a0 <= 1e-9, "noiseless axis off by " + fmt("%.3g rad", a0));
  if (c.out.pass)
    c.out.detail = "50 noisy seeds, worst " + fmt("%.4f deg", worst * 180 / std::numbers::pi) + "; noiseless " +
                   fmt("%.2g rad", a0);
  return c.out;
}

// RMS of |t(src_i) - dst_i|.
double fit_rms(const RigidTransform& t, const std::vector<Point3>& src, const std::vector<Point3>& dst) {
  double s = 0.0;
  for (std::size_t i = 0; i < src.size(); ++i) s += (t * src[i].coords - dst[i].coords).squaredNorm();
  return std::sqrt(s / static_cast<double>(src.size()));
}

Outcome arun_registration() {
  Checker c;
  auto rng = test::rng_for(303);
  std::uniform_int_distribution<int> count(3, 30);
  double worst_rot = 0.0, worst_trans = 0.0;
  for (int inst = 0; inst < 200; ++inst) {
    const auto truth = test::random_transform(rng, frames::bone(), frames::scan(), 0.2);
    std::vector<Point3> a, b;
    const int n = count(rng);
    for (int i = 0; i < n; ++i) {
      // Every fifth instance is planar, where a reflection fits equally well.
      Eigen::Vector3d p = test::random_vec(rng, 0.05);
      if (inst % 5 == 0) p.z() = 0.0;
      a.emplace_back(p, frames::scan());
      b.emplace_back(truth * p, frames::bone());
    }
    const auto fit = register_transform(b, a);
    const double rot = rotation_angle_between(fit.transform.rotation(), truth.rotation());
    const double trans = (fit.transform.translation() - truth.translation()).norm();
    worst_rot = std::max(worst_rot, rot);
    worst_trans = std::max(worst_trans, trans);
    c.check(fit.transform.rotation().determinant() > 0.0, "reflection returned");
    c.check(rot <= 1e-9 && trans <= 1e-12, "noiseless instance " + std::to_string(inst) + fmt(" rot %.3g", rot) +
                                                  fmt(" trans %.3g", trans));
  }
  int beaten = 0;
  for (int inst = 0; inst < 30; ++inst) {
    const auto truth = test::random_transform(rng, frames::bone(), frames::scan(), 0.2);
    std::vector<Point3> a, b;
    for (int i = 0; i < 12; ++i) {
      const Eigen::Vector3d p = test::random_vec(rng, 0.05);
      a.emplace_back(p, frames::scan());
      b.emplace_back(truth * p + test::random_vec(rng, 5e-4), frames::bone());
    }
    const auto fit = register_transform(b, a);
    c.check(fit.transform.rotation().determinant() > 0.0, "reflection returned");
    const double best = fit_rms(fit.transform, a, b);
    for (int k = 0; k < 1000; ++k) {
      // Half near the truth, half anywhere.
      const bool near = k % 2 == 0;
      const Eigen::Matrix3d R =
          near ? (Eigen::AngleAxisd(0.05 * std::uniform_real_distribution<double>(0, 1)(rng), test::random_unit(rng)) *
                  truth.rotation())
                     .eval()
               : test::random_rotation(rng);
      const Eigen::Vector3d t = near ? (truth.translation() + test::random_vec(rng, 0.002)).eval()
                                     : test::random_vec(rng, 0.3);
      const RigidTransform cand(frames::bone(), frames::scan(), R, t);
      const bool ok = best <= fit_rms(cand, a, b);
      beaten += ok;
      c.check(ok, "candidate beat the fit on noisy instance " + std::to_string(inst));
    }
  }
  if (c.out.pass)
    c.out.detail = "200 noiseless instances, worst " + fmt("%.2g rad", worst_rot) + " / " +
                   fmt("%.2g m", worst_trans) + "; fit beat " + std::to_string(beaten) + " candidates on 30 noisy instances";
  return c.out;
}

Outcome saturating_spring() {
  Checker c;
  const SpringDamperParams tip{4000.0, 20.0, 40.0};
  auto rng = test::rng_for(404);
  std::uniform_real_distribution<double> expo(-6.0, 1.0);
  double max_ratio = 0.0;
  for (int i = 0; i < 1'000'000; ++i) {
    const Eigen::Vector3d d = test::random_unit(rng) * std::pow(10.0, expo(rng));
    const double f = spring_force(tip, d).norm();
    max_ratio = std::max(max_ratio, f / tip.sigma);
    if (f > tip.sigma) c.check(false, "force " + fmt("%.17g N", f) + " above sigma");
  }
  const double h = 1e-9;
  const double k0 = spring_force(tip, Eigen::Vector3d(h, 0, 0)).x() / h;
  c.check(std::abs(k0 - tip.k) <= 1e-3 * tip.k, "origin stiffness " + fmt("%.6g", k0));
  double worst = 0.0;
  for (int i = 0; i < 2000; ++i) {
    const Eigen::Vector3d d = test::random_unit(rng) * std::pow(10.0, expo(rng) * 0.5 - 2.0);
    const Eigen::Vector3d f = spring_force(tip, d);
    Eigen::Vector3d g;
    for (int a = 0; a < 3; ++a) {
      const double step = 1e-7 * std::max(d.norm(), 1e-3);
      Eigen::Vector3d e = Eigen::Vector3d::Zero();
      e(a) = step;
      g(a) = (spring_energy(tip, d + e) - spring_energy(tip, d - e)) / (2.0 * step);
    }
    const double rel = (g - f).norm() / f.norm();
    worst = std::max(worst, rel);
    c.check(rel < 1e-6, "gradient mismatch " + fmt("%.3g", rel));
  }
  if (c.out.pass)
    c.out.detail = "max |f|/sigma " + fmt("%.15f", max_ratio) + ", origin stiffness " + fmt("%.4f N/m", k0) +
                   ", worst gradient error " + fmt("%.2g", worst);
  return c.out;
}

Outcome joint_buffer() {
  Checker c;
  const auto params = ControllerParams::defaults();
  double worst = 0.0;
  for (int i = 0; i < panda().dof(); ++i) {
    const auto& j = panda().joints()[static_cast<std::size_t>(i)];
    const auto& b = params.buffers[static_cast<std::size_t>(i)];
    const double h = 1e-6;
    double prev = buffer_torque(b, j.lower, j.upper, j.lower, 1.0);
    const auto n = static_cast<long>((j.upper - j.lower) / h);
    for (long s = 1; s <= n; ++s) {
      const double nu = buffer_torque(b, j.lower, j.upper, j.lower + static_cast<double>(s) * h, 1.0);
      worst = std::max(worst, std::abs(nu - prev));
      prev = nu;
    }
  }
  c.check(worst < 1e-3, "largest jump " + fmt("%.3g N m", worst));
  const auto& b = params.buffers[0];
  const auto& j = panda().joints()[0];
  const double mid = 0.5 * (j.lower + j.upper);
  const double damped = buffer_torque(b, j.lower, j.upper, mid, 1.0);
  const double spring = b.k * buffer_displacement(b, j.lower, j.upper, j.upper);
  const double damping = buffer_damping(b, j.lower, j.upper, j.upper);
  c.check(std::abs(std::abs(damped) - 0.5) <= 1e-12, "mid-range torque " + fmt("%.17g", damped));
  c.check(std::abs(spring - 15.0) <= 1e-12, "limit spring " + fmt("%.17g", spring));
  c.check(std::abs(damping - 4.5) <= 1e-12, "limit damping " + fmt("%.17g", damping));
  if (c.out.pass)
    c.out.detail = "largest jump " + fmt("%.2g N m", worst) + "; mid-range " + fmt("%.3f N m", std::abs(damped)) +
                   ", limit spring " + fmt("%.3f N m", spring) + ", limit damping " + fmt("%.3f N m s/rad", damping);
  return c.out;
}

Outcome jacobian() {
  Checker c;
  auto rng = test::rng_for(606);
  double worst = 0.0;
  for (int n = 0; n < 100; ++n) {
    Eigen::VectorXd q(7);
    for (int i = 0; i < 7; ++i) {
      const auto& j = panda().joints()[static_cast<std::size_t>(i)];
      q(i) = std::uniform_real_distribution<double>(j.lower, j.upper)(rng);
    }
    const Point3 p(test::random_vec(rng, 0.2), frames::end_effector());
    const Eigen::MatrixXd J = panda().point_jacobian(q, p);
    for (int i = 0; i < 7; ++i) {
      const double h = 1e-6;
      Eigen::VectorXd qp = q, qm = q;
      qp(i) += h;
      qm(i) -= h;
      const Eigen::Vector3d fd =
          (panda().forward_kinematics(qp, p).coords - panda().forward_kinematics(qm, p).coords) / (2.0 * h);
      worst = std::max(worst, (fd - J.col(i)).cwiseAbs().maxCoeff());
    }
  }
  c.check(worst < 1e-6, "max error " + fmt("%.3g", worst));
  if (c.out.pass) c.out.detail = "100 configurations, max abs error " + fmt("%.2g", worst);
  return c.out;
}

Outcome drill_poles() {
  Checker c;
  const auto p = ControllerParams::defaults();
  const auto [a, b] = linearize_virtual_drill(p.drill, p.tip);
  // Exact real part is -20.25, on the band edge.
  const double slack = 0.05 + 1e-12;
  for (const auto& z : {a, b}) {
    c.check(std::abs(z.real() + 20.3) <= slack, "real part " + fmt("%.6f", z.real()));
    c.check(std::abs(std::abs(z.imag()) - 59.9) <= slack, "imaginary part " + fmt("%.6f", z.imag()));
  }
  c.check(a.imag() * b.imag() < 0.0, "poles are not a conjugate pair");
  if (c.out.pass) c.out.detail = fmt("%.4f", a.real()) + " +/- " + fmt("%.4fi", std::abs(a.imag()));
  return c.out;
}

Outcome passivity() {
  Checker c;
  auto rng = test::rng_for(808);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  double worst_increase = 0.0, worst_rate = 0.0;
  for (int trial = 0; trial < 10; ++trial) {
    Eigen::VectorXd dq(7), qd(7);
    for (int i = 0; i < 7; ++i) {
      dq(i) = 0.1 * u(rng);
      qd(i) = 0.2 * u(rng);
    }
    auto loop = test::make_loop(panda(), panda(), test::home_q() + dq);
    loop.cs.axis_origin += test::random_vec(rng, 0.004);
    loop.js.qdot = qd;
    loop.cs.qd_v = 0.05 * u(rng);
    for (int k = 0; k < 10000; ++k) loop.step();
    loop.close_log();
    const auto rep = energy_audit(panda(), panda(), loop.tool, loop.params, loop.log, loop.dt);
    double increase = 0.0;
    for (std::size_t k = 1; k < rep.energy.size(); ++k) increase = std::max(increase, rep.energy[k] - rep.energy[k - 1]);
    worst_increase = std::max(worst_increase, increase);
    worst_rate = std::max(worst_rate, rep.residual_rate);
    c.check(rep.energy.front() > 1e-3, "start " + std::to_string(trial) + " has no energy");
    c.check(increase <= 1e-4, "start " + std::to_string(trial) + " energy rose " + fmt("%.3g J", increase));
    c.check(rep.residual_rate < 1e-4, "start " + std::to_string(trial) + " residual " + fmt("%.3g J/s", rep.residual_rate));
  }
  if (c.out.pass)
    c.out.detail = "10 starts x 10 s, largest step increase " + fmt("%.2g J", worst_increase) +
                   ", worst residual rate " + fmt("%.2g J/s", worst_rate);
  return c.out;
}

OuterLoop simple_outer(const OuterLoopParams& p) {
  return OuterLoop(p,
                   {Eigen::Vector3d::Zero(), Eigen::Vector3d(0, 0, 0.03),
                    RigidTransform::identity(frames::robot(), frames::vision()),
                    RigidTransform::identity(frames::bone(), frames::scan())},
                   {Eigen::Vector3d::Zero(), Eigen::Vector3d::UnitZ()}, ControllerParams::defaults());
}

Outcome offset_power_bound() {
  Checker c;
  const auto ctrl = ControllerParams::defaults();
  auto rng = test::rng_for(909);
  int applied = 0;
  double worst_ratio = 0.0;
  for (int trial = 0; trial < 100; ++trial) {
    OuterLoopParams p;
    p.k_i = std::uniform_real_distribution<double>(0.1, 20.0)(rng);
    auto outer = simple_outer(p);
    ControllerState s;
    for (int k = 0; k < 200; ++k) {
      std::optional<RigidTransform> vd;
      if (rng() % 10 != 0)
        vd = RigidTransform(frames::vision(), frames::drill(), test::random_rotation(rng), test::random_vec(rng, 0.05));
      const auto vb = RigidTransform(frames::vision(), frames::bone(), Eigen::Matrix3d::Identity(),
                                     test::random_vec(rng, 0.002));
      const Eigen::Vector3d z_tip = s.z_v_tip() + test::random_vec(rng, 0.01);
      const Eigen::Vector3d z_base = s.z_v_base(ctrl.drill.L) + test::random_vec(rng, 0.1);
      const auto r = outer.update({k * p.dt(), vb, vd}, z_tip, z_base, s);
      if (!r.offsets.applied) continue;
      ++applied;
      const double bound = p.k_i * (ctrl.tip.sigma * r.offsets.e_tip.norm() + ctrl.base.sigma * r.offsets.e_base.norm());
      const double power = r.offsets.injected_power;
      if (bound > 0.0) worst_ratio = std::max(worst_ratio, power / bound);
      c.check(power <= bound + 1e-9, "injected " + fmt("%.6g W", power) + " above bound " + fmt("%.6g W", bound));
    }
  }
  c.check(applied > 10000, "only " + std::to_string(applied) + " updates applied");
  if (c.out.pass)
    c.out.detail = std::to_string(applied) + " updates, largest power/bound " + fmt("%.4f", worst_ratio);
  return c.out;
}

Outcome disturbance_rejection() {
  Checker c;
  Scenario sc = quiet(10.0);
  sc.model_error.tool_bias = Eigen::Vector3d(0.003, 0.0, 0.0);
  Simulation sim(sc, 0);
  double max_tip = 0.0, max_base = 0.0;
  while (!sim.finished()) {
    sim.step();
    max_tip = std::max(max_tip, sim.controller().o_tip.cwiseAbs().maxCoeff());
    max_base = std::max(max_base, sim.controller().o_base.cwiseAbs().maxCoeff());
  }
  const auto& ups = sim.offset_updates();
  c.check(!ups.empty(), "no offset updates");
  double final_err = ups.empty() ? INFINITY : ups.back().e_tip.norm();
  c.check(final_err < 1e-5, "tip error at 10 s " + fmt("%.4f mm", final_err * 1e3));

  // Clamps over the trial and over aggressive random streams.
  auto rng = test::rng_for(1010);
  for (int trial = 0; trial < 50; ++trial) {
    OuterLoopParams p;
    p.k_i = std::uniform_real_distribution<double>(0.1, 50.0)(rng);
    auto outer = simple_outer(p);
    ControllerState s;
    for (int k = 0; k < 400; ++k) {
      outer.update({k * p.dt(), RigidTransform(frames::vision(), frames::bone(), Eigen::Matrix3d::Identity(), test::random_vec(rng, 0.01)),
                    RigidTransform(frames::vision(), frames::drill(), test::random_rotation(rng), test::random_vec(rng, 0.5))},
                   test::random_vec(rng, 0.5), test::random_vec(rng, 2.0), s);
      c.check(s.o_tip.cwiseAbs().maxCoeff() <= p.clamp_tip, "tip clamp exceeded");
      c.check(s.o_base.cwiseAbs().maxCoeff() <= p.clamp_base, "base clamp exceeded");
    }
  }
  c.check(max_tip <= sc.outer.clamp_tip && max_base <= sc.outer.clamp_base, "clamp exceeded in the trial");

  // Full base clamp: hold the offsets and let the arm settle on the tilted guide.
  const double L = ControllerParams::defaults().drill.L;
  const double expected = std::atan(0.15 / L);
  const double from_params = max_angular_correction(OuterLoopParams{}, L);
  c.check(std::abs(from_params - expected) < 1e-15, "max correction " + fmt("%.6f rad", from_params));
  auto loop = test::make_loop(panda(), panda(), test::home_q());
  const Eigen::Vector3d axis0 = loop.cs.axis_dir;
  const Eigen::Vector3d lateral = axis0.unitOrthogonal();
  loop.cs.o_base = -0.15 * lateral;
  for (int k = 0; k < 20000; ++k) loop.step();
  const Eigen::Vector3d tool_axis = panda().ee_pose(loop.js.q).rotation() * loop.tool.axis_e;
  const double tilt = angle_between(tool_axis, axis0);
  c.check(std::abs(tilt - expected) < 0.05 * std::numbers::pi / 180.0,
          "settled tilt " + fmt("%.3f deg", tilt * 180 / std::numbers::pi));
  if (c.out.pass)
    c.out.detail = "tip error at 10 s " + fmt("%.5f mm", final_err * 1e3) + ", clamps held, full-clamp tilt " +
                   fmt("%.3f deg", tilt * 180 / std::numbers::pi) + " vs " +
                   fmt("%.3f deg", expected * 180 / std::numbers::pi);
  return c.out;
}

Outcome safety() {
  Checker c;
  std::string detail;
  struct Case {
    const char* name;
    BoneMove move;
  };
  const double t_move = 1.013;
  const std::vector<Case> cases{
      {"80 mm", {t_move, t_move, Eigen::Vector3d(0.08, 0.0, 0.0), Eigen::Vector3d::UnitZ(), 0.0}},
      {"25 deg", {t_move, t_move, Eigen::Vector3d::Zero(), Eigen::Vector3d(1.0, 1.0, 0.0).normalized(),
                  25.0 * std::numbers::pi / 180.0}},
  };
  for (const auto& cs : cases) {
    Scenario sc = quiet(3.0);
    sc.vision.latency_frames = 0;
    sc.bone_motion = {cs.move};
    // The bone then returns; the stop must hold.
    BoneMove back = cs.move;
    back.t_start = back.t_end = 2.0;
    back.dp = -back.dp;
    back.angle = -back.angle;
    sc.bone_motion.push_back(back);
    Simulation sim(sc, 0);
    double t_stop = -1.0;
    bool latched = true;
    while (!sim.finished()) {
      sim.step();
      const bool stopped = sim.controller().status == Status::terminated;
      if (stopped && t_stop < 0.0) t_stop = sim.time();
      if (t_stop >= 0.0 && !stopped) latched = false;
    }
    const double delay = t_stop - t_move;
    c.check(t_stop >= t_move, std::string(cs.name) + " never terminated");
    c.check(delay <= 0.05 + 1e-9, std::string(cs.name) + " terminated after " + fmt("%.3f s", delay));
    c.check(latched, std::string(cs.name) + " released");
    detail += std::string(detail.empty() ? "" : ", ") + cs.name + " stopped " + fmt("%.0f ms", delay * 1e3) + " after the move";
  }
  if (c.out.pass) c.out.detail = detail + ", latched through the return";
  return c.out;
}

struct BatchStats {
  double entry = 0, exit = 0, angle = 0;
  int terminated = 0, failed = 0;
};

BatchStats stats_of(const std::vector<TrialResult>& rs) {
  BatchStats s;
  for (const auto& r : rs) {
    s.failed += r.metrics.failed;
    s.terminated += r.metrics.terminated_early;
    s.entry += r.metrics.entry_translation_err / static_cast<double>(rs.size());
    s.exit += r.metrics.exit_translation_err / static_cast<double>(rs.size());
    s.angle += r.metrics.angular_deviation / static_cast<double>(rs.size());
  }
  return s;
}

std::string first_csv, second_csv;

Outcome trial_plausibility() {
  Checker c;
  const Scenario sc = bundled();
  const auto t0 = clock_type::now();
  const auto a = run_batch(sc, 16);
  const auto b = run_batch(sc, 16, false, 1);
  const double elapsed = seconds_since(t0);
  first_csv = metrics_csv(a, sc.seed);
  second_csv = metrics_csv(b, sc.seed);
  const auto s = stats_of(a);
  c.check(s.failed == 0, std::to_string(s.failed) + " trials failed");
  c.check(s.entry <= 2.0, "mean entry " + fmt("%.3f mm", s.entry));
  c.check(s.exit <= 2.5, "mean exit " + fmt("%.3f mm", s.exit));
  c.check(s.angle <= 2.5, "mean angle " + fmt("%.3f deg", s.angle));
  c.check(s.terminated == 0, std::to_string(s.terminated) + " early terminations");
  c.check(first_csv == second_csv, "batch not deterministic");
  c.check(elapsed < 300.0, "took " + fmt("%.1f s", elapsed));
  if (c.out.pass)
    c.out.detail = "16 trials: mean entry " + fmt("%.3f mm", s.entry) + ", exit " + fmt("%.3f mm", s.exit) +
                   ", angle " + fmt("%.3f deg", s.angle) + ", 0 terminated, two runs in " + fmt("%.1f s", elapsed);
  return c.out;
}

Outcome determinism() {
  Checker c;
  if (first_csv.empty()) trial_plausibility();
  c.check(!first_csv.empty() && first_csv == second_csv, "metrics CSV differs between runs");
  const Scenario sc = bundled();
  const auto x = run_trial(sc, 3, true);
  const auto y = run_trial(sc, 3, true);
  std::ostringstream lx, ly;
  write_log(lx, *x.log);
  write_log(ly, *y.log);
  c.check(lx.str() == ly.str(), "trajectory log differs between runs");
  if (c.out.pass)
    c.out.detail = "metrics CSV identical (" + std::to_string(first_csv.size()) + " bytes), trajectory log identical (" +
                   std::to_string(lx.str().size()) + " bytes)";
  return c.out;
}

}  // namespace

int main() {
  const std::vector<std::pair<const char*, std::function<Outcome()>>> criteria{
      {"pivot calibration recovery", pivot_recovery},
      {"axis calibration recovery", axis_recovery},
      {"point-set registration", arun_registration},
      {"saturating spring", saturating_spring},
      {"joint-limit buffer", joint_buffer},
      {"point Jacobian", jacobian},
      {"virtual drill poles", drill_poles},
      {"passivity with frozen offsets", passivity},
      {"offset power bound", offset_power_bound},
      {"outer-loop disturbance rejection", disturbance_rejection},
      {"safety termination", safety},
      {"end-to-end trial plausibility", trial_plausibility},
      {"determinism", determinism},
  };
  int failed = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    Outcome o;
    const auto t0 = clock_type::now();
    try {
      o = criteria[i].second();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    failed += !o.pass;
    std::printf("[PRIMARY] %2zu %-34s %s  (%s; %.1f s)\n", i + 1, criteria[i].first, o.pass ? "PASS" : "FAIL",
                o.detail.c_str(), seconds_since(t0));
    std::fflush(stdout);
  }
  std::printf("%zu/%zu criteria passed\n", criteria.size() - static_cast<std::size_t>(failed), criteria.size());
  return failed == 0 ? 0 : 1;
}
