#pragma once

#include <Eigen/Core>
#include <Eigen/Geometry>

#include <cstdint>
#include <deque>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "vdg/io.hpp"
#include "vdg/outer_loop.hpp"
#include "vdg/passivity.hpp"
#include "vdg/robot.hpp"
#include "vdg/synthetic.hpp"
#include "vdg/vm_controller.hpp"

namespace vdg {

/// Random error of the true arm relative to the nominal model.
struct ModelError {
  double link_translation = 0.0005;  ///< m, per joint origin
  double link_rotation = 0.001;      ///< rad
  double tool_translation = 0.003;   ///< m, tool mount
  double tool_rotation = 0.005;      ///< rad
  /// Fixed tool-mount offset added after the random draw, end-effector frame.
  Eigen::Vector3d tool_bias = Eigen::Vector3d::Zero();
};

struct VisionParams {
  NoiseModel noise{0.25e-3, 0.05 * 3.141592653589793 / 180.0, 0.02};
  int latency_frames = 1;
};

/// Pre-operative data and calibration procedure sizes.
struct RegistrationParams {
  int landmarks = 7;
  int per_landmark = 15;
  double sigma = 0.25e-3;  ///< probe point noise, 3-D RMS
  double bias = 0.5e-3;    ///< per-landmark bias, uniform per component in ±bias
  int handeye_poses = 10;
  double handeye_spread = 0.25;  ///< rad, joint excursion around home
  int calibration_samples = 600;
  /// Skip the calibration pipeline and hand the outer loop the true transforms.
  bool ideal = false;
};

/// Where the planned hole lies relative to the tool at the home pose.
struct PlanParams {
  double standoff = 0.01;       ///< m, tool tip behind the entry point along the axis
  double depth = 0.03;          ///< m, entry to exit
  double misplacement = 0.001;  ///< m, lateral offset of the plan from the home tool axis
  double misalignment = 0.0087; ///< rad
};

/// Surgeon's axial feed: a PD hand that tracks a depth ramp, with the push capped.
struct FeedParams {
  bool enabled = true;
  double settle = 6.0;     ///< s before the feed starts
  double duration = 10.0;  ///< s to go from the start depth to exit + overshoot
  double force_max = 15.0; ///< N
  double k_h = 300.0;      ///< N/m
  double b_h = 30.0;       ///< N·s/m
  double overshoot = 0.005;
};

enum class ForcePoint { tip, base };

/// External force on the physical tool, robot frame, active on [t_start, t_end).
struct ForceEvent {
  double t_start = 0.0;
  double t_end = 0.0;
  ForcePoint point = ForcePoint::tip;
  Eigen::Vector3d force = Eigen::Vector3d::Zero();
};

/// Bone displacement ramped in over [t_start, t_end]: translation `dp` (robot frame)
/// and rotation by `angle` about `axis` through the planned entry point.
struct BoneMove {
  double t_start = 0.0;
  double t_end = 0.0;
  Eigen::Vector3d dp = Eigen::Vector3d::Zero();
  Eigen::Vector3d axis = Eigen::Vector3d::UnitZ();
  double angle = 0.0;
};

struct Scenario {
  explicit Scenario(RobotModel nominal_model);

  RobotModel nominal;
  /// True arm. When absent it is drawn from `nominal` with `model_error`.
  std::optional<RobotModel> plant;
  ControllerParams controller = ControllerParams::defaults();
  OuterLoopParams outer;
  ModelError model_error;
  ToolCalibration tool{Eigen::Vector3d(0.0, 0.0, 0.15), Eigen::Vector3d::UnitZ()};
  Eigen::VectorXd home_q;
  VisionParams vision;
  RegistrationParams registration;
  PlanParams plan;
  FeedParams feed;
  std::vector<BoneMove> bone_motion;
  std::vector<ForceEvent> forces;
  double duration = 17.0;
  double dt = 1e-3;
  int substeps = 1;
  bool outer_loop_enabled = true;
  std::uint64_t seed = 1;
  int trials = 16;

  /// Throws SchemaError naming the offending field.
  void validate() const;
};

/// Robot and controller files are resolved relative to `base_dir`.
Scenario scenario_from_json(const json& j, const std::filesystem::path& base_dir);
Scenario load_scenario(const std::filesystem::path& path);

struct TrialMetrics {
  double entry_translation_err = 0.0;  ///< mm
  double exit_translation_err = 0.0;   ///< mm
  double angular_deviation = 0.0;      ///< deg
  double max_spring_offset = 0.0;      ///< m, largest |o_tip|
  bool terminated_early = false;
  bool failed = false;
  std::string diagnostics;
};

/// One sample of what the metrics are computed from.
struct MetricSample {
  int phase = 0;  ///< 0 settle, 1 feed, 2 after feed
  bool running = true;
  Eigen::Vector3d tip_scan = Eigen::Vector3d::Zero();  ///< true tip, scan frame
  Eigen::Vector3d o_tip = Eigen::Vector3d::Zero();
};

/// Line fit of the true tip during the feed between entry and exit depth, compared
/// with the plan in planes perpendicular to the planned axis.
TrialMetrics compute_metrics(const std::vector<MetricSample>& samples, const Eigen::Vector3d& entry_s,
                             const Eigen::Vector3d& exit_s);

struct LogRow {
  double t = 0.0;
  int phase = 0;
  AuditSample audit;
  Eigen::Vector3d z_tip = Eigen::Vector3d::Zero();     ///< controller's tip
  Eigen::Vector3d zbar_tip = Eigen::Vector3d::Zero();  ///< last vision-measured tip
  Eigen::Vector3d tip_scan = Eigen::Vector3d::Zero();
  Eigen::VectorXd u_r;
  EnergyReport energy;
};

/// Everything needed to interpret a trajectory log.
struct LogHeader {
  std::optional<RobotModel> plant;
  std::optional<RobotModel> nominal;
  ControllerParams controller;
  ToolCalibration tool{Eigen::Vector3d::Zero(), Eigen::Vector3d::UnitZ()};
  Eigen::Vector3d entry_s = Eigen::Vector3d::Zero();
  Eigen::Vector3d exit_s = Eigen::Vector3d::Zero();
  double dt = 1e-3;
  std::uint64_t seed = 0;
  int trial = 0;
};

struct TrajectoryLog {
  LogHeader header;
  std::vector<LogRow> rows;
};

void write_log(std::ostream& os, const TrajectoryLog& log);
TrajectoryLog read_log(std::istream& is);
/// Metrics recomputed from the logged samples.
TrialMetrics metrics_from_log(const TrajectoryLog& log);

/// Results of the per-trial calibration and registration pipeline.
struct TrialSetup {
  RobotModel plant;
  RigidTransform t_vr_true;
  RigidTransform t_rb_true;  ///< bone tracker at t = 0
  RigidTransform t_bs_true;
  RigidTransform t_ed_true;
  Eigen::Vector3d entry_s;
  Eigen::Vector3d exit_s;
  PlanGeometry plan;           ///< with estimated registrations
  DrillCalibration drill_cal;  ///< estimated
  double handeye_rms = 0.0;
  double registration_rms = 0.0;
};

TrialSetup prepare_trial(const Scenario& sc, int trial);

/// Live state for the websocket server.
struct Snapshot {
  double t = 0.0;
  Eigen::VectorXd q;
  double q_v = 0.0;
  Eigen::Vector3d tip = Eigen::Vector3d::Zero();
  Eigen::Vector3d tip_measured = Eigen::Vector3d::Zero();
  Eigen::Vector3d base = Eigen::Vector3d::Zero();
  Eigen::Vector3d axis_origin = Eigen::Vector3d::Zero();
  Eigen::Vector3d axis_dir = Eigen::Vector3d::UnitZ();
  Eigen::Vector3d o_tip = Eigen::Vector3d::Zero();
  Eigen::Vector3d o_base = Eigen::Vector3d::Zero();
  EnergyReport energy;
  Status status = Status::running;
  TerminationReason reason = TerminationReason::none;
  std::vector<bool> torque_sat;
};

/// Closed-loop trial: true plant at 1 kHz, controller on the nominal model, 20 Hz vision.
class Simulation {
 public:
  Simulation(Scenario scenario, int trial, bool keep_log = false);

  void step();
  /// Steps until the scenario duration is reached or the plant diverges.
  void run();
  bool finished() const;
  double time() const { return static_cast<double>(k_) * sc_.dt; }

  TrialMetrics metrics() const;
  const TrajectoryLog& log() const { return log_; }
  const std::vector<OffsetUpdate>& offset_updates() const { return updates_; }
  const TrialSetup& setup() const { return setup_; }
  const JointState& joints() const { return js_; }
  const ControllerState& controller() const { return cs_; }
  const OuterLoop& outer_loop() const { return outer_; }
  Snapshot snapshot() const;

  // Live interaction.
  /// Replaces any force currently acting on `point` for the next `hold` seconds.
  void apply_force(ForcePoint point, const Eigen::Vector3d& force, double hold);
  /// Replaces the scripted forces; times are absolute simulation times.
  void set_force_script(std::vector<ForceEvent> events);
  const std::vector<ForceEvent>& force_script() const { return sc_.forces; }
  void move_bone(const Eigen::Vector3d& dp, const Eigen::Vector3d& axis, double angle, double ramp = 0.2);
  OuterLoopParams& outer_params() { return outer_.mutable_params(); }
  NoiseModel& vision_noise() { return sc_.vision.noise; }
  FeedParams& feed() { return sc_.feed; }

 private:
  int phase(double t) const;
  double feed_reference(double t) const;
  Eigen::Isometry3d bone_offset(double t) const;
  RigidTransform true_t_rb(double t) const;
  RigidTransform true_t_vd() const;
  Eigen::VectorXd external_torque(const std::vector<Eigen::Isometry3d>& plant_frames) const;
  void vision_frame();

  Scenario sc_;
  int trial_;
  bool keep_log_;
  TrialSetup setup_;
  OuterLoop outer_;
  std::mt19937_64 vision_rng_;
  std::int64_t frame_steps_;
  bool recording_;
  JointState js_;
  ControllerState cs_;
  std::int64_t k_ = 0;
  std::deque<VisionFrame> pending_;
  Eigen::Vector3d zbar_tip_ = Eigen::Vector3d::Zero();
  Eigen::Vector3d entry0_r_ = Eigen::Vector3d::Zero();
  double feed_start_depth_ = 0.0;
  std::vector<bool> last_sat_;
  std::vector<MetricSample> samples_;
  std::vector<OffsetUpdate> updates_;
  TrajectoryLog log_;
  bool failed_ = false;
  std::string diagnostics_;
};

struct TrialResult {
  int trial = 0;
  TrialMetrics metrics;
  std::optional<TrajectoryLog> log;
};

TrialResult run_trial(const Scenario& sc, int trial, bool keep_log = false);
/// Trials 0..n-1 on `threads` workers; results are ordered by trial.
std::vector<TrialResult> run_batch(const Scenario& sc, int n, bool keep_logs = false, unsigned threads = 0);

std::string metrics_csv(const std::vector<TrialResult>& results, std::uint64_t seed);

}  // namespace vdg
