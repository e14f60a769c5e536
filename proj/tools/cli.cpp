#include "cli.hpp"

#include "CLI11.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <numeric>
#include <sstream>

#include "vdg/config.hpp"
#include "vdg/errors.hpp"
#include "vdg/passivity.hpp"
#include "vdg/registration.hpp"
#include "vdg/server.hpp"
#include "vdg/sim.hpp"
#include "vdg/synthetic.hpp"

namespace vdg::cli {

namespace {

namespace fs = std::filesystem;

constexpr double kHistogramBinMm = 0.1;
constexpr double kPassivityTolerance = 1e-4;

std::string fixed(double v, int digits) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", digits, v);
  return buf;
}

const char* error_type(const std::exception& e) {
  if (dynamic_cast<const FrameError*>(&e)) return "FrameError";
  if (dynamic_cast<const InvalidTransform*>(&e)) return "InvalidTransform";
  if (dynamic_cast<const DegenerateMotion*>(&e)) return "DegenerateMotion";
  if (dynamic_cast<const TooFewMeasurements*>(&e)) return "TooFewMeasurements";
  if (dynamic_cast<const CollinearPoints*>(&e)) return "CollinearPoints";
  if (dynamic_cast<const LengthMismatch*>(&e)) return "LengthMismatch";
  if (dynamic_cast<const EmptyInput*>(&e)) return "EmptyInput";
  if (dynamic_cast<const MeasurementFailed*>(&e)) return "MeasurementFailed";
  if (dynamic_cast<const SchemaError*>(&e)) return "SchemaError";
  if (dynamic_cast<const PortInUse*>(&e)) return "PortInUse";
  if (dynamic_cast<const Error*>(&e)) return "Error";
  if (dynamic_cast<const json::exception*>(&e)) return "SchemaError";
  return "error";
}

json input_ref(const fs::path& path) {
  return {{"file", path.filename().string()}, {"sha256", sha256_file(path)}};
}

void emit(const json& j, const std::string& out_path, std::ostream& out) {
  if (out_path.empty())
    out << j.dump(2) << '\n';
  else
    write_text(out_path, j.dump(2) + "\n");
}

Eigen::Vector3d parse_triple(const std::string& text, const std::string& what) {
  std::stringstream ss(text);
  Eigen::Vector3d v;
  std::string item;
  for (int i = 0; i < 3; ++i) {
    if (!std::getline(ss, item, ',')) throw SchemaError(what + ": expected x,y,z");
    try {
      std::size_t used = 0;
      v(i) = std::stod(item, &used);
      if (used != item.size()) throw std::invalid_argument(item);
    } catch (const std::logic_error&) {
      throw SchemaError(what + ": bad number '" + item + "'");
    }
  }
  if (std::getline(ss, item, ',')) throw SchemaError(what + ": expected x,y,z");
  return v;
}

// --- calib -------------------------------------------------------------------

int calib_pivot(const std::string& file, const std::string& out_path, Streams io) {
  const Recording rec = read_recording(file);
  const PointCalibration c = pivot_calibrate(rec);
  json j = point_calibration_to_json(c);
  j["input"] = input_ref(file);
  emit(j, out_path, io.out);
  io.err << "pivot calibration: rms " << fixed(c.rms * 1e3, 4) << " mm over " << c.n_used << " samples ("
         << c.n_skipped << " skipped)\n";
  return 0;
}

int calib_axis(const std::string& file, const std::string& point, const std::string& tip_file,
               const std::string& hint_text, const std::string& out_path, Streams io) {
  if (point.empty() == tip_file.empty()) throw SchemaError("axis calibration: give exactly one of --point or --tip");
  const Recording rec = read_recording(file);
  std::optional<Point3> known;
  if (!point.empty()) {
    if (rec.empty()) throw EmptyInput("recording is empty");
    known.emplace(parse_triple(point, "--point"), rec.entries().front().transform.from());
  } else {
    known = point_calibration_from_json(read_json(tip_file), "tip").point_body;
  }
  const Eigen::Vector3d hint = hint_text.empty() ? Eigen::Vector3d::UnitZ() : parse_triple(hint_text, "--hint");
  const AxisCalibration c = axis_calibrate(rec, *known, hint);
  const json j = {{"kind", "axis"},
                  {"frame", c.axis.frame.name()},
                  {"axis", vec_to_json(c.axis.dir)},
                  {"known_point", vec_to_json(known->coords)},
                  {"rms", c.rms},
                  {"n_used", c.n_used},
                  {"n_skipped", c.n_skipped},
                  {"singular_ratio", c.singular_ratio},
                  {"input", input_ref(file)}};
  emit(j, out_path, io.out);
  io.err << "axis calibration: rms " << fixed(c.rms * 1e3, 4) << " mm over " << c.n_used << " samples ("
         << c.n_skipped << " skipped), singular ratio " << fixed(c.singular_ratio, 2) << "\n";
  return 0;
}

// --- register bone -------------------------------------------------------------

std::vector<Eigen::Vector3d> vec3_list(const json& j, const std::string& where) {
  if (!j.is_array()) throw SchemaError(where + ": expected an array");
  std::vector<Eigen::Vector3d> out;
  for (std::size_t i = 0; i < j.size(); ++i) out.push_back(as_vec3(j[i], where + "[" + std::to_string(i) + "]"));
  return out;
}

LandmarkSet plan_from_json(const json& j) {
  const FrameId s = frames::scan();
  std::vector<Point3> marks;
  for (const auto& v : vec3_list(require(j, "landmarks", "plan"), "plan.landmarks")) marks.emplace_back(v, s);
  if (marks.size() < 3) throw SchemaError("plan.landmarks: need at least 3 landmarks");
  const auto entry = require_vec3(j, "entry", "plan");
  const auto exit = require_vec3(j, "exit", "plan");
  if ((entry - exit).norm() == 0.0) throw SchemaError("plan: entry and exit coincide");
  return LandmarkSet(std::move(marks), Point3(entry, s), Point3(exit, s));
}

json plan_to_json(const LandmarkSet& set) {
  json marks = json::array();
  for (const auto& p : set.landmarks) marks.push_back(vec_to_json(p.coords));
  return {{"frame", "s"}, {"landmarks", marks}, {"entry", vec_to_json(set.entry.coords)},
          {"exit", vec_to_json(set.exit.coords)}};
}

json histogram_json(const Histogram& h) {
  return {{"bin_mm", h.bin_width}, {"counts", h.counts}};
}

json bone_fit_json(const RegistrationSession& session) {
  json landmarks = json::array();
  const auto residuals = session.residuals_by_landmark();
  for (const auto& [index, values] : residuals) {
    std::vector<double> mm;
    for (double v : values) mm.push_back(v * 1e3);
    const double rms =
        std::sqrt(std::inner_product(mm.begin(), mm.end(), mm.begin(), 0.0) / static_cast<double>(mm.size()));
    landmarks.push_back({{"index", index},
                         {"n", mm.size()},
                         {"rms_mm", rms},
                         {"histogram", histogram_json(make_histogram(mm, kHistogramBinMm))}});
  }
  const auto& fit = *session.fit();
  const auto& set = session.landmark_set();
  return {{"t_bs", transform_to_json(fit.transform)},
          {"rms_mm", fit.rms * 1e3},
          {"n_measurements", fit.n_used},
          {"n_landmarks", session.distinct_landmarks()},
          {"entry_b", vec_to_json(apply(fit.transform, set.entry).coords)},
          {"exit_b", vec_to_json(apply(fit.transform, set.exit).coords)},
          {"landmarks", landmarks}};
}

void print_histograms(const RegistrationSession& session, std::ostream& os) {
  for (const auto& [index, values] : session.residuals_by_landmark()) {
    std::vector<double> mm;
    for (double v : values) mm.push_back(v * 1e3);
    const Histogram h = make_histogram(mm, kHistogramBinMm);
    os << "landmark " << index << " (" << mm.size() << " points)\n";
    for (std::size_t b = 0; b < h.counts.size(); ++b)
      os << "  " << fixed(static_cast<double>(b) * kHistogramBinMm, 1) << "-"
         << fixed(static_cast<double>(b + 1) * kHistogramBinMm, 1) << " mm | " << std::string(h.counts[b], '#')
         << "\n";
  }
}

json session_json(const RegistrationSession& session) {
  json ms = json::array();
  for (const auto& m : session.measurements())
    ms.push_back({{"landmark", m.landmark_index}, {"point_b", vec_to_json(m.point_b.coords)}});
  return {{"plan", plan_to_json(session.landmark_set())}, {"measurements", ms}};
}

void fit_status(const RegistrationSession& session, std::ostream& os) {
  const auto n = session.measurements().size();
  if (const auto& fit = session.fit())
    os << n << " measurements over " << session.distinct_landmarks() << " landmarks: rms " << fixed(fit->rms * 1e3, 3)
       << " mm\n";
  else
    os << n << " measurements over " << session.distinct_landmarks()
       << " landmarks: no fit yet, measure at least 3 landmarks\n";
}

std::size_t landmark_index(const json& j, const RegistrationSession& session) {
  if (!j.contains("landmark") || !j["landmark"].is_number_unsigned())
    throw SchemaError("landmark: expected a non-negative integer");
  const auto i = j["landmark"].get<std::size_t>();
  if (i >= session.landmark_set().landmarks.size())
    throw SchemaError("landmark: index " + std::to_string(i) + " out of range");
  return i;
}

int register_bone(const std::string& plan_file, const std::string& probe_file, const std::string& measurements,
                  const std::string& session_file, const std::string& out_path, Streams io) {
  const LandmarkSet plan = plan_from_json(read_json(plan_file));
  const PointCalibration probe = point_calibration_from_json(read_json(probe_file), "probe");
  RegistrationSession session(plan);
  const FrameId b = frames::bone();

  if (!session_file.empty() && fs::exists(session_file)) {
    const json saved = read_json(session_file);
    for (const auto& m : require(saved, "measurements", "session"))
      session.add(landmark_index(m, session), Point3(require_vec3(m, "point_b", "session.measurements"), b));
    io.err << "resumed session: ";
    fit_status(session, io.err);
  }
  auto persist = [&] {
    if (!session_file.empty()) write_text(session_file, session_json(session).dump(2) + "\n");
  };

  const bool batch = !measurements.empty();
  std::ifstream file;
  if (batch) {
    file.open(measurements);
    if (!file) throw Error("cannot open " + measurements);
  }
  std::istream& in = batch ? static_cast<std::istream&>(file) : io.in;
  const bool prompt = io.prompt && !batch;
  if (prompt)
    io.out << "Bone registration: " << plan.landmarks.size() << " landmarks.\n"
           << "For each landmark: place the probe tip on it, capture a measurement, and check the RMS.\n"
           << "Commands: a JSON measurement line, 'point <i> <x> <y> <z>', 'undo', 'status', 'hist', 'quit'.\n";

  std::string line;
  std::size_t line_no = 0;
  std::size_t failures = 0;
  while (true) {
    if (prompt) io.out << "register> " << std::flush;
    if (!std::getline(in, line)) break;
    ++line_no;
    const auto first = line.find_first_not_of(" \t\r");
    if (first == std::string::npos || line[first] == '#') continue;
    const std::string where = batch ? measurements + ":" + std::to_string(line_no) : "input";
    std::istringstream words(line.substr(first));
    std::string word;
    words >> word;
    try {
      if (word == "quit" || word == "exit") break;
      if (word == "undo") {
        if (session.measurements().empty()) {
          io.err << "nothing to undo\n";
          continue;
        }
        session.undo();
        persist();
        if (!batch) fit_status(session, io.out);
        continue;
      }
      if (word == "status") {
        fit_status(session, io.out);
        continue;
      }
      if (word == "hist") {
        print_histograms(session, io.out);
        continue;
      }
      std::size_t index = 0;
      Eigen::Vector3d point_b;
      if (word == "point") {
        long i = -1;
        double x = 0, y = 0, z = 0;
        if (!(words >> i >> x >> y >> z) || i < 0) throw SchemaError(where + ": expected 'point <i> <x> <y> <z>'");
        index = static_cast<std::size_t>(i);
        if (index >= plan.landmarks.size())
          throw SchemaError(where + ": landmark index " + std::to_string(i) + " out of range");
        point_b = {x, y, z};
      } else {
        json j = json::parse(line, nullptr, false);
        if (j.is_discarded() || !j.is_object()) throw SchemaError(where + ": unrecognised input '" + line + "'");
        index = landmark_index(j, session);
        if (j.contains("point_b")) {
          point_b = require_vec3(j, "point_b", where);
        } else {
          RecordingEntry t_vb = entry_from_json(require(j, "t_vb", where), where + ".t_vb");
          const RecordingEntry t_vp = entry_from_json(require(j, "t_vp", where), where + ".t_vp");
          t_vb.transform = inverse(t_vb.transform);
          try {
            point_b = probe_measure(t_vb, t_vp, probe).coords;
          } catch (const MeasurementFailed& e) {
            ++failures;
            io.err << "measurement failed (" << e.what() << "), try again\n";
            continue;
          }
        }
      }
      session.add(index, Point3(point_b, b));
      persist();
      if (!batch) {
        io.out << "landmark " << index << ": ";
        fit_status(session, io.out);
      }
    } catch (const SchemaError& e) {
      if (batch) throw;
      io.err << e.what() << "\n";
    }
  }

  if (!session.fit()) {
    io.err << "no fit: measurements cover " << session.distinct_landmarks() << " landmarks, at least 3 are needed\n";
    return 1;
  }
  json result = bone_fit_json(session);
  result["failed_measurements"] = failures;
  if (batch) result["input"] = input_ref(measurements);
  emit(result, out_path, io.out);
  io.err << "bone registration: rms " << fixed(session.fit()->rms * 1e3, 3) << " mm over "
         << session.measurements().size() << " measurements\n";
  if (!out_path.empty() || batch) print_histograms(session, io.err);
  return 0;
}

int register_handeye(const std::string& pairs_file, const std::string& tip_e_file, const std::string& tip_d_file,
                     const std::string& out_path, Streams io) {
  std::vector<PosePair> pairs;
  std::size_t line = 0;
  for (const auto& j : read_jsonl(pairs_file)) {
    const std::string where = pairs_file + ":" + std::to_string(++line);
    pairs.push_back({transform_from_json(require(j, "t_re", where), where + ".t_re"),
                     transform_from_json(require(j, "t_vd", where), where + ".t_vd")});
  }
  const auto tip_e = point_calibration_from_json(read_json(tip_e_file), "tip_e");
  const auto tip_d = point_calibration_from_json(read_json(tip_d_file), "tip_d");
  const HandEyeResult r = hand_eye_register(pairs, tip_e, tip_d);
  const json j = {{"t_vr", transform_to_json(r.fit.transform)},
                  {"rms_mm", r.fit.rms * 1e3},
                  {"n_poses", r.n_poses},
                  {"input", input_ref(pairs_file)}};
  emit(j, out_path, io.out);
  io.err << "hand-eye registration: rms " << fixed(r.fit.rms * 1e3, 3) << " mm over " << r.n_poses << " poses\n";
  return 0;
}

// --- generate ------------------------------------------------------------------

struct GenerateOptions {
  std::string kind;
  std::string out;
  std::string truth;
  std::uint64_t seed = 1;
  double sigma = 1e-4;
  double rot_sigma = 0.0;
  double dropout = 0.0;
  int samples = 600;
  int landmarks = 7;
  int per_landmark = 15;
  double bias = 0.001;
  int poses = 10;
  double kinematic_error = 0.0;
};

json truth_header(const GenerateOptions& o) {
  return {{"kind", o.kind}, {"seed", o.seed}, {"noise", {{"sigma", o.sigma}, {"rot_sigma", o.rot_sigma},
                                                         {"dropout_prob", o.dropout}}}};
}

int generate(const GenerateOptions& o, Streams io) {
  const NoiseModel noise{o.sigma, o.rot_sigma, o.dropout};
  if (!(o.sigma >= 0.0) || !(o.rot_sigma >= 0.0) || !(o.dropout >= 0.0 && o.dropout < 1.0))
    throw SchemaError("noise: sigma and rot-sigma must be non-negative and dropout in [0, 1)");
  json truth = truth_header(o);
  if (o.kind == "pivot" || o.kind == "axis") {
    if (o.samples < 1) throw SchemaError("--samples: must be positive");
    Recording rec;
    if (o.kind == "pivot") {
      PivotSpec spec;
      spec.samples = o.samples;
      rec = generate_pivot(spec, noise, o.seed);
      truth["point_body"] = vec_to_json(spec.tip_body);
      truth["point_fixed"] = vec_to_json(spec.pivot_fixed);
    } else {
      AxisSpec spec;
      spec.samples = o.samples;
      rec = generate_axis(spec, noise, o.seed);
      truth["axis"] = vec_to_json(spec.axis);
      truth["known_point"] = vec_to_json(spec.known_point);
    }
    if (o.out.empty()) {
      for (const auto& e : rec.entries()) io.out << entry_to_json(e).dump() << '\n';
    } else {
      write_recording(o.out, rec);
    }
    if (!o.truth.empty()) write_text(o.truth, truth.dump(2) + "\n");
    io.err << "generated " << o.kind << " recording: " << rec.size() << " samples\n";
    return 0;
  }
  if (o.out.empty()) throw SchemaError("-o: " + o.kind + " data is written to a directory");
  fs::create_directories(o.out);
  const fs::path dir = o.out;
  if (o.kind == "landmarks") {
    LandmarkSpec spec;
    spec.landmarks = o.landmarks;
    spec.per_landmark = o.per_landmark;
    spec.bias = o.bias;
    const LandmarkData data = generate_landmarks(spec, noise, o.seed);
    write_text(dir / "plan.json", plan_to_json(data.set).dump(2) + "\n");
    write_text(dir / "probe.json", point_calibration_to_json(data.probe_tip).dump(2) + "\n");
    std::string lines;
    for (const auto& s : data.samples)
      lines += json{{"landmark", s.landmark}, {"t_vb", entry_to_json(s.t_vb)}, {"t_vp", entry_to_json(s.t_vp)}}
                   .dump() +
               "\n";
    write_text(dir / "measurements.jsonl", lines);
    truth["t_bs"] = transform_to_json(data.t_bs);
    write_text(dir / "truth.json", truth.dump(2) + "\n");
    io.err << "generated landmark session: " << data.samples.size() << " samples in " << dir.string() << "\n";
    return 0;
  }
  if (o.kind == "handeye") {
    HandEyeSpec spec;
    spec.poses = o.poses;
    spec.kinematic_error = o.kinematic_error;
    const HandEyeData data = generate_handeye(spec, noise, o.seed);
    std::string lines;
    for (const auto& p : data.pairs)
      lines += json{{"t_re", transform_to_json(p.t_re)}, {"t_vd", transform_to_json(p.t_vd)}}.dump() + "\n";
    write_text(dir / "pairs.jsonl", lines);
    write_text(dir / "tip_e.json", point_calibration_to_json(data.tip_e).dump(2) + "\n");
    write_text(dir / "tip_d.json", point_calibration_to_json(data.tip_d).dump(2) + "\n");
    truth["t_vr"] = transform_to_json(data.t_vr);
    write_text(dir / "truth.json", truth.dump(2) + "\n");
    io.err << "generated hand-eye session: " << data.pairs.size() << " poses in " << dir.string() << "\n";
    return 0;
  }
  throw SchemaError("generate: unknown kind '" + o.kind + "'");
}

// --- simulate ------------------------------------------------------------------

int simulate(const std::string& scenario_file, std::optional<int> trials, std::optional<std::uint64_t> seed,
             const std::string& out_path, const std::string& logs_dir, unsigned threads, Streams io) {
  Scenario sc = load_scenario(scenario_file);
  if (seed) sc.seed = *seed;
  const int n = trials.value_or(sc.trials);
  if (n < 1) throw SchemaError("--trials: must be positive");
  const bool keep_logs = !logs_dir.empty();
  const auto results = run_batch(sc, n, keep_logs, threads);
  const std::string csv = metrics_csv(results, sc.seed);
  if (out_path.empty())
    io.out << csv;
  else
    write_text(out_path, csv);
  if (keep_logs) {
    fs::create_directories(logs_dir);
    for (const auto& r : results) {
      char name[32];
      std::snprintf(name, sizeof name, "trial_%02d.csv", r.trial);
      std::ofstream os(fs::path(logs_dir) / name);
      if (!os) throw Error("cannot write " + (fs::path(logs_dir) / name).string());
      write_log(os, *r.log);
    }
  }
  double entry = 0, exit = 0, angle = 0;
  int ok = 0, failed = 0, terminated = 0;
  for (const auto& r : results) {
    if (r.metrics.failed) {
      ++failed;
      continue;
    }
    ++ok;
    entry += r.metrics.entry_translation_err;
    exit += r.metrics.exit_translation_err;
    angle += r.metrics.angular_deviation;
    terminated += r.metrics.terminated_early;
  }
  if (ok > 0)
    io.err << n << " trials: mean entry " << fixed(entry / ok, 3) << " mm, exit " << fixed(exit / ok, 3)
           << " mm, angle " << fixed(angle / ok, 3) << " deg, " << terminated << " terminated early, " << failed
           << " failed\n";
  else
    io.err << n << " trials: all failed\n";
  return failed > 0 ? 2 : 0;
}

// --- audit ---------------------------------------------------------------------

json audit_summary(const AuditReport& r) {
  double supplied = 0, dissipated = 0, injected = 0, excess = 0;
  for (const auto& s : r.steps) {
    supplied += s.supplied;
    dissipated += s.dissipated;
    injected += s.injected;
    excess = std::max(excess, s.delta_e - s.supplied - s.injected);
  }
  return {{"energy_start", r.energy.empty() ? 0.0 : r.energy.front()},
          {"energy_end", r.energy.empty() ? 0.0 : r.energy.back()},
          {"supplied", supplied},
          {"dissipated", dissipated},
          {"injected", injected},
          {"max_abs_residual", r.max_abs_residual},
          {"cumulative_residual", r.cumulative_residual},
          {"residual_rate", r.residual_rate},
          {"raw_residual_rate", r.raw_residual_rate},
          {"max_unforced_increase", r.max_unforced_increase},
          {"max_excess", excess},
          {"saturated_steps", r.saturated_steps}};
}

int audit(const std::string& log_file, const std::string& out_path, const std::string& steps_path, double tolerance,
          Streams io) {
  std::ifstream is(log_file);
  if (!is) throw Error("cannot open " + log_file);
  const TrajectoryLog log = read_log(is);
  if (log.rows.size() < 2) throw EmptyInput("trajectory log needs at least two rows");
  const auto& h = log.header;
  std::vector<AuditSample> samples;
  samples.reserve(log.rows.size());
  for (const auto& r : log.rows) samples.push_back(r.audit);
  const AuditReport nominal = energy_audit(*h.nominal, *h.nominal, h.tool, h.controller, samples, h.dt);
  const AuditReport plant = energy_audit(*h.plant, *h.nominal, h.tool, h.controller, samples, h.dt);
  const json nj = audit_summary(nominal);
  const json pj = audit_summary(plant);
  const bool passive = nj["max_excess"].get<double>() <= tolerance;
  const json report = {{"input", input_ref(log_file)},
                       {"rows", log.rows.size()},
                       {"dt", h.dt},
                       {"duration", nominal.duration},
                       {"tolerance", tolerance},
                       {"passive", passive},
                       {"controller_model", nj},
                       {"true_plant", pj},
                       {"model_mismatch_leak", nominal.cumulative_residual - plant.cumulative_residual}};
  emit(report, out_path, io.out);
  if (!steps_path.empty()) {
    std::string csv = "t,delta_e,supplied,dissipated,injected,residual,residual_true_plant\n";
    for (std::size_t k = 0; k < nominal.steps.size(); ++k) {
      const auto& s = nominal.steps[k];
      csv += format_double(s.t) + "," + format_double(s.delta_e) + "," + format_double(s.supplied) + "," +
             format_double(s.dissipated) + "," + format_double(s.injected) + "," + format_double(s.residual) + "," +
             format_double(plant.steps[k].residual) + "\n";
    }
    write_text(steps_path, csv);
  }
  io.err << "energy audit: " << (passive ? "passive" : "NOT passive") << ", max |residual| "
         << nominal.max_abs_residual << " J, residual rate " << nominal.residual_rate << " J/s (true plant "
         << plant.residual_rate << " J/s)\n";
  return passive ? 0 : 3;
}

// --- serve -----------------------------------------------------------------------

int serve(const std::string& scenario_file, unsigned short port, const std::string& address, int trial,
          Streams io) {
  ServeOptions options;
  options.port = port;
  options.address = address;
  options.trial = trial;
  StateServer server(load_scenario(scenario_file), options);
  io.err << "serving on ws://" << address << ":" << server.port() << " (Ctrl-C to stop)\n" << std::flush;
  server.run(true);
  io.err << "server stopped\n";
  return 0;
}

}  // namespace

json point_calibration_to_json(const PointCalibration& c) {
  return {{"kind", "pivot"},
          {"body_frame", c.point_body.frame.name()},
          {"fixed_frame", c.point_fixed.frame.name()},
          {"point_body", vec_to_json(c.point_body.coords)},
          {"point_fixed", vec_to_json(c.point_fixed.coords)},
          {"rms", c.rms},
          {"n_used", c.n_used},
          {"n_skipped", c.n_skipped},
          {"min_singular_value", c.min_singular_value}};
}

PointCalibration point_calibration_from_json(const json& j, const std::string& where) {
  if (!j.is_object()) throw SchemaError(where + ": expected an object");
  auto frame = [&](const char* key, const char* fallback) {
    if (!j.contains(key)) return FrameId(fallback);
    if (!j[key].is_string()) throw SchemaError(where + "." + key + ": expected a string");
    return FrameId(j[key].get<std::string>());
  };
  auto count = [&](const char* key) -> std::size_t {
    return j.contains(key) && j[key].is_number_unsigned() ? j[key].get<std::size_t>() : 0;
  };
  PointCalibration c{Point3(require_vec3(j, "point_body", where), frame("body_frame", "p")),
                     Point3(j.contains("point_fixed") ? require_vec3(j, "point_fixed", where)
                                                      : Eigen::Vector3d::Zero().eval(),
                            frame("fixed_frame", "v")),
                     j.value("rms", 0.0),
                     count("n_used"),
                     count("n_skipped"),
                     j.value("min_singular_value", 0.0)};
  return c;
}

int run(const std::vector<std::string>& args, Streams io) {
  CLI::App app{"Virtual drill guide: calibration, registration, simulation and audit tools", "vdg"};
  app.require_subcommand(1);
  app.set_version_flag("--version", std::string("vdg 1.0.0"));

  auto* calib = app.add_subcommand("calib", "Calibrate a tracked tool from a recording");
  calib->require_subcommand(1);
  std::string calib_file, calib_out, axis_point, axis_tip, axis_hint;
  auto* pivot = calib->add_subcommand("pivot", "Pivot calibration of a tool tip");
  pivot->add_option("recording", calib_file, "Recording (JSON Lines)")->required();
  pivot->add_option("-o,--output", calib_out, "Write the calibration JSON here instead of stdout");
  auto* axis = calib->add_subcommand("axis", "Drill axis calibration");
  axis->add_option("recording", calib_file, "Recording (JSON Lines)")->required();
  axis->add_option("--point", axis_point, "Known point on the axis, body frame, as x,y,z in metres");
  axis->add_option("--tip", axis_tip, "Pivot calibration JSON giving the known point");
  axis->add_option("--hint", axis_hint, "Approximate axis direction, x,y,z");
  axis->add_option("-o,--output", calib_out, "Write the calibration JSON here instead of stdout");

  auto* reg = app.add_subcommand("register", "Bone or hand-eye registration");
  reg->require_subcommand(1);
  std::string plan_file, probe_file, meas_file, session_file, reg_out, pairs_file, tip_e_file, tip_d_file;
  auto* bone = reg->add_subcommand("bone", "Landmark registration of the bone (interactive unless --measurements)");
  bone->add_option("--plan", plan_file, "Plan JSON: landmarks, entry and exit in the scan frame")->required();
  bone->add_option("--probe", probe_file, "Probe pivot calibration JSON")->required();
  bone->add_option("--measurements", meas_file, "JSON Lines measurements for batch mode");
  bone->add_option("--session", session_file, "Session file, resumed if present and saved after every change");
  bone->add_option("-o,--output", reg_out, "Write the fit JSON here instead of stdout");
  auto* handeye = reg->add_subcommand("handeye", "Hand-eye registration of the tracker to the robot base");
  handeye->add_option("--pairs", pairs_file, "JSON Lines of {t_re, t_vd} pose pairs")->required();
  handeye->add_option("--tip-e", tip_e_file, "Drill tip in the end-effector frame (calibration JSON)")->required();
  handeye->add_option("--tip-d", tip_d_file, "Drill tip in the drill tracker frame (calibration JSON)")->required();
  handeye->add_option("-o,--output", reg_out, "Write the fit JSON here instead of stdout");

  GenerateOptions gen;
  auto* gen_cmd = app.add_subcommand("generate", "Write synthetic tracker data with ground truth");
  gen_cmd->add_option("kind", gen.kind, "pivot, axis, landmarks or handeye")
      ->required()
      ->check(CLI::IsMember({"pivot", "axis", "landmarks", "handeye"}));
  gen_cmd->add_option("-o,--output", gen.out, "Recording file (pivot, axis) or directory (landmarks, handeye)");
  gen_cmd->add_option("--truth", gen.truth, "Ground-truth JSON for pivot and axis recordings");
  gen_cmd->add_option("--seed", gen.seed, "Random seed");
  gen_cmd->add_option("--sigma", gen.sigma, "Position noise, RMS of the 3-D error, m");
  gen_cmd->add_option("--rot-sigma", gen.rot_sigma, "Rotation noise, RMS angle, rad");
  gen_cmd->add_option("--dropout", gen.dropout, "Probability a sample is invalid");
  gen_cmd->add_option("--samples", gen.samples, "Samples in a pivot or axis recording");
  gen_cmd->add_option("--landmarks", gen.landmarks, "Landmark count");
  gen_cmd->add_option("--per-landmark", gen.per_landmark, "Measurements per landmark");
  gen_cmd->add_option("--bias", gen.bias, "Per-landmark bias bound, m");
  gen_cmd->add_option("--poses", gen.poses, "Hand-eye pose count");
  gen_cmd->add_option("--kinematic-error", gen.kinematic_error, "Robot position error per axis, m");

  std::string scenario_file, sim_out, logs_dir;
  std::optional<int> trials;
  std::optional<std::uint64_t> seed;
  unsigned threads = 0;
  auto* sim = app.add_subcommand("simulate", "Run seeded drilling trials and write the metrics CSV");
  sim->add_option("scenario", scenario_file, "Scenario JSON")->required();
  sim->add_option("--trials", trials, "Number of trials (default from the scenario)");
  sim->add_option("--seed", seed, "Seed (default from the scenario)");
  sim->add_option("-o,--output", sim_out, "Write the CSV here instead of stdout");
  sim->add_option("--logs", logs_dir, "Directory for per-trial trajectory logs");
  sim->add_option("--threads", threads, "Worker threads (0 = hardware concurrency)");

  std::string log_file, audit_out, steps_out;
  double tolerance = kPassivityTolerance;
  auto* aud = app.add_subcommand("audit", "Energy audit of a trajectory log");
  aud->add_option("log", log_file, "Trajectory log CSV")->required();
  aud->add_option("-o,--output", audit_out, "Write the report JSON here instead of stdout");
  aud->add_option("--steps", steps_out, "Write the per-step CSV here");
  aud->add_option("--tolerance", tolerance, "Allowed energy increase per step beyond supplied power, J");

  std::string serve_scenario, address = "127.0.0.1";
  unsigned short port = 8765;
  int trial = 0;
  auto* srv = app.add_subcommand("serve", "Run a live simulation behind a websocket");
  srv->add_option("scenario", serve_scenario, "Scenario JSON")->required();
  srv->add_option("--port", port, "TCP port");
  srv->add_option("--address", address, "Listen address");
  srv->add_option("--trial", trial, "Trial index for the random draws");

  std::vector<std::string> argv_store{"vdg"};
  argv_store.insert(argv_store.end(), args.begin(), args.end());
  std::vector<const char*> argv;
  for (const auto& a : argv_store) argv.push_back(a.c_str());
  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::ParseError& e) {
    return app.exit(e, io.out, io.err);
  }

  try {
    if (*pivot) return calib_pivot(calib_file, calib_out, io);
    if (*axis) return calib_axis(calib_file, axis_point, axis_tip, axis_hint, calib_out, io);
    if (*bone) return register_bone(plan_file, probe_file, meas_file, session_file, reg_out, io);
    if (*handeye) return register_handeye(pairs_file, tip_e_file, tip_d_file, reg_out, io);
    if (*gen_cmd) return generate(gen, io);
    if (*sim) return simulate(scenario_file, trials, seed, sim_out, logs_dir, threads, io);
    if (*aud) return audit(log_file, audit_out, steps_out, tolerance, io);
    if (*srv) return serve(serve_scenario, port, address, trial, io);
  } catch (const std::exception& e) {
    io.err << "error: " << error_type(e) << ": " << e.what() << "\n";
    return 1;
  }
  return 1;
}

}  // namespace vdg::cli
