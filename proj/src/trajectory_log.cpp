#include <charconv>
#include <istream>
#include <ostream>

#include "vdg/config.hpp"
#include "vdg/sim.hpp"

namespace vdg {

namespace {

constexpr const char* kFormat = "vdg-trajectory";

std::vector<std::string> column_names(int n) {
  std::vector<std::string> c{"t", "phase", "status", "reason"};
  auto indexed = [&](const std::string& base, int count) {
    for (int i = 0; i < count; ++i) c.push_back(base + std::to_string(i));
  };
  auto xyz = [&](const std::string& base) {
    for (const char* a : {"_x", "_y", "_z"}) c.push_back(base + a);
  };
  indexed("q", n);
  indexed("qd", n);
  c.insert(c.end(), {"q_v", "qd_v"});
  for (const char* v : {"o_tip", "o_base", "axis_origin", "axis_dir", "z_tip", "zbar_tip", "tip_scan"}) xyz(v);
  indexed("u_r", n);
  indexed("u_e", n);
  c.insert(c.end(), {"sat", "e_robot", "e_drill", "e_buffer", "e_spring_tip", "e_spring_base", "e_mismatch",
                     "e_total"});
  return c;
}

int status_code(Status s) { return s == Status::running ? 0 : 1; }

int reason_code(TerminationReason r) {
  switch (r) {
    case TerminationReason::none:
      return 0;
    case TerminationReason::bone_motion:
      return 1;
    case TerminationReason::non_finite:
      return 2;
  }
  return 0;
}

std::vector<std::string_view> split(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (true) {
    const auto comma = line.find(',', start);
    out.push_back(line.substr(start, comma - start));
    if (comma == std::string_view::npos) break;
    start = comma + 1;
  }
  return out;
}

double parse_double(std::string_view s, std::size_t line) {
  double v = 0.0;
  const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
  if (res.ec != std::errc() || res.ptr != s.data() + s.size())
    throw SchemaError("trajectory log line " + std::to_string(line) + ": bad number '" + std::string(s) + "'");
  return v;
}

}  // namespace

void write_log(std::ostream& os, const TrajectoryLog& log) {
  const auto& h = log.header;
  if (!h.plant || !h.nominal) throw SchemaError("trajectory log: header lacks the robot models");
  const json head = {{"format", kFormat},
                     {"version", 1},
                     {"dt", h.dt},
                     {"seed", h.seed},
                     {"trial", h.trial},
                     {"plant", robot_to_json(*h.plant)},
                     {"nominal", robot_to_json(*h.nominal)},
                     {"controller", controller_params_to_json(h.controller)},
                     {"tool", {{"tip_e", vec_to_json(h.tool.tip_e)}, {"axis_e", vec_to_json(h.tool.axis_e)}}},
                     {"plan", {{"entry_s", vec_to_json(h.entry_s)}, {"exit_s", vec_to_json(h.exit_s)}}}};
  os << "# " << head.dump() << '\n';
  const int n = h.nominal->dof();
  const auto cols = column_names(n);
  for (std::size_t i = 0; i < cols.size(); ++i) os << (i ? "," : "") << cols[i];
  os << '\n';

  std::string line;
  for (const auto& r : log.rows) {
    line.clear();
    auto put = [&](double v) {
      if (!line.empty()) line += ',';
      line += format_double(v);
    };
    auto put_vec = [&](const Eigen::VectorXd& v) {
      for (Eigen::Index i = 0; i < v.size(); ++i) put(v(i));
    };
    const auto& a = r.audit;
    put(r.t);
    put(r.phase);
    put(status_code(a.ctrl.status));
    put(reason_code(a.ctrl.reason));
    put_vec(a.js.q);
    put_vec(a.js.qdot);
    put(a.ctrl.q_v);
    put(a.ctrl.qd_v);
    for (const Eigen::Vector3d* v : {&a.ctrl.o_tip, &a.ctrl.o_base, &a.ctrl.axis_origin, &a.ctrl.axis_dir, &r.z_tip,
                                     &r.zbar_tip, &r.tip_scan})
      put_vec(*v);
    put_vec(r.u_r);
    put_vec(a.u_e);
    put(a.torque_saturated ? 1 : 0);
    const auto& e = r.energy;
    for (double v : {e.e_robot, e.e_drill_kinetic, e.e_buffer, e.e_spring_tip, e.e_spring_base, e.e_model_mismatch,
                     e.total})
      put(v);
    os << line << '\n';
  }
}

TrajectoryLog read_log(std::istream& is) {
  std::string line;
  if (!std::getline(is, line) || line.rfind("# ", 0) != 0)
    throw SchemaError("trajectory log: first line must be the '# {...}' header");
  json head;
  try {
    head = json::parse(line.substr(2));
  } catch (const json::parse_error& e) {
    throw SchemaError(std::string("trajectory log header: ") + e.what());
  }
  if (!head.is_object() || head.value("format", "") != kFormat)
    throw SchemaError("trajectory log header: not a trajectory log");

  TrajectoryLog log;
  auto& h = log.header;
  h.dt = require_number(head, "dt", "header");
  if (!head.contains("seed") || !head["seed"].is_number_unsigned())
    throw SchemaError("header.seed: expected a non-negative integer");
  h.seed = head["seed"].get<std::uint64_t>();
  h.trial = static_cast<int>(require_number(head, "trial", "header"));
  h.plant = robot_from_json(require(head, "plant", "header"));
  h.nominal = robot_from_json(require(head, "nominal", "header"));
  h.controller = controller_params_from_json(require(head, "controller", "header"));
  const auto& tool = require(head, "tool", "header");
  h.tool = {require_vec3(tool, "tip_e", "header.tool"), require_vec3(tool, "axis_e", "header.tool")};
  const auto& plan = require(head, "plan", "header");
  h.entry_s = require_vec3(plan, "entry_s", "header.plan");
  h.exit_s = require_vec3(plan, "exit_s", "header.plan");

  const int n = h.nominal->dof();
  const auto cols = column_names(n);
  if (!std::getline(is, line)) throw SchemaError("trajectory log: missing column line");
  const auto names = split(line);
  if (names.size() != cols.size() || !std::equal(names.begin(), names.end(), cols.begin()))
    throw SchemaError("trajectory log: unexpected columns");

  std::size_t line_no = 2;
  while (std::getline(is, line)) {
    ++line_no;
    if (line.empty()) continue;
    const auto fields = split(line);
    if (fields.size() != cols.size())
      throw SchemaError("trajectory log line " + std::to_string(line_no) + ": expected " +
                        std::to_string(cols.size()) + " fields");
    std::size_t k = 0;
    auto next = [&] { return parse_double(fields[k++], line_no); };
    auto next_vec = [&](Eigen::Index size) {
      Eigen::VectorXd v(size);
      for (Eigen::Index i = 0; i < size; ++i) v(i) = next();
      return v;
    };
    LogRow r;
    auto& a = r.audit;
    r.t = next();
    a.t = r.t;
    r.phase = static_cast<int>(next());
    a.ctrl.status = next() == 0.0 ? Status::running : Status::terminated;
    const int reason = static_cast<int>(next());
    a.ctrl.reason = reason == 1   ? TerminationReason::bone_motion
                    : reason == 2 ? TerminationReason::non_finite
                                  : TerminationReason::none;
    a.js.q = next_vec(n);
    a.js.qdot = next_vec(n);
    a.ctrl.q_v = next();
    a.ctrl.qd_v = next();
    for (Eigen::Vector3d* v : {&a.ctrl.o_tip, &a.ctrl.o_base, &a.ctrl.axis_origin, &a.ctrl.axis_dir, &r.z_tip,
                               &r.zbar_tip, &r.tip_scan})
      *v = next_vec(3);
    r.u_r = next_vec(n);
    a.u_e = next_vec(n);
    a.torque_saturated = next() != 0.0;
    auto& e = r.energy;
    for (double* v : {&e.e_robot, &e.e_drill_kinetic, &e.e_buffer, &e.e_spring_tip, &e.e_spring_base,
                      &e.e_model_mismatch, &e.total})
      *v = next();
    log.rows.push_back(std::move(r));
  }
  return log;
}

TrialMetrics metrics_from_log(const TrajectoryLog& log) {
  std::vector<MetricSample> samples;
  samples.reserve(log.rows.size());
  for (const auto& r : log.rows)
    samples.push_back({r.phase, r.audit.ctrl.status == Status::running, r.tip_scan, r.audit.ctrl.o_tip});
  return compute_metrics(samples, log.header.entry_s, log.header.exit_s);
}

}  // namespace vdg
