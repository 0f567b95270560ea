// Run artifacts: trajectory CSVs, contact logs, metric series, metrics and
// manifest JSON, plus the readers `compare` uses on finished run folders.
// Numbers are written as shortest round-trip decimals and timestamps with
// six decimals, so identical runs give identical bytes.
#pragma once

#include <charconv>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <system_error>
#include <vector>

#include "snake/config.hpp"
#include "snake/kinematics.hpp"
#include "snake/planner.hpp"
#include "snake/rollout.hpp"

namespace snake {

namespace fs = std::filesystem;

inline std::string fmt_num(double v) {
  char buf[64];
  const auto r = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, r.ptr);
}

inline std::string fmt_time(double t) {
  char buf[64];
  const auto r = std::to_chars(buf, buf + sizeof buf, t, std::chars_format::fixed, 6);
  return std::string(buf, r.ptr);
}

inline void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ConfigError("cannot write '" + path.string() + "'");
  out << text;
  if (!out) throw ConfigError("write failed for '" + path.string() + "'");
}

inline void write_json(const fs::path& path, const Json& j) { write_text(path, j.dump(2) + "\n"); }

inline void ensure_dir(const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec || !fs::is_directory(dir))
    throw ConfigError("output directory '" + dir.string() + "' is not writable");
}

/// Rows of comma-separated cells, first row the header.
class CsvText {
 public:
  explicit CsvText(std::vector<std::string> header) {
    for (std::size_t i = 0; i < header.size(); ++i) out_ << (i ? "," : "") << header[i];
    out_ << '\n';
    columns_ = header.size();
  }
  CsvText& time(double t) { return cell(fmt_time(t)); }
  CsvText& num(double v) { return cell(fmt_num(v)); }
  CsvText& text(const std::string& s) { return cell(s); }
  template <typename V>
  CsvText& nums(const V& v) {
    for (int i = 0; i < v.size(); ++i) num(v[i]);
    return *this;
  }
  void end_row() {
    if (row_ != columns_)
      throw std::logic_error("csv row has " + std::to_string(row_) + " cells, expected " +
                             std::to_string(columns_));
    out_ << '\n';
    row_ = 0;
  }
  std::string str() const { return out_.str(); }

 private:
  CsvText& cell(const std::string& s) {
    out_ << (row_++ ? "," : "") << s;
    return *this;
  }
  std::ostringstream out_;
  std::size_t columns_ = 0;
  std::size_t row_ = 0;
};

namespace detail {

inline std::vector<std::string> numbered(const std::string& stem, int n) {
  std::vector<std::string> v;
  for (int i = 1; i <= n; ++i) v.push_back(stem + std::to_string(i));
  return v;
}

inline std::vector<std::string> concat(std::vector<std::vector<std::string>> parts) {
  std::vector<std::string> v;
  for (auto& p : parts) v.insert(v.end(), p.begin(), p.end());
  return v;
}

}  // namespace detail

inline std::string robot_pose_csv(const RobotModel& m, const Trajectory& tr) {
  CsvText csv({"t", "x", "y", "z", "qw", "qx", "qy", "qz", "vx", "vy", "vz", "wx", "wy", "wz",
               "com_x", "com_y", "com_z", "head_x", "head_y", "head_z"});
  for (const auto& s : tr.samples) {
    const auto& st = s.state;
    const auto k = chain_kinematics(m, st, false);
    const Quat r = st.base_orientation(m);
    Vec3 v = Vec3::Zero(), w = Vec3::Zero();
    if (!m.fixed_base) {
      v = st.u.head<3>();
      w = st.u.segment<3>(3);
    }
    csv.time(s.t).nums(st.base_position(m)).num(r.w()).num(r.x()).num(r.y()).num(r.z());
    csv.nums(v).nums(w).nums(robot_com(m, k)).nums(head_tip(m, k));
    csv.end_row();
  }
  return csv.str();
}

inline std::string box_pose_csv(const RobotModel& m, const Trajectory& tr) {
  CsvText csv({"t", "x", "y", "z", "qw", "qx", "qy", "qz", "vx", "vy", "vz", "wx", "wy", "wz",
               "latched"});
  const Layout lay(m);
  for (const auto& s : tr.samples) {
    const auto& st = s.state;
    const Quat r = st.box_orientation(m);
    csv.time(s.t).nums(st.box_position(m)).num(r.w()).num(r.x()).num(r.y()).num(r.z());
    csv.nums(st.u.segment<3>(lay.box_v())).nums(st.u.segment<3>(lay.box_v() + 3));
    csv.text(st.latched ? "1" : "0");
    csv.end_row();
  }
  return csv.str();
}

inline std::string joints_csv(const RobotModel& m, const Trajectory& tr) {
  const int n = m.num_joints();
  CsvText csv(detail::concat({{"t", "segment"},
                              detail::numbered("q", n),
                              detail::numbered("qd", n),
                              detail::numbered("tau", n),
                              detail::numbered("qref", n)}));
  for (const auto& s : tr.samples) {
    csv.time(s.t).text(std::to_string(s.segment));
    csv.nums(s.state.joint_angles(m)).nums(s.state.joint_rates(m)).nums(s.tau).nums(s.q_ref);
    csv.end_row();
  }
  return csv.str();
}

inline std::string series_csv(const Trajectory& tr) {
  CsvText csv({"t", "power_abs", "power_net", "box_power", "w_loc_abs", "w_loc_net", "w_box",
               "box_path", "contact_objective", "contact_residual", "orth_gap", "orth_rate",
               "contacts"});
  for (const auto& s : tr.samples) {
    csv.time(s.t).num(s.power_abs).num(s.power_net).num(s.box_power);
    csv.num(s.w_loc_abs).num(s.w_loc_net).num(s.w_box).num(s.box_path);
    csv.num(s.contact_objective).num(s.contact_residual).num(s.orth_gap).num(s.orth_rate);
    csv.text(std::to_string(s.contacts));
    csv.end_row();
  }
  return csv.str();
}

/// One contact category. Self-contacts are not logged.
inline std::string contacts_csv(const RobotModel& m, const Trajectory& tr, ContactCategory cat) {
  CsvText csv({"t", "bodyA", "bodyB", "px", "py", "pz", "d", "fN", "fTx", "fTy", "vt"});
  for (const auto& c : tr.contacts) {
    if (c.category != cat) continue;
    csv.time(tr.samples[c.sample].t).text(body_name(m, c.a)).text(body_name(m, c.b));
    csv.nums(c.p).num(c.depth).num(c.f_n).num(c.f_t.x()).num(c.f_t.y()).num(c.slip);
    csv.end_row();
  }
  return csv.str();
}

inline Json timeline_json(const GaitTimeline& tl) {
  Json segs = Json::array();
  for (const auto& s : tl.segments) {
    Json j;
    j["label"] = s.label;
    j["duration"] = s.duration;
    j["latch"] = to_string(s.latch);
    j["blend"] = s.blend;
    if (s.cpg) {
      j["cpg"] = {{"amplitude_yaw_deg", s.cpg->amplitude_yaw_deg},
                  {"amplitude_pitch_deg", s.cpg->amplitude_pitch_deg},
                  {"frequency", s.cpg->frequency_hz},
                  {"phase", detail::vector_json(s.cpg->phase)},
                  {"mirror", s.cpg->mirror},
                  {"offset_deg", detail::vector_json(s.cpg->offset_deg)}};
    }
    Json keys = Json::array();
    for (const auto& k : s.keyframes)
      keys.push_back({{"t", k.time}, {"q", detail::vector_json(k.q)}});
    if (!keys.empty()) j["keyframes"] = keys;
    segs.push_back(j);
  }
  return {{"duration", tl.duration()}, {"initial", detail::vector_json(tl.initial)}, {"segments", segs}};
}

inline Json metrics_json(const RunConfig& c, const RobotModel& m, const Trajectory& tr) {
  Json j;
  j["scenario"] = c.scenario;
  j["gait"] = c.gait;
  j["work_convention"] = to_string(c.work_convention);
  j["duration"] = tr.duration();
  j["samples"] = tr.samples.size();
  j["steps"] = tr.steps;
  j["truncated"] = tr.truncated;
  if (tr.truncated) j["diagnostic"] = tr.diagnostic;
  if (tr.samples.empty()) return j;
  const Vec3 b0 = tr.samples.front().state.box_position(m);
  const Vec3 b1 = tr.final_state().box_position(m);
  j["w_loc_abs"] = tr.w_loc_abs;
  j["w_loc_net"] = tr.w_loc_net;
  j["w_loc"] = c.work_convention == WorkConvention::absolute ? tr.w_loc_abs : std::abs(tr.w_loc_net);
  j["w_box"] = tr.w_box;
  j["box_displacement"] = (b1 - b0).norm();
  j["box_path"] = tr.box_path;
  j["box_initial"] = detail::vector_json(b0);
  j["box_final"] = detail::vector_json(b1);
  j["box_apex"] = tr.max_apex;
  j["box_latched_final"] = tr.final_state().latched;
  j["robot_displacement"] =
      (tr.final_state().base_position(m) - tr.samples.front().state.base_position(m)).norm();
  j["peak_power"] = tr.peak_power;
  j["torque_effort"] = tr.torque_effort;
  j["contact_effort"] = tr.contact_effort;
  j["contact_residual_effort"] = tr.contact_residual_effort;
  j["max_abs_q"] = tr.max_abs_q;
  j["max_abs_tau"] = tr.max_abs_tau;
  const auto orth = orthogonality_report(tr);
  j["orthogonality"] = {{"gap_max", orth.gap_max},
                        {"gap_mean", orth.gap_mean},
                        {"rate_max", orth.rate_max},
                        {"rate_mean", orth.rate_mean}};
  Json events = Json::array();
  for (const auto& e : tr.events) events.push_back({{"t", e.t}, {"event", e.what}});
  j["events"] = events;
  return j;
}

inline const std::vector<std::string>& trajectory_files() {
  static const std::vector<std::string> files = {
      "robot_pose.csv",           "box_pose.csv",           "joints.csv",
      "contacts_robot_ground.csv", "contacts_box_ground.csv", "contacts_robot_box.csv",
      "series.csv"};
  return files;
}

/// Trajectory CSVs, metrics.json and timeline.json into `dir`.
inline void write_run(const fs::path& dir, const RunConfig& c, const RobotModel& m,
                      const GaitTimeline& tl, const Trajectory& tr) {
  ensure_dir(dir);
  write_text(dir / "robot_pose.csv", robot_pose_csv(m, tr));
  write_text(dir / "box_pose.csv", box_pose_csv(m, tr));
  write_text(dir / "joints.csv", joints_csv(m, tr));
  write_text(dir / "contacts_robot_ground.csv", contacts_csv(m, tr, ContactCategory::robot_ground));
  write_text(dir / "contacts_box_ground.csv", contacts_csv(m, tr, ContactCategory::box_ground));
  write_text(dir / "contacts_robot_box.csv", contacts_csv(m, tr, ContactCategory::robot_box));
  write_text(dir / "series.csv", series_csv(tr));
  write_json(dir / "metrics.json", metrics_json(c, m, tr));
  write_json(dir / "timeline.json", timeline_json(tl));
}

inline Json planner_result_json(const PlannerResult& r, const ShootingProblem& p) {
  Json j;
  j["decision"] = detail::vector_json(encode(r.decision));
  j["decision_names"] = {"amplitude_yaw_deg", "amplitude_pitch_deg", "frequency",
                         "offset1", "offset2", "offset3", "offset4", "offset5", "offset6",
                         "offset7", "offset8", "offset9", "offset10", "offset11"};
  j["phase"] = detail::vector_json(r.decision.phase);
  j["mirror"] = r.decision.mirror;
  auto cost = [](const CostBreakdown& c) {
    return Json{{"total", c.total}, {"goal_error", c.goal_error}, {"goal", c.goal},
                {"contact", c.contact}, {"torque", c.torque}};
  };
  j["goal"] = detail::vector_json(p.goal);
  j["horizon"] = p.horizon;
  j["seed_cost"] = cost(r.seed);
  j["best_cost"] = cost(r.best);
  j["cost_history"] = r.cost_history;
  j["evaluations"] = r.evaluations;
  j["iterations"] = r.iterations;
  j["converged"] = r.converged;
  j["u_ref"] = timeline_json(r.u_ref);
  return j;
}

// ---------------------------------------------------------------------------
// Reading finished runs

struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;

  int column(const std::string& name) const {
    for (std::size_t i = 0; i < header.size(); ++i)
      if (header[i] == name) return static_cast<int>(i);
    throw ConfigError("csv column '" + name + "' not found");
  }
  std::vector<double> numbers(const std::string& name) const {
    const int c = column(name);
    std::vector<double> v;
    v.reserve(rows.size());
    for (const auto& r : rows) {
      double x = 0.0;
      const auto& s = r.at(c);
      const auto res = std::from_chars(s.data(), s.data() + s.size(), x);
      if (res.ec != std::errc()) throw ConfigError("csv cell '" + s + "' is not a number");
      v.push_back(x);
    }
    return v;
  }
};

inline std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> cells;
  std::string cell;
  std::istringstream ss(line);
  while (std::getline(ss, cell, ',')) cells.push_back(cell);
  if (!line.empty() && line.back() == ',') cells.emplace_back();
  return cells;
}

inline CsvTable read_csv(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read '" + path.string() + "'");
  CsvTable t;
  std::string line;
  if (!std::getline(in, line)) throw ConfigError("'" + path.string() + "' is empty");
  t.header = split_csv_line(line);
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    t.rows.push_back(split_csv_line(line));
    if (t.rows.back().size() != t.header.size())
      throw ConfigError("'" + path.string() + "': ragged row");
  }
  return t;
}

inline Json read_json(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read '" + path.string() + "'");
  try {
    return Json::parse(in);
  } catch (const Json::parse_error& e) {
    throw ConfigError("'" + path.string() + "': " + e.what());
  }
}

}  // namespace snake
