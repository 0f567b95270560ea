// Command-line runner: simulate, plan, compare, validate.
// Exit codes: 0 ok, 1 config error, 2 numerical abort, 3 planner failure.

#include <CLI11.hpp>

#include <cstdio>
#include <exception>
#include <iostream>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "snake/config.hpp"
#include "snake/io.hpp"
#include "snake/planner.hpp"
#include "snake/rollout.hpp"

using namespace snake;

namespace {

enum Exit { kOk = 0, kConfig = 1, kNumerical = 2, kPlanner = 3 };

Vec3 parse_goal(const std::string& text) {
  std::vector<double> v;
  std::stringstream ss(text);
  std::string cell;
  while (std::getline(ss, cell, ',')) {
    try {
      std::size_t used = 0;
      v.push_back(std::stod(cell, &used));
      if (used != cell.size()) throw std::invalid_argument(cell);
    } catch (const std::exception&) {
      throw ConfigError("--goal expects x,y,z, got '" + text + "'");
    }
  }
  if (v.size() != 3) throw ConfigError("--goal expects x,y,z, got '" + text + "'");
  return Vec3(v[0], v[1], v[2]);
}

Json base_manifest(const std::string& command, const RunConfig& c) {
  Json j;
  j["command"] = command;
  const Json m = manifest_json(c);
  for (auto it = m.begin(); it != m.end(); ++it) j[it.key()] = it.value();
  return j;
}

struct SimulateArgs {
  std::string config;
  std::string scenario, gait, out;
  double duration = -1.0;
};

int run_simulate(const SimulateArgs& a) {
  RunConfig c = load_config(a.config);
  if (!a.scenario.empty()) c.scenario = a.scenario;
  if (!a.gait.empty()) c.gait = a.gait;
  if (a.duration >= 0.0) c.duration = a.duration;
  if (!a.out.empty()) c.output_dir = a.out;
  const RolloutSetup su = resolve_setup(c);
  const fs::path dir = c.output_dir;
  ensure_dir(dir);

  const Trajectory tr = rollout(su, resolve_duration(c, su.timeline));
  write_run(dir, c, su.model, su.timeline, tr);
  Json man = base_manifest("simulate", c);
  man["duration"] = resolve_duration(c, su.timeline);
  man["status"] = tr.truncated ? "numerical_abort" : "ok";
  if (tr.truncated) man["error"] = tr.diagnostic;
  write_json(dir / "run_manifest.json", man);
  if (tr.truncated) {
    std::cerr << "numerical abort: " << tr.diagnostic << "\n";
    return kNumerical;
  }
  return kOk;
}

struct PlanArgs {
  std::string config, goal, out;
  int budget = -1;
};

int run_plan(const PlanArgs& a) {
  RunConfig c = load_config(a.config);
  if (!a.goal.empty()) c.planner.goal = parse_goal(a.goal);
  if (a.budget >= 0) c.planner.budget = a.budget;
  if (!a.out.empty()) c.output_dir = a.out;
  const ShootingProblem p = resolve_problem(c);
  if (c.planner.budget < 1) throw ConfigError("planner.budget must be >= 1");
  const fs::path dir = c.output_dir;
  ensure_dir(dir);

  const PlannerResult r = shoot(p, resolve_seed_gait(c), c.planner.budget);
  RunConfig shown = c;
  shown.gait = "planned";
  write_run(dir, shown, p.model, r.u_ref, r.trajectory);
  write_json(dir / "planner_result.json", planner_result_json(r, p));
  Json man = base_manifest("plan", c);
  man["duration"] = p.horizon;
  man["goal"] = detail::vector_json(p.goal);
  man["goal_error"] = (r.trajectory.final_state().box_position(p.model) - p.goal).norm();
  man["seed_cost"] = r.seed.total;
  man["best_cost"] = r.best.total;
  man["status"] = r.trajectory.truncated ? "numerical_abort" : "ok";
  if (r.trajectory.truncated) man["error"] = r.trajectory.diagnostic;
  write_json(dir / "run_manifest.json", man);
  return r.trajectory.truncated ? kNumerical : kOk;
}

struct CompareArgs {
  std::vector<std::string> runs;
  std::string out;
  std::string convention = "absolute";
};

int run_compare(const CompareArgs& a) {
  if (a.runs.size() < 2) throw ConfigError("compare needs at least two runs");
  const WorkConvention conv = detail::parse_convention(a.convention);
  const fs::path out = a.out;
  ensure_dir(out);

  struct Loaded {
    std::string label;
    Json metrics;
    CsvTable series, joints;
  };
  std::vector<Loaded> runs;
  std::map<std::string, int> seen;
  for (const auto& d : a.runs) {
    const fs::path dir = d;
    Loaded l;
    l.metrics = read_json(dir / "metrics.json");
    l.series = read_csv(dir / "series.csv");
    l.joints = read_csv(dir / "joints.csv");
    l.label = l.metrics.value("gait", dir.filename().string());
    ++seen[l.label];
    runs.push_back(std::move(l));
  }
  // Repeated gait names fall back to the folder name.
  for (std::size_t i = 0; i < runs.size(); ++i)
    if (seen[runs[i].label] > 1) runs[i].label = fs::path(a.runs[i]).filename().string();

  std::vector<GaitRun> gait_runs;
  for (const auto& l : runs) {
    if (l.metrics.value("truncated", false))
      throw ConfigError("run '" + l.label + "' ended in a numerical abort");
    GaitRun g;
    g.name = l.label;
    g.duration = l.metrics.at("duration").get<double>();
    g.w_loc_abs = l.metrics.at("w_loc_abs").get<double>();
    g.w_loc_net = l.metrics.at("w_loc_net").get<double>();
    g.w_box = l.metrics.at("w_box").get<double>();
    g.box_distance = l.metrics.at("box_displacement").get<double>();
    g.box_path = l.metrics.at("box_path").get<double>();
    g.peak_power = l.metrics.at("peak_power").get<double>();
    gait_runs.push_back(g);
  }
  const EfficiencyReport rep = efficiency_report(gait_runs, conv);

  const std::string wloc_col = conv == WorkConvention::absolute ? "w_loc_abs" : "w_loc_net";
  CsvText work({"run", "t", "w_box", "w_loc"});
  CsvText power({"run", "t", "power"});
  CsvText torque({"run", "t", "tau_J5", "tau_J6"});
  for (const auto& l : runs) {
    const auto t = l.series.numbers("t");
    const auto wb = l.series.numbers("w_box");
    auto wl = l.series.numbers(wloc_col);
    const auto pw = l.series.numbers("power_abs");
    for (std::size_t i = 0; i < t.size(); ++i) {
      work.text(l.label).time(t[i]).num(wb[i]).num(conv == WorkConvention::net ? std::abs(wl[i]) : wl[i]);
      work.end_row();
      power.text(l.label).time(t[i]).num(pw[i]);
      power.end_row();
    }
    const auto tj = l.joints.numbers("t");
    const auto t5 = l.joints.numbers("tau5");
    const auto t6 = l.joints.numbers("tau6");
    for (std::size_t i = 0; i < tj.size(); ++i) {
      torque.text(l.label).time(tj[i]).num(t5[i]).num(t6[i]);
      torque.end_row();
    }
  }
  CsvText dist({"run", "duration", "box_distance", "box_path", "distance_per_second"});
  for (const auto& g : rep.gaits) {
    dist.text(g.run.name).num(g.run.duration).num(g.run.box_distance).num(g.run.box_path)
        .num(g.distance_rate);
    dist.end_row();
  }
  write_text(out / "work_efficiency.csv", work.str());
  write_text(out / "power.csv", power.str());
  write_text(out / "distance.csv", dist.str());
  write_text(out / "torque.csv", torque.str());

  Json r;
  r["convention"] = to_string(rep.convention);
  r["durations_equal"] = rep.durations_equal;
  r["warnings"] = rep.warnings;
  Json gaits = Json::array();
  for (const auto& g : rep.gaits) {
    gaits.push_back({{"name", g.run.name},
                     {"duration", g.run.duration},
                     {"w_loc", g.w_loc},
                     {"w_box", g.run.w_box},
                     {"slope", g.slope_infinite ? Json("inf") : Json(g.slope)},
                     {"slope_infinite", g.slope_infinite},
                     {"box_distance", g.run.box_distance},
                     {"distance_per_second", g.distance_rate},
                     {"peak_power", g.run.peak_power}});
  }
  r["gaits"] = gaits;
  r["ranking"] = {{"distance", rep.by_distance},
                  {"slope", rep.by_slope},
                  {"w_box", rep.by_w_box},
                  {"w_loc", rep.by_w_loc},
                  {"peak_power", rep.by_peak_power}};
  write_json(out / "ranking.json", r);
  for (const auto& w : rep.warnings) std::cerr << "warning: " << w << "\n";
  return kOk;
}

int run_validate(const std::string& path) {
  const RunConfig c = load_config(path);
  const auto rep = validate_config(c);
  if (rep.ok()) {
    std::cout << "ok\n";
    return kOk;
  }
  for (const auto& i : rep.issues) std::cout << i.path << ": " << i.message << "\n";
  return kConfig;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Snake robot locomotion and manipulation runner"};
  app.require_subcommand(1);

  SimulateArgs sim;
  auto* s = app.add_subcommand("simulate", "Run one scenario and write its artifacts");
  s->add_option("--config", sim.config, "JSON config file")->required();
  s->add_option("--scenario", sim.scenario, "flat_push, lift_place, pick_place or ramp_ascent");
  s->add_option("--gait", sim.gait, "Gait preset for flat_push");
  s->add_option("--duration", sim.duration, "Seconds to simulate");
  s->add_option("--out", sim.out, "Output directory");

  PlanArgs plan;
  auto* p = app.add_subcommand("plan", "Shoot for a box goal and write the best rollout");
  p->add_option("--config", plan.config, "JSON config file")->required();
  p->add_option("--goal", plan.goal, "Box goal position x,y,z");
  p->add_option("--budget", plan.budget, "Rollout budget");
  p->add_option("--out", plan.out, "Output directory");

  CompareArgs cmp;
  auto* c = app.add_subcommand("compare", "Efficiency report over finished runs");
  c->add_option("--runs", cmp.runs, "Run directories")->required()->delimiter(',');
  c->add_option("--out", cmp.out, "Output directory")->required();
  c->add_option("--convention", cmp.convention, "absolute or net locomotion work");

  std::string validate_path;
  auto* v = app.add_subcommand("validate", "Check a config without running it");
  v->add_option("--config", validate_path, "JSON config file")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kConfig;
  }

  try {
    if (*s) return run_simulate(sim);
    if (*p) return run_plan(plan);
    if (*c) return run_compare(cmp);
    if (*v) return run_validate(validate_path);
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kConfig;
  } catch (const PlannerError& e) {
    std::cerr << "planner failure: " << e.what() << "\n";
    return kPlanner;
  } catch (const NumericalError& e) {
    std::cerr << "numerical abort: " << e.what() << "\n";
    return kNumerical;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kNumerical;
  }
  return kOk;
}
