// Locomotion work, work done on the box, instantaneous power, box travel,
// and per-gait efficiency summaries.
#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <string>
#include <vector>

#include "snake/contact_types.hpp"
#include "snake/model.hpp"

namespace snake {

enum class WorkConvention { absolute, net };

inline std::string to_string(WorkConvention w) {
  return w == WorkConvention::absolute ? "absolute" : "net";
}

/// Actuator power magnitude sum_k |tau_k * rate_k|.
inline double instantaneous_power(const RobotModel& m, const SystemState& s, const VecX& tau) {
  const Layout lay(m);
  double p = 0.0;
  for (int k = 0; k < m.num_joints(); ++k) p += std::abs(tau[k] * s.u[lay.joint_v(k)]);
  return p;
}

/// Signed mechanical power sum_k tau_k * rate_k.
inline double net_power(const RobotModel& m, const SystemState& s, const VecX& tau) {
  const Layout lay(m);
  double p = 0.0;
  for (int k = 0; k < m.num_joints(); ++k) p += tau[k] * s.u[lay.joint_v(k)];
  return p;
}

/// Power delivered by the robot to the box through robot-box contacts,
/// evaluated at the box material velocity of each contact point.
inline double box_contact_power(const RobotModel& m, const SystemState& s, const ContactSet& set) {
  const Layout lay(m);
  const Vec3 c = s.box_position(m);
  const Vec3 v = s.u.segment<3>(lay.box_v());
  const Vec3 w = s.box_orientation(m) * Vec3(s.u.segment<3>(lay.box_v() + 3));
  double p = 0.0;
  for (const auto& pt : set.points) {
    const bool box_a = pt.a.is_box() && pt.b.is_robot();
    const bool box_b = pt.b.is_box() && pt.a.is_robot();
    if (!box_a && !box_b) continue;
    const Vec3 F = box_b ? pt.world_force() : Vec3(-pt.world_force());
    p += F.dot(v + w.cross(pt.p - c));
  }
  return p;
}

/// Trapezoidal running integral of equally spaced samples.
inline std::vector<double> cumulative_trapezoid(const std::vector<double>& y, double dt) {
  std::vector<double> out(y.size(), 0.0);
  for (std::size_t i = 1; i < y.size(); ++i) out[i] = out[i - 1] + 0.5 * dt * (y[i] + y[i - 1]);
  return out;
}

/// Work on the box from a logged series of robot->box contact power.
/// Throws if the log is missing.
inline std::vector<double> work_on_box(const std::vector<double>& box_power, double dt) {
  if (box_power.empty()) throw std::invalid_argument("work_on_box: missing contact log");
  return cumulative_trapezoid(box_power, dt);
}

inline double path_length(const std::vector<Vec3>& points) {
  double s = 0.0;
  for (std::size_t i = 1; i < points.size(); ++i) s += (points[i] - points[i - 1]).norm();
  return s;
}

/// Totals for one run, fed to the efficiency report.
struct GaitRun {
  std::string name;
  double duration = 0.0;
  double w_loc_abs = 0.0;
  double w_loc_net = 0.0;
  double w_box = 0.0;
  double box_distance = 0.0;  // straight-line displacement
  double box_path = 0.0;
  double peak_power = 0.0;
};

struct GaitEfficiency {
  GaitRun run;
  double w_loc = 0.0;  // per the chosen convention
  double slope = 0.0;  // W_loc / W_box
  bool slope_infinite = false;
  double distance_rate = 0.0;  // m/s, for unequal durations
};

struct EfficiencyReport {
  WorkConvention convention = WorkConvention::absolute;
  std::vector<GaitEfficiency> gaits;
  bool durations_equal = true;
  std::vector<std::string> warnings;
  // Names ordered best-first.
  std::vector<std::string> by_distance;
  std::vector<std::string> by_slope;  // most efficient (smallest slope) first
  std::vector<std::string> by_w_box;
  std::vector<std::string> by_w_loc;
  std::vector<std::string> by_peak_power;

  const GaitEfficiency* find(const std::string& name) const {
    for (const auto& g : gaits)
      if (g.run.name == name) return &g;
    return nullptr;
  }
};

inline EfficiencyReport efficiency_report(const std::vector<GaitRun>& runs,
                                          WorkConvention convention = WorkConvention::absolute) {
  if (runs.empty()) throw std::invalid_argument("efficiency_report: no runs");
  EfficiencyReport r;
  r.convention = convention;
  for (const auto& run : runs) {
    GaitEfficiency g;
    g.run = run;
    g.w_loc = convention == WorkConvention::absolute ? run.w_loc_abs : std::abs(run.w_loc_net);
    if (run.w_box <= 0.0) {
      g.slope = std::numeric_limits<double>::infinity();
      g.slope_infinite = true;
      r.warnings.push_back(run.name + ": no work done on the box, slope reported as infinite");
    } else {
      g.slope = g.w_loc / run.w_box;
    }
    g.distance_rate = run.duration > 0.0 ? run.box_distance / run.duration : 0.0;
    if (std::abs(run.duration - runs.front().duration) > 1e-9) r.durations_equal = false;
    r.gaits.push_back(g);
  }
  if (!r.durations_equal)
    r.warnings.push_back("run durations differ; distances ranked per second");
  auto rank = [&](auto key, bool descending) {
    std::vector<const GaitEfficiency*> v;
    for (const auto& g : r.gaits) v.push_back(&g);
    std::stable_sort(v.begin(), v.end(), [&](auto* a, auto* b) {
      return descending ? key(*a) > key(*b) : key(*a) < key(*b);
    });
    std::vector<std::string> names;
    for (auto* g : v) names.push_back(g->run.name);
    return names;
  };
  const bool eq = r.durations_equal;
  r.by_distance = rank([eq](const GaitEfficiency& g) {
    return eq ? g.run.box_distance : g.distance_rate;
  }, true);
  r.by_slope = rank([](const GaitEfficiency& g) { return g.slope; }, false);
  r.by_w_box = rank([](const GaitEfficiency& g) { return g.run.w_box; }, true);
  r.by_w_loc = rank([](const GaitEfficiency& g) { return g.w_loc; }, true);
  r.by_peak_power = rank([](const GaitEfficiency& g) { return g.run.peak_power; }, true);
  return r;
}

}  // namespace snake
