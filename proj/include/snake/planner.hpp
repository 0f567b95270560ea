// Shooting over CPG parameters: each candidate decision generates a joint
// reference trajectory, is rolled out through the full contact dynamics and
// scored on box-goal tracking, contact effort and torque effort. Contact
// effort is the least-action residual: how far the applied forces sit above
// the minimum of 1/2 f^T G f + f^T c over the cones, integrated in time. The outer
// search is a deterministic coordinate pattern search whose polls are
// evaluated in fixed-size batches, optionally on several threads.
#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdlib>
#include <limits>
#include <numeric>
#include <random>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

#include "snake/gait.hpp"
#include "snake/rollout.hpp"

namespace snake {

/// Raised when the planner cannot produce any finite-cost rollout.
class PlannerError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct CostWeights {
  double goal = 10.0;
  double contact = 1e-3;
  double torque = 1e-4;
};

struct ShootingProblem {
  RobotModel model;
  SceneSpec scene;
  SystemState initial;
  RolloutConfig config;
  Vec3 goal = Vec3::Zero();  // target box COM position
  double horizon = 4.0;
  CostWeights weights;
  // Decision bounds.
  double amplitude_max_deg = 90.0;
  double frequency_min_hz = 0.1;
  double frequency_max_hz = 1.0;
  double offset_max_deg = 45.0;
  // Pattern search.
  double initial_step = 0.1;  // fraction of each bound range
  double min_step = 1e-3;     // fraction of each bound range
  // Poll order: 0 keeps the natural coordinate order, anything else
  // shuffles it once with this seed.
  unsigned seed = 0;
};

inline void check(const ShootingProblem& p) {
  if (!(p.horizon > 0.0)) throw ConfigError("planner.horizon must be > 0");
  if (!(p.amplitude_max_deg > 0.0 && p.amplitude_max_deg <= 90.0))
    throw ConfigError("planner.amplitude_max_deg must lie in (0, 90]");
  if (!(p.frequency_min_hz > 0.0 && p.frequency_max_hz > p.frequency_min_hz))
    throw ConfigError("planner frequency bounds must satisfy 0 < min < max");
  if (!(p.offset_max_deg >= 0.0 && p.offset_max_deg <= 90.0))
    throw ConfigError("planner.offset_max_deg must lie in [0, 90]");
  if (!(p.initial_step > 0.0 && p.min_step > 0.0 && p.min_step <= p.initial_step))
    throw ConfigError("planner step fractions must satisfy 0 < min_step <= initial_step");
  if (!(p.weights.goal >= 0.0 && p.weights.contact >= 0.0 && p.weights.torque >= 0.0))
    throw ConfigError("planner.weights must be >= 0");
}

/// Decision vector: [yaw amplitude, pitch amplitude, frequency, 11 offsets]
/// in degrees and hertz. Phases and the mirror flag stay those of the seed.
inline constexpr int kDecisionSize = 3 + kJoints;

using Decision = Eigen::Matrix<double, kDecisionSize, 1>;

inline Decision encode(const CpgParams& p) {
  Decision x;
  x << p.amplitude_yaw_deg, p.amplitude_pitch_deg, p.frequency_hz, p.offset_deg;
  return x;
}

inline CpgParams decode(const Decision& x, const CpgParams& seed) {
  CpgParams p = seed;
  p.amplitude_yaw_deg = x[0];
  p.amplitude_pitch_deg = x[1];
  p.frequency_hz = x[2];
  p.offset_deg = x.tail<kJoints>();
  return p;
}

inline Decision lower_bounds(const ShootingProblem& p) {
  Decision lo;
  lo << 0.0, 0.0, p.frequency_min_hz, JointVec::Constant(-p.offset_max_deg);
  return lo;
}

inline Decision upper_bounds(const ShootingProblem& p) {
  Decision hi;
  hi << p.amplitude_max_deg, p.amplitude_max_deg, p.frequency_max_hz,
      JointVec::Constant(p.offset_max_deg);
  return hi;
}

/// Box bounds, then each offset shrunk so that amplitude + |offset| <= 90
/// and no reference can leave the joint range.
inline Decision clamp_decision(const ShootingProblem& p, const CpgParams& seed, Decision x) {
  x = x.cwiseMax(lower_bounds(p)).cwiseMin(upper_bounds(p));
  for (int k = 0; k < kJoints; ++k) {
    const double a = seed.is_yaw(k) ? x[0] : x[1];
    const double room = std::max(0.0, 90.0 - a);
    x[3 + k] = std::clamp(x[3 + k], -room, room);
  }
  return x;
}

struct CostBreakdown {
  double total = std::numeric_limits<double>::infinity();
  double goal_error = std::numeric_limits<double>::infinity();  // m
  double goal = 0.0;
  double contact = 0.0;
  double torque = 0.0;
  bool finite() const { return std::isfinite(total); }
};

inline CostBreakdown score(const ShootingProblem& p, const Trajectory& tr) {
  CostBreakdown c;
  if (tr.truncated || tr.samples.empty()) return c;
  const Vec3 box = tr.final_state().box_position(p.model);
  c.goal_error = (box - p.goal).norm();
  c.goal = p.weights.goal * c.goal_error * c.goal_error;
  c.contact = p.weights.contact * tr.contact_residual_effort;
  c.torque = p.weights.torque * tr.torque_effort;
  c.total = c.goal + c.contact + c.torque;
  if (!std::isfinite(c.total)) c.total = std::numeric_limits<double>::infinity();
  return c;
}

inline RolloutSetup planner_setup(const ShootingProblem& p, const CpgParams& params) {
  RolloutSetup su;
  su.model = p.model;
  su.scene = p.scene;
  su.initial = p.initial;
  su.timeline = gait_timeline(params, p.horizon);
  su.config = p.config;
  su.config.contact_objective = true;
  su.config.record_contacts = false;
  return su;
}

inline CostBreakdown evaluate(const ShootingProblem& p, const CpgParams& params) {
  return score(p, rollout(planner_setup(p, params)));
}

struct PlannerResult {
  CpgParams decision;
  GaitTimeline u_ref;  // reference trajectory generated by the decision
  CostBreakdown best;
  CostBreakdown seed;
  Trajectory trajectory;  // rollout of the best decision, with contact logs
  std::vector<double> cost_history;  // best cost after each evaluation
  int evaluations = 0;
  int iterations = 0;  // polls completed (successful or not)
  bool converged = false;  // stopped on the minimum step, not the budget
};

/// Worker count: hardware concurrency capped by SNAKE_LOCOMANIP_THREADS.
inline int planner_threads() {
  int n = static_cast<int>(std::max(1u, std::thread::hardware_concurrency()));
  if (const char* env = std::getenv("SNAKE_LOCOMANIP_THREADS")) {
    char* end = nullptr;
    const long cap = std::strtol(env, &end, 10);
    if (end != env && cap >= 1) n = std::min<long>(n, cap);
  }
  return n;
}

namespace detail {

/// Candidates are independent; results land by index so the outcome does
/// not depend on scheduling.
inline std::vector<CostBreakdown> evaluate_batch(const ShootingProblem& p, const CpgParams& seed,
                                                 const std::vector<Decision>& xs, int threads) {
  std::vector<CostBreakdown> out(xs.size());
  auto work = [&](std::size_t i) {
    try {
      out[i] = evaluate(p, decode(xs[i], seed));
    } catch (const ConfigError&) {
      out[i] = CostBreakdown{};
    }
  };
  const int n = std::min<int>(threads, static_cast<int>(xs.size()));
  if (n <= 1) {
    for (std::size_t i = 0; i < xs.size(); ++i) work(i);
    return out;
  }
  std::vector<std::thread> pool;
  for (int w = 0; w < n; ++w)
    pool.emplace_back([&, w] {
      for (std::size_t i = w; i < xs.size(); i += n) work(i);
    });
  for (auto& t : pool) t.join();
  return out;
}

}  // namespace detail

inline constexpr int kPlannerBatch = 8;

/// Coordinate pattern search from `seed` with at most `budget` rollouts.
/// Polls run coordinate by coordinate (+step, then -step) in batches of
/// kPlannerBatch; the best improving candidate of a batch becomes the new
/// centre (lowest index on ties) and polling restarts. A full poll without
/// improvement halves every step.
inline PlannerResult shoot(const ShootingProblem& p, const CpgParams& seed, int budget,
                           int threads = -1) {
  check(p);
  check(seed);
  if (budget < 1) throw ConfigError("planner.budget must be >= 1");
  if (threads < 1) threads = planner_threads();
  const Decision lo = lower_bounds(p), hi = upper_bounds(p);
  const Decision x0 = encode(seed);
  if ((x0.array() < lo.array() - 1e-12).any() || (x0.array() > hi.array() + 1e-12).any())
    throw ConfigError("planner seed lies outside the decision bounds");

  PlannerResult r;
  Decision best_x = clamp_decision(p, seed, x0);
  r.seed = detail::evaluate_batch(p, seed, {best_x}, 1)[0];
  r.best = r.seed;
  r.evaluations = 1;
  r.cost_history.push_back(r.best.total);

  const Decision range = hi - lo;
  Decision step = p.initial_step * range;
  std::array<int, kDecisionSize> order;
  std::iota(order.begin(), order.end(), 0);
  if (p.seed != 0) {
    std::mt19937 rng(p.seed);
    std::shuffle(order.begin(), order.end(), rng);
  }
  while (r.evaluations < budget) {
    if ((step.array() < p.min_step * range.array()).all()) {
      r.converged = true;
      break;
    }
    // Poll set around the current centre, skipping moves clamped to no-ops.
    std::vector<Decision> poll;
    for (int d : order) {
      for (double sgn : {1.0, -1.0}) {
        Decision x = best_x;
        x[d] += sgn * step[d];
        x = clamp_decision(p, seed, x);
        if ((x - best_x).cwiseAbs().maxCoeff() > 0.0) poll.push_back(x);
      }
    }
    bool improved = false;
    for (std::size_t start = 0; start < poll.size() && r.evaluations < budget;
         start += kPlannerBatch) {
      const std::size_t end = std::min(
          {poll.size(), start + kPlannerBatch, start + static_cast<std::size_t>(budget - r.evaluations)});
      const std::vector<Decision> batch(poll.begin() + start, poll.begin() + end);
      const auto costs = detail::evaluate_batch(p, seed, batch, threads);
      int pick = -1;
      for (std::size_t i = 0; i < costs.size(); ++i) {
        ++r.evaluations;
        if (costs[i].total < r.best.total &&
            (pick < 0 || costs[i].total < costs[pick].total))
          pick = static_cast<int>(i);
        const double shown = pick >= 0 ? std::min(r.best.total, costs[pick].total) : r.best.total;
        r.cost_history.push_back(shown);
      }
      if (pick >= 0) {
        best_x = batch[pick];
        r.best = costs[pick];
        improved = true;
        break;
      }
    }
    ++r.iterations;
    if (!improved && r.evaluations < budget) step *= 0.5;
  }

  if (!r.best.finite()) throw PlannerError("planner: no candidate produced a finite-cost rollout");
  r.decision = decode(best_x, seed);
  r.u_ref = gait_timeline(r.decision, p.horizon);
  auto su = planner_setup(p, r.decision);
  su.config.record_contacts = p.config.record_contacts;
  r.trajectory = rollout(su);
  return r;
}

// ---------------------------------------------------------------------------
// Orthogonality diagnostics: normal force against positive gap and against
// gap rate, which vanish for an ideal unilateral contact.

struct OrthogonalityReport {
  std::vector<double> t;
  std::vector<double> gap_product;   // sum |f_N * max(g - w, 0)|
  std::vector<double> rate_product;  // sum |f_N * g_dot|
  double gap_max = 0.0, gap_mean = 0.0;
  double rate_max = 0.0, rate_mean = 0.0;
};

inline OrthogonalityReport orthogonality_report(const Trajectory& tr) {
  if (tr.samples.empty()) throw std::invalid_argument("orthogonality_report: empty trajectory");
  OrthogonalityReport r;
  for (const auto& s : tr.samples) {
    r.t.push_back(s.t);
    r.gap_product.push_back(s.orth_gap);
    r.rate_product.push_back(s.orth_rate);
    r.gap_max = std::max(r.gap_max, s.orth_gap);
    r.rate_max = std::max(r.rate_max, s.orth_rate);
    r.gap_mean += s.orth_gap;
    r.rate_mean += s.orth_rate;
  }
  r.gap_mean /= static_cast<double>(tr.samples.size());
  r.rate_mean /= static_cast<double>(tr.samples.size());
  return r;
}

inline OrthogonalityReport orthogonality_report(const PlannerResult& r) {
  return orthogonality_report(r.trajectory);
}

}  // namespace snake
