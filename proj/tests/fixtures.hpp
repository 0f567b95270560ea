// Oracles and fixtures shared by the contact suites and the acceptance run.
#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>
#include <vector>

#include "snake/contact.hpp"
#include "snake/contact_qp.hpp"
#include "support.hpp"

namespace snake::testing {


struct Single {
  Mat3 G;
  Vec3 c;
  double mu;
};

/// Well-conditioned random single-contact problem.
inline Single random_single(std::mt19937_64& rng) {
  std::normal_distribution<double> n(0.0, 1.0);
  std::uniform_real_distribution<double> u(0.2, 1.0);
  Mat3 B;
  for (int i = 0; i < 9; ++i) B.data()[i] = n(rng);
  Single s;
  s.G = B * B.transpose() + 0.1 * Mat3::Identity();
  s.c = Vec3(n(rng), n(rng), n(rng)) * 5.0;
  s.mu = u(rng);
  return s;
}

inline double cost(const Single& p, const Vec3& f) { return 0.5 * f.dot(p.G * f) + f.dot(p.c); }

/// Brute-force minimum over a grid laid out in cone coordinates
/// f = (a, mu a x, mu a y), x^2 + y^2 <= 1, so every node is feasible and the
/// cone surface is sampled exactly. The magnitude a is gridded in log a over
/// six decades below the a-priori bound. The best few coarse nodes are then
/// refined until the relative cell size is 1e-3.
inline double grid_minimum(const Single& p) {
  Eigen::SelfAdjointEigenSolver<Mat3> es(p.G);
  // J(f) <= J(0) = 0 at the minimizer gives |f| <= 2 |c| / lambda_min.
  const double R = 2.0 * p.c.norm() / es.eigenvalues().minCoeff();
  const double lmin = std::log(R) - 6.0 * std::log(10.0), lmax = std::log(R);
  // g = (log a, x, y)
  auto value = [&](const Vec3& g) {
    if (g.x() > lmax || g.y() * g.y() + g.z() * g.z() > 1.0)
      return std::numeric_limits<double>::infinity();
    const double a = std::exp(g.x());
    return cost(p, Vec3(a, p.mu * a * g.y(), p.mu * a * g.z()));
  };
  const int N = 80;
  std::vector<std::pair<double, Vec3>> coarse;
  for (int i = 0; i <= N; ++i)
    for (int j = 0; j <= N; ++j)
      for (int k = 0; k <= N; ++k) {
        const Vec3 g(lmin + (lmax - lmin) * i / N, -1.0 + 2.0 * j / N, -1.0 + 2.0 * k / N);
        const double v = value(g);
        if (std::isfinite(v)) coarse.emplace_back(v, g);
      }
  std::partial_sort(coarse.begin(), coarse.begin() + 8, coarse.end(),
                    [](const auto& a, const auto& b) { return a.first < b.first; });
  double best = 0.0;
  for (int start = 0; start < 8; ++start) {
    Vec3 centre = coarse[start].second;
    double incumbent = coarse[start].first;
    Vec3 half((lmax - lmin) / N, 2.0 / N, 2.0 / N);
    const int M = 20;
    while (half.y() > 1e-3 / M) {
      Vec3 next = centre;
      for (int i = -M; i <= M; ++i)
        for (int j = -M; j <= M; ++j)
          for (int k = -M; k <= M; ++k) {
            const Vec3 g = centre + Vec3(half.x() * i, half.y() * j, half.z() * k) / M;
            const double v = value(g);
            if (v < incumbent) {
              incumbent = v;
              next = g;
            }
          }
      centre = next;
      half *= 0.25;
    }
    best = std::min(best, incumbent);
  }
  return best;
}

inline ContactQpProblem to_problem(const Single& s) {
  ContactQpProblem p;
  p.G = s.G;
  p.c = s.c;
  p.mu = {s.mu};
  return p;
}

/// Box resting flat on the ground, robot far away.
struct RestingBox {
  RobotModel m = build_default_robot();
  SceneSpec scene;
  ContactParams params;
  SystemState s;
  ContactSet set;

  RestingBox() {
    s = SystemState::zeros(m);
    s.q.head<3>() = Vec3(0.0, -3.0, 0.05);
    const Layout lay(m);
    s.q.segment<3>(lay.box_q()) = Vec3(0.0, 0.3, 0.1);
    set = detect_contacts(m, scene, s, params);
    ContactSet box;
    for (const auto& c : set.points)
      if (c.b.is_box()) box.points.push_back(c);
    set = box;
  }

  ContactQpProblem problem(double mu) const {
    const auto sys = delassus(m, scene, s, set, VecX::Zero(m.num_joints()));
    ContactQpProblem p;
    p.G = sys.G;
    p.c = sys.c;
    p.mu.assign(set.size(), mu);
    return p;
  }
};



/// Robot straight on the ground along x at y = y0.
inline SystemState robot_on_ground(const RobotModel& m, double y0, double sink = 0.0) {
  auto s = SystemState::zeros(m);
  s.q.head<3>() = Vec3(0.8 - m.links[0].length / 2.0, y0, 0.05 - sink);
  return s;
}

/// Depth d at which four corners carry weight W: s(d) k d = W / 4.
inline double corner_equilibrium_depth(double weight, const NormalForceParams& p) {
  double lo = 0.0, hi = 1e-2;
  for (int i = 0; i < 200; ++i) {
    const double mid = 0.5 * (lo + hi);
    (smoothing(mid, p.w) * p.k * mid < weight / 4.0 ? lo : hi) = mid;
  }
  return 0.5 * (lo + hi);
}

struct Sim {
  RobotModel m = build_default_robot();
  SceneSpec scene;
  ContactParams params;
  IntegratorConfig cfg;

  SystemState advance(SystemState s, int steps, ContactSet* last = nullptr) const {
    const VecX tau = VecX::Zero(m.num_joints());
    for (int i = 0; i < steps; ++i) {
      const auto k = chain_kinematics(m, s, true);
      auto set = resolve_forces(detect_contacts(m, scene, k, s, params), params);
      if (last) *last = set;
      s = step(m, scene, s, tau, set, cfg);
    }
    return s;
  }
};


}  // namespace snake::testing
