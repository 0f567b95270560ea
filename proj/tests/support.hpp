// Shared helpers for the test suites.
#pragma once

#include <random>

#include "snake/dynamics.hpp"
#include "snake/model.hpp"

namespace snake::testing {

inline Quat random_quat(std::mt19937_64& rng) {
  std::normal_distribution<double> n(0.0, 1.0);
  Quat q(n(rng), n(rng), n(rng), n(rng));
  q.normalize();
  return q;
}

/// Random configuration and velocity; joints inside their limits.
inline SystemState random_state(const RobotModel& m, std::mt19937_64& rng, double speed = 1.0) {
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  const Layout lay(m);
  SystemState s = SystemState::zeros(m);
  if (!m.fixed_base) {
    s.q.head<3>() = Vec3(u(rng), u(rng), 0.5 + u(rng));
    set_quat(s.q, 3, random_quat(rng));
  }
  for (int j = 0; j < m.num_joints(); ++j) s.q[lay.joint_q(j)] = 1.5 * u(rng);
  s.q.segment<3>(lay.box_q()) = Vec3(u(rng), u(rng), 0.5 + u(rng));
  set_quat(s.q, lay.box_q() + 3, random_quat(rng));
  for (int i = 0; i < lay.nv(); ++i) s.u[i] = speed * u(rng);
  return s;
}

/// Displaces q along the tangent direction `dir` (a velocity vector) by eps.
inline SystemState displaced(const RobotModel& m, const SystemState& s, const VecX& dir,
                             double eps) {
  SystemState out = s;
  detail::integrate_positions(m, out, dir, eps);
  return out;
}

/// Two links hinged by one horizontal joint, base pinned above the hanging
/// link.
inline RobotModel pendulum_model() {
  RobotModel m = build_default_robot();
  m.links.resize(2);
  m.joints.resize(1);
  m.fixed_base = true;
  m.fixed_base_position = Vec3(0.0, 0.0, 1.0);
  m.fixed_base_orientation = Quat(Eigen::AngleAxisd(-kPi / 2.0, Vec3::UnitY()));
  return m;
}

}  // namespace snake::testing
