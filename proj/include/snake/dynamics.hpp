// Equations of motion of the coupled robot + box system and fixed-step
// time integration.
//
//   M(q) u_dot = h(q, u, tau) + sum_i J_i^T f_ext,i
//   h = -(Coriolis/centrifugal) + gravity + B tau
//
// The robot block is assembled from per-link COM Jacobians (composite
// inertia over the chain); the box is an independent 6x6 block. While the
// head is docked, the box coordinates are slaved to the head frame and the
// system is reduced through u = S u_robot.
#pragma once

#include <Eigen/Cholesky>

#include <algorithm>
#include <cmath>
#include <string>

#include "snake/contact_types.hpp"
#include "snake/kinematics.hpp"
#include "snake/model.hpp"

namespace snake {

enum class IntegratorScheme { semi_implicit_euler, rk4 };

inline std::string to_string(IntegratorScheme s) {
  return s == IntegratorScheme::rk4 ? "rk4" : "semi_implicit_euler";
}

struct IntegratorConfig {
  double dt = 1e-4;
  IntegratorScheme scheme = IntegratorScheme::semi_implicit_euler;
  int renormalize_every = 1;
  // Treat the velocity-proportional part of contact forces implicitly
  // (semi-implicit scheme only).
  bool implicit_contact_damping = true;
  // Re-impose the momentum balance of the robot (plus docked box) through
  // the base twist after each semi-implicit step. Removes the O(dt) drift
  // of the explicit velocity-product terms.
  bool momentum_projection = true;
};

/// Throws ConfigError unless 0 < dt <= 1e-3 and the cadence is positive.
inline void check(const IntegratorConfig& cfg) {
  if (!(cfg.dt > 0.0) || cfg.dt > 1e-3)
    throw ConfigError("integrator.dt must lie in (0, 1e-3], got " + std::to_string(cfg.dt));
  if (cfg.renormalize_every < 1) throw ConfigError("integrator.renormalize_every must be >= 1");
}

using Jacobian3 = Eigen::Matrix<double, 3, Eigen::Dynamic>;

/// 3 x n map from generalized velocities to the world velocity of a
/// material point.
struct BodyJacobian {
  BodyId body;
  Vec3 point = Vec3::Zero();
  Jacobian3 J;
};

namespace detail {

/// Linear and angular Jacobians (robot columns only) of world point `x`
/// rigidly attached to `link`.
inline void robot_point_jacobian(const RobotModel& m, const ChainKinematics& k, int link,
                                 const Vec3& x, Jacobian3& Jv, Jacobian3* Jw) {
  const Layout lay(m);
  Jv.setZero(3, lay.robot_nv());
  if (Jw) Jw->setZero(3, lay.robot_nv());
  if (!m.fixed_base) {
    const auto& base = k.links[0];
    Jv.block<3, 3>(0, 0).setIdentity();
    Jv.block<3, 3>(0, 3) = -skew(x - base.origin) * base.R;
    if (Jw) Jw->block<3, 3>(0, 3) = base.R;
  }
  for (int j = 0; j < link; ++j) {
    const int col = lay.joint_v(j);
    const auto& jf = k.joints[j];
    Jv.col(col) = jf.axis.cross(x - jf.position);
    if (Jw) Jw->col(col) = jf.axis;
  }
}

inline void check_finite(const SystemState& s) {
  for (int i = 0; i < s.q.size(); ++i)
    if (!std::isfinite(s.q[i])) throw NumericalError("non-finite q[" + std::to_string(i) + "]", i);
  for (int i = 0; i < s.u.size(); ++i)
    if (!std::isfinite(s.u[i])) throw NumericalError("non-finite u[" + std::to_string(i) + "]", i);
}

}  // namespace detail

/// Map from generalized velocities to world velocity of `point` on `body`.
/// Terrain bodies have an all-zero Jacobian.
inline BodyJacobian point_jacobian(const RobotModel& m, const ChainKinematics& k,
                                   const SystemState& s, BodyId body, const Vec3& point) {
  const Layout lay(m);
  BodyJacobian out;
  out.body = body;
  out.point = point;
  out.J = Jacobian3::Zero(3, lay.nv());
  if (body.kind == BodyKind::link) {
    if (body.index < 0 || body.index >= m.num_links())
      throw std::out_of_range("point_jacobian: unknown link " + std::to_string(body.index));
    Jacobian3 Jv;
    detail::robot_point_jacobian(m, k, body.index, point, Jv, nullptr);
    out.J.leftCols(lay.robot_nv()) = Jv;
  } else if (body.kind == BodyKind::box) {
    const Mat3 R = s.box_orientation(m).toRotationMatrix();
    const Vec3 r = point - s.box_position(m);
    out.J.block<3, 3>(0, lay.box_v()).setIdentity();
    out.J.block<3, 3>(0, lay.box_v() + 3) = -skew(r) * R;
  }
  return out;
}

inline BodyJacobian point_jacobian(const RobotModel& m, const SystemState& s, BodyId body,
                                   const Vec3& point) {
  return point_jacobian(m, chain_kinematics(m, s, false), s, body, point);
}

/// Generalized mass matrix (robot block + box block).
inline MatX mass_matrix(const RobotModel& m, const SceneSpec& scene, const ChainKinematics& k,
                        const SystemState&) {
  const Layout lay(m);
  MatX M = MatX::Zero(lay.nv(), lay.nv());
  Jacobian3 Jv, Jw;
  for (int i = 0; i < m.num_links(); ++i) {
    const auto& f = k.links[i];
    detail::robot_point_jacobian(m, k, i, f.com, Jv, &Jw);
    const Mat3 Iw = f.R * m.links[i].inertia_diag.asDiagonal() * f.R.transpose();
    const int used = m.fixed_base ? i : lay.base_v() + i;  // columns beyond are zero
    if (used == 0) continue;
    auto Mb = M.topLeftCorner(used, used);
    Mb.noalias() += m.links[i].mass * Jv.leftCols(used).transpose() * Jv.leftCols(used);
    Mb.noalias() += Jw.leftCols(used).transpose() * (Iw * Jw.leftCols(used));
  }
  const int b = lay.box_v();
  M.block<3, 3>(b, b) = scene.box.mass * Mat3::Identity();
  M.block<3, 3>(b + 3, b + 3) = scene.box.inertia();
  return M;
}

inline MatX mass_matrix(const RobotModel& m, const SceneSpec& scene, const SystemState& s) {
  for (int i = 0; i < s.q.size(); ++i)
    if (!std::isfinite(s.q[i])) throw NumericalError("mass_matrix: non-finite q", i);
  return mass_matrix(m, scene, chain_kinematics(m, s, false), s);
}

/// Bias vector h(q, u, tau): gravity + velocity-product forces + B tau.
inline VecX bias_forces(const RobotModel& m, const SceneSpec& scene, const ChainKinematics& k,
                        const SystemState& s, const VecX& tau) {
  const Layout lay(m);
  if (tau.size() != m.num_joints())
    throw std::invalid_argument("bias_forces: expected " + std::to_string(m.num_joints()) +
                                " joint torques");
  for (int j = 0; j < m.num_joints(); ++j) {
    if (std::abs(tau[j]) > m.joints[j].torque_limit * (1.0 + 1e-12))
      throw std::domain_error("bias_forces: torque limit exceeded at " + m.joints[j].name);
  }
  VecX h = VecX::Zero(lay.nv());
  Jacobian3 Jv, Jw;
  const Vec3& g = scene.gravity;
  for (int i = 0; i < m.num_links(); ++i) {
    const auto& f = k.links[i];
    detail::robot_point_jacobian(m, k, i, f.com, Jv, &Jw);
    const Mat3 Iw = f.R * m.links[i].inertia_diag.asDiagonal() * f.R.transpose();
    const double mass = m.links[i].mass;
    const Vec3 force = mass * (g - f.a_com_bias);
    const Vec3 Iwomega = Iw * f.omega;
    const Vec3 moment = -(Iw * f.alpha_bias + f.omega.cross(Iwomega));
    h.head(lay.robot_nv()).noalias() += Jv.transpose() * force + Jw.transpose() * moment;
  }
  for (int j = 0; j < m.num_joints(); ++j) h[lay.joint_v(j)] += tau[j];

  const int b = lay.box_v();
  const Vec3 w = s.u.segment<3>(b + 3);
  h.segment<3>(b) = scene.box.mass * g;
  h.segment<3>(b + 3) = -w.cross(scene.box.inertia() * w);
  return h;
}

inline VecX bias_forces(const RobotModel& m, const SceneSpec& scene, const SystemState& s,
                        const VecX& tau) {
  return bias_forces(m, scene, chain_kinematics(m, s, true), s, tau);
}

/// Generalized end-stop torques for joints beyond their position limits.
inline VecX joint_limit_forces(const RobotModel& m, const SystemState& s) {
  const Layout lay(m);
  VecX Q = VecX::Zero(lay.nv());
  for (int j = 0; j < m.num_joints(); ++j) {
    const double lim = m.joints[j].position_limit;
    const double q = s.q[lay.joint_q(j)];
    const double qd = s.u[lay.joint_v(j)];
    double excess = 0.0;
    if (q > lim) excess = q - lim;
    if (q < -lim) excess = q + lim;
    if (excess != 0.0) Q[lay.joint_v(j)] = -m.limit_stiffness * excess - m.limit_damping * qd;
  }
  return Q;
}

/// Velocity map u = S u_free. Identity unless the box is docked, in which
/// case the box velocity follows the head frame.
struct LatchMap {
  MatX S;
  VecX bias_accel;  // S_dot u_free, nonzero only in the box rows
};

inline LatchMap latch_map(const RobotModel& m, const ChainKinematics& k, const SystemState& s) {
  const Layout lay(m);
  LatchMap out;
  if (!s.latched) {
    out.S = MatX::Identity(lay.nv(), lay.nv());
    out.bias_accel = VecX::Zero(lay.nv());
    return out;
  }
  const int nr = lay.robot_nv();
  out.S = MatX::Zero(lay.nv(), nr);
  out.S.topRows(nr).setIdentity();
  out.bias_accel = VecX::Zero(lay.nv());
  if (m.fixed_base) return out;
  const auto& head = k.links[0];
  const Mat3 RB = s.box_orientation(m).toRotationMatrix();
  const Vec3 r = s.box_position(m) - head.origin;
  const int b = lay.box_v();
  out.S.block<3, 3>(b, 0).setIdentity();
  out.S.block<3, 3>(b, 3) = -skew(r) * head.R;
  out.S.block<3, 3>(b + 3, 3) = RB.transpose() * head.R;
  out.bias_accel.segment<3>(b) = head.omega.cross(head.omega.cross(r));
  return out;
}

/// Everything needed to write the equations of motion at one state.
struct DynamicsTerms {
  MatX M;
  VecX h;
  MatX B;
  VecX tau;
  LatchMap latch;
  MatX M_free;  // S^T M S
  VecX h_free;  // S^T (h - M S_dot u)
};

inline DynamicsTerms dynamics_terms(const RobotModel& m, const SceneSpec& scene,
                                    const ChainKinematics& k, const SystemState& s,
                                    const VecX& tau) {
  const Layout lay(m);
  DynamicsTerms t;
  t.M = mass_matrix(m, scene, k, s);
  t.h = bias_forces(m, scene, k, s, tau);
  t.tau = tau;
  t.B = MatX::Zero(lay.nv(), m.num_joints());
  for (int j = 0; j < m.num_joints(); ++j) t.B(lay.joint_v(j), j) = 1.0;
  t.latch = latch_map(m, k, s);
  if (s.latched) {
    t.M_free = t.latch.S.transpose() * t.M * t.latch.S;
    t.h_free = t.latch.S.transpose() * (t.h - t.M * t.latch.bias_accel);
  } else {
    t.M_free = t.M;
    t.h_free = t.h;
  }
  return t;
}

inline DynamicsTerms dynamics_terms(const RobotModel& m, const SceneSpec& scene,
                                    const SystemState& s, const VecX& tau) {
  return dynamics_terms(m, scene, chain_kinematics(m, s, true), s, tau);
}

inline double kinetic_energy(const RobotModel& m, const SceneSpec& scene, const SystemState& s) {
  return 0.5 * s.u.dot(mass_matrix(m, scene, s) * s.u);
}

inline double potential_energy(const RobotModel& m, const SceneSpec& scene,
                               const SystemState& s) {
  const auto k = chain_kinematics(m, s, false);
  double V = 0.0;
  for (int i = 0; i < m.num_links(); ++i) V -= m.links[i].mass * scene.gravity.dot(k.links[i].com);
  V -= scene.box.mass * scene.gravity.dot(s.box_position(m));
  return V;
}

/// Linear and angular momentum (about the world origin) of robot + box.
inline void momentum(const RobotModel& m, const SceneSpec& scene, const SystemState& s,
                     Vec3& linear, Vec3& angular) {
  const auto k = chain_kinematics(m, s, true);
  linear.setZero();
  angular.setZero();
  for (int i = 0; i < m.num_links(); ++i) {
    const auto& f = k.links[i];
    const Mat3 Iw = f.R * m.links[i].inertia_diag.asDiagonal() * f.R.transpose();
    const Vec3 p = m.links[i].mass * f.v_com;
    linear += p;
    angular += f.com.cross(p) + Iw * f.omega;
  }
  const Layout lay(m);
  const Mat3 RB = s.box_orientation(m).toRotationMatrix();
  const Vec3 pb = scene.box.mass * s.u.segment<3>(lay.box_v());
  linear += pb;
  angular += s.box_position(m).cross(pb) +
             RB * (scene.box.inertia() * s.u.segment<3>(lay.box_v() + 3));
}

namespace detail {

inline Quat exp_body(const Quat& q, const Vec3& w, double dt) {
  const double angle = w.norm() * dt;
  if (std::abs(angle) < 1e-300) return q;
  Quat r = q * Quat(Eigen::AngleAxisd(angle, w.normalized()));
  return r;
}

/// q <- q (+) dt * u on the configuration manifold.
inline void integrate_positions(const RobotModel& m, SystemState& s, const VecX& u, double dt) {
  const Layout lay(m);
  if (!m.fixed_base) {
    s.q.head<3>() += dt * u.head<3>();
    set_quat(s.q, 3, exp_body(quat_at(s.q, 3), u.segment<3>(3), dt));
  }
  for (int j = 0; j < m.num_joints(); ++j) s.q[lay.joint_q(j)] += dt * u[lay.joint_v(j)];
  s.q.segment<3>(lay.box_q()) += dt * u.segment<3>(lay.box_v());
  set_quat(s.q, lay.box_q() + 3,
           exp_body(quat_at(s.q, lay.box_q() + 3), u.segment<3>(lay.box_v() + 3), dt));
}

/// Re-slaves box pose and velocity to the head while docked.
inline void apply_latch(const RobotModel& m, SystemState& s) {
  if (!s.latched) return;
  const Layout lay(m);
  const auto k = chain_kinematics(m, s, true);
  Vec3 p;
  Quat r;
  docked_box_pose(k, s.dock, p, r);
  s.q.segment<3>(lay.box_q()) = p;
  set_quat(s.q, lay.box_q() + 3, r);
  const auto map = latch_map(m, k, s);
  const VecX ur = s.u.head(lay.robot_nv());
  s.u = map.S * ur;
}

inline VecX solve_spd(const MatX& A, const VecX& b) {
  Eigen::LLT<MatX> llt(A);
  if (llt.info() != Eigen::Success) throw NumericalError("mass matrix not positive definite", -1);
  return llt.solve(b);
}

/// Generalized accelerations with a frozen external generalized force.
inline VecX accelerations(const RobotModel& m, const SceneSpec& scene, const SystemState& s,
                          const VecX& tau, const VecX& Q_ext) {
  const auto k = chain_kinematics(m, s, true);
  const auto t = dynamics_terms(m, scene, k, s, tau);
  const VecX rhs = Q_ext + joint_limit_forces(m, s);
  if (!s.latched) return solve_spd(t.M, t.h + rhs);
  const VecX a_free = solve_spd(t.M_free, t.h_free + t.latch.S.transpose() * rhs);
  return t.latch.S * a_free + t.latch.bias_accel;
}

/// Time derivative of q for velocities u (quaternions as 4-vectors).
inline VecX position_rates(const RobotModel& m, const SystemState& s) {
  const Layout lay(m);
  VecX qd = VecX::Zero(lay.nq());
  auto quat_rate = [&](int qi, const Vec3& w) {
    const Quat q = quat_at(s.q, qi);
    const Quat dq = q * Quat(0.0, w.x(), w.y(), w.z());
    qd.segment<4>(qi) = 0.5 * Eigen::Vector4d(dq.w(), dq.x(), dq.y(), dq.z());
  };
  if (!m.fixed_base) {
    qd.head<3>() = s.u.head<3>();
    quat_rate(3, s.u.segment<3>(3));
  }
  for (int j = 0; j < m.num_joints(); ++j) qd[lay.joint_q(j)] = s.u[lay.joint_v(j)];
  qd.segment<3>(lay.box_q()) = s.u.segment<3>(lay.box_v());
  quat_rate(lay.box_q() + 3, s.u.segment<3>(lay.box_v() + 3));
  return qd;
}


/// Linear momentum and angular momentum about the world origin of the bodies
/// carried by the base (all links, plus the box while docked).
inline Eigen::Matrix<double, 6, 1> carried_momentum(const RobotModel& m, const SceneSpec& scene,
                                                    const ChainKinematics& k,
                                                    const SystemState& s) {
  Eigen::Matrix<double, 6, 1> out = Eigen::Matrix<double, 6, 1>::Zero();
  for (int i = 0; i < m.num_links(); ++i) {
    const auto& f = k.links[i];
    const Mat3 Iw = f.R * m.links[i].inertia_diag.asDiagonal() * f.R.transpose();
    const Vec3 p = m.links[i].mass * f.v_com;
    out.head<3>() += p;
    out.tail<3>() += f.com.cross(p) + Iw * f.omega;
  }
  if (s.latched) {
    const Layout lay(m);
    const Mat3 RB = s.box_orientation(m).toRotationMatrix();
    const Vec3 c = s.box_position(m);
    const Vec3 p = scene.box.mass * s.u.segment<3>(lay.box_v());
    out.head<3>() += p;
    out.tail<3>() += c.cross(p) + RB * (scene.box.inertia() * s.u.segment<3>(lay.box_v() + 3));
  }
  return out;
}

/// d(carried momentum)/d(base twist), base twist = (v world, omega body).
inline Eigen::Matrix<double, 6, 6> base_momentum_map(const RobotModel& m, const SceneSpec& scene,
                                                     const ChainKinematics& k,
                                                     const SystemState& s) {
  const Vec3 o = k.links[0].origin;
  double mass = 0.0;
  Vec3 first = Vec3::Zero();
  Mat3 rot = Mat3::Zero();
  auto add = [&](double mi, const Vec3& c, const Mat3& Iw) {
    mass += mi;
    first += mi * c;
    rot += Iw - mi * skew(c) * skew(c - o);
  };
  for (int i = 0; i < m.num_links(); ++i) {
    const auto& f = k.links[i];
    add(m.links[i].mass, f.com, f.R * m.links[i].inertia_diag.asDiagonal() * f.R.transpose());
  }
  if (s.latched) {
    const Mat3 RB = s.box_orientation(m).toRotationMatrix();
    add(scene.box.mass, s.box_position(m), RB * scene.box.inertia() * RB.transpose());
  }
  const Vec3 cbar = first / mass;
  const Mat3& R = k.links[0].R;
  Eigen::Matrix<double, 6, 6> A;
  A.block<3, 3>(0, 0) = mass * Mat3::Identity();
  A.block<3, 3>(0, 3) = -mass * skew(cbar - o) * R;
  A.block<3, 3>(3, 0) = mass * skew(cbar);
  A.block<3, 3>(3, 3) = rot * R;
  return A;
}

/// External impulse over one step on the carried bodies: gravity plus the
/// contact forces actually applied, with the implicit damping correction
/// D W du folded in.
inline Eigen::Matrix<double, 6, 1> carried_impulse(const RobotModel& m, const SceneSpec& scene,
                                                   const ChainKinematics& k, const SystemState& s,
                                                   const ContactSet& contacts, const VecX& du,
                                                   bool implicit, double dt) {
  Eigen::Matrix<double, 6, 1> J = Eigen::Matrix<double, 6, 1>::Zero();
  auto apply = [&](const Vec3& F, const Vec3& at) {
    J.head<3>() += F * dt;
    J.tail<3>() += at.cross(F) * dt;
  };
  for (int i = 0; i < m.num_links(); ++i) apply(m.links[i].mass * scene.gravity, k.links[i].com);
  if (s.latched) apply(scene.box.mass * scene.gravity, s.box_position(m));
  auto carried = [&](BodyId b) { return b.is_robot() || (b.is_box() && s.latched); };
  for (const auto& c : contacts.points) {
    const bool cb = carried(c.b), ca = carried(c.a);
    if (cb == ca) continue;  // internal or untouched
    Vec3 f = c.contact_force();
    if (implicit) f -= c.damping * (c.W * du);
    const Vec3 F = f.x() * c.n + f.y() * c.t1 + f.z() * c.t2;
    apply(cb ? F : Vec3(-F), c.p);
  }
  return J;
}

}  // namespace detail

/// Advances the state by one fixed step. Contact forces in `contacts` must
/// have been resolved at `s`; they act as frozen external forces (plus their
/// implicit damping in the semi-implicit scheme).
inline SystemState step(const RobotModel& m, const SceneSpec& scene, const SystemState& s,
                        const VecX& tau, const ContactSet& contacts, const IntegratorConfig& cfg) {
  const Layout lay(m);
  const double dt = cfg.dt;
  SystemState next = s;
  const VecX Q_ext = contacts.generalized_force(lay.nv());
  Eigen::Matrix<double, 6, 1> target;
  bool project = false;

  if (cfg.scheme == IntegratorScheme::semi_implicit_euler) {
    const auto k = chain_kinematics(m, s, true);
    const auto t = dynamics_terms(m, scene, k, s, tau);
    const VecX rhs = t.h + Q_ext + joint_limit_forces(m, s);
    MatX A = t.M;
    if (cfg.implicit_contact_damping) {
      for (const auto& c : contacts.points) {
        if (c.damping.isZero(0.0)) continue;
        A.noalias() += dt * c.W.transpose() * (c.damping * c.W);
      }
    }
    if (!s.latched) {
      next.u = s.u + dt * detail::solve_spd(A, rhs);
    } else {
      const MatX& S = t.latch.S;
      const MatX A_free = S.transpose() * A * S;
      const VecX rhs_free = S.transpose() * (rhs - t.M * t.latch.bias_accel);
      const VecX u_free = s.u.head(lay.robot_nv()) + dt * detail::solve_spd(A_free, rhs_free);
      next.u = S * u_free;
    }
    detail::integrate_positions(m, next, next.u, dt);
    if (cfg.momentum_projection && !m.fixed_base) {
      target = detail::carried_momentum(m, scene, k, s) +
               detail::carried_impulse(m, scene, k, s, contacts, next.u - s.u,
                                       cfg.implicit_contact_damping, dt);
      project = true;
    }
  } else {
    struct Deriv {
      VecX qd, ud;
    };
    auto eval = [&](const SystemState& x) {
      return Deriv{detail::position_rates(m, x), detail::accelerations(m, scene, x, tau, Q_ext)};
    };
    auto offset = [&](const Deriv& d, double h) {
      SystemState x = s;
      x.q += h * d.qd;
      x.u += h * d.ud;
      normalize_quaternions(m, x);
      return x;
    };
    const Deriv k1 = eval(s);
    const Deriv k2 = eval(offset(k1, dt / 2));
    const Deriv k3 = eval(offset(k2, dt / 2));
    const Deriv k4 = eval(offset(k3, dt));
    next.q = s.q + dt / 6.0 * (k1.qd + 2 * k2.qd + 2 * k3.qd + k4.qd);
    next.u = s.u + dt / 6.0 * (k1.ud + 2 * k2.ud + 2 * k3.ud + k4.ud);
  }

  next.t = s.t + dt;
  const long step_index = std::lround(next.t / dt);
  if (cfg.scheme == IntegratorScheme::rk4 || step_index % cfg.renormalize_every == 0)
    normalize_quaternions(m, next);
  detail::apply_latch(m, next);
  if (project) {
    const auto k1 = chain_kinematics(m, next, true);
    const Eigen::Matrix<double, 6, 1> err = target - detail::carried_momentum(m, scene, k1, next);
    next.u.head<6>() += detail::base_momentum_map(m, scene, k1, next).partialPivLu().solve(err);
    detail::apply_latch(m, next);
  }
  detail::check_finite(next);
  return next;
}

/// Position-servo torques, clamped to the actuator limit. References are
/// clamped to the joint position limits first.
inline VecX joint_pd_torques(const RobotModel& m, const SystemState& s, const VecX& q_ref,
                             const VecX& qd_ref) {
  const Layout lay(m);
  VecX tau(m.num_joints());
  for (int j = 0; j < m.num_joints(); ++j) {
    const auto& js = m.joints[j];
    const double ref = std::clamp(q_ref[j], -js.position_limit, js.position_limit);
    const double raw = js.internal_stiffness * (ref - s.q[lay.joint_q(j)]) +
                       js.internal_damping * (qd_ref[j] - s.u[lay.joint_v(j)]);
    tau[j] = std::clamp(raw, -js.torque_limit, js.torque_limit);
  }
  return tau;
}

}  // namespace snake
