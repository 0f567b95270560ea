// Closed-loop forward simulation of a reference timeline: sample the
// references, compute PD torques, detect and resolve contacts, integrate,
// and record a decimated trajectory with contact logs and metric series.
#pragma once

#include <cmath>
#include <string>
#include <vector>

#include "snake/contact.hpp"
#include "snake/contact_qp.hpp"
#include "snake/dynamics.hpp"
#include "snake/gait.hpp"
#include "snake/kinematics.hpp"
#include "snake/metrics.hpp"
#include "snake/model.hpp"

namespace snake {

enum class ForceMode { penalty, qp };

inline std::string to_string(ForceMode m) { return m == ForceMode::qp ? "qp" : "penalty"; }

struct RolloutConfig {
  IntegratorConfig integrator;
  ContactParams contact;
  ForceMode force_mode = ForceMode::penalty;
  double sample_hz = 100.0;
  bool full_rate = false;
  bool record_contacts = true;
  // Evaluate 1/2 f^T G f + f^T c at every recorded sample.
  bool contact_objective = true;
  double objective_hz = 10.0;  // cadence of the objective evaluation
  ContactQpOptions qp;
  // Minimum of the objective for the least-action residual.
  ContactQpOptions objective_qp{1e-4, 100, false};
  // Normal drift correction time constant for the qp force mode.
  double qp_stabilization = 0.01;
};

enum class ContactCategory { robot_ground, box_ground, robot_box, robot_self };

inline std::string to_string(ContactCategory c) {
  switch (c) {
    case ContactCategory::robot_ground: return "robot_ground";
    case ContactCategory::box_ground: return "box_ground";
    case ContactCategory::robot_box: return "robot_box";
    case ContactCategory::robot_self: return "robot_self";
  }
  return "?";
}

inline ContactCategory categorize(const ContactPoint& c) {
  const bool box = c.a.is_box() || c.b.is_box();
  const bool robot = c.a.is_robot() || c.b.is_robot();
  if (box && robot) return ContactCategory::robot_box;
  if (box) return ContactCategory::box_ground;
  if (c.a.is_robot() && c.b.is_robot()) return ContactCategory::robot_self;
  return ContactCategory::robot_ground;
}

struct ContactRecord {
  int sample = 0;
  ContactCategory category = ContactCategory::robot_ground;
  BodyId a, b;
  int feature = 0;
  Vec3 p = Vec3::Zero();
  Vec3 n = Vec3::UnitZ();
  double depth = 0.0;
  double depth_rate = 0.0;
  double f_n = 0.0;
  Vec2 f_t = Vec2::Zero();
  Vec3 world_force = Vec3::Zero();  // on B
  double slip = 0.0;
};

struct TrajectorySample {
  double t = 0.0;
  SystemState state;
  VecX tau;
  JointVec q_ref = JointVec::Zero();
  int segment = -1;
  double power_abs = 0.0;
  double power_net = 0.0;
  double box_power = 0.0;
  // Running totals at this instant.
  double w_loc_abs = 0.0;
  double w_loc_net = 0.0;
  double w_box = 0.0;
  double box_path = 0.0;
  double contact_objective = 0.0;
  // Objective minus its minimum over the friction cones at this state (>= 0).
  double contact_residual = 0.0;
  double orth_gap = 0.0;   // sum |f_N * max(g - w, 0)|
  double orth_rate = 0.0;  // sum |f_N * g_dot|
  int contacts = 0;
};

struct RolloutEvent {
  double t = 0.0;
  std::string what;
};

struct Trajectory {
  std::vector<TrajectorySample> samples;
  std::vector<ContactRecord> contacts;
  std::vector<RolloutEvent> events;
  double dt = 0.0;
  double sample_dt = 0.0;
  bool truncated = false;
  std::string diagnostic;
  // Full-rate totals.
  double w_loc_abs = 0.0;
  double w_loc_net = 0.0;
  double w_box = 0.0;
  double box_path = 0.0;
  double peak_power = 0.0;
  double torque_effort = 0.0;   // integral |tau|^2 dt
  double contact_effort = 0.0;  // integral of the contact objective (objective cadence)
  double contact_residual_effort = 0.0;  // integral of the least-action residual
  double max_abs_q = 0.0;
  double max_abs_tau = 0.0;
  double max_apex = -1e300;  // highest box COM z seen
  int steps = 0;

  const SystemState& final_state() const { return samples.back().state; }
  double duration() const { return samples.empty() ? 0.0 : samples.back().t; }
};

struct RolloutSetup {
  RobotModel model;
  SceneSpec scene;
  SystemState initial;
  GaitTimeline timeline;
  RolloutConfig config;
};

inline void check(const RolloutConfig& c) {
  check(c.integrator);
  if (!(c.sample_hz > 0.0)) throw ConfigError("output.sample_hz must be > 0");
  if (!c.full_rate) {
    const double stride = 1.0 / (c.sample_hz * c.integrator.dt);
    if (stride < 1.0 - 1e-9 || std::abs(stride - std::round(stride)) > 1e-6)
      throw ConfigError("output.sample_hz must divide the simulation rate");
  }
  if (c.contact_objective) {
    const double every = c.sample_hz / c.objective_hz;
    if (!(c.objective_hz > 0.0) || every < 1.0 - 1e-9 || std::abs(every - std::round(every)) > 1e-6)
      throw ConfigError("output.objective_hz must divide output.sample_hz");
  }
  if (c.qp.max_sweeps < 1) throw ConfigError("planner.qp_max_sweeps must be >= 1");
  if (!(c.qp.tol > 0.0)) throw ConfigError("planner.qp_tol must be > 0");
}

/// True when the head tip sits on the box socket and the head axis lines up
/// with the box x axis.
inline bool dock_aligned(const RobotModel& m, const SceneSpec& scene, const SystemState& s) {
  const auto k = chain_kinematics(m, s, false);
  const Mat3 Rb = s.box_orientation(m).toRotationMatrix();
  const Vec3 socket = s.box_position(m) + Rb * scene.box.socket_position;
  if ((head_tip(m, k) - socket).norm() > kLatchPositionTol) return false;
  const double c = std::clamp(k.links[0].R.col(0).dot(Rb.col(0)), -1.0, 1.0);
  return std::acos(c) <= kLatchAngleTol;
}

/// Welds the box to the head at its current relative pose.
inline void engage_latch(const RobotModel& m, SystemState& s) {
  const auto k = chain_kinematics(m, s, false);
  const Mat3& R = k.links[0].R;
  s.dock.position = R.transpose() * (s.box_position(m) - k.links[0].origin);
  s.dock.rotation = Quat(R.transpose()) * s.box_orientation(m);
  s.dock.rotation.normalize();
  s.latched = true;
  detail::apply_latch(m, s);
}

namespace detail {

/// Replaces penalty forces by the QP solution of a velocity-level problem:
/// the post-step contact velocities (plus normal drift correction) enter
/// as the affine term.
inline void qp_forces(const RobotModel& m, const SceneSpec& scene, const SystemState& s,
                      const VecX& tau, ContactSet& set, const RolloutConfig& cfg) {
  for (auto& c : set.points) {
    c.f_n = 0.0;
    c.f_t.setZero();
    c.damping.setZero();
  }
  if (set.empty()) return;
  const double dt = cfg.integrator.dt;
  auto sys = delassus(m, scene, s, set, tau);
  ContactQpProblem p;
  p.G = std::move(sys.G);
  p.c = std::move(sys.c);
  for (int i = 0; i < set.size(); ++i) {
    const auto& c = set.points[i];
    Vec3 v = c.W * s.u;
    v.x() -= c.d / cfg.qp_stabilization;
    p.c.segment<3>(3 * i) += v / dt;
    p.mu.push_back(cfg.contact.friction.mu_s);
  }
  ContactQpOptions opt = cfg.qp;
  opt.check_psd = false;
  const auto r = solve_contact_qp(p, opt);
  for (int i = 0; i < set.size(); ++i) {
    set.points[i].f_n = r.f[3 * i];
    set.points[i].f_t = Vec2(r.f[3 * i + 1], r.f[3 * i + 2]);
  }
}

/// Contact objective of the applied forces and its least-action residual
/// (objective minus the cone-constrained minimum at the same state).
inline void contact_objective(const RobotModel& m, const SceneSpec& scene, const SystemState& s,
                              const VecX& tau, const ContactSet& set, const RolloutConfig& cfg,
                              double& value, double& residual) {
  value = residual = 0.0;
  if (set.empty()) return;
  auto sys = delassus(m, scene, s, set, tau);
  VecX f(3 * set.size());
  for (int i = 0; i < set.size(); ++i) f.segment<3>(3 * i) = set.points[i].contact_force();
  value = qp_cost(sys.G, sys.c, f);
  ContactQpProblem p;
  p.G = std::move(sys.G);
  p.c = std::move(sys.c);
  p.mu.assign(set.size(), cfg.contact.friction.mu_s);
  const auto r = solve_contact_qp(p, cfg.objective_qp, &f);
  residual = std::max(0.0, value - r.cost);
}

}  // namespace detail

/// Runs the timeline to its end (or `duration` if given and shorter).
inline Trajectory rollout(const RolloutSetup& setup, double duration = -1.0) {
  const auto& m = setup.model;
  const auto& scene = setup.scene;
  const auto& cfg = setup.config;
  check(cfg);
  check(setup.timeline);
  const double dt = cfg.integrator.dt;
  const double T = duration < 0.0 ? setup.timeline.duration() : duration;
  if (T > setup.timeline.duration() + 1e-9)
    throw ConfigError("duration exceeds the reference timeline");
  const long steps = std::lround(T / dt);
  const long stride = cfg.full_rate ? 1 : std::lround(1.0 / (cfg.sample_hz * dt));
  const long objective_stride = std::max(1L, std::lround(1.0 / (cfg.objective_hz * dt)));
  const auto starts = segment_starts(setup.timeline);

  Trajectory out;
  out.dt = dt;
  out.sample_dt = stride * dt;
  SystemState s = setup.initial;
  s.t = 0.0;
  int last_segment = -1;
  double prev_abs = 0.0, prev_net = 0.0, prev_box = 0.0;
  Vec3 prev_box_pos = s.box_position(m);

  for (long i = 0; i <= steps; ++i) {
    const double t = i * dt;
    s.t = t;
    const auto ref = sample(setup.timeline, std::min(t, setup.timeline.duration()), &starts);
    if (ref.segment != last_segment) {
      if (ref.latch == LatchCommand::release || ref.latch == LatchCommand::shake) {
        if (s.latched) out.events.push_back({t, "latch released"});
        s.latched = false;
      }
      last_segment = ref.segment;
    }
    if (ref.latch == LatchCommand::engage && !s.latched && dock_aligned(m, scene, s)) {
      engage_latch(m, s);
      out.events.push_back({t, "latch engaged"});
    }
    const VecX tau = joint_pd_torques(m, s, ref.q_ref, ref.qd_ref);
    const auto k = chain_kinematics(m, s, true);
    ContactSet set = detect_contacts(m, scene, k, s, cfg.contact);
    if (cfg.force_mode == ForceMode::penalty) {
      set = resolve_forces(std::move(set), cfg.contact);
    } else {
      detail::qp_forces(m, scene, s, tau, set, cfg);
    }

    const double p_abs = instantaneous_power(m, s, tau);
    const double p_net = net_power(m, s, tau);
    const double p_box = box_contact_power(m, s, set);
    if (i > 0) {
      out.w_loc_abs += 0.5 * dt * (p_abs + prev_abs);
      out.w_loc_net += 0.5 * dt * (p_net + prev_net);
      out.w_box += 0.5 * dt * (p_box + prev_box);
      out.torque_effort += dt * tau.squaredNorm();
      const Vec3 bp = s.box_position(m);
      out.box_path += (bp - prev_box_pos).norm();
      prev_box_pos = bp;
    }
    prev_abs = p_abs;
    prev_net = p_net;
    prev_box = p_box;
    out.peak_power = std::max(out.peak_power, p_abs);
    out.max_abs_q = std::max(out.max_abs_q, s.joint_angles(m).cwiseAbs().maxCoeff());
    out.max_abs_tau = std::max(out.max_abs_tau, tau.cwiseAbs().maxCoeff());
    out.max_apex = std::max(out.max_apex, s.box_position(m).z());

    if (i % stride == 0) {
      TrajectorySample smp;
      smp.t = t;
      smp.state = s;
      smp.tau = tau;
      smp.q_ref = ref.q_ref;
      smp.segment = ref.segment;
      smp.power_abs = p_abs;
      smp.power_net = p_net;
      smp.box_power = p_box;
      smp.w_loc_abs = out.w_loc_abs;
      smp.w_loc_net = out.w_loc_net;
      smp.w_box = out.w_box;
      smp.box_path = out.box_path;
      smp.contacts = set.size();
      if (cfg.contact_objective && i % objective_stride == 0) {
        detail::contact_objective(m, scene, s, tau, set, cfg, smp.contact_objective,
                                  smp.contact_residual);
        // Left Riemann sum at the objective cadence.
        if (i < steps) {
          out.contact_effort += objective_stride * dt * smp.contact_objective;
          out.contact_residual_effort += objective_stride * dt * smp.contact_residual;
        }
      }
      const double w = cfg.contact.normal.w;
      for (const auto& c : set.points) {
        smp.orth_gap += std::abs(c.f_n * std::max(c.gap() - w, 0.0));
        smp.orth_rate += std::abs(c.f_n * c.d_rate);
      }
      if (cfg.record_contacts) {
        const int index = static_cast<int>(out.samples.size());
        for (const auto& c : set.points) {
          ContactRecord r;
          r.sample = index;
          r.category = categorize(c);
          r.a = c.a;
          r.b = c.b;
          r.feature = c.feature;
          r.p = c.p;
          r.n = c.n;
          r.depth = c.d;
          r.depth_rate = c.d_rate;
          r.f_n = c.f_n;
          r.f_t = c.f_t;
          r.world_force = c.world_force();
          r.slip = c.v_t.norm();
          out.contacts.push_back(r);
        }
      }
      out.samples.push_back(std::move(smp));
    }
    if (i == steps) break;
    try {
      IntegratorConfig ic = cfg.integrator;
      if (cfg.force_mode == ForceMode::qp) ic.implicit_contact_damping = false;
      s = step(m, scene, s, tau, set, ic);
      ++out.steps;
    } catch (const NumericalError& e) {
      out.truncated = true;
      out.diagnostic = std::string(e.what()) + " at t = " + std::to_string(t + dt);
      break;
    }
  }
  return out;
}

}  // namespace snake
