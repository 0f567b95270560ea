// Scenario scenes and initial states, plus model/scene validation.
#pragma once

#include <cmath>
#include <string>
#include <vector>

#include "snake/contact_types.hpp"
#include "snake/kinematics.hpp"
#include "snake/model.hpp"

namespace snake {

inline const std::vector<std::string>& scenario_names() {
  static const std::vector<std::string> names = {"flat_push", "lift_place", "pick_place",
                                                 "ramp_ascent"};
  return names;
}

inline bool is_scenario(const std::string& name) {
  for (const auto& n : scenario_names())
    if (n == name) return true;
  return false;
}

/// Resting sink of a link end sphere carrying `load` newtons: s(d) k d = load.
inline double resting_depth(double load, const NormalForceParams& p) {
  double lo = 0.0, hi = 0.05;
  for (int i = 0; i < 100; ++i) {
    const double mid = 0.5 * (lo + hi);
    const double x = std::min(mid / p.w, 1.0);
    (x * x * (3 - 2 * x) * p.k * mid < load ? lo : hi) = mid;
  }
  return 0.5 * (lo + hi);
}

// Manipulation layouts are authored in the robot frame (body along +x, head
// forward, box pushed toward +y) and placed in the world by a yaw about the
// origin. ramp_ascent turns the robot so that it pushes up the ramp, which
// rises along world +x.
inline double scenario_yaw(const std::string& name) {
  return name == "ramp_ascent" ? -kPi / 2.0 : 0.0;
}

inline Vec2 scenario_to_world(const std::string& name, const Vec2& local) {
  return Eigen::Rotation2Dd(scenario_yaw(name)) * local;
}

/// Box rest pose on the platform where the pick maneuver docks (robot frame).
struct PickLayout {
  static Vec2 platform() { return Vec2(-0.03, -0.40); }
  static Vec2 box() { return Vec2(-0.036, -0.397); }
  // Socket face toward the lifted head; the box lies on its side so that
  // the socket sits at the head's reach height.
  static Quat box_orientation() {
    return Quat(Eigen::AngleAxisd(deg2rad(-75.2), Vec3::UnitZ()) *
                Eigen::AngleAxisd(kPi / 2.0, Vec3::UnitX()));
  }
};

/// Fixed scene layout per scenario (platform and ramp placement).
inline SceneSpec scenario_scene(const std::string& name, SceneSpec base = {}) {
  if (!is_scenario(name)) throw ConfigError("unknown scenario '" + name + "'");
  base.platform.enabled = false;
  base.ramp.enabled = false;
  if (name == "lift_place") {
    base.platform.enabled = true;
    base.platform.center = Vec2(-0.08, -0.40);
  } else if (name == "pick_place" || name == "ramp_ascent") {
    base.platform.enabled = true;
    base.platform.center = scenario_to_world(name, PickLayout::platform());
  }
  if (name == "ramp_ascent") {
    // The box is set down about 0.45 m ahead of the body; the ramp foot
    // starts just beyond it.
    base.ramp.enabled = true;
    base.ramp.foot_x = 0.62;
    base.ramp.y_min = -1.5;
    base.ramp.y_max = 1.5;
  }
  return base;
}

/// Box pose with its docking socket seated on the head tip.
inline void seat_box_on_head(const RobotModel& m, const BoxSpec& box, SystemState& s) {
  const Layout lay(m);
  const auto k = chain_kinematics(m, s, false);
  const Vec3 tip = head_tip(m, k);
  const Mat3 R = k.links[0].R;  // box x along the head axis
  const Vec3 center = tip - R * box.socket_position;
  s.q.segment<3>(lay.box_q()) = center;
  set_quat(s.q, lay.box_q() + 3, Quat(R));
  s.dock.position = R.transpose() * (center - k.links[0].origin);
  s.dock.rotation = Quat::Identity();
}

/// Straight robot resting on the ground along +x (head forward), plus the
/// scenario's box placement. All velocities are zero.
inline SystemState initial_pose(const RobotModel& m, const SceneSpec& scene,
                                const std::string& name, const NormalForceParams& contact = {}) {
  if (!is_scenario(name)) throw ConfigError("unknown scenario '" + name + "'");
  const Layout lay(m);
  SystemState s = SystemState::zeros(m);
  const double radius = m.links[0].shape.radius;
  const double load = m.links[1].mass * std::abs(scene.gravity.z()) / 2.0;
  const double z = radius - resting_depth(load, contact);
  const double len = m.links[0].length;
  // Mid-body at the origin, or shifted back so the head works ahead of it.
  double head_x = m.total_length / 2.0 - len / 2.0;
  if (name != "flat_push") head_x -= 0.35;
  if (!m.fixed_base) s.q.head<3>() = Vec3(head_x, 0.0, z);
  const double box_half = scene.box.size.z() / 2.0;
  const double box_load = scene.box.mass * std::abs(scene.gravity.z()) / 4.0;
  const double box_z = box_half - resting_depth(box_load, contact);
  if (name == "flat_push") {
    s.q.segment<3>(lay.box_q()) = Vec3(scene.box.position.x(), scene.box.position.y(), box_z);
    set_quat(s.q, lay.box_q() + 3, scene.box.orientation);
    return s;
  }
  if (name == "lift_place") {
    seat_box_on_head(m, scene.box, s);
    s.q[lay.box_q() + 2] = box_z;
    if (!m.fixed_base) s.q[2] = box_z + scene.box.socket_position.z();
    seat_box_on_head(m, scene.box, s);
    s.latched = true;
    return s;
  }
  // Box on the platform top, in the robot frame, then the whole layout is
  // turned into place.
  const Vec2 b = PickLayout::box();
  s.q.segment<3>(lay.box_q()) = Vec3(b.x(), b.y(), scene.platform.height + box_z);
  set_quat(s.q, lay.box_q() + 3, PickLayout::box_orientation());
  const double yaw = scenario_yaw(name);
  if (yaw != 0.0) {
    const Quat r(Eigen::AngleAxisd(yaw, Vec3::UnitZ()));
    if (!m.fixed_base) {
      s.q.head<3>() = r * Vec3(s.q.head<3>());
      set_quat(s.q, 3, r * quat_at(s.q, 3));
    }
    s.q.segment<3>(lay.box_q()) = r * Vec3(s.q.segment<3>(lay.box_q()));
    set_quat(s.q, lay.box_q() + 3, r * quat_at(s.q, lay.box_q() + 3));
  }
  return s;
}

// ---------------------------------------------------------------------------
// Validation

struct ValidationIssue {
  std::string path;
  std::string message;
};

struct ValidationReport {
  std::vector<ValidationIssue> issues;
  bool ok() const { return issues.empty(); }
  void add(std::string path, std::string message) {
    issues.push_back({std::move(path), std::move(message)});
  }
  bool mentions(const std::string& path) const {
    for (const auto& i : issues)
      if (i.path == path) return true;
    return false;
  }
};

inline ValidationReport validate(const RobotModel& m, const SceneSpec& scene,
                                 const ContactParams& contact = {}) {
  ValidationReport r;
  if (m.num_links() != 12) r.add("links", "expected 12 links, got " + std::to_string(m.num_links()));
  if (m.num_joints() != m.num_links() - 1)
    r.add("joints", "expected one joint between each pair of adjacent links");
  for (int i = 0; i < m.num_links(); ++i) {
    const auto& l = m.links[i];
    const std::string p = "links[" + std::to_string(i) + "]";
    if (!(l.mass > 0.0)) r.add(p + ".mass", "must be > 0");
    for (int a = 0; a < 3; ++a)
      if (!(l.inertia_diag[a] > 0.0)) r.add(p + ".inertia_diag", "components must be > 0");
    if (!(l.shape.radius > 0.0)) r.add(p + ".shape.radius", "must be > 0");
    if (!(l.length > 0.0)) r.add(p + ".length", "must be > 0");
  }
  for (int j = 0; j < m.num_joints(); ++j) {
    const auto& js = m.joints[j];
    const std::string p = "joints[" + std::to_string(j) + "]";
    if (std::abs(js.axis.norm() - 1.0) > 1e-9) r.add(p + ".axis", "must be a unit vector");
    if (!(js.position_limit > 0.0)) r.add(p + ".position_limit", "must be > 0");
    if (!(js.torque_limit > 0.0)) r.add(p + ".torque_limit", "must be > 0");
    if (j > 0 && js.kind == m.joints[j - 1].kind)
      r.add(p + ".kind", "joint axes must alternate yaw/pitch");
  }
  if (!(scene.box.mass > 0.0)) r.add("box.mass", "must be > 0");
  if (!(scene.box.size.minCoeff() > 0.0)) r.add("box.size", "edge lengths must be > 0");
  if (scene.platform.enabled && !(scene.platform.height > 0.0))
    r.add("platform.height", "must be > 0");
  const auto& f = contact.friction;
  if (!(contact.normal.k > 0.0)) r.add("contact.k", "must be > 0");
  if (!(contact.normal.b >= 0.0)) r.add("contact.b", "must be >= 0");
  if (!(contact.normal.w > 0.0)) r.add("contact.w", "must be > 0");
  if (!(f.mu_d > 0.0)) r.add("contact.mu_d", "must be > 0");
  if (!(f.mu_s >= f.mu_d)) r.add("contact.mu_s", "must be >= contact.mu_d");
  if (!(f.v_crit > 0.0)) r.add("contact.v_crit", "must be > 0");
  const double th = scene.ramp.angle_deg;
  if (!(th > 0.0 && th < 90.0)) {
    r.add("ramp.angle_deg", "must lie in (0, 90)");
  } else if (std::tan(deg2rad(th)) >= f.mu_s) {
    r.add("ramp.angle_deg", "static infeasibility: tan(angle) = " +
                                std::to_string(std::tan(deg2rad(th))) +
                                " >= mu_s, a resting box would slide");
  }
  if (!(scene.ramp.max_elevation > 0.0)) r.add("ramp.max_elevation", "must be > 0");
  return r;
}

}  // namespace snake
