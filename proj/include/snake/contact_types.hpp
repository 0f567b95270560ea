// Contact data shared by the contact resolver and the integrator.
#pragma once

#include <compare>
#include <string>
#include <vector>

#include "snake/model.hpp"

namespace snake {

struct NormalForceParams {
  double k = 1e4;   // N/m
  double b = 1e3;   // N*s/m
  double w = 1e-3;  // transition width, m
};

struct FrictionParams {
  double mu_s = 0.7;
  double mu_d = 0.5;
  double v_crit = 1e-3;  // m/s
};

struct ContactParams {
  NormalForceParams normal;
  FrictionParams friction;
  bool self_contact = false;
};

enum class BodyKind { ground = 0, platform = 1, ramp = 2, link = 3, box = 4 };

struct BodyId {
  BodyKind kind = BodyKind::ground;
  int index = 0;

  bool is_terrain() const {
    return kind == BodyKind::ground || kind == BodyKind::platform || kind == BodyKind::ramp;
  }
  bool is_robot() const { return kind == BodyKind::link; }
  bool is_box() const { return kind == BodyKind::box; }

  auto operator<=>(const BodyId&) const = default;

  static BodyId ground() { return {BodyKind::ground, 0}; }
  static BodyId platform() { return {BodyKind::platform, 0}; }
  static BodyId ramp() { return {BodyKind::ramp, 0}; }
  static BodyId box() { return {BodyKind::box, 0}; }
  static BodyId link(int i) { return {BodyKind::link, i}; }
};

inline std::string body_name(const RobotModel& m, BodyId b) {
  switch (b.kind) {
    case BodyKind::ground: return "ground";
    case BodyKind::platform: return "platform";
    case BodyKind::ramp: return "ramp";
    case BodyKind::box: return "box";
    case BodyKind::link:
      return (b.index >= 0 && b.index < m.num_links()) ? m.links[b.index].name
                                                         : "link" + std::to_string(b.index);
  }
  return "?";
}

/// One contact between body A (base) and body B (follower). The normal points
/// out of A, so a positive normal force pushes B away from A.
struct ContactPoint {
  BodyId a;
  BodyId b;
  int feature = 0;

  Vec3 p = Vec3::Zero();
  Vec3 n = Vec3::UnitZ();
  Vec3 t1 = Vec3::UnitX();
  Vec3 t2 = Vec3::UnitY();
  double d = 0.0;       // penetration depth (negative when separated)
  double d_rate = 0.0;  // time derivative of d
  Vec2 v_t = Vec2::Zero();

  // Rows (normal, t1, t2) mapping generalized velocities to relative
  // velocity of B with respect to A at p.
  MatX W;

  double f_n = 0.0;
  Vec2 f_t = Vec2::Zero();
  // d(-f)/d(relative velocity) in contact coordinates, used by the linearly
  // implicit integrator. Always symmetric positive semidefinite.
  Mat3 damping = Mat3::Zero();

  double gap() const { return -d; }
  /// Force applied to B (A receives the negative), world frame.
  Vec3 world_force() const { return f_n * n + f_t.x() * t1 + f_t.y() * t2; }
  Vec3 contact_force() const { return Vec3(f_n, f_t.x(), f_t.y()); }
};

struct ContactSet {
  std::vector<ContactPoint> points;

  bool empty() const { return points.empty(); }
  int size() const { return static_cast<int>(points.size()); }

  /// Stacked separations (one per point).
  VecX gaps() const {
    VecX g(size());
    for (int i = 0; i < size(); ++i) g[i] = points[i].gap();
    return g;
  }

  /// Stacked 3m x n Jacobian.
  MatX jacobian(int nv) const {
    MatX J(3 * size(), nv);
    for (int i = 0; i < size(); ++i) J.middleRows<3>(3 * i) = points[i].W;
    return J;
  }

  /// Stacked contact-frame forces (f_N, f_T1, f_T2) per point.
  VecX forces() const {
    VecX f(3 * size());
    for (int i = 0; i < size(); ++i) f.segment<3>(3 * i) = points[i].contact_force();
    return f;
  }

  /// Generalized force sum_i W_i^T f_i.
  VecX generalized_force(int nv) const {
    VecX Q = VecX::Zero(nv);
    for (const auto& c : points) Q.noalias() += c.W.transpose() * c.contact_force();
    return Q;
  }
};

}  // namespace snake
