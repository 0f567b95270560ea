// Contact detection between primitive shapes, the smooth spring-damper
// normal law, the smooth stick-slip friction law, and the Delassus system.
#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <optional>
#include <stdexcept>

#include "snake/contact_types.hpp"
#include "snake/dynamics.hpp"
#include "snake/kinematics.hpp"
#include "snake/model.hpp"

namespace snake {

// ---------------------------------------------------------------------------
// Force laws

/// Cubic smoothstep of d over the transition width: 0 below 0, 1 above w.
inline double smoothing(double d, double w) {
  if (d <= 0.0) return 0.0;
  if (d >= w) return 1.0;
  const double x = d / w;
  return x * x * (3.0 - 2.0 * x);
}

/// Spring-damper normal force, never adhesive.
inline double normal_force(double d, double d_rate, const NormalForceParams& p) {
  const double f = smoothing(d, p.w) * (p.k * d + p.b * d_rate);
  return std::max(0.0, f);
}

/// Effective friction coefficient versus tangential slip speed. Rises from 0
/// to mu_s at v_crit (quartic ease-out), then relaxes toward mu_d
/// (Gaussian tail). Continuous with a continuous first derivative.
inline double effective_friction_coefficient(double v, const FrictionParams& p) {
  if (v < 0.0) throw std::domain_error("effective_friction_coefficient: negative speed");
  const double x = v / p.v_crit;
  if (x <= 1.0) {
    const double r = 1.0 - x;
    return p.mu_s * (1.0 - r * r * r * r);
  }
  const double e = x - 1.0;
  return p.mu_d + (p.mu_s - p.mu_d) * std::exp(-e * e);
}

/// d(mu)/dv of effective_friction_coefficient.
inline double effective_friction_slope(double v, const FrictionParams& p) {
  const double x = v / p.v_crit;
  if (x <= 1.0) {
    const double r = 1.0 - x;
    return 4.0 * p.mu_s * r * r * r / p.v_crit;
  }
  const double e = x - 1.0;
  return -2.0 * e * (p.mu_s - p.mu_d) * std::exp(-e * e) / p.v_crit;
}

/// Tangential force opposing the slip velocity v_t, magnitude mu(|v_t|) f_N.
inline Vec2 friction_force(double f_n, const Vec2& v_t, const FrictionParams& p) {
  if (f_n < 0.0) throw std::domain_error("friction_force: negative normal force");
  const double speed = v_t.norm();
  if (speed == 0.0) return Vec2::Zero();
  return -effective_friction_coefficient(speed, p) * f_n * (v_t / speed);
}

// ---------------------------------------------------------------------------
// Narrow phase

struct Proximity {
  double depth = 0.0;  // penetration, negative when separated
  Vec3 normal = Vec3::UnitZ();  // out of the first shape
  Vec3 point = Vec3::Zero();
};

struct HalfSpace {
  Vec3 n;  // outward unit normal
  double offset;  // solid is {x : n.x <= offset}
};

/// Sphere against a convex solid given as an intersection of half-spaces.
/// Uses the maximum plane distance, exact in face regions.
inline Proximity sphere_vs_polytope(const Vec3& c, double r, const HalfSpace* planes, int count) {
  int best = 0;
  double sd = -1e300;
  for (int i = 0; i < count; ++i) {
    const double di = planes[i].n.dot(c) - planes[i].offset;
    if (di > sd) {
      sd = di;
      best = i;
    }
  }
  Proximity out;
  out.normal = planes[best].n;
  out.depth = r - sd;
  out.point = c - out.normal * (r + sd) / 2.0;
  return out;
}

/// Sphere (or point, r = 0) against an oriented box. Normal points out of
/// the box.
inline Proximity sphere_vs_box(const Vec3& c, double r, const Vec3& center, const Mat3& R,
                               const Vec3& half) {
  const Vec3 local = R.transpose() * (c - center);
  const Vec3 clamped = local.cwiseMax(-half).cwiseMin(half);
  Proximity out;
  const Vec3 delta = local - clamped;
  const double dist = delta.norm();
  if (dist > 1e-12) {
    out.normal = R * (delta / dist);
    out.depth = r - dist;
    const Vec3 surface = center + R * clamped;
    out.point = surface + out.normal * (dist - r) / 2.0;
    return out;
  }
  // Center inside: leave through the nearest face.
  int axis = 0;
  double sign = 1.0;
  double best = 1e300;
  for (int i = 0; i < 3; ++i) {
    for (double s : {1.0, -1.0}) {
      const double gap = half[i] - s * local[i];
      if (gap < best) {
        best = gap;
        axis = i;
        sign = s;
      }
    }
  }
  Vec3 nl = Vec3::Zero();
  nl[axis] = sign;
  out.normal = R * nl;
  out.depth = r + best;
  Vec3 face = local;
  face[axis] = sign * half[axis];
  out.point = center + R * face - out.normal * (out.depth / 2.0);
  return out;
}

/// Closest points between segments [p0,p1] and [q0,q1].
inline void closest_points_segments(const Vec3& p0, const Vec3& p1, const Vec3& q0,
                                    const Vec3& q1, Vec3& cp, Vec3& cq) {
  const Vec3 d1 = p1 - p0, d2 = q1 - q0, r = p0 - q0;
  const double a = d1.squaredNorm(), e = d2.squaredNorm(), f = d2.dot(r);
  double s = 0.0, t = 0.0;
  if (a <= 1e-15 && e <= 1e-15) {
    cp = p0;
    cq = q0;
    return;
  }
  if (a <= 1e-15) {
    t = std::clamp(f / e, 0.0, 1.0);
  } else {
    const double c = d1.dot(r);
    if (e <= 1e-15) {
      s = std::clamp(-c / a, 0.0, 1.0);
    } else {
      const double b = d1.dot(d2);
      const double denom = a * e - b * b;
      s = denom > 1e-15 ? std::clamp((b * f - c * e) / denom, 0.0, 1.0) : 0.0;
      t = (b * s + f) / e;
      if (t < 0.0) {
        t = 0.0;
        s = std::clamp(-c / a, 0.0, 1.0);
      } else if (t > 1.0) {
        t = 1.0;
        s = std::clamp((b - c) / a, 0.0, 1.0);
      }
    }
  }
  cp = p0 + d1 * s;
  cq = q0 + d2 * t;
}

// ---------------------------------------------------------------------------
// Terrain geometry

// Terrain solids stand on the ground, so their bottom faces are left open:
// a point just under ground level must never be pushed out downward.
inline std::array<HalfSpace, 4> ramp_planes(const RampSpec& ramp) {
  const double th = deg2rad(ramp.angle_deg);
  const Vec3 n_slope(-std::sin(th), 0.0, std::cos(th));
  const Vec3 foot(ramp.foot_x, 0.0, 0.0);
  return {HalfSpace{n_slope, n_slope.dot(foot)},
          HalfSpace{Vec3::UnitX(), ramp.foot_x + ramp.run()},
          HalfSpace{Vec3::UnitY(), ramp.y_max},
          HalfSpace{-Vec3::UnitY(), -ramp.y_min}};
}

inline constexpr double kTerrainDepth = 1.0;  // below-ground extent of the platform solid

inline Vec3 platform_center(const PlatformSpec& p) {
  return Vec3(p.center.x(), p.center.y(), (p.height - kTerrainDepth) / 2.0);
}
inline Vec3 platform_half(const PlatformSpec& p) {
  return Vec3(p.footprint.x() / 2.0, p.footprint.y() / 2.0, (p.height + kTerrainDepth) / 2.0);
}

// ---------------------------------------------------------------------------
// Detection

namespace detail {

inline Vec3 any_tangent(const Vec3& n) {
  const Vec3 e = std::abs(n.x()) < 0.9 ? Vec3::UnitX() : Vec3::UnitY();
  return (e - n * n.dot(e)).normalized();
}

/// Pose of a rigid body (terrain bodies are at the identity).
inline void body_pose(const RobotModel& m, const ChainKinematics& k, const SystemState& s,
                      BodyId b, Vec3& origin, Mat3& R) {
  if (b.kind == BodyKind::link) {
    origin = k.links[b.index].origin;
    R = k.links[b.index].R;
  } else if (b.kind == BodyKind::box) {
    origin = s.box_position(m);
    R = s.box_orientation(m).toRotationMatrix();
  } else {
    origin.setZero();
    R.setIdentity();
  }
}

/// Fills the contact frame, W and kinematic rates of a point.
inline void finish_point(const RobotModel& m, const ChainKinematics& k, const SystemState& s,
                         ContactPoint& c) {
  c.n.normalize();
  c.t1 = any_tangent(c.n);
  c.t2 = c.n.cross(c.t1);
  Mat3 frame;
  frame.row(0) = c.n.transpose();
  frame.row(1) = c.t1.transpose();
  frame.row(2) = c.t2.transpose();
  const auto Jb = point_jacobian(m, k, s, c.b, c.p);
  const auto Ja = point_jacobian(m, k, s, c.a, c.p);
  c.W = frame * (Jb.J - Ja.J);
  const Vec3 rel = c.W * s.u;
  c.d_rate = -rel[0];
  c.v_t = rel.tail<2>();
}

struct Sphere {
  Vec3 c;
  double r;
};

inline std::array<Sphere, 2> link_spheres(const RobotModel& m, const ChainKinematics& k, int i) {
  const auto& f = k.links[i];
  const auto& shape = m.links[i].shape;
  const Vec3 axis = f.R.col(0) * shape.half_length;
  return {Sphere{f.origin + axis, shape.radius}, Sphere{f.origin - axis, shape.radius}};
}

inline std::array<Vec3, 8> box_corners(const Vec3& center, const Mat3& R, const Vec3& half) {
  std::array<Vec3, 8> out;
  for (int i = 0; i < 8; ++i) {
    const Vec3 sgn((i & 1) ? 1.0 : -1.0, (i & 2) ? 1.0 : -1.0, (i & 4) ? 1.0 : -1.0);
    out[i] = center + R * sgn.cwiseProduct(half);
  }
  return out;
}

}  // namespace detail

/// All contact candidates with penetration above -w, in a fixed order:
/// links vs terrain, box vs terrain, box vs links, link vs link.
/// Forces are left unset.
inline ContactSet detect_contacts(const RobotModel& m, const SceneSpec& scene,
                                  const ChainKinematics& k, const SystemState& s,
                                  const ContactParams& params) {
  ContactSet set;
  const double margin = params.normal.w;
  auto emit = [&](BodyId a, BodyId b, int feature, const Proximity& pr) {
    if (pr.depth <= -margin) return;
    ContactPoint c;
    c.a = a;
    c.b = b;
    c.feature = feature;
    c.p = pr.point;
    c.n = pr.normal;
    c.d = pr.depth;
    detail::finish_point(m, k, s, c);
    set.points.push_back(std::move(c));
  };

  const Vec3 ground_n = Vec3::UnitZ();
  const auto ramp = ramp_planes(scene.ramp);
  const Vec3 plat_c = platform_center(scene.platform);
  const Vec3 plat_h = platform_half(scene.platform);

  auto sphere_vs_terrain = [&](BodyId body, int feature, const Vec3& c, double r) {
    Proximity g;
    g.normal = ground_n;
    g.depth = r - c.z();
    g.point = c - ground_n * (r + c.z()) / 2.0;
    emit(BodyId::ground(), body, feature, g);
    if (scene.platform.enabled)
      emit(BodyId::platform(), body, feature, sphere_vs_box(c, r, plat_c, Mat3::Identity(), plat_h));
    if (scene.ramp.enabled)
      emit(BodyId::ramp(), body, feature,
           sphere_vs_polytope(c, r, ramp.data(), static_cast<int>(ramp.size())));
  };

  for (int i = 0; i < m.num_links(); ++i) {
    const auto spheres = detail::link_spheres(m, k, i);
    for (int e = 0; e < 2; ++e) sphere_vs_terrain(BodyId::link(i), e, spheres[e].c, spheres[e].r);
  }

  const Vec3 box_c = s.box_position(m);
  const Mat3 box_R = s.box_orientation(m).toRotationMatrix();
  const Vec3 box_h = scene.box.size / 2.0;
  const auto corners = detail::box_corners(box_c, box_R, box_h);
  for (int e = 0; e < 8; ++e) sphere_vs_terrain(BodyId::box(), e, corners[e], 0.0);
  if (scene.platform.enabled) {
    // Platform top corners against the box faces.
    for (int e = 0; e < 4; ++e) {
      const Vec3 corner = plat_c + Vec3((e & 1) ? plat_h.x() : -plat_h.x(),
                                        (e & 2) ? plat_h.y() : -plat_h.y(), plat_h.z());
      Proximity pr = sphere_vs_box(corner, 0.0, box_c, box_R, box_h);
      pr.normal = -pr.normal;
      emit(BodyId::platform(), BodyId::box(), 8 + e, pr);
    }
  }

  for (int i = 0; i < m.num_links(); ++i) {
    if (s.latched && i <= 1) continue;  // docked parts are welded
    const auto spheres = detail::link_spheres(m, k, i);
    for (int e = 0; e < 2; ++e)
      emit(BodyId::box(), BodyId::link(i), e,
           sphere_vs_box(spheres[e].c, spheres[e].r, box_c, box_R, box_h));
  }

  if (params.self_contact) {
    for (int i = 0; i < m.num_links(); ++i) {
      for (int j = i + 2; j < m.num_links(); ++j) {
        const auto si = detail::link_spheres(m, k, i);
        const auto sj = detail::link_spheres(m, k, j);
        Vec3 ci, cj;
        closest_points_segments(si[0].c, si[1].c, sj[0].c, sj[1].c, ci, cj);
        const Vec3 delta = cj - ci;
        const double dist = delta.norm();
        Proximity pr;
        pr.normal = dist > 1e-12 ? Vec3(delta / dist) : Vec3(Vec3::UnitZ());
        pr.depth = si[0].r + sj[0].r - dist;
        pr.point = ci + pr.normal * (si[0].r - pr.depth / 2.0);
        emit(BodyId::link(i), BodyId::link(j), 0, pr);
      }
    }
  }
  return set;
}

inline ContactSet detect_contacts(const RobotModel& m, const SceneSpec& scene,
                                  const SystemState& s, const ContactParams& params) {
  return detect_contacts(m, scene, chain_kinematics(m, s, true), s, params);
}

/// Evaluates the penalty laws at every point and the implicit damping
/// linearization used by the integrator.
inline ContactSet resolve_forces(ContactSet set, const ContactParams& params) {
  const auto& fp = params.friction;
  for (auto& c : set.points) {
    c.damping.setZero();
    const double raw = smoothing(c.d, params.normal.w) * (params.normal.k * c.d + params.normal.b * c.d_rate);
    c.f_n = std::max(0.0, raw);
    c.f_t = friction_force(c.f_n, c.v_t, fp);
    if (c.f_n <= 0.0) continue;
    c.damping(0, 0) = smoothing(c.d, params.normal.w) * params.normal.b;
    const double speed = c.v_t.norm();
    Eigen::Matrix2d Dt;
    if (speed < 1e-12) {
      Dt = c.f_n * effective_friction_slope(0.0, fp) * Eigen::Matrix2d::Identity();
    } else {
      const Vec2 dir = c.v_t / speed;
      const Eigen::Matrix2d radial = dir * dir.transpose();
      const double mu = effective_friction_coefficient(speed, fp);
      const double slope = std::max(0.0, effective_friction_slope(speed, fp));
      Dt = c.f_n * (slope * radial + (mu / speed) * (Eigen::Matrix2d::Identity() - radial));
    }
    c.damping.bottomRightCorner<2, 2>() = Dt;
  }
  return set;
}

/// Sum over points of |max(g - w, 0) * f_N|: force present while separated
/// beyond the transition width.
inline double complementarity_residual(const ContactSet& set, const NormalForceParams& p) {
  double r = 0.0;
  for (const auto& c : set.points) r += std::abs(std::max(c.gap() - p.w, 0.0) * c.f_n);
  return r;
}

// ---------------------------------------------------------------------------
// Delassus system

struct DelassusSystem {
  MatX G;  // Jc M^-1 Jc^T
  VecX c;  // Jc_dot u + Jc M^-1 h
};

/// G and c from stacked Jacobian rows and the (possibly latch-reduced)
/// dynamics. jdot_u is Jc_dot u.
inline DelassusSystem delassus(const MatX& Jc, const DynamicsTerms& terms, const VecX& jdot_u) {
  DelassusSystem out;
  if (Jc.rows() == 0) {
    out.G = MatX::Zero(0, 0);
    out.c = VecX::Zero(0);
    return out;
  }
  Eigen::LLT<MatX> llt(terms.M_free);
  if (llt.info() != Eigen::Success) throw NumericalError("delassus: singular mass matrix", -1);
  const MatX JS = Jc * terms.latch.S;
  const MatX X = llt.solve(JS.transpose());
  out.G = JS * X;
  out.G = 0.5 * (out.G + out.G.transpose());
  out.c = jdot_u + JS * llt.solve(terms.h_free) + Jc * terms.latch.bias_accel;
  return out;
}

/// Jc_dot u by a forward difference of the contact Jacobians along the
/// current velocity, holding material points and contact frames fixed.
inline VecX contact_jacobian_rate(const RobotModel& m, const SystemState& s,
                                  const ContactSet& set, double eps = 1e-7) {
  VecX out = VecX::Zero(3 * set.size());
  if (set.empty()) return out;
  const auto k0 = chain_kinematics(m, s, false);
  SystemState s1 = s;
  detail::integrate_positions(m, s1, s.u, eps);
  detail::apply_latch(m, s1);
  const auto k1 = chain_kinematics(m, s1, false);
  for (int i = 0; i < set.size(); ++i) {
    const auto& c = set.points[i];
    Mat3 frame;
    frame.row(0) = c.n.transpose();
    frame.row(1) = c.t1.transpose();
    frame.row(2) = c.t2.transpose();
    auto moved = [&](BodyId b) {
      Vec3 o0, o1;
      Mat3 R0, R1;
      detail::body_pose(m, k0, s, b, o0, R0);
      detail::body_pose(m, k1, s1, b, o1, R1);
      return Vec3(o1 + R1 * (R0.transpose() * (c.p - o0)));
    };
    const MatX W1 = frame * (point_jacobian(m, k1, s1, c.b, moved(c.b)).J -
                             point_jacobian(m, k1, s1, c.a, moved(c.a)).J);
    out.segment<3>(3 * i) = (W1 - c.W) * s.u / eps;
  }
  return out;
}

inline DelassusSystem delassus(const RobotModel& m, const SceneSpec& scene, const SystemState& s,
                               const ContactSet& set, const VecX& tau) {
  const auto terms = dynamics_terms(m, scene, s, tau);
  return delassus(set.jacobian(Layout(m).nv()), terms, contact_jacobian_rate(m, s, set));
}

}  // namespace snake
