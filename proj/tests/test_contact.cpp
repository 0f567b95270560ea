#include <gtest/gtest.h>

#include <random>

#include "fixtures.hpp"

using namespace snake;
using namespace snake::testing;

TEST(NormalForce, HandValues) {
  const NormalForceParams p;
  EXPECT_EQ(normal_force(0.0, 5.0, p), 0.0);
  EXPECT_EQ(normal_force(0.0, -5.0, p), 0.0);
  EXPECT_NEAR(normal_force(1e-3, 0.0, p), 10.0, 1e-12);
  EXPECT_NEAR(normal_force(5e-4, 0.0, p), 2.5, 1e-12);
  EXPECT_EQ(normal_force(1e-3, -20.0, p), 0.0);
  EXPECT_EQ(normal_force(-1e-3, 0.0, p), 0.0);
}

TEST(Friction, CoefficientShape) {
  const FrictionParams p;
  EXPECT_EQ(effective_friction_coefficient(0.0, p), 0.0);
  EXPECT_NEAR(effective_friction_coefficient(p.v_crit, p), 0.7, 1e-15);
  EXPECT_NEAR(effective_friction_coefficient(100 * p.v_crit, p), 0.5, 1e-9);
  EXPECT_THROW(effective_friction_coefficient(-1e-6, p), std::domain_error);
  // Global maximum at v_crit, monotone on each side.
  double prev = 0.0;
  for (double v = 1e-6; v <= p.v_crit; v += 1e-6) {
    const double mu = effective_friction_coefficient(v, p);
    ASSERT_GE(mu, prev - 1e-15);
    prev = mu;
  }
  prev = p.mu_s;
  for (double v = p.v_crit; v < 50 * p.v_crit; v += 1e-5) {
    const double mu = effective_friction_coefficient(v, p);
    ASSERT_LE(mu, prev + 1e-15);
    ASSERT_LE(mu, p.mu_s);
    ASSERT_GE(mu, p.mu_d);
    prev = mu;
  }
}

TEST(Friction, SlopeMatchesDifferenceQuotient) {
  const FrictionParams p;
  for (double v = 1e-5; v < 10 * p.v_crit; v += 7e-5) {
    const double h = 1e-9;
    const double fd = (effective_friction_coefficient(v + h, p) -
                       effective_friction_coefficient(v - h, p)) / (2 * h);
    EXPECT_NEAR(effective_friction_slope(v, p), fd, 1e-3 * std::max(1.0, std::abs(fd)));
  }
}

TEST(Friction, LawsAreContinuousWithBoundedSlopeJumps) {
  const NormalForceParams np;
  const FrictionParams fp;
  auto jump = [](auto f, double x, double h) {
    const double left = (f(x) - f(x - h)) / h;
    const double right = (f(x + h) - f(x)) / h;
    return std::make_pair(std::abs(f(x + h) - f(x - h)), std::abs(right - left));
  };
  auto fn = [&](double d) { return normal_force(d, 0.0, np); };
  for (double x : {0.0, np.w}) {
    const auto [dv, ds] = jump(fn, x, 1e-9);
    EXPECT_LT(dv, 1e-4);
    EXPECT_LT(ds, 1e-3 * np.k);
  }
  auto mu = [&](double v) { return effective_friction_coefficient(std::max(v, 0.0), fp); };
  const auto [dv, ds] = jump(mu, fp.v_crit, 1e-9);
  EXPECT_LT(dv, 1e-6);
  EXPECT_LT(ds, 1.0);
}

TEST(Friction, ForceOpposesSlip) {
  const FrictionParams p;
  EXPECT_EQ(friction_force(10.0, Vec2::Zero(), p), Vec2::Zero());
  const Vec2 f = friction_force(10.0, Vec2(p.v_crit, 0.0), p);
  EXPECT_NEAR(f.x(), -7.0, 1e-12);
  EXPECT_EQ(f.y(), 0.0);
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> u(-0.01, 0.01), fn(0.0, 20.0);
  for (int i = 0; i < 1000; ++i) {
    const Vec2 v(u(rng), u(rng));
    const double n = fn(rng);
    const Vec2 ft = friction_force(n, v, p);
    ASSERT_LE(ft.dot(v), 0.0);
    ASSERT_LE(ft.norm(), p.mu_s * n + 1e-9);
  }
}

TEST(Detect, StraightChainOnGroundTouchesWithEveryLink) {
  Sim sim;
  const auto s = robot_on_ground(sim.m, -1.0, 2e-4);
  const auto set = detect_contacts(sim.m, sim.scene, s, sim.params);
  std::vector<int> per_link(12, 0);
  for (const auto& c : set.points) {
    if (c.a.kind == BodyKind::ground && c.b.is_robot()) {
      ++per_link[c.b.index];
      EXPECT_NEAR(c.d, 2e-4, 1e-12);
      EXPECT_NEAR(c.n.norm(), 1.0, 1e-12);
    }
  }
  for (int i = 0; i < 12; ++i) EXPECT_GE(per_link[i], 1) << i;
}

TEST(Detect, BoxOnGroundHasFourEqualCorners) {
  Sim sim;
  auto s = robot_on_ground(sim.m, -1.0);
  const Layout lay(sim.m);
  s.q.segment<3>(lay.box_q()) = Vec3(0.0, 0.3, 0.1 - 3e-4);
  const auto set = detect_contacts(sim.m, sim.scene, s, sim.params);
  std::vector<double> depths;
  for (const auto& c : set.points)
    if (c.b.is_box() && c.a.kind == BodyKind::ground) depths.push_back(c.d);
  ASSERT_EQ(depths.size(), 4u);
  for (double d : depths) EXPECT_NEAR(d, 3e-4, 1e-12);
}

TEST(Detect, LiftedChainHasNoContacts) {
  Sim sim;
  auto s = robot_on_ground(sim.m, 0.0);
  s.q[2] += 1.0;
  s.q.segment<3>(Layout(sim.m).box_q()) = Vec3(0, 0, 5);
  EXPECT_TRUE(detect_contacts(sim.m, sim.scene, s, sim.params).empty());
}

TEST(Detect, OrderingIsDeterministic) {
  Sim sim;
  std::mt19937_64 rng(12);
  const auto s = random_state(sim.m, rng);
  const auto a = detect_contacts(sim.m, sim.scene, s, sim.params);
  const auto b = detect_contacts(sim.m, sim.scene, s, sim.params);
  ASSERT_EQ(a.size(), b.size());
  for (int i = 0; i < a.size(); ++i) {
    EXPECT_EQ(a.points[i].a, b.points[i].a);
    EXPECT_EQ(a.points[i].b, b.points[i].b);
    EXPECT_EQ(a.points[i].feature, b.points[i].feature);
    EXPECT_EQ(a.points[i].d, b.points[i].d);
  }
}

TEST(Geometry, SphereBoxAndSegments) {
  const Vec3 half(0.1, 0.1, 0.1);
  auto pr = sphere_vs_box(Vec3(0.0, 0.0, 0.14), 0.05, Vec3::Zero(), Mat3::Identity(), half);
  EXPECT_NEAR(pr.depth, 0.01, 1e-12);
  EXPECT_LT((pr.normal - Vec3::UnitZ()).norm(), 1e-12);
  pr = sphere_vs_box(Vec3(0.2, 0.2, 0.0), 0.0, Vec3::Zero(), Mat3::Identity(), half);
  EXPECT_NEAR(pr.depth, -std::sqrt(0.02), 1e-12);
  pr = sphere_vs_box(Vec3(0.0, 0.0, 0.09), 0.0, Vec3::Zero(), Mat3::Identity(), half);
  EXPECT_NEAR(pr.depth, 0.01, 1e-12);
  Vec3 cp, cq;
  closest_points_segments(Vec3(-1, 0, 0), Vec3(1, 0, 0), Vec3(0, -1, 1), Vec3(0, 1, 1), cp, cq);
  EXPECT_LT(cp.norm(), 1e-12);
  EXPECT_LT((cq - Vec3(0, 0, 1)).norm(), 1e-12);
}

TEST(Geometry, RampSurface) {
  RampSpec ramp;
  ramp.enabled = true;
  ramp.foot_x = 1.0;
  const double th = deg2rad(ramp.angle_deg);
  const auto planes = ramp_planes(ramp);
  const Vec3 surface(1.5, 0.0, 0.5 * std::tan(th));
  const Vec3 n(-std::sin(th), 0.0, std::cos(th));
  const auto pr = sphere_vs_polytope(surface + 0.04 * n, 0.05, planes.data(), static_cast<int>(planes.size()));
  EXPECT_NEAR(pr.depth, 0.01, 1e-12);
  EXPECT_LT((pr.normal - n).norm(), 1e-12);
  EXPECT_NEAR(ramp.elevation_at(1.5), 0.5 * std::tan(th), 1e-12);
  EXPECT_NEAR(ramp.run() * std::tan(th), 0.6, 1e-12);
}

TEST(Geometry, TerrainNeverPushesDownward) {
  // A point at ground level just inside the ramp foot or the platform side
  // must be expelled upward or sideways.
  RampSpec ramp;
  ramp.enabled = true;
  const auto planes = ramp_planes(ramp);
  const auto pr = sphere_vs_polytope(Vec3(0.01, 0.0, -0.0005), 0.0, planes.data(),
                                     static_cast<int>(planes.size()));
  EXPECT_GT(pr.depth, 0.0);
  EXPECT_GE(pr.normal.z(), 0.0);
  PlatformSpec plat;
  plat.enabled = true;
  const auto pb = sphere_vs_box(Vec3(-0.249, 0.0, -0.0005), 0.0, platform_center(plat),
                                Mat3::Identity(), platform_half(plat));
  EXPECT_GT(pb.depth, 0.0);
  EXPECT_GE(pb.normal.z(), 0.0);
  EXPECT_NEAR((platform_center(plat) + platform_half(plat)).z(), plat.height, 1e-15);
}

TEST(Contact, GapRateEqualsJacobianTimesVelocity) {
  Sim sim;
  sim.scene.platform.enabled = true;
  sim.scene.platform.center = Vec2(0.0, 0.5);
  std::mt19937_64 rng(13);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  const Layout lay(sim.m);
  int checked = 0;
  for (int trial = 0; trial < 40; ++trial) {
    auto s = random_state(sim.m, rng, 0.3);
    s.q[2] = 0.05 + 0.02 * u(rng);
    s.q.segment<3>(lay.box_q()) = Vec3(0.0, 0.3, 0.17 + 0.02 * u(rng));
    const auto set = detect_contacts(sim.m, sim.scene, s, sim.params);
    const double eps = 1e-7;
    auto s1 = s;
    detail::integrate_positions(sim.m, s1, s.u, eps);
    const auto set1 = detect_contacts(sim.m, sim.scene, s1, sim.params);
    for (const auto& c : set.points) {
      for (const auto& c1 : set1.points) {
        if (c1.a != c.a || c1.b != c.b || c1.feature != c.feature) continue;
        const double rate = (c1.gap() - c.gap()) / eps;
        EXPECT_NEAR(rate, (c.W * s.u)[0], 1e-6) << body_name(sim.m, c.a) << "-"
                                                << body_name(sim.m, c.b);
        ++checked;
      }
    }
  }
  EXPECT_GT(checked, 100);
}

TEST(Contact, NewtonThirdLawBetweenRobotAndBox) {
  Sim sim;
  std::mt19937_64 rng(14);
  const Layout lay(sim.m);
  auto s = robot_on_ground(sim.m, 0.0);
  s.q.segment<3>(lay.box_q()) = Vec3(0.3, 0.14, 0.1);
  s.u = VecX::Random(lay.nv()) * 0.1;
  auto set = resolve_forces(detect_contacts(sim.m, sim.scene, s, sim.params), sim.params);
  ContactSet robot_box;
  for (const auto& c : set.points)
    if (c.a.is_box() && c.b.is_robot()) robot_box.points.push_back(c);
  ASSERT_FALSE(robot_box.empty());
  const VecX Q = robot_box.generalized_force(lay.nv());
  // Base linear rows collect the world force on the robot; box rows the
  // force on the box.
  EXPECT_LT((Q.head<3>() + Q.segment<3>(lay.box_v())).norm(), 1e-12);
  // Angular rows are body-frame moments about each body's origin.
  const auto k = chain_kinematics(sim.m, s, false);
  const Vec3 box_c = s.box_position(sim.m);
  const Mat3 box_R = s.box_orientation(sim.m).toRotationMatrix();
  const Vec3 torque = k.links[0].origin.cross(Vec3(Q.head<3>())) +
                      k.links[0].R * Q.segment<3>(3) +
                      box_c.cross(Vec3(Q.segment<3>(lay.box_v()))) +
                      box_R * Q.segment<3>(lay.box_v() + 3);
  EXPECT_LT(torque.norm(), 1e-12);
}

TEST(Contact, SettledBoxCarriesItsWeight) {
  Sim sim;
  auto s = robot_on_ground(sim.m, -1.0);
  const Layout lay(sim.m);
  s.q.segment<3>(lay.box_q()) = Vec3(0.0, 0.3, 0.101);
  ContactSet last;
  s = sim.advance(s, 10000, &last);
  double fn = 0.0, depth = 0.0;
  int corners = 0;
  for (const auto& c : last.points) {
    if (!c.b.is_box()) continue;
    fn += c.f_n;
    depth += c.d;
    ++corners;
    EXPECT_LE(std::abs(c.d_rate), 1e-4);
  }
  ASSERT_EQ(corners, 4);
  EXPECT_NEAR(fn, 4.9, 0.049);
  const double analytic = corner_equilibrium_depth(4.9, sim.params.normal);
  EXPECT_NEAR(depth / 4, analytic, 0.1 * analytic);
  EXPECT_EQ(complementarity_residual(last, sim.params.normal), 0.0);

  // Same contact state, box sliding at 0.1 m/s.
  auto sliding = s;
  sliding.u.segment<3>(lay.box_v()) = Vec3(0.1, 0.0, 0.0);
  auto set = resolve_forces(detect_contacts(sim.m, sim.scene, sliding, sim.params), sim.params);
  double ft = 0.0;
  for (const auto& c : set.points)
    if (c.b.is_box()) ft += c.f_t.norm();
  EXPECT_NEAR(ft, 2.45, 0.05 * 2.45);
}

TEST(Contact, ResolveEmptySet) {
  EXPECT_TRUE(resolve_forces(ContactSet{}, ContactParams{}).empty());
}

TEST(Contact, ComplementarityResidualArithmetic) {
  ContactSet set;
  ContactPoint c;
  c.d = -0.1;
  c.f_n = 1.0;
  set.points.push_back(c);
  EXPECT_NEAR(complementarity_residual(set, NormalForceParams{}), 0.099, 1e-12);
}

TEST(Contact, BoxRestsOnRamp) {
  Sim sim;
  sim.scene.ramp.enabled = true;
  sim.scene.ramp.foot_x = 0.5;
  const double th = deg2rad(sim.scene.ramp.angle_deg);
  auto s = robot_on_ground(sim.m, -2.0);
  sim.scene.ramp.y_min = -0.5;
  const Layout lay(sim.m);
  const double depth =
      corner_equilibrium_depth(sim.scene.box.mass * 9.8 * std::cos(th), sim.params.normal);
  const double x_surface = 1.2;
  const Vec3 n(-std::sin(th), 0.0, std::cos(th));
  const Vec3 center = Vec3(x_surface, 0.3, (x_surface - 0.5) * std::tan(th)) + (0.1 - depth) * n;
  s.q.segment<3>(lay.box_q()) = center;
  set_quat(s.q, lay.box_q() + 3, Quat(Eigen::AngleAxisd(-th, Vec3::UnitY())));
  const auto end = sim.advance(s, 50000);
  EXPECT_LT((end.box_position(sim.m) - center).norm(), 1e-3);
}

TEST(Delassus, PointMassAndSymmetry) {
  Sim sim;
  auto s = SystemState::zeros(sim.m);
  s.q[2] = 2.0;
  const Layout lay(sim.m);
  s.q.segment<3>(lay.box_q()) = Vec3(0, 0, 0.05);
  ContactSet set;
  ContactPoint c;
  c.a = BodyId::ground();
  c.b = BodyId::box();
  c.p = s.box_position(sim.m);
  c.W = MatX::Zero(3, lay.nv());
  c.W.block<1, 3>(0, lay.box_v()) = Vec3::UnitZ().transpose();
  set.points.push_back(c);
  const auto terms = dynamics_terms(sim.m, sim.scene, s, VecX::Zero(11));
  const auto sys = delassus(set.jacobian(lay.nv()), terms, VecX::Zero(3));
  EXPECT_NEAR(sys.G(0, 0), 1.0 / sim.scene.box.mass, 1e-12);
  EXPECT_NEAR(sys.c[0], -9.8, 1e-12);

  set.points.push_back(c);
  const auto dup = delassus(set.jacobian(lay.nv()), terms, VecX::Zero(6));
  Eigen::SelfAdjointEigenSolver<MatX> es(dup.G);
  EXPECT_GE(es.eigenvalues().minCoeff(), -1e-9);
  Eigen::FullPivLU<MatX> lu(dup.G);
  EXPECT_LT(lu.rank(), 6);
}

TEST(Delassus, PositiveSemidefiniteAtSampledStates) {
  Sim sim;
  std::mt19937_64 rng(15);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  const Layout lay(sim.m);
  int nonempty = 0;
  for (int trial = 0; trial < 1000; ++trial) {
    auto s = random_state(sim.m, rng, 0.5);
    s.q[2] = 0.05 + 0.05 * u(rng);
    s.q.segment<3>(lay.box_q()) = Vec3(0.1 * u(rng), 0.1 * u(rng), 0.1 + 0.02 * u(rng));
    s.latched = trial % 5 == 0;
    if (s.latched) detail::apply_latch(sim.m, s);
    const auto set = detect_contacts(sim.m, sim.scene, s, sim.params);
    if (set.empty()) continue;
    ++nonempty;
    const auto terms = dynamics_terms(sim.m, sim.scene, s, VecX::Zero(11));
    const auto sys = delassus(set.jacobian(lay.nv()), terms, VecX::Zero(3 * set.size()));
    ASSERT_LE((sys.G - sys.G.transpose()).cwiseAbs().maxCoeff(), 1e-9);
    Eigen::SelfAdjointEigenSolver<MatX> es(sys.G);
    ASSERT_GE(es.eigenvalues().minCoeff(), -1e-9) << trial;
  }
  EXPECT_GT(nonempty, 500);
}

TEST(Delassus, JacobianRateMatchesFlowDifference) {
  Sim sim;
  std::mt19937_64 rng(16);
  const Layout lay(sim.m);
  auto s = random_state(sim.m, rng, 0.5);
  s.q[2] = 0.05;
  s.q.segment<3>(lay.box_q()) = Vec3(0.0, 0.0, 0.099);
  const auto set = detect_contacts(sim.m, sim.scene, s, sim.params);
  ASSERT_FALSE(set.empty());
  const VecX jd = contact_jacobian_rate(sim.m, s, set);
  // For a ground contact the rate of W u along the flow is the normal/tangent
  // projection of the material point acceleration at u_dot = 0.
  const auto k = chain_kinematics(sim.m, s, true);
  for (int i = 0; i < set.size(); ++i) {
    const auto& c = set.points[i];
    if (!(c.a.kind == BodyKind::ground && c.b.is_robot())) continue;
    const auto& f = k.links[c.b.index];
    const Vec3 r = c.p - f.origin;
    const Vec3 a = f.a_origin_bias + f.alpha_bias.cross(r) + f.omega.cross(f.omega.cross(r));
    EXPECT_NEAR(jd[3 * i], c.n.dot(a), 1e-4 * std::max(1.0, a.norm()));
  }
}
