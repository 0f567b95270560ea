#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "snake/metrics.hpp"

using namespace snake;

TEST(Power, HandValues) {
  const RobotModel m = build_default_robot();
  const Layout lay(m);
  SystemState s = SystemState::zeros(m);
  VecX tau = VecX::Zero(m.num_joints());
  tau[4] = 2.0;
  s.u[lay.joint_v(4)] = 1.5;
  tau[7] = -1.0;
  s.u[lay.joint_v(7)] = 0.5;
  EXPECT_DOUBLE_EQ(instantaneous_power(m, s, tau), 3.0 + 0.5);
  EXPECT_DOUBLE_EQ(net_power(m, s, tau), 3.0 - 0.5);
}

TEST(Power, AbsoluteBoundsNet) {
  const RobotModel m = build_default_robot();
  const Layout lay(m);
  std::mt19937_64 rng(5);
  std::normal_distribution<double> n(0.0, 1.0);
  for (int trial = 0; trial < 100; ++trial) {
    SystemState s = SystemState::zeros(m);
    VecX tau(m.num_joints());
    for (int k = 0; k < m.num_joints(); ++k) {
      tau[k] = n(rng);
      s.u[lay.joint_v(k)] = n(rng);
    }
    EXPECT_GE(instantaneous_power(m, s, tau), std::abs(net_power(m, s, tau)) - 1e-12);
  }
}

namespace {

ContactPoint robot_pushes_box(const Vec3& p, const Vec3& n, double f_n) {
  ContactPoint c;
  c.a = {BodyKind::link, 0};
  c.b = BodyId::box();
  c.p = p;
  c.n = n;
  c.f_n = f_n;
  return c;
}

}  // namespace

TEST(BoxWork, ConstantPushHandValue) {
  const RobotModel m = build_default_robot();
  const Layout lay(m);
  SystemState s = SystemState::zeros(m);
  set_quat(s.q, lay.box_q() + 3, Quat::Identity());
  s.u.segment<3>(lay.box_v()) = Vec3(0.1, 0.0, 0.0);
  ContactSet set;
  set.points.push_back(robot_pushes_box(Vec3(-0.1, 0.0, 0.1), Vec3::UnitX(), 2.0));
  const double p = box_contact_power(m, s, set);
  EXPECT_DOUBLE_EQ(p, 0.2);
  // 2 N at 0.1 m/s for 5 s.
  const std::vector<double> series(501, p);
  EXPECT_NEAR(work_on_box(series, 0.01).back(), 1.0, 1e-12);
}

TEST(BoxWork, OrderOfBodiesDoesNotMatter) {
  const RobotModel m = build_default_robot();
  const Layout lay(m);
  SystemState s = SystemState::zeros(m);
  s.q.segment<3>(lay.box_q()) = Vec3(0.3, 0.2, 0.1);
  set_quat(s.q, lay.box_q() + 3, Quat(Eigen::AngleAxisd(0.4, Vec3::UnitZ())));
  s.u.segment<3>(lay.box_v()) = Vec3(0.1, -0.2, 0.05);
  s.u.segment<3>(lay.box_v() + 3) = Vec3(0.3, 0.1, -0.7);
  ContactPoint c = robot_pushes_box(Vec3(0.25, 0.12, 0.05), Vec3(1, 1, 0).normalized(), 3.0);
  c.f_t = Vec2(0.4, -0.2);
  c.t1 = Vec3(-1, 1, 0).normalized();
  c.t2 = Vec3::UnitZ();
  ContactPoint flipped = c;
  std::swap(flipped.a, flipped.b);
  flipped.n = -c.n;
  flipped.t1 = -c.t1;
  flipped.t2 = -c.t2;
  ContactSet a, b;
  a.points.push_back(c);
  b.points.push_back(flipped);
  // Hand oracle: F . (v + omega_world x r).
  const Vec3 w = Quat(Eigen::AngleAxisd(0.4, Vec3::UnitZ())) * Vec3(0.3, 0.1, -0.7);
  const Vec3 vp = Vec3(0.1, -0.2, 0.05) + w.cross(c.p - Vec3(0.3, 0.2, 0.1));
  const double expected = c.world_force().dot(vp);
  EXPECT_NEAR(box_contact_power(m, s, a), expected, 1e-14);
  EXPECT_NEAR(box_contact_power(m, s, b), expected, 1e-14);
}

TEST(BoxWork, IgnoresNonRobotContacts) {
  const RobotModel m = build_default_robot();
  const Layout lay(m);
  SystemState s = SystemState::zeros(m);
  set_quat(s.q, lay.box_q() + 3, Quat::Identity());
  s.u.segment<3>(lay.box_v()) = Vec3(0.1, 0.0, 0.0);
  ContactSet set;
  ContactPoint c = robot_pushes_box(Vec3::Zero(), Vec3::UnitX(), 5.0);
  c.a = BodyId::ground();
  set.points.push_back(c);
  EXPECT_EQ(box_contact_power(m, s, set), 0.0);
  EXPECT_THROW(work_on_box({}, 0.01), std::invalid_argument);
}

TEST(Integrals, TrapezoidIsExactOnLines) {
  std::vector<double> y;
  for (int i = 0; i <= 100; ++i) y.push_back(3.0 + 2.0 * i * 0.01);
  const auto w = cumulative_trapezoid(y, 0.01);
  EXPECT_EQ(w.front(), 0.0);
  EXPECT_NEAR(w.back(), 3.0 + 1.0, 1e-12);
}

TEST(Path, AtLeastDisplacement) {
  std::mt19937_64 rng(9);
  std::normal_distribution<double> n(0.0, 0.1);
  for (int trial = 0; trial < 50; ++trial) {
    std::vector<Vec3> pts{Vec3::Zero()};
    for (int i = 0; i < 30; ++i) pts.push_back(pts.back() + Vec3(n(rng), n(rng), n(rng)));
    EXPECT_GE(path_length(pts), (pts.back() - pts.front()).norm() - 1e-15);
  }
  EXPECT_DOUBLE_EQ(path_length({Vec3::Zero(), Vec3(3, 4, 0)}), 5.0);
}

namespace {

GaitRun run(std::string name, double duration, double w_loc, double w_box, double dist,
            double peak) {
  GaitRun r;
  r.name = std::move(name);
  r.duration = duration;
  r.w_loc_abs = w_loc;
  r.w_loc_net = -0.5 * w_loc;
  r.w_box = w_box;
  r.box_distance = dist;
  r.box_path = dist;
  r.peak_power = peak;
  return r;
}

}  // namespace

TEST(Efficiency, RankingsAndSlopes) {
  const auto rep = efficiency_report(
      {run("a", 10, 20, 2, 0.3, 5), run("b", 10, 30, 5, 0.5, 9), run("c", 10, 5, 1, 0.1, 2)});
  EXPECT_TRUE(rep.durations_equal);
  EXPECT_TRUE(rep.warnings.empty());
  EXPECT_DOUBLE_EQ(rep.find("a")->slope, 10.0);
  EXPECT_DOUBLE_EQ(rep.find("b")->slope, 6.0);
  EXPECT_DOUBLE_EQ(rep.find("c")->slope, 5.0);
  EXPECT_EQ(rep.by_slope, (std::vector<std::string>{"c", "b", "a"}));
  EXPECT_EQ(rep.by_distance, (std::vector<std::string>{"b", "a", "c"}));
  EXPECT_EQ(rep.by_w_box, (std::vector<std::string>{"b", "a", "c"}));
  EXPECT_EQ(rep.by_w_loc, (std::vector<std::string>{"b", "a", "c"}));
  EXPECT_EQ(rep.by_peak_power, (std::vector<std::string>{"b", "a", "c"}));
  EXPECT_EQ(rep.find("zzz"), nullptr);
}

TEST(Efficiency, NetConventionUsesMagnitude) {
  const auto rep = efficiency_report({run("a", 10, 20, 2, 0.3, 5)}, WorkConvention::net);
  EXPECT_DOUBLE_EQ(rep.find("a")->w_loc, 10.0);
  EXPECT_DOUBLE_EQ(rep.find("a")->slope, 5.0);
}

TEST(Efficiency, ZeroBoxWorkFlagged) {
  const auto rep = efficiency_report({run("idle", 10, 20, 0, 0, 5), run("b", 10, 30, 5, 0.5, 9)});
  EXPECT_TRUE(rep.find("idle")->slope_infinite);
  EXPECT_TRUE(std::isinf(rep.find("idle")->slope));
  ASSERT_EQ(rep.warnings.size(), 1u);
  EXPECT_NE(rep.warnings[0].find("idle"), std::string::npos);
  EXPECT_EQ(rep.by_slope.back(), "idle");
}

TEST(Efficiency, UnequalDurationsRankPerSecond) {
  const auto rep = efficiency_report({run("long", 20, 20, 2, 0.6, 5), run("short", 5, 30, 5, 0.2, 9)});
  EXPECT_FALSE(rep.durations_equal);
  EXPECT_FALSE(rep.warnings.empty());
  EXPECT_DOUBLE_EQ(rep.find("long")->distance_rate, 0.03);
  EXPECT_DOUBLE_EQ(rep.find("short")->distance_rate, 0.04);
  EXPECT_EQ(rep.by_distance.front(), "short");
  EXPECT_THROW(efficiency_report({}), std::invalid_argument);
}
