#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "snake/gait.hpp"
#include "snake/kinematics.hpp"

using namespace snake;

namespace {

bool is_yaw_joint(int k) { return k % 2 == 0; }  // J1, J3, ... with yaw first

/// Hand-written sinusoid, independent of cpg_angles.
double sinusoid_deg(double amp, double freq, double phase, double offset, double t) {
  return amp * std::sin(2.0 * kPi * freq * t + phase) + offset;
}

std::vector<GaitTimeline> all_timelines() {
  std::vector<GaitTimeline> v;
  for (const auto& g : {"sidewinding", "c_roll", "s_roll", "j_roll"})
    v.push_back(timeline_for_scenario("flat_push", g, 10.0));
  for (const auto& s : {"lift_place", "pick_place", "ramp_ascent"})
    v.push_back(timeline_for_scenario(s));
  v.push_back(preset_timeline(preset("hex_pose"), 3.0));
  v.push_back(preset_timeline(preset("spiral_pose"), 3.0));
  return v;
}

}  // namespace

TEST(Cpg, HandEvaluatedSidewinding) {
  const auto p = *preset("sidewinding").cpg;
  EXPECT_EQ(cpg_angles(p, 0.0)[0], 0.0);
  EXPECT_NEAR(cpg_angles(p, 0.5)[0], deg2rad(60.0), 1e-12);
  // J3 has phase pi/2: cos at t = 0.
  EXPECT_NEAR(cpg_angles(p, 0.0)[2], deg2rad(60.0), 1e-12);
  // J2 is a pitch joint with phase 0.
  EXPECT_NEAR(cpg_angles(p, 0.5)[1], deg2rad(14.0), 1e-12);
}

TEST(Cpg, MatchesIndependentSinusoid) {
  std::mt19937_64 rng(41);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int trial = 0; trial < 50; ++trial) {
    CpgParams p;
    p.amplitude_yaw_deg = 60.0 * u(rng);
    p.amplitude_pitch_deg = 30.0 * u(rng);
    p.frequency_hz = 0.1 + u(rng);
    for (int k = 0; k < kJoints; ++k) {
      p.phase[k] = 2.0 * kPi * u(rng);
      p.offset_deg[k] = 20.0 * (u(rng) - 0.5);
    }
    const double t = 20.0 * u(rng);
    const auto q = cpg_angles(p, t);
    for (int k = 0; k < kJoints; ++k) {
      const double a = is_yaw_joint(k) ? p.amplitude_yaw_deg : p.amplitude_pitch_deg;
      EXPECT_NEAR(q[k], deg2rad(sinusoid_deg(a, p.frequency_hz, p.phase[k], p.offset_deg[k], t)),
                  1e-9);
    }
  }
}

TEST(Cpg, ExactlyPeriodic) {
  std::mt19937_64 rng(42);
  std::uniform_real_distribution<double> u(0.0, 30.0);
  for (const auto& name : {"sidewinding", "c_roll", "s_roll", "j_roll"}) {
    const auto p = *preset(name).cpg;
    for (int i = 0; i < 200; ++i) {
      const double t = u(rng);
      const auto a = cpg_angles(p, t), b = cpg_angles(p, t + 1.0 / p.frequency_hz);
      EXPECT_LE((a - b).cwiseAbs().maxCoeff(), 1e-12) << name << " t " << t;
    }
  }
}

TEST(Cpg, RatesAreTimeDerivative) {
  const auto p = *preset("sidewinding").cpg;
  const double h = 1e-6;
  for (double t : {0.1, 0.77, 1.3, 4.2}) {
    const JointVec fd = (cpg_angles(p, t + h) - cpg_angles(p, t - h)) / (2.0 * h);
    EXPECT_LE((fd - cpg_rates(p, t)).cwiseAbs().maxCoeff(), 1e-6);
  }
}

TEST(Cpg, NegativeTimeRejected) {
  EXPECT_THROW(cpg_angles(*preset("c_roll").cpg, -0.1), std::domain_error);
}

TEST(Cpg, MirrorNegatesYawOnly) {
  auto p = *preset("j_roll").cpg;
  auto m = p;
  m.mirror = true;
  for (double t = 0.0; t < 4.0; t += 0.173) {
    const auto a = cpg_angles(p, t), b = cpg_angles(m, t);
    for (int k = 0; k < kJoints; ++k) {
      if (is_yaw_joint(k)) EXPECT_EQ(b[k], -a[k]);
      else EXPECT_EQ(b[k], a[k]);
    }
  }
}

TEST(Cpg, RollingGaitsShareYawAndPitchValues) {
  const auto p = *preset("c_roll").cpg;
  for (double t = 0.0; t < 2.0; t += 0.11) {
    const auto q = cpg_angles(p, t);
    for (int k = 2; k < kJoints; ++k) EXPECT_NEAR(q[k], q[k % 2], 1e-15);
    // Quarter period apart: yaw(t) = pitch(t - T/4) with T = 2 s.
    if (t >= 0.5) EXPECT_NEAR(q[0], cpg_angles(p, t - 0.5)[1], 1e-12);
  }
}

TEST(Cpg, CheckRejectsOverLimitAndBadFrequency) {
  CpgParams p = *preset("c_roll").cpg;
  p.offset_deg[4] = 71.0;
  EXPECT_THROW(check(p), ConfigError);
  p.offset_deg[4] = 70.0;
  EXPECT_NO_THROW(check(p));
  p.frequency_hz = 0.0;
  EXPECT_THROW(check(p), ConfigError);
}

TEST(Presets, Constants) {
  const auto sw = *preset("sidewinding").cpg;
  EXPECT_EQ(sw.amplitude_yaw_deg, 60.0);
  EXPECT_EQ(sw.amplitude_pitch_deg, 14.0);
  EXPECT_EQ(sw.frequency_hz, 0.5);
  const double q[11] = {0, 0, 1, 1, 2, 2, 3, 3, 0, 0, 1};
  for (int k = 0; k < kJoints; ++k) EXPECT_DOUBLE_EQ(sw.phase[k], q[k] * kPi / 2.0);
  EXPECT_DOUBLE_EQ(sw.phase[2], kPi / 2.0);
  for (const auto& name : {"c_roll", "s_roll", "j_roll"}) {
    const auto p = *preset(name).cpg;
    EXPECT_EQ(p.amplitude_yaw_deg, 20.0);
    EXPECT_EQ(p.amplitude_pitch_deg, 20.0);
    EXPECT_EQ(p.frequency_hz, 0.5);
    for (int k = 0; k < kJoints; ++k) EXPECT_DOUBLE_EQ(p.phase[k], (k % 2) * kPi / 2.0);
  }
  EXPECT_TRUE(preset("c_roll").cpg->offset_deg.isZero());
  EXPECT_FALSE(preset("s_roll").cpg->offset_deg.isZero());
  // J offsets sit on the head-side third only.
  const auto j = preset("j_roll").cpg->offset_deg;
  EXPECT_FALSE(j.head<4>().isZero());
  EXPECT_TRUE(j.tail<7>().isZero());
  EXPECT_THROW(preset("slither"), ConfigError);
  for (const auto& n : gait_names()) EXPECT_NO_THROW(preset(n));
}

TEST(Poses, HexClosesAHexagon) {
  const auto q = fixed_pose("hex_pose");
  for (int k = 0; k < kJoints; ++k) EXPECT_NEAR(q[k], is_yaw_joint(k) ? deg2rad(60.0) : 0.0, 1e-15);
  // Pairs of links between yaw joints form equal sides turning by 60 deg;
  // six sides of two modules each close on the plane.
  const RobotModel m = build_default_robot();
  auto s = SystemState::zeros(m);
  for (int k = 0; k < kJoints; ++k) s.q[Layout(m).joint_q(k)] = q[k];
  const auto kin = chain_kinematics(m, s, false);
  const Vec3 gap = head_tip(m, kin) - tail_tip(m, kin);
  EXPECT_LT(std::abs(gap.z()), 1e-12);
  // Independent polygon oracle: 12 equal modules with a 60 deg turn
  // after the 1st, 3rd, ..., 11th module.
  const double len = m.links[0].length;
  Vec2 p(0.0, 0.0);
  double heading = 0.0;
  for (int i = 0; i < 12; ++i) {
    p += len * Vec2(std::cos(heading), std::sin(heading));
    if (i % 2 == 0 && i < 11) heading -= deg2rad(60.0);
  }
  EXPECT_NEAR(gap.head<2>().norm(), p.norm(), 1e-9);
  EXPECT_LT(p.norm(), 0.15);
}

TEST(Poses, SpiralBringsHeadNearTail) {
  const RobotModel m = build_default_robot();
  auto s = SystemState::zeros(m);
  const auto q = fixed_pose("spiral_pose");
  for (int k = 0; k < kJoints; ++k) s.q[Layout(m).joint_q(k)] = q[k];
  const auto kin = chain_kinematics(m, s, false);
  EXPECT_LT((head_tip(m, kin) - tail_tip(m, kin)).norm(), 0.15);
  EXPECT_LE(q.cwiseAbs().maxCoeff(), kPi / 2.0);
  // Coils must not pass through each other.
  for (int i = 0; i < 12; ++i)
    for (int j = i + 2; j < 12; ++j)
      EXPECT_GT((kin.links[i].origin - kin.links[j].origin).norm(), 2.0 * m.links[0].shape.radius);
}

TEST(Timeline, ScenarioStructure) {
  const auto flat = timeline_for_scenario("flat_push", "sidewinding", 10.0);
  ASSERT_EQ(flat.segments.size(), 1u);
  EXPECT_EQ(flat.segments[0].latch, LatchCommand::none);
  EXPECT_DOUBLE_EQ(flat.duration(), 10.0);

  auto order_of = [](const GaitTimeline& tl, LatchCommand c) {
    for (std::size_t i = 0; i < tl.segments.size(); ++i)
      if (tl.segments[i].latch == c) return static_cast<int>(i);
    return -1;
  };
  const auto lift = timeline_for_scenario("lift_place");
  EXPECT_GE(order_of(lift, LatchCommand::engage), 0);
  EXPECT_GT(order_of(lift, LatchCommand::release), order_of(lift, LatchCommand::engage));
  EXPECT_GT(order_of(lift, LatchCommand::shake), order_of(lift, LatchCommand::release));

  const auto pick = timeline_for_scenario("pick_place");
  EXPECT_GE(order_of(pick, LatchCommand::engage), 0);
  EXPECT_GT(order_of(pick, LatchCommand::release), order_of(pick, LatchCommand::engage));

  const auto ramp = timeline_for_scenario("ramp_ascent");
  ASSERT_EQ(ramp.segments.size(), pick.segments.size() + 1);
  ASSERT_TRUE(ramp.segments.back().cpg.has_value());
  EXPECT_EQ(ramp.segments.back().cpg->offset_deg, preset("s_roll").cpg->offset_deg);

  EXPECT_THROW(timeline_for_scenario("fly"), ConfigError);
  EXPECT_THROW(timeline_for_scenario("flat_push", "hex_pose"), ConfigError);
  for (const auto& tl : all_timelines()) EXPECT_NO_THROW(check(tl));
}

TEST(Timeline, StartsAtInitialPose) {
  for (const auto& tl : all_timelines()) EXPECT_EQ(sample(tl, 0.0).q_ref, tl.initial);
}

TEST(Timeline, ContinuousAcrossSegmentBoundaries) {
  for (const auto& tl : all_timelines()) {
    const auto starts = segment_starts(tl);
    double t = 0.0;
    for (std::size_t i = 0; i + 1 < tl.segments.size(); ++i) {
      t += tl.segments[i].duration;
      const auto left = sample(tl, std::nextafter(t, 0.0), &starts).q_ref;
      const auto right = sample(tl, t, &starts).q_ref;
      EXPECT_LE((left - right).cwiseAbs().maxCoeff(), 1e-9) << tl.segments[i].label;
    }
  }
}

TEST(Timeline, ReferencesRespectJointLimitsAndRatesMatch) {
  for (const auto& tl : all_timelines()) {
    const auto starts = segment_starts(tl);
    const double h = 1e-6;
    for (double t = 0.0; t <= tl.duration(); t += 0.01) {
      const auto s = sample(tl, t, &starts);
      ASSERT_LE(s.q_ref.cwiseAbs().maxCoeff(), kPi / 2.0);
      if (t > h && t + h < tl.duration()) {
        const auto a = sample(tl, t - h, &starts), b = sample(tl, t + h, &starts);
        if (a.segment != b.segment) continue;
        const JointVec fd = (b.q_ref - a.q_ref) / (2.0 * h);
        EXPECT_LE((fd - s.qd_ref).cwiseAbs().maxCoeff(), 1e-4) << t;
      }
    }
  }
}

TEST(Timeline, KeyframeInterpolationIsMonotoneCubic) {
  GaitTimeline tl;
  GaitSegment seg;
  seg.duration = 2.0;
  Keyframe k;
  k.time = 2.0;
  k.q = JointVec::Constant(1.0);
  seg.keyframes.push_back(k);
  tl.segments.push_back(seg);
  double prev = -1.0;
  for (double t = 0.0; t <= 2.0; t += 0.05) {
    const double v = sample(tl, t).q_ref[0];
    // Oracle: smoothstep x^2 (3 - 2x) on x = t / 2.
    const double x = t / 2.0;
    EXPECT_NEAR(v, x * x * (3.0 - 2.0 * x), 1e-12);
    EXPECT_GE(v, prev);
    prev = v;
  }
}

TEST(Timeline, OutOfRangeSampleThrows) {
  const auto tl = timeline_for_scenario("flat_push", "c_roll", 2.0);
  EXPECT_THROW(sample(tl, -0.01), std::out_of_range);
  EXPECT_THROW(sample(tl, 2.5), std::out_of_range);
}

TEST(Timeline, CheckRejectsMalformedSegments) {
  GaitTimeline tl;
  GaitSegment seg;
  seg.duration = 0.0;
  tl.segments.push_back(seg);
  EXPECT_THROW(check(tl), ConfigError);
  tl.segments[0].duration = 1.0;
  Keyframe k;
  k.time = 0.5;
  k.q = JointVec::Constant(2.0);
  tl.segments[0].keyframes.push_back(k);
  EXPECT_THROW(check(tl), ConfigError);
}
