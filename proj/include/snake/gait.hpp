// Open-loop central pattern generator, named gait presets and fixed poses,
// and timelines that sequence gaits, keyframes and latch events.
#pragma once

#include <cmath>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "snake/model.hpp"
#include "snake/scenario.hpp"

namespace snake {

inline constexpr int kJoints = 11;
using JointVec = Eigen::Matrix<double, kJoints, 1>;

/// Per-joint sinusoid: angle_k(t) = A_k sin(2 pi f t + phi_k) + offset_k.
struct CpgParams {
  double amplitude_yaw_deg = 0.0;
  double amplitude_pitch_deg = 0.0;
  double frequency_hz = 0.5;
  JointVec phase = JointVec::Zero();       // rad
  bool mirror = false;                     // negates yaw amplitudes and offsets
  JointVec offset_deg = JointVec::Zero();  // deg
  // Which joint index parity carries the yaw axis (J1 = yaw by default).
  bool yaw_first = true;

  bool is_yaw(int k) const { return (k % 2 == 0) == yaw_first; }
};

/// Throws ConfigError when a joint could be driven past +/-90 degrees or the
/// frequency is not positive.
inline void check(const CpgParams& p) {
  if (!(p.frequency_hz > 0.0)) throw ConfigError("gait.frequency must be > 0");
  for (int k = 0; k < kJoints; ++k) {
    const double a = p.is_yaw(k) ? p.amplitude_yaw_deg : p.amplitude_pitch_deg;
    if (std::abs(a) + std::abs(p.offset_deg[k]) > 90.0 + 1e-9)
      throw ConfigError("gait amplitude + offset exceeds 90 deg at J" + std::to_string(k + 1));
  }
}

inline JointVec cpg_angles(const CpgParams& p, double t) {
  if (t < 0.0) throw std::domain_error("cpg_angles: negative time");
  JointVec q;
  // Reduce the argument so that t and t + 1/f give the same angle.
  const double cycles = t * p.frequency_hz;
  const double phase_t = 2.0 * kPi * (cycles - std::floor(cycles));
  for (int k = 0; k < kJoints; ++k) {
    const bool yaw = p.is_yaw(k);
    const double sign = (yaw && p.mirror) ? -1.0 : 1.0;
    const double a = deg2rad(yaw ? p.amplitude_yaw_deg : p.amplitude_pitch_deg);
    q[k] = sign * (a * std::sin(phase_t + p.phase[k]) + deg2rad(p.offset_deg[k]));
  }
  return q;
}

/// Joint rates of cpg_angles.
inline JointVec cpg_rates(const CpgParams& p, double t) {
  JointVec qd;
  const double w = 2.0 * kPi * p.frequency_hz;
  const double cycles = t * p.frequency_hz;
  const double phase_t = 2.0 * kPi * (cycles - std::floor(cycles));
  for (int k = 0; k < kJoints; ++k) {
    const bool yaw = p.is_yaw(k);
    const double sign = (yaw && p.mirror) ? -1.0 : 1.0;
    const double a = deg2rad(yaw ? p.amplitude_yaw_deg : p.amplitude_pitch_deg);
    qd[k] = sign * a * w * std::cos(phase_t + p.phase[k]);
  }
  return qd;
}

// ---------------------------------------------------------------------------
// Presets

inline const std::vector<std::string>& gait_names() {
  static const std::vector<std::string> names = {"sidewinding", "c_roll",      "s_roll",
                                                 "j_roll",      "spiral_pose", "hex_pose"};
  return names;
}

inline JointVec phase_pattern(std::initializer_list<double> quarter_turns) {
  JointVec p;
  int i = 0;
  for (double v : quarter_turns) p[i++] = v * kPi / 2.0;
  return p;
}

/// Authored offset tables (degrees, J1..J11) layered on the C-roll phases
/// to bend the rolling body into S and J curves. Tuned by rollout; the S
/// curve bends the pitch joints only, larger offsets cost disproportionate
/// locomotion work.
struct ShapeTables {
  static JointVec s_offsets() {
    JointVec o;
    o << 0, 6, 0, 4, 0, 0, 0, -4, 0, -6, 0;
    return o;
  }
  static JointVec j_offsets() {
    JointVec o;
    o << 30, 30, 24, 0, 0, 0, 0, 0, 0, 0, 0;
    return o;
  }
};

struct GaitPreset {
  std::string name;
  std::optional<CpgParams> cpg;  // rhythmic gaits
  std::optional<JointVec> pose;  // fixed poses (rad)
};

inline JointVec fixed_pose(const std::string& name);

inline GaitPreset preset(const std::string& name) {
  GaitPreset g;
  g.name = name;
  CpgParams p;
  if (name == "sidewinding") {
    p.amplitude_yaw_deg = 60.0;
    p.amplitude_pitch_deg = 14.0;
    p.frequency_hz = 0.5;
    p.phase = phase_pattern({0, 0, 1, 1, 2, 2, 3, 3, 0, 0, 1});
    g.cpg = p;
  } else if (name == "c_roll" || name == "s_roll" || name == "j_roll") {
    p.amplitude_yaw_deg = 20.0;
    p.amplitude_pitch_deg = 20.0;
    p.frequency_hz = 0.5;
    p.phase = phase_pattern({0, 1, 0, 1, 0, 1, 0, 1, 0, 1, 0});
    if (name == "s_roll") p.offset_deg = ShapeTables::s_offsets();
    if (name == "j_roll") p.offset_deg = ShapeTables::j_offsets();
    g.cpg = p;
  } else if (name == "spiral_pose" || name == "hex_pose") {
    g.pose = fixed_pose(name);
  } else {
    throw ConfigError("unknown gait '" + name + "'");
  }
  return g;
}

/// Closed-curve poses. hex: 60 deg on each of the six yaw joints closes a
/// hexagon (exterior angles sum to 360). spiral: tightening yaw curvature
/// with a small constant pitch so the tail passes beside the head.
inline JointVec fixed_pose(const std::string& name) {
  JointVec q = JointVec::Zero();
  if (name == "hex_pose") {
    for (int k = 0; k < kJoints; k += 2) q[k] = deg2rad(60.0);
  } else if (name == "spiral_pose") {
    const double yaw[6] = {52, 55, 58, 61, 64, 67};
    for (int i = 0; i < 6; ++i) q[2 * i] = deg2rad(yaw[i]);
    for (int k = 1; k < kJoints; k += 2) q[k] = deg2rad(4.0);
  } else {
    throw ConfigError("unknown fixed pose '" + name + "'");
  }
  return q;
}

// ---------------------------------------------------------------------------
// Timelines

enum class LatchCommand { none, engage, release, shake };

inline std::string to_string(LatchCommand c) {
  switch (c) {
    case LatchCommand::none: return "none";
    case LatchCommand::engage: return "engage";
    case LatchCommand::release: return "release";
    case LatchCommand::shake: return "shake";
  }
  return "?";
}

/// Latch engagement tolerance between head tip and docking socket.
inline constexpr double kLatchPositionTol = 0.02;
inline constexpr double kLatchAngleTol = 0.2;

struct Keyframe {
  double time = 0.0;  // seconds from segment start
  JointVec q = JointVec::Zero();
};

struct GaitSegment {
  double duration = 0.0;
  std::string label;
  // Exactly one of these drives the segment.
  std::optional<CpgParams> cpg;
  std::vector<Keyframe> keyframes;
  // Gait segments ease in from the previous reference over this time.
  double blend = 1.0;
  LatchCommand latch = LatchCommand::none;
};

struct GaitTimeline {
  JointVec initial = JointVec::Zero();
  std::vector<GaitSegment> segments;

  double duration() const {
    double d = 0.0;
    for (const auto& s : segments) d += s.duration;
    return d;
  }
};

inline void check(const GaitTimeline& tl) {
  for (std::size_t i = 0; i < tl.segments.size(); ++i) {
    const auto& s = tl.segments[i];
    const std::string where = "segment " + std::to_string(i) + " (" + s.label + ")";
    if (!(s.duration > 0.0)) throw ConfigError(where + ": duration must be > 0");
    if (s.cpg && !s.keyframes.empty()) throw ConfigError(where + ": both gait and keyframes");
    if (s.cpg) check(*s.cpg);
    double prev = -1.0;
    for (const auto& k : s.keyframes) {
      if (k.time < 0.0 || k.time <= prev)
        throw ConfigError(where + ": keyframe times must increase");
      if (k.time > s.duration + 1e-12) throw ConfigError(where + ": keyframe past segment end");
      if (k.q.cwiseAbs().maxCoeff() > kPi / 2.0 + 1e-12)
        throw ConfigError(where + ": keyframe exceeds joint limit");
      prev = k.time;
    }
  }
}

inline double ease(double x) {
  x = std::clamp(x, 0.0, 1.0);
  return x * x * (3.0 - 2.0 * x);
}
inline double ease_rate(double x) {
  if (x <= 0.0 || x >= 1.0) return 0.0;
  return 6.0 * x * (1.0 - x);
}

struct TimelineSample {
  JointVec q_ref = JointVec::Zero();
  JointVec qd_ref = JointVec::Zero();
  LatchCommand latch = LatchCommand::none;
  int segment = -1;
  bool segment_start = false;  // first sample at or after the segment start
};

namespace detail {

inline JointVec clamp_to_limits(JointVec q) {
  return q.cwiseMax(-kPi / 2.0).cwiseMin(kPi / 2.0);
}

/// Reference of segment `seg` at local time `tau`, entered from `start`.
inline void segment_reference(const GaitSegment& seg, const JointVec& start, double tau,
                              JointVec& q, JointVec& qd) {
  if (seg.cpg) {
    const JointVec target = cpg_angles(*seg.cpg, tau);
    const JointVec target_rate = cpg_rates(*seg.cpg, tau);
    if (seg.blend > 0.0 && tau < seg.blend) {
      const double x = tau / seg.blend;
      const double e = ease(x);
      q = start + e * (target - start);
      qd = e * target_rate + ease_rate(x) / seg.blend * (target - start);
    } else {
      q = target;
      qd = target_rate;
    }
    return;
  }
  JointVec from = start;
  double t0 = 0.0;
  for (const auto& k : seg.keyframes) {
    if (tau <= k.time) {
      const double span = k.time - t0;
      const double x = span > 0.0 ? (tau - t0) / span : 1.0;
      q = from + ease(x) * (k.q - from);
      qd = span > 0.0 ? Eigen::Matrix<double, kJoints, 1>(ease_rate(x) / span * (k.q - from))
                      : JointVec::Zero();
      return;
    }
    from = k.q;
    t0 = k.time;
  }
  q = from;
  qd.setZero();
}

}  // namespace detail

/// Reference at the end of each segment (the start of the next).
inline std::vector<JointVec> segment_starts(const GaitTimeline& tl) {
  std::vector<JointVec> starts;
  JointVec cur = tl.initial;
  for (const auto& seg : tl.segments) {
    starts.push_back(cur);
    JointVec q, qd;
    detail::segment_reference(seg, cur, seg.duration, q, qd);
    cur = q;
  }
  starts.push_back(cur);
  return starts;
}

/// Reference at time t. Within a segment the reference is continuous; the
/// segment that owns a boundary instant is the later one.
inline TimelineSample sample(const GaitTimeline& tl, double t,
                             const std::vector<JointVec>* starts = nullptr) {
  const double total = tl.duration();
  if (t < 0.0 || t > total + 1e-9)
    throw std::out_of_range("sample: t = " + std::to_string(t) + " outside [0, " +
                            std::to_string(total) + "]");
  std::vector<JointVec> local;
  if (!starts) {
    local = segment_starts(tl);
    starts = &local;
  }
  TimelineSample out;
  if (tl.segments.empty()) {
    out.q_ref = detail::clamp_to_limits(tl.initial);
    return out;
  }
  double t0 = 0.0;
  for (std::size_t i = 0; i < tl.segments.size(); ++i) {
    const auto& seg = tl.segments[i];
    const bool last = i + 1 == tl.segments.size();
    if (t < t0 + seg.duration || last) {
      const double tau = std::min(t - t0, seg.duration);
      detail::segment_reference(seg, (*starts)[i], tau, out.q_ref, out.qd_ref);
      out.q_ref = detail::clamp_to_limits(out.q_ref);
      out.latch = seg.latch;
      out.segment = static_cast<int>(i);
      return out;
    }
    t0 += seg.duration;
  }
  return out;
}

/// Timeline with a single rhythmic gait, easing in from the straight pose.
inline GaitTimeline gait_timeline(const CpgParams& p, double duration) {
  GaitTimeline tl;
  GaitSegment seg;
  seg.label = "gait";
  seg.duration = duration;
  seg.cpg = p;
  seg.blend = 1.0;
  tl.segments.push_back(seg);
  return tl;
}

/// Timeline holding a fixed pose after easing into it.
inline GaitTimeline pose_timeline(const JointVec& pose, double duration) {
  GaitTimeline tl;
  GaitSegment seg;
  seg.label = "pose";
  seg.duration = duration;
  seg.keyframes.push_back({std::min(1.0, duration), pose});
  tl.segments.push_back(seg);
  return tl;
}

inline GaitTimeline preset_timeline(const GaitPreset& g, double duration) {
  return g.cpg ? gait_timeline(*g.cpg, duration) : pose_timeline(*g.pose, duration);
}

// ---------------------------------------------------------------------------
// Scenario maneuvers
//
// Joint sign conventions used below (robot lying on its side, head at +x):
// positive J2/J4 raise the head side; negative yaw on the tail joints curls
// the tail toward +y; with the front four links standing vertical, positive
// J1/J3 tip the upper part toward -y.

namespace detail {

inline JointVec deg(std::initializer_list<double> v) {
  JointVec q = JointVec::Zero();
  int i = 0;
  for (double d : v) q[i++] = deg2rad(d);
  return q;
}

inline GaitSegment keyframed(std::string label, double duration,
                             std::vector<std::pair<double, std::initializer_list<double>>> kfs,
                             LatchCommand latch = LatchCommand::none) {
  GaitSegment s;
  s.label = std::move(label);
  s.duration = duration;
  s.latch = latch;
  for (const auto& [t, q] : kfs) s.keyframes.push_back({t, deg(q)});
  return s;
}

// Tail curled into a U toward +y; widens the support polygon while the
// front of the body stands up.
inline std::vector<GaitSegment> raise_column(bool hold_latch) {
  using L = LatchCommand;
  const L hold = hold_latch ? L::engage : L::none;
  return {
      keyframed("hold", 0.5, {{0.5, {0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0}}}, hold),
      keyframed("curl_tail", 2.0, {{2.0, {0, 0, 0, 0, 0, 0, -60, 0, -60, 0, -60}}}),
      keyframed("raise_head", 2.0, {{2.0, {0, 85, 0, 0, 0, 0, -60, 0, -60, 0, -60}}}),
      keyframed("stand_column", 3.0,
                {{1.0, {0, 70, 0, 15, 0, 0, -60, 0, -60, 0, -60}},
                 {2.0, {0, 40, 0, 45, 0, 0, -60, 0, -60, 0, -60}},
                 {3.0, {0, 0, 0, 88, 0, 0, -60, 0, -60, 0, -60}}}),
  };
}

inline std::vector<GaitSegment> lift_place_segments() {
  using L = LatchCommand;
  auto segs = raise_column(true);
  // Fold the head over to -y, level, above the platform.
  const std::initializer_list<double> over = {88, 0, 0, 88, 0, 0, -60, 0, -60, 0, -60};
  const std::initializer_list<double> shaken = {80, 0, 0, 88, 0, 0, -60, 0, -60, 0, -60};
  segs.push_back(keyframed("fold_over", 3.0, {{3.0, over}}));
  segs.push_back(keyframed("settle", 2.0, {{2.0, over}}));
  segs.push_back(keyframed("release", 1.0, {{1.0, over}}, L::release));
  segs.push_back(keyframed("shake", 1.5,
                           {{0.375, shaken}, {0.75, over}, {1.125, shaken}, {1.5, over}},
                           L::shake));
  segs.push_back(keyframed("retract", 2.0, {{2.0, {0, 0, 0, 88, 0, 0, -60, 0, -60, 0, -60}}}));
  segs.push_back(keyframed("lower", 3.0, {{3.0, {0, 0, 0, 0, 0, 0, -60, 0, -60, 0, -60}}}));
  segs.push_back(keyframed("rest", 1.0, {{1.0, {0, 0, 0, 0, 0, 0, -60, 0, -60, 0, -60}}}));
  return segs;
}

inline std::vector<GaitSegment> pick_place_segments() {
  using L = LatchCommand;
  auto segs = raise_column(false);
  // Tilt at J3 and fold J1 so the head comes down level onto the socket.
  const std::initializer_list<double> reach = {57, 0, 31, 88, 0, 0, -60, 0, -60, 0, -60};
  segs.push_back(keyframed("align", 3.0, {{3.0, reach}}, L::engage));
  segs.push_back(keyframed("dock", 1.0, {{1.0, reach}}, L::engage));
  const std::initializer_list<double> up = {0, 0, 0, 88, 0, 0, -60, 0, -60, 0, -60};
  const std::initializer_list<double> front = {-88, 0, 0, 88, 0, 0, -60, 0, -60, 0, -60};
  // J1 + J3 held at -88 keeps the head level while the upper column tips
  // down toward +y.
  const std::initializer_list<double> low = {0, 0, -88, 88, 0, 0, -60, 0, -60, 0, -60};
  segs.push_back(keyframed("lift_off", 1.5, {{1.5, {80, 0, 0, 88, 0, 0, -60, 0, -60, 0, -60}}}));
  segs.push_back(keyframed("carry_over", 5.0, {{2.5, up}, {5.0, front}}));
  segs.push_back(keyframed("set_down", 3.0, {{3.0, low}}));
  segs.push_back(keyframed("release", 1.0, {{1.0, low}}, L::release));
  segs.push_back(keyframed("withdraw", 3.0, {{3.0, up}}));
  segs.push_back(keyframed("lower_column", 4.0,
                           {{1.33, {0, 40, 0, 45, 0, 0, -60, 0, -60, 0, -60}},
                            {2.67, {0, 70, 0, 15, 0, 0, -60, 0, -60, 0, -60}},
                            {4.0, {0, 85, 0, 0, 0, 0, -60, 0, -60, 0, -60}}}));
  segs.push_back(keyframed("lie_down", 2.0, {{2.0, {0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0}}}));
  return segs;
}

}  // namespace detail

/// Push duration of the ramp ascent's final s_roll segment.
inline constexpr double kRampPushDuration = 64.0;

/// Reference timeline for a scenario. `gait` and `duration` apply to
/// flat_push only.
inline GaitTimeline timeline_for_scenario(const std::string& name,
                                          const std::string& gait = "sidewinding",
                                          double duration = 10.0) {
  if (!is_scenario(name)) throw ConfigError("unknown scenario '" + name + "'");
  GaitTimeline tl;
  if (name == "flat_push") {
    const auto g = preset(gait);
    if (!g.cpg) throw ConfigError("flat_push needs a rhythmic gait, got '" + gait + "'");
    return gait_timeline(*g.cpg, duration);
  }
  if (name == "lift_place") {
    tl.segments = detail::lift_place_segments();
  } else {
    tl.segments = detail::pick_place_segments();
  }
  if (name == "ramp_ascent") {
    GaitSegment push;
    push.label = "s_roll";
    push.duration = kRampPushDuration;
    push.cpg = *preset("s_roll").cpg;
    tl.segments.push_back(push);
  }
  return tl;
}

}  // namespace snake
