// Run configuration: JSON loading (nested objects or dotted keys), defaults,
// validation, and resolution into the model, scene, timeline and rollout
// settings a run uses. Every key is listed once in config_fields(), which
// drives parsing, the resolved dump written to run_manifest.json, and the
// manifest hash.
#pragma once

#include <cstdint>
#include <fstream>
#include <functional>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "snake/gait.hpp"
#include "snake/metrics.hpp"
#include "snake/model.hpp"
#include "snake/planner.hpp"
#include "snake/rollout.hpp"
#include "snake/scenario.hpp"

namespace snake {

using Json = nlohmann::ordered_json;

struct GaitOverrides {
  std::optional<double> amplitude_yaw_deg;
  std::optional<double> amplitude_pitch_deg;
  std::optional<double> frequency;
  std::optional<JointVec> phase;  // rad
  std::optional<bool> mirror;
  std::optional<JointVec> offset_deg;
};

struct PlannerConfig {
  int budget = 200;
  CostWeights weights;
  std::string seed_gait = "c_roll";
  double horizon = 3.0;
  // Target box position; when unset the goal is the initial box position
  // plus goal_offset.
  std::optional<Vec3> goal;
  Vec3 goal_offset = Vec3(0.0, 0.5, 0.0);
};

struct RunConfig {
  std::string scenario = "flat_push";
  std::string gait = "sidewinding";
  GaitOverrides gait_overrides;
  // flat_push defaults to 10 s; the scripted scenarios run their whole
  // timeline unless a shorter duration is given.
  std::optional<double> duration;
  unsigned seed = 0;

  Vec3 gravity = Vec3(0.0, 0.0, -9.8);
  BoxSpec box;
  double platform_height = 0.3;
  double ramp_angle_deg = 16.7;
  double link_mass = 0.5;
  bool yaw_first = true;
  double kp = 50.0;
  double kd = 1.0;
  RolloutConfig rollout;
  WorkConvention work_convention = WorkConvention::absolute;
  PlannerConfig planner;
  std::string output_dir = "out";
};

// ---------------------------------------------------------------------------
// Key table

struct ConfigField {
  std::string key;
  std::function<Json(const RunConfig&)> get;
  std::function<void(RunConfig&, const Json&)> set;
};

namespace detail {

inline double as_number(const std::string& key, const Json& v) {
  if (!v.is_number()) throw ConfigError("config key '" + key + "': expected a number");
  return v.get<double>();
}

inline bool as_bool(const std::string& key, const Json& v) {
  if (!v.is_boolean()) throw ConfigError("config key '" + key + "': expected true or false");
  return v.get<bool>();
}

inline std::string as_string(const std::string& key, const Json& v) {
  if (!v.is_string()) throw ConfigError("config key '" + key + "': expected a string");
  return v.get<std::string>();
}

inline int as_int(const std::string& key, const Json& v) {
  if (!v.is_number_integer()) throw ConfigError("config key '" + key + "': expected an integer");
  return v.get<int>();
}

template <int N>
Eigen::Matrix<double, N, 1> as_vector(const std::string& key, const Json& v) {
  if (!v.is_array() || v.size() != N)
    throw ConfigError("config key '" + key + "': expected an array of " + std::to_string(N) +
                      " numbers");
  Eigen::Matrix<double, N, 1> out;
  for (int i = 0; i < N; ++i) out[i] = as_number(key, v[i]);
  return out;
}

template <typename V>
Json vector_json(const V& v) {
  Json a = Json::array();
  for (int i = 0; i < v.size(); ++i) a.push_back(v[i]);
  return a;
}

template <typename T>
Json optional_json(const std::optional<T>& v) {
  if (!v) return nullptr;
  if constexpr (std::is_arithmetic_v<T>) {
    return *v;
  } else {
    return vector_json(*v);
  }
}

inline ForceMode parse_force_mode(const std::string& s) {
  if (s == "penalty") return ForceMode::penalty;
  if (s == "qp") return ForceMode::qp;
  throw ConfigError("planner.force_mode must be 'penalty' or 'qp', got '" + s + "'");
}

inline IntegratorScheme parse_scheme(const std::string& s) {
  if (s == "semi_implicit_euler") return IntegratorScheme::semi_implicit_euler;
  if (s == "rk4") return IntegratorScheme::rk4;
  throw ConfigError("integrator.scheme must be 'semi_implicit_euler' or 'rk4', got '" + s + "'");
}

inline WorkConvention parse_convention(const std::string& s) {
  if (s == "absolute") return WorkConvention::absolute;
  if (s == "net") return WorkConvention::net;
  throw ConfigError("metrics.work_convention must be 'absolute' or 'net', got '" + s + "'");
}

}  // namespace detail

/// Every accepted key in manifest order.
inline const std::vector<ConfigField>& config_fields() {
  using namespace detail;
  static const std::vector<ConfigField> fields = [] {
    std::vector<ConfigField> f;
    auto num = [&f](std::string key, auto getref) {
      f.push_back({key, [getref](const RunConfig& c) { return Json(getref(const_cast<RunConfig&>(c))); },
                   [getref, key](RunConfig& c, const Json& v) { getref(c) = as_number(key, v); }});
    };
    auto flag = [&f](std::string key, auto getref) {
      f.push_back({key, [getref](const RunConfig& c) { return Json(getref(const_cast<RunConfig&>(c))); },
                   [getref, key](RunConfig& c, const Json& v) { getref(c) = as_bool(key, v); }});
    };

    f.push_back({"scenario", [](const RunConfig& c) { return Json(c.scenario); },
                 [](RunConfig& c, const Json& v) { c.scenario = as_string("scenario", v); }});
    f.push_back({"duration", [](const RunConfig& c) { return optional_json(c.duration); },
                 [](RunConfig& c, const Json& v) {
                   if (v.is_null()) c.duration.reset();
                   else c.duration = as_number("duration", v);
                 }});
    f.push_back({"seed", [](const RunConfig& c) { return Json(c.seed); },
                 [](RunConfig& c, const Json& v) {
                   const int s = as_int("seed", v);
                   if (s < 0) throw ConfigError("config key 'seed': must be >= 0");
                   c.seed = static_cast<unsigned>(s);
                 }});

    // gravity: a magnitude along -z or a full vector.
    f.push_back({"gravity", [](const RunConfig& c) { return vector_json(c.gravity); },
                 [](RunConfig& c, const Json& v) {
                   if (v.is_number()) c.gravity = Vec3(0.0, 0.0, -v.get<double>());
                   else c.gravity = as_vector<3>("gravity", v);
                 }});
    num("box.mass", [](RunConfig& c) -> double& { return c.box.mass; });
    // box.size: a cube edge or three edge lengths.
    f.push_back({"box.size", [](const RunConfig& c) { return vector_json(c.box.size); },
                 [](RunConfig& c, const Json& v) {
                   if (v.is_number()) c.box.size = Vec3::Constant(v.get<double>());
                   else c.box.size = as_vector<3>("box.size", v);
                 }});
    f.push_back({"box.position", [](const RunConfig& c) { return vector_json(c.box.position); },
                 [](RunConfig& c, const Json& v) { c.box.position = as_vector<3>("box.position", v); }});
    num("platform.height", [](RunConfig& c) -> double& { return c.platform_height; });
    num("ramp.angle_deg", [](RunConfig& c) -> double& { return c.ramp_angle_deg; });
    num("robot.link_mass", [](RunConfig& c) -> double& { return c.link_mass; });
    flag("robot.yaw_first", [](RunConfig& c) -> bool& { return c.yaw_first; });
    num("joints.kp", [](RunConfig& c) -> double& { return c.kp; });
    num("joints.kd", [](RunConfig& c) -> double& { return c.kd; });

    num("contact.k", [](RunConfig& c) -> double& { return c.rollout.contact.normal.k; });
    num("contact.b", [](RunConfig& c) -> double& { return c.rollout.contact.normal.b; });
    num("contact.w", [](RunConfig& c) -> double& { return c.rollout.contact.normal.w; });
    num("contact.mu_s", [](RunConfig& c) -> double& { return c.rollout.contact.friction.mu_s; });
    num("contact.mu_d", [](RunConfig& c) -> double& { return c.rollout.contact.friction.mu_d; });
    num("contact.v_crit", [](RunConfig& c) -> double& { return c.rollout.contact.friction.v_crit; });
    flag("contact.self", [](RunConfig& c) -> bool& { return c.rollout.contact.self_contact; });

    num("integrator.dt", [](RunConfig& c) -> double& { return c.rollout.integrator.dt; });
    f.push_back({"integrator.scheme",
                 [](const RunConfig& c) { return Json(to_string(c.rollout.integrator.scheme)); },
                 [](RunConfig& c, const Json& v) {
                   c.rollout.integrator.scheme = parse_scheme(as_string("integrator.scheme", v));
                 }});

    f.push_back({"gait.name", [](const RunConfig& c) { return Json(c.gait); },
                 [](RunConfig& c, const Json& v) { c.gait = as_string("gait.name", v); }});
    auto opt_num = [&f](std::string key, auto getref) {
      f.push_back({key, [getref](const RunConfig& c) { return optional_json(getref(const_cast<RunConfig&>(c))); },
                   [getref, key](RunConfig& c, const Json& v) {
                     if (v.is_null()) getref(c).reset();
                     else getref(c) = as_number(key, v);
                   }});
    };
    auto opt_joints = [&f](std::string key, auto getref) {
      f.push_back({key, [getref](const RunConfig& c) { return optional_json(getref(const_cast<RunConfig&>(c))); },
                   [getref, key](RunConfig& c, const Json& v) {
                     if (v.is_null()) getref(c).reset();
                     else getref(c) = as_vector<kJoints>(key, v);
                   }});
    };
    opt_num("gait.amplitude_yaw_deg",
            [](RunConfig& c) -> std::optional<double>& { return c.gait_overrides.amplitude_yaw_deg; });
    opt_num("gait.amplitude_pitch_deg",
            [](RunConfig& c) -> std::optional<double>& { return c.gait_overrides.amplitude_pitch_deg; });
    opt_num("gait.frequency",
            [](RunConfig& c) -> std::optional<double>& { return c.gait_overrides.frequency; });
    opt_joints("gait.phase",
               [](RunConfig& c) -> std::optional<JointVec>& { return c.gait_overrides.phase; });
    f.push_back({"gait.mirror",
                 [](const RunConfig& c) {
                   return c.gait_overrides.mirror ? Json(*c.gait_overrides.mirror) : Json(nullptr);
                 },
                 [](RunConfig& c, const Json& v) {
                   if (v.is_null()) c.gait_overrides.mirror.reset();
                   else c.gait_overrides.mirror = as_bool("gait.mirror", v);
                 }});
    opt_joints("gait.offset",
               [](RunConfig& c) -> std::optional<JointVec>& { return c.gait_overrides.offset_deg; });

    num("output.sample_hz", [](RunConfig& c) -> double& { return c.rollout.sample_hz; });
    flag("output.full_rate", [](RunConfig& c) -> bool& { return c.rollout.full_rate; });
    num("output.objective_hz", [](RunConfig& c) -> double& { return c.rollout.objective_hz; });
    flag("output.contact_objective",
         [](RunConfig& c) -> bool& { return c.rollout.contact_objective; });
    f.push_back({"output.dir", [](const RunConfig& c) { return Json(c.output_dir); },
                 [](RunConfig& c, const Json& v) { c.output_dir = as_string("output.dir", v); }});
    f.push_back({"metrics.work_convention",
                 [](const RunConfig& c) { return Json(to_string(c.work_convention)); },
                 [](RunConfig& c, const Json& v) {
                   c.work_convention = parse_convention(as_string("metrics.work_convention", v));
                 }});

    f.push_back({"planner.budget", [](const RunConfig& c) { return Json(c.planner.budget); },
                 [](RunConfig& c, const Json& v) { c.planner.budget = as_int("planner.budget", v); }});
    num("planner.weights.goal", [](RunConfig& c) -> double& { return c.planner.weights.goal; });
    num("planner.weights.contact", [](RunConfig& c) -> double& { return c.planner.weights.contact; });
    num("planner.weights.torque", [](RunConfig& c) -> double& { return c.planner.weights.torque; });
    f.push_back({"planner.force_mode",
                 [](const RunConfig& c) { return Json(to_string(c.rollout.force_mode)); },
                 [](RunConfig& c, const Json& v) {
                   c.rollout.force_mode = parse_force_mode(as_string("planner.force_mode", v));
                 }});
    f.push_back({"planner.seed_gait", [](const RunConfig& c) { return Json(c.planner.seed_gait); },
                 [](RunConfig& c, const Json& v) {
                   c.planner.seed_gait = as_string("planner.seed_gait", v);
                 }});
    num("planner.horizon", [](RunConfig& c) -> double& { return c.planner.horizon; });
    f.push_back({"planner.goal", [](const RunConfig& c) { return optional_json(c.planner.goal); },
                 [](RunConfig& c, const Json& v) {
                   if (v.is_null()) c.planner.goal.reset();
                   else c.planner.goal = as_vector<3>("planner.goal", v);
                 }});
    f.push_back({"planner.goal_offset",
                 [](const RunConfig& c) { return vector_json(c.planner.goal_offset); },
                 [](RunConfig& c, const Json& v) {
                   c.planner.goal_offset = as_vector<3>("planner.goal_offset", v);
                 }});
    return f;
  }();
  return fields;
}

namespace detail {

/// Nested objects become dotted keys; arrays and scalars are leaves. A few
/// keys take an object of sub-keys, so a leaf key may also appear nested
/// (e.g. {"planner": {"weights": {"goal": 5}}}).
inline void flatten(const Json& j, const std::string& prefix, std::vector<std::pair<std::string, Json>>& out) {
  for (auto it = j.begin(); it != j.end(); ++it) {
    const std::string key = prefix.empty() ? it.key() : prefix + "." + it.key();
    if (it->is_object()) flatten(*it, key, out);
    else out.emplace_back(key, *it);
  }
}

}  // namespace detail

/// Applies `j` on top of `base`. Unknown keys and type mismatches throw
/// ConfigError naming the key.
inline RunConfig apply_json(RunConfig base, const Json& j) {
  if (!j.is_object()) throw ConfigError("config must be a JSON object");
  std::vector<std::pair<std::string, Json>> entries;
  detail::flatten(j, "", entries);
  for (const auto& [key, value] : entries) {
    const ConfigField* field = nullptr;
    for (const auto& f : config_fields())
      if (f.key == key) field = &f;
    if (!field) throw ConfigError("unknown config key '" + key + "'");
    field->set(base, value);
  }
  return base;
}

inline RunConfig parse_config(const std::string& text) {
  Json j;
  try {
    j = Json::parse(text);
  } catch (const Json::parse_error& e) {
    throw ConfigError(std::string("config is not valid JSON: ") + e.what());
  }
  return apply_json(RunConfig{}, j);
}

inline RunConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read config file '" + path + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str());
}

/// Flat, ordered dump of every key with its resolved value.
inline Json config_json(const RunConfig& c) {
  Json j = Json::object();
  for (const auto& f : config_fields()) j[f.key] = f.get(c);
  return j;
}

// ---------------------------------------------------------------------------
// Resolution

inline RobotModel resolve_model(const RunConfig& c) {
  RobotModel m = build_default_robot(c.link_mass, c.yaw_first);
  for (auto& j : m.joints) {
    j.internal_stiffness = c.kp;
    j.internal_damping = c.kd;
  }
  return m;
}

inline SceneSpec resolve_scene(const RunConfig& c) {
  SceneSpec base;
  base.gravity = c.gravity;
  base.box = c.box;
  // The socket keeps its place on the -x face when the box is resized.
  base.box.socket_position = Vec3(-c.box.size.x() / 2.0, 0.0, -c.box.size.z() / 4.0);
  base.platform.height = c.platform_height;
  base.ramp.angle_deg = c.ramp_angle_deg;
  return scenario_scene(c.scenario, base);
}

/// The rhythmic gait for flat_push after overrides, or nullopt for a
/// fixed pose.
inline std::optional<CpgParams> resolve_gait(const RunConfig& c) {
  const GaitPreset g = preset(c.gait);
  if (!g.cpg) return std::nullopt;
  CpgParams p = *g.cpg;
  const auto& o = c.gait_overrides;
  if (o.amplitude_yaw_deg) p.amplitude_yaw_deg = *o.amplitude_yaw_deg;
  if (o.amplitude_pitch_deg) p.amplitude_pitch_deg = *o.amplitude_pitch_deg;
  if (o.frequency) p.frequency_hz = *o.frequency;
  if (o.phase) p.phase = *o.phase;
  if (o.mirror) p.mirror = *o.mirror;
  if (o.offset_deg) p.offset_deg = *o.offset_deg;
  p.yaw_first = c.yaw_first;
  return p;
}

/// Reference timeline. Gait keys apply to flat_push; the scripted
/// scenarios ignore them.
inline GaitTimeline resolve_timeline(const RunConfig& c) {
  if (c.scenario != "flat_push") return timeline_for_scenario(c.scenario);
  const double T = c.duration.value_or(10.0);
  if (const auto p = resolve_gait(c)) {
    check(*p);
    return gait_timeline(*p, T);
  }
  return preset_timeline(preset(c.gait), T);
}

inline double resolve_duration(const RunConfig& c, const GaitTimeline& tl) {
  return c.duration.value_or(tl.duration());
}

/// Validation issues, empty when the config can run.
inline ValidationReport validate_config(const RunConfig& c) {
  ValidationReport r;
  auto guard = [&r](const std::string& path, auto fn) {
    try {
      fn();
    } catch (const std::exception& e) {
      r.add(path, e.what());
    }
  };
  if (!is_scenario(c.scenario)) r.add("scenario", "unknown scenario '" + c.scenario + "'");
  bool gait_known = false;
  for (const auto& n : gait_names()) gait_known |= n == c.gait;
  if (!gait_known) r.add("gait.name", "unknown gait '" + c.gait + "'");
  if (c.duration && !(*c.duration > 0.0)) r.add("duration", "must be > 0");
  if (!(c.link_mass > 0.0)) r.add("robot.link_mass", "must be > 0");
  if (!(c.kp >= 0.0)) r.add("joints.kp", "must be >= 0");
  if (!(c.kd >= 0.0)) r.add("joints.kd", "must be >= 0");
  if (!c.gravity.allFinite()) r.add("gravity", "must be finite");
  guard("integrator", [&] { check(c.rollout); });
  if (!(c.rollout.objective_hz > 0.0)) r.add("output.objective_hz", "must be > 0");
  if (c.planner.budget < 1) r.add("planner.budget", "must be >= 1");
  if (!(c.planner.horizon > 0.0)) r.add("planner.horizon", "must be > 0");
  {
    const auto& w = c.planner.weights;
    if (!(w.goal >= 0.0)) r.add("planner.weights.goal", "must be >= 0");
    if (!(w.contact >= 0.0)) r.add("planner.weights.contact", "must be >= 0");
    if (!(w.torque >= 0.0)) r.add("planner.weights.torque", "must be >= 0");
  }
  guard("planner.seed_gait", [&] {
    if (!preset(c.planner.seed_gait).cpg)
      throw ConfigError("seed gait must be rhythmic, got '" + c.planner.seed_gait + "'");
  });
  if (c.output_dir.empty()) r.add("output.dir", "must not be empty");
  if (!r.ok()) return r;

  const RobotModel m = resolve_model(c);
  const SceneSpec scene = resolve_scene(c);
  for (auto& issue : validate(m, scene, c.rollout.contact).issues) r.issues.push_back(issue);
  guard("gait", [&] {
    const auto tl = resolve_timeline(c);
    if (c.duration && *c.duration > tl.duration() + 1e-9)
      throw ConfigError("duration exceeds the " + c.scenario + " timeline (" +
                        std::to_string(tl.duration()) + " s)");
  });
  return r;
}

inline void require_valid(const RunConfig& c) {
  const auto r = validate_config(c);
  if (r.ok()) return;
  std::string msg = "invalid config:";
  for (const auto& i : r.issues) msg += "\n  " + i.path + ": " + i.message;
  throw ConfigError(msg);
}

inline RolloutSetup resolve_setup(const RunConfig& c) {
  require_valid(c);
  RolloutSetup su;
  su.model = resolve_model(c);
  su.scene = resolve_scene(c);
  su.initial = initial_pose(su.model, su.scene, c.scenario, c.rollout.contact.normal);
  su.timeline = resolve_timeline(c);
  su.config = c.rollout;
  return su;
}

inline ShootingProblem resolve_problem(const RunConfig& c) {
  if (c.scenario != "flat_push") throw ConfigError("plan runs on the flat_push scenario only");
  const RolloutSetup su = resolve_setup(c);
  ShootingProblem p;
  p.model = su.model;
  p.scene = su.scene;
  p.initial = su.initial;
  p.config = su.config;
  p.goal = c.planner.goal.value_or(su.initial.box_position(su.model) + c.planner.goal_offset);
  p.horizon = c.planner.horizon;
  p.weights = c.planner.weights;
  p.seed = c.seed;
  return p;
}

inline CpgParams resolve_seed_gait(const RunConfig& c) {
  CpgParams p = *preset(c.planner.seed_gait).cpg;
  p.yaw_first = c.yaw_first;
  return p;
}

// ---------------------------------------------------------------------------
// Manifest

/// Model and scene constants not exposed as keys but fixed by the build.
inline Json constants_json(const RunConfig& c) {
  const RobotModel m = resolve_model(c);
  const SceneSpec scene = resolve_scene(c);
  Json j;
  j["robot.links"] = m.num_links();
  j["robot.total_length"] = m.total_length;
  j["robot.module_diameter"] = m.module_diameter;
  j["robot.link_length"] = m.links[0].length;
  j["robot.link_radius"] = m.links[0].shape.radius;
  j["joints.torque_limit"] = m.joints[0].torque_limit;
  j["joints.position_limit"] = m.joints[0].position_limit;
  j["joints.limit_stiffness"] = m.limit_stiffness;
  j["joints.limit_damping"] = m.limit_damping;
  j["box.socket_position"] = detail::vector_json(scene.box.socket_position);
  j["box.orientation_wxyz"] = Json::array(
      {scene.box.orientation.w(), scene.box.orientation.x(), scene.box.orientation.y(),
       scene.box.orientation.z()});
  j["platform.enabled"] = scene.platform.enabled;
  j["platform.center"] = detail::vector_json(scene.platform.center);
  j["platform.footprint"] = detail::vector_json(scene.platform.footprint);
  j["ramp.enabled"] = scene.ramp.enabled;
  j["ramp.max_elevation"] = scene.ramp.max_elevation;
  j["ramp.foot_x"] = scene.ramp.foot_x;
  j["ramp.y_range"] = Json::array({scene.ramp.y_min, scene.ramp.y_max});
  j["integrator.renormalize_every"] = c.rollout.integrator.renormalize_every;
  j["integrator.implicit_contact_damping"] = c.rollout.integrator.implicit_contact_damping;
  j["integrator.momentum_projection"] = c.rollout.integrator.momentum_projection;
  j["qp.tol"] = c.rollout.qp.tol;
  j["qp.max_sweeps"] = c.rollout.qp.max_sweeps;
  j["qp.stabilization"] = c.rollout.qp_stabilization;
  j["objective_qp.tol"] = c.rollout.objective_qp.tol;
  j["objective_qp.max_sweeps"] = c.rollout.objective_qp.max_sweeps;
  j["latch.position_tol"] = kLatchPositionTol;
  j["latch.angle_tol"] = kLatchAngleTol;
  j["ramp_ascent.push_duration"] = kRampPushDuration;
  return j;
}

/// FNV-1a over the serialized text.
inline std::uint64_t fnv1a(const std::string& text) {
  std::uint64_t h = 14695981039346656037ull;
  for (unsigned char ch : text) {
    h ^= ch;
    h *= 1099511628211ull;
  }
  return h;
}

inline std::string hex64(std::uint64_t v) {
  static const char* digits = "0123456789abcdef";
  std::string s(16, '0');
  for (int i = 15; i >= 0; --i, v >>= 4) s[i] = digits[v & 0xf];
  return s;
}

inline Json manifest_json(const RunConfig& c) {
  Json j;
  j["config"] = config_json(c);
  j["constants"] = constants_json(c);
  j["constants_hash"] = hex64(fnv1a(j["config"].dump() + j["constants"].dump()));
  return j;
}

}  // namespace snake
