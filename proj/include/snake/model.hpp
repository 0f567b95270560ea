// Robot, box and scene descriptions plus the mutable simulation state.
#pragma once

#include <Eigen/Dense>
#include <Eigen/Geometry>

#include <cmath>
#include <stdexcept>
#include <string>
#include <vector>

namespace snake {

using Vec2 = Eigen::Vector2d;
using Vec3 = Eigen::Vector3d;
using Mat3 = Eigen::Matrix3d;
using Quat = Eigen::Quaterniond;
using VecX = Eigen::VectorXd;
using MatX = Eigen::MatrixXd;

inline constexpr double kPi = 3.14159265358979323846;

inline constexpr double deg2rad(double deg) { return deg * kPi / 180.0; }
inline constexpr double rad2deg(double rad) { return rad * 180.0 / kPi; }

/// Raised for malformed configuration or invalid model/scene input.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Raised when the integrator produces non-finite values.
class NumericalError : public std::runtime_error {
 public:
  NumericalError(const std::string& what, int coordinate)
      : std::runtime_error(what), coordinate_(coordinate) {}
  int coordinate() const { return coordinate_; }

 private:
  int coordinate_;
};

inline Mat3 skew(const Vec3& v) {
  Mat3 s;
  s << 0.0, -v.z(), v.y(), v.z(), 0.0, -v.x(), -v.y(), v.x(), 0.0;
  return s;
}

// ---------------------------------------------------------------------------
// Robot

/// Capsule aligned with the link x axis, centered on the link frame origin.
struct Capsule {
  double radius = 0.05;
  double half_length = 0.0;  // half the distance between the end-sphere centers
};

struct LinkSpec {
  std::string name;
  double mass = 0.5;
  Vec3 inertia_diag = Vec3::Zero();  // principal moments about the COM
  double length = 0.0;               // module length along the chain axis
  Capsule shape;
  Vec3 com_offset = Vec3::Zero();  // link frame
};

enum class JointKind { yaw, pitch };

struct JointSpec {
  std::string name;
  JointKind kind = JointKind::yaw;
  Vec3 axis = Vec3::UnitZ();           // unit, parent link frame
  Vec3 parent_anchor = Vec3::Zero();   // joint origin in parent frame
  Vec3 child_anchor = Vec3::Zero();    // joint origin in child frame
  double position_limit = kPi / 2.0;
  double internal_stiffness = 50.0;  // position-servo proportional gain, N*m/rad
  double internal_damping = 1.0;     // position-servo derivative gain, N*m*s/rad
  double torque_limit = 6.9;
};

/// Kinematic tree: link 0 is the floating base (the head); joint k connects
/// link k (parent) to link k + 1 (child). Link x axes point toward the head.
struct RobotModel {
  std::vector<LinkSpec> links;
  std::vector<JointSpec> joints;
  double total_length = 1.6;
  double module_diameter = 0.10;

  // A fixed base pins link 0 to the world; used for reduced test rigs.
  bool fixed_base = false;
  Vec3 fixed_base_position = Vec3::Zero();
  Quat fixed_base_orientation = Quat::Identity();

  // Mechanical end stop outside the position limits.
  double limit_stiffness = 100.0;
  double limit_damping = 2.0;

  int num_links() const { return static_cast<int>(links.size()); }
  int num_joints() const { return static_cast<int>(joints.size()); }

  double total_mass() const {
    double m = 0.0;
    for (const auto& l : links) m += l.mass;
    return m;
  }
};

namespace detail {
inline JointSpec make_joint(int k, bool yaw_first, double parent_len, double child_len) {
  JointSpec j;
  j.name = "J" + std::to_string(k + 1);
  const bool yaw = (k % 2 == 0) == yaw_first;
  j.kind = yaw ? JointKind::yaw : JointKind::pitch;
  j.axis = yaw ? Vec3::UnitZ() : Vec3::UnitY();
  j.parent_anchor = Vec3(-parent_len / 2.0, 0.0, 0.0);
  j.child_anchor = Vec3(child_len / 2.0, 0.0, 0.0);
  return j;
}
}  // namespace detail

/// The 12-module COBRA chain: head, L1..L10, tail.
inline RobotModel build_default_robot(double link_mass = 0.5, bool yaw_first = true) {
  RobotModel m;
  m.total_length = 1.6;
  m.module_diameter = 0.10;
  const int n_links = 12;
  const double len = m.total_length / n_links;
  const double radius = m.module_diameter / 2.0;

  for (int i = 0; i < n_links; ++i) {
    LinkSpec l;
    l.mass = link_mass;
    l.length = len;
    l.shape.radius = radius;
    l.shape.half_length = std::max(0.0, len / 2.0 - radius);
    if (i == 0) {
      l.name = "head";
      l.inertia_diag = Vec3(4.4562e-4, 1.710e-3, 1.793e-3);
    } else if (i == n_links - 1) {
      l.name = "tail";
      l.inertia_diag = Vec3(8.182e-4, 1.141e-3, 1.109e-3);
    } else {
      l.name = "L" + std::to_string(i);
      l.inertia_diag = Vec3(7.167e-4, 8.704e-4, 8.626e-4);
    }
    m.links.push_back(l);
  }
  for (int k = 0; k < n_links - 1; ++k) {
    m.joints.push_back(detail::make_joint(k, yaw_first, len, len));
  }
  return m;
}

// ---------------------------------------------------------------------------
// Scene

struct BoxSpec {
  double mass = 0.5;
  Vec3 size = Vec3(0.2, 0.2, 0.2);  // edge lengths
  Vec3 position = Vec3(0.0, 0.3, 0.1);
  Quat orientation = Quat::Identity();
  // Docking socket on the -x face, box frame. The head tip seats here with
  // its chain axis along +x of the box.
  Vec3 socket_position = Vec3(-0.1, 0.0, -0.05);
  Vec3 socket_axis = Vec3::UnitX();

  Mat3 inertia() const {
    const double a = size.x(), b = size.y(), c = size.z();
    return Vec3(mass * (b * b + c * c) / 12.0, mass * (a * a + c * c) / 12.0,
                mass * (a * a + b * b) / 12.0)
        .asDiagonal();
  }
};

/// Fixed cuboid resting on the ground: top face at `height`.
struct PlatformSpec {
  bool enabled = false;
  Vec2 center = Vec2(0.0, 0.0);
  Vec2 footprint = Vec2(0.5, 0.5);
  double height = 0.3;
};

/// Fixed wedge whose incline rises along +x from `foot_x` to `max_elevation`.
struct RampSpec {
  bool enabled = false;
  double angle_deg = 16.7;
  double max_elevation = 0.6;
  double foot_x = 0.0;
  double y_min = -1.5;
  double y_max = 1.5;

  double run() const { return max_elevation / std::tan(deg2rad(angle_deg)); }
  /// Surface elevation of the incline at world x (0 outside the wedge).
  double elevation_at(double x) const {
    if (!enabled || x < foot_x || x > foot_x + run()) return 0.0;
    return (x - foot_x) * std::tan(deg2rad(angle_deg));
  }
};

struct SceneSpec {
  Vec3 gravity = Vec3(0.0, 0.0, -9.8);
  BoxSpec box;
  PlatformSpec platform;
  RampSpec ramp;
};

// ---------------------------------------------------------------------------
// State

/// Index bookkeeping for q (positions) and u (velocities).
///   q = [base pos 3, base quat wxyz 4]? + joints + [box pos 3, box quat 4]
///   u = [base lin vel (world) 3, base ang vel (body) 3]? + joint rates
///       + [box lin vel (world) 3, box ang vel (body) 3]
struct Layout {
  int num_joints = 0;
  bool fixed_base = false;

  explicit Layout(const RobotModel& m) : num_joints(m.num_joints()), fixed_base(m.fixed_base) {}

  int base_q() const { return fixed_base ? 0 : 7; }
  int base_v() const { return fixed_base ? 0 : 6; }
  int joint_q(int k) const { return base_q() + k; }
  int joint_v(int k) const { return base_v() + k; }
  int robot_nq() const { return base_q() + num_joints; }
  int robot_nv() const { return base_v() + num_joints; }
  int box_q() const { return robot_nq(); }
  int box_v() const { return robot_nv(); }
  int nq() const { return robot_nq() + 7; }
  int nv() const { return robot_nv() + 6; }
};

inline Quat quat_at(const VecX& q, int i) { return Quat(q[i], q[i + 1], q[i + 2], q[i + 3]); }
inline void set_quat(VecX& q, int i, const Quat& r) {
  q[i] = r.w();
  q[i + 1] = r.x();
  q[i + 2] = r.y();
  q[i + 3] = r.z();
}

/// Rigid transform of the box relative to the head link frame while docked.
struct DockTransform {
  Vec3 position = Vec3::Zero();
  Quat rotation = Quat::Identity();
};

struct SystemState {
  VecX q;
  VecX u;
  double t = 0.0;
  bool latched = false;
  DockTransform dock;

  static SystemState zeros(const RobotModel& m) {
    const Layout lay(m);
    SystemState s;
    s.q = VecX::Zero(lay.nq());
    s.u = VecX::Zero(lay.nv());
    if (!m.fixed_base) set_quat(s.q, 3, Quat::Identity());
    set_quat(s.q, lay.box_q() + 3, Quat::Identity());
    return s;
  }

  Vec3 base_position(const RobotModel& m) const {
    return m.fixed_base ? m.fixed_base_position : Vec3(q.head<3>());
  }
  Quat base_orientation(const RobotModel& m) const {
    return m.fixed_base ? m.fixed_base_orientation : quat_at(q, 3);
  }
  Vec3 box_position(const RobotModel& m) const { return q.segment<3>(Layout(m).box_q()); }
  Quat box_orientation(const RobotModel& m) const { return quat_at(q, Layout(m).box_q() + 3); }
  double joint(const RobotModel& m, int k) const { return q[Layout(m).joint_q(k)]; }
  double joint_rate(const RobotModel& m, int k) const { return u[Layout(m).joint_v(k)]; }

  VecX joint_angles(const RobotModel& m) const {
    return q.segment(Layout(m).joint_q(0), m.num_joints());
  }
  VecX joint_rates(const RobotModel& m) const {
    return u.segment(Layout(m).joint_v(0), m.num_joints());
  }
};

/// Renormalizes every quaternion block in q.
inline void normalize_quaternions(const RobotModel& m, SystemState& s) {
  const Layout lay(m);
  auto fix = [&](int i) { s.q.segment<4>(i).normalize(); };
  if (!m.fixed_base) fix(3);
  fix(lay.box_q() + 3);
}

}  // namespace snake
