// Forward kinematics and velocity propagation along the chain.
#pragma once

#include <vector>

#include "snake/model.hpp"

namespace snake {

struct LinkFrame {
  Mat3 R = Mat3::Identity();   // link -> world
  Vec3 origin = Vec3::Zero();  // link frame origin, world
  Vec3 com = Vec3::Zero();
  Vec3 omega = Vec3::Zero();   // world angular velocity
  Vec3 v_origin = Vec3::Zero();
  Vec3 v_com = Vec3::Zero();
  // Accelerations produced by the current velocities alone (u_dot = 0).
  Vec3 alpha_bias = Vec3::Zero();
  Vec3 a_origin_bias = Vec3::Zero();
  Vec3 a_com_bias = Vec3::Zero();
};

struct JointFrame {
  Vec3 axis = Vec3::UnitZ();     // world
  Vec3 position = Vec3::Zero();  // world
};

struct ChainKinematics {
  std::vector<LinkFrame> links;
  std::vector<JointFrame> joints;

  Vec3 point_velocity(int link, const Vec3& p) const {
    const auto& f = links[link];
    return f.v_origin + f.omega.cross(p - f.origin);
  }
};

/// Poses, and optionally velocities and velocity-product accelerations, of
/// every link for the robot portion of `s`.
inline ChainKinematics chain_kinematics(const RobotModel& m, const SystemState& s,
                                        bool with_velocities = true) {
  const Layout lay(m);
  ChainKinematics k;
  k.links.resize(m.num_links());
  k.joints.resize(m.num_joints());

  auto& base = k.links[0];
  base.R = s.base_orientation(m).toRotationMatrix();
  base.origin = s.base_position(m);
  base.com = base.origin + base.R * m.links[0].com_offset;
  if (with_velocities && !m.fixed_base) {
    base.omega = base.R * s.u.segment<3>(3);
    base.v_origin = s.u.head<3>();
    const Vec3 r = base.com - base.origin;
    base.v_com = base.v_origin + base.omega.cross(r);
    base.a_com_bias = base.omega.cross(base.omega.cross(r));
  }

  for (int j = 0; j < m.num_joints(); ++j) {
    const auto& spec = m.joints[j];
    const auto& parent = k.links[j];
    auto& child = k.links[j + 1];
    auto& jf = k.joints[j];

    const double angle = s.q[lay.joint_q(j)];
    jf.position = parent.origin + parent.R * spec.parent_anchor;
    jf.axis = parent.R * spec.axis;
    child.R = parent.R * Eigen::AngleAxisd(angle, spec.axis).toRotationMatrix();
    child.origin = jf.position - child.R * spec.child_anchor;
    child.com = child.origin + child.R * m.links[j + 1].com_offset;

    if (!with_velocities) continue;
    const double rate = s.u[lay.joint_v(j)];
    const Vec3 rp = jf.position - parent.origin;
    const Vec3 v_joint = parent.v_origin + parent.omega.cross(rp);
    const Vec3 a_joint = parent.a_origin_bias + parent.alpha_bias.cross(rp) +
                         parent.omega.cross(parent.omega.cross(rp));
    child.omega = parent.omega + jf.axis * rate;
    child.alpha_bias = parent.alpha_bias + parent.omega.cross(jf.axis * rate);
    const Vec3 rc = child.origin - jf.position;
    child.v_origin = v_joint + child.omega.cross(rc);
    child.a_origin_bias =
        a_joint + child.alpha_bias.cross(rc) + child.omega.cross(child.omega.cross(rc));
    const Vec3 rcom = child.com - child.origin;
    child.v_com = child.v_origin + child.omega.cross(rcom);
    child.a_com_bias = child.a_origin_bias + child.alpha_bias.cross(rcom) +
                       child.omega.cross(child.omega.cross(rcom));
  }
  return k;
}

/// World position of the head tip (front end of link 0 along +x).
inline Vec3 head_tip(const RobotModel& m, const ChainKinematics& k) {
  return k.links[0].origin + k.links[0].R * Vec3(m.links[0].length / 2.0, 0.0, 0.0);
}

/// World position of the tail tip (rear end of the last link).
inline Vec3 tail_tip(const RobotModel& m, const ChainKinematics& k) {
  const auto& last = k.links.back();
  return last.origin + last.R * Vec3(-m.links.back().length / 2.0, 0.0, 0.0);
}

/// Mass-weighted center of the robot links.
inline Vec3 robot_com(const RobotModel& m, const ChainKinematics& k) {
  Vec3 c = Vec3::Zero();
  for (int i = 0; i < m.num_links(); ++i) c += m.links[i].mass * k.links[i].com;
  return c / m.total_mass();
}

/// Pose of a box docked to the head through `dock`.
inline void docked_box_pose(const ChainKinematics& k, const DockTransform& dock, Vec3& position,
                            Quat& orientation) {
  const auto& head = k.links[0];
  position = head.origin + head.R * dock.position;
  orientation = Quat(head.R) * dock.rotation;
  orientation.normalize();
}

}  // namespace snake
