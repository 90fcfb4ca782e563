#include "gic/reference_arm.hpp"

namespace gic {

namespace {

Mat3 box_inertia(double mass, double lx, double ly, double lz) {
  return Vec3(mass / 12.0 * (ly * ly + lz * lz), mass / 12.0 * (lx * lx + lz * lz),
              mass / 12.0 * (lx * lx + ly * ly))
      .asDiagonal();
}

}  // namespace

Twist revolute_twist(const Vec3& axis, const Vec3& point) {
  const Vec3 w = axis.normalized();
  return {-w.cross(point), w, Frame::kSpatial};
}

ManipulatorModel reference_arm() {
  const Vec3 base(-0.55, 0.0, -0.35);
  const Vec3 shoulder(-0.55, 0.0, 0.0);
  const Vec3 elbow(-0.15, 0.0, 0.0);
  const Vec3 wrist(0.25, 0.0, 0.0);

  ManipulatorModel m;
  m.joint_twists = {
      revolute_twist(Vec3::UnitZ(), base),     revolute_twist(Vec3::UnitY(), shoulder),
      revolute_twist(Vec3::UnitY(), elbow),    revolute_twist(Vec3::UnitX(), wrist),
      revolute_twist(Vec3::UnitY(), wrist),    revolute_twist(Vec3::UnitZ(), wrist),
  };
  m.zero_pose = Pose::translation(Vec3(0.25, 0.0, -0.15));
  m.links = {
      {4.0, Vec3(-0.55, 0.0, -0.175), box_inertia(4.0, 0.15, 0.15, 0.35)},
      {3.0, Vec3(-0.35, 0.0, 0.0), box_inertia(3.0, 0.40, 0.08, 0.08)},
      {2.0, Vec3(0.05, 0.0, 0.0), box_inertia(2.0, 0.40, 0.07, 0.07)},
      {0.5, Vec3(0.25, 0.0, 0.0), Mat3::Identity() * 1e-3},
      {0.5, Vec3(0.25, 0.0, 0.0), Mat3::Identity() * 1e-3},
      {2.0, Vec3(0.25, 0.0, -0.05), Mat3::Identity() * 0.25},
  };
  m.gravity = Vec3(0.0, 0.0, -9.81);
  m.limits.assign(6, JointLimit{-std::numbers::pi, std::numbers::pi});
  m.validate();
  return m;
}

VecX reference_home() {
  VecX q(6);
  q << 0.0, -0.6, 1.2, 0.0, -0.6, 0.0;
  return q;
}

}  // namespace gic
