#pragma once

#include "gic/dynamics.hpp"

namespace gic {

/// Revolute twist (−ω × point, ω) for a unit axis through `point`.
Twist revolute_twist(const Vec3& axis, const Vec3& point);

/// Six-joint elbow arm with a spherical wrist used by every simulation in this
/// repository. The spatial frame sits at the default hole bottom; the base is
/// 0.55 m behind it and 0.35 m below.
///
///   joint 1  yaw     axis z through (−0.55, 0, −0.35)
///   joint 2  pitch   axis y through the shoulder (−0.55, 0, 0)
///   joint 3  pitch   axis y through the elbow    (−0.15, 0, 0)
///   joint 4  roll    axis x through the wrist    ( 0.25, 0, 0)
///   joint 5  pitch   axis y through the wrist
///   joint 6  roll    axis z through the wrist (the tool axis)
///
/// At q = 0 the end-effector frame sits at the peg tip (0.25, 0, −0.15) with
/// identity orientation, so the peg runs along +z from its tip.
///
/// The tool link carries a large rotational inertia (0.25 kg·m²). The damping
/// produced by the gain mapping reaches 160 N·m·s/rad; with explicit
/// integration at 1 kHz the tool's rotational inertia has to stay well above
/// dt·K_d for the closed loop to remain stable.
ManipulatorModel reference_arm();

/// Elbow-up, wrist-down configuration used to seed inverse kinematics.
VecX reference_home();

}  // namespace gic
