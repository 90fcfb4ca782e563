#pragma once

#include <string>

#include "gic/dynamics.hpp"
#include "gic/gains.hpp"
#include "gic/liegroup.hpp"

namespace gic {

/// Six log-gain commands, each clamped to [−1, 1] on construction.
class Action {
 public:
  Action() : a_(Vec6::Zero()) {}
  explicit Action(const Vec6& a) : a_(a.cwiseMax(-1.0).cwiseMin(1.0)) {}

  const Vec6& vector() const { return a_; }
  double operator[](int i) const { return a_[i]; }

 private:
  Vec6 a_;
};

enum class ControllerKind { kGic, kCic, kGac };
enum class ErrorKind { kGcev, kCev };

const char* to_string(ControllerKind kind);
const char* to_string(ErrorKind kind);
ControllerKind controller_from_string(const std::string& s);
ErrorKind error_kind_from_string(const std::string& s);

/// kp = (10^(a1+2.5), 10^(a2+2.5), 10^(1.5 a3+2)), kr_j = 10^(0.6 a_j+2).
ImpedanceGains action_to_gains(const Action& a);
/// 8·diag(kp, kr)^½.
Mat6 damping_from_gains(const ImpedanceGains& gains);

/// Body-frame regulation law −f_G − K_d V^b + G̃.
Wrench gic_regulation(const Pose& g, const Pose& g_d, const Twist& v_b, const ImpedanceGains& gains,
                      const Vec6& gravity_wrench);

/// Ad_{g_bd} V_d^b, the desired velocity seen from the current body frame.
Twist translated_desired_velocity(const Pose& g, const Pose& g_d, const Twist& v_d_b);

/// Full tracking law. `translated_accel` is the time derivative of
/// translated_desired_velocity() along the trajectory; callers difference it.
Wrench gic_full(const OperationalSpace& dyn, const Pose& g, const Pose& g_d, const Twist& v_b,
                const Twist& v_d_b, const Vec6& translated_accel, const ImpedanceGains& gains);

/// Spatial-frame Cartesian impedance law −K_C e_C − K_dC V^s + G̃_C.
Wrench cic(const Pose& g, const Pose& g_d, const Twist& v_s, const ImpedanceGains& gains,
           const Vec6& gravity_wrench);

/// Jᵀ w. The Jacobian and wrench frames must agree.
VecX wrench_to_torque(const Jacobian& j, const Wrench& w);

/// One explicit step of M_des V̇ = T_e − K_d V − f_G.
Twist gac_step(const Twist& v_b, const Pose& g, const Pose& g_d, const Mat6& m_des, const ImpedanceGains& gains,
               const Wrench& external, double dt);

/// Default admittance inertia diag(1, 1, 1, 0.1, 0.1, 0.1).
Mat6 default_admittance_inertia();

/// J_b⁻¹ V^b, switching to damped least squares (λ = 0.01) when σ_min < 0.01.
VecX desired_joint_velocity(const Mat6X& j_b, const Twist& v_b);

/// K_v (q̇_d − q̇) + G(q).
VecX joint_velocity_pd(const VecX& qdot_desired, const VecX& qdot, double kv, const VecX& gravity);

}  // namespace gic
