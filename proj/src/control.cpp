#include "gic/control.hpp"

#include <cmath>

#include <Eigen/LU>
#include <Eigen/SVD>

#include "gic/error.hpp"

namespace gic {

namespace {

constexpr double kDlsLambda = 0.01;
constexpr double kDlsThreshold = 0.01;

void require_body(const Twist& v, const char* what) {
  if (v.frame != Frame::kBody) throw Error(ErrorCode::kFrameMismatch, std::string(what) + " must be a body twist");
}

}  // namespace

const char* to_string(ControllerKind kind) {
  switch (kind) {
    case ControllerKind::kGic: return "gic";
    case ControllerKind::kCic: return "cic";
    case ControllerKind::kGac: return "gac";
  }
  return "?";
}

const char* to_string(ErrorKind kind) { return kind == ErrorKind::kGcev ? "gcev" : "cev"; }

ControllerKind controller_from_string(const std::string& s) {
  if (s == "gic") return ControllerKind::kGic;
  if (s == "cic") return ControllerKind::kCic;
  if (s == "gac") return ControllerKind::kGac;
  throw Error(ErrorCode::kInvalidArgument, "unknown controller '" + s + "'");
}

ErrorKind error_kind_from_string(const std::string& s) {
  if (s == "gcev") return ErrorKind::kGcev;
  if (s == "cev") return ErrorKind::kCev;
  throw Error(ErrorCode::kInvalidArgument, "unknown error kind '" + s + "'");
}

ImpedanceGains action_to_gains(const Action& a) {
  ImpedanceGains g;
  g.kp << std::pow(10.0, a[0] + 2.5), std::pow(10.0, a[1] + 2.5), std::pow(10.0, 1.5 * a[2] + 2.0);
  for (int j = 0; j < 3; ++j) g.kr[j] = std::pow(10.0, 0.6 * a[3 + j] + 2.0);
  return g;
}

Mat6 damping_from_gains(const ImpedanceGains& gains) {
  return Mat6(Vec6(8.0 * gains.stacked().cwiseSqrt()).asDiagonal());
}

Wrench gic_regulation(const Pose& g, const Pose& g_d, const Twist& v_b, const ImpedanceGains& gains,
                      const Vec6& gravity_wrench) {
  require_body(v_b, "V_b");
  const Vec6 t = -elastic_wrench(g, g_d, gains).vector() - damping_from_gains(gains) * v_b.vector() + gravity_wrench;
  return Wrench::from_vector(t, Frame::kBody);
}

Twist translated_desired_velocity(const Pose& g, const Pose& g_d, const Twist& v_d_b) {
  require_body(v_d_b, "V_d_b");
  return Twist::from_vector(adjoint(compose(inverse(g), g_d)) * v_d_b.vector(), Frame::kBody);
}

Wrench gic_full(const OperationalSpace& dyn, const Pose& g, const Pose& g_d, const Twist& v_b, const Twist& v_d_b,
                const Vec6& translated_accel, const ImpedanceGains& gains) {
  const Vec6 v_star = translated_desired_velocity(g, g_d, v_d_b).vector();
  const Vec6 e_v = velocity_error(g, g_d, v_b, v_d_b).vector();
  const Vec6 t = dyn.mass * translated_accel + dyn.coriolis * v_star + dyn.gravity -
                 elastic_wrench(g, g_d, gains).vector() - damping_from_gains(gains) * e_v;
  return Wrench::from_vector(t, Frame::kBody);
}

Wrench cic(const Pose& g, const Pose& g_d, const Twist& v_s, const ImpedanceGains& gains,
           const Vec6& gravity_wrench) {
  if (v_s.frame != Frame::kSpatial) throw Error(ErrorCode::kFrameMismatch, "V_s must be a spatial twist");
  const Vec6 k = gains.stacked();
  const Vec6 t = -k.cwiseProduct(cartesian_error(g, g_d)) - damping_from_gains(gains) * v_s.vector() + gravity_wrench;
  return Wrench::from_vector(t, Frame::kSpatial);
}

VecX wrench_to_torque(const Jacobian& j, const Wrench& w) {
  if (j.frame != w.frame) {
    throw Error(ErrorCode::kFrameMismatch, std::string(to_string(w.frame)) + " wrench with " +
                                               to_string(j.frame) + " Jacobian");
  }
  return j.m.transpose() * w.vector();
}

Twist gac_step(const Twist& v_b, const Pose& g, const Pose& g_d, const Mat6& m_des, const ImpedanceGains& gains,
               const Wrench& external, double dt) {
  require_body(v_b, "V_b");
  if (external.frame != Frame::kBody) throw Error(ErrorCode::kFrameMismatch, "external wrench must be body-framed");
  if (!(dt > 0.0 && dt <= 0.01)) throw Error(ErrorCode::kInvalidArgument, "dt must lie in (0, 0.01]");
  const Vec6 rhs = external.vector() - damping_from_gains(gains) * v_b.vector() - elastic_wrench(g, g_d, gains).vector();
  return Twist::from_vector(v_b.vector() + dt * m_des.ldlt().solve(rhs), Frame::kBody);
}

Mat6 default_admittance_inertia() {
  Vec6 d;
  d << 1.0, 1.0, 1.0, 0.1, 0.1, 0.1;
  return Mat6(d.asDiagonal());
}

VecX desired_joint_velocity(const Mat6X& j_b, const Twist& v_b) {
  Eigen::JacobiSVD<MatX> svd(j_b, Eigen::ComputeThinU | Eigen::ComputeThinV);
  const auto& s = svd.singularValues();
  const double lambda = s[s.size() - 1] < kDlsThreshold ? kDlsLambda : 0.0;
  const Vec6 v = v_b.vector();
  VecX out = VecX::Zero(j_b.cols());
  for (int k = 0; k < s.size(); ++k) {
    const double denom = s[k] * s[k] + lambda * lambda;
    if (denom > 0.0) out += svd.matrixV().col(k) * (s[k] / denom * svd.matrixU().col(k).dot(v));
  }
  return out;
}

VecX joint_velocity_pd(const VecX& qdot_desired, const VecX& qdot, double kv, const VecX& gravity) {
  if (qdot_desired.size() != qdot.size() || qdot.size() != gravity.size()) {
    throw Error(ErrorCode::kDimensionMismatch, "joint velocity PD inputs disagree in size");
  }
  return kv * (qdot_desired - qdot) + gravity;
}

}  // namespace gic
