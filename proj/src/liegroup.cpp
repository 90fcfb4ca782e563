#include "gic/liegroup.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include <Eigen/SVD>

#include "gic/error.hpp"

namespace gic {

namespace {

constexpr double kOrthoTol = 1e-9;
constexpr double kSkewTol = 1e-8;
constexpr double kPiCutoff = std::numbers::pi - 1e-6;
constexpr double kDriftTol = 1e-8;

// vee of a matrix already known to be skew (no validation).
Vec3 vee_unchecked(const Mat3& m) {
  return {0.5 * (m(2, 1) - m(1, 2)), 0.5 * (m(0, 2) - m(2, 0)), 0.5 * (m(1, 0) - m(0, 1))};
}

void require_body(const Twist& t, const char* what) {
  if (t.frame != Frame::kBody) {
    throw Error(ErrorCode::kFrameMismatch, std::string(what) + " must be body-framed");
  }
}

}  // namespace

const char* to_string(Frame frame) { return frame == Frame::kBody ? "body" : "spatial"; }

Rotation Rotation::from_matrix(const Mat3& m) {
  const double ortho = (m * m.transpose() - Mat3::Identity()).cwiseAbs().rowwise().sum().maxCoeff();
  if (!(ortho <= kOrthoTol) || std::abs(m.determinant() - 1.0) > kOrthoTol) {
    throw Error(ErrorCode::kNotOrthonormal, "matrix is not a rotation");
  }
  return Rotation(m);
}

Rotation Rotation::from_quaternion(const Eigen::Quaterniond& q) {
  return Rotation(q.normalized().toRotationMatrix());
}

Rotation Rotation::about_axis(const Vec3& axis, double angle) {
  return Rotation(exp_so3(axis.normalized() * angle));
}

Eigen::Quaterniond Rotation::quaternion() const {
  Eigen::Quaterniond q(m_);
  q.normalize();
  if (q.w() < 0.0) q.coeffs() *= -1.0;
  return q;
}

double Rotation::angle() const {
  const double c = std::clamp(0.5 * (m_.trace() - 1.0), -1.0, 1.0);
  return std::acos(c);
}

Pose Pose::from_matrix(const Mat4& m) {
  if (m.row(3).head<3>().cwiseAbs().maxCoeff() > kSkewTol || std::abs(m(3, 3) - 1.0) > kSkewTol) {
    throw Error(ErrorCode::kMalformedSe3, "bottom row of a homogeneous matrix must be [0 0 0 1]");
  }
  return {Rotation::from_matrix(m.topLeftCorner<3, 3>()), m.topRightCorner<3, 1>()};
}

Mat4 Pose::matrix() const {
  Mat4 m = Mat4::Identity();
  m.topLeftCorner<3, 3>() = R();
  m.topRightCorner<3, 1>() = pos;
  return m;
}

Twist Twist::from_vector(const Vec6& xi, Frame frame) { return {xi.head<3>(), xi.tail<3>(), frame}; }

Vec6 Twist::vector() const {
  Vec6 out;
  out << v, w;
  return out;
}

Wrench Wrench::from_vector(const Vec6& w, Frame frame) { return {w.head<3>(), w.tail<3>(), frame}; }

Vec6 Wrench::vector() const {
  Vec6 out;
  out << f, tau;
  return out;
}

Mat3 hat3(const Vec3& w) {
  Mat3 m;
  m << 0.0, -w.z(), w.y(),
       w.z(), 0.0, -w.x(),
       -w.y(), w.x(), 0.0;
  return m;
}

Vec3 vee3(const Mat3& m) {
  const double asym = (m + m.transpose()).cwiseAbs().rowwise().sum().maxCoeff();
  if (!(asym <= kSkewTol)) {
    throw Error(ErrorCode::kNotSkew, "vee3 input is not skew-symmetric");
  }
  return vee_unchecked(m);
}

Mat4 hat6(const Twist& xi) {
  Mat4 m = Mat4::Zero();
  m.topLeftCorner<3, 3>() = hat3(xi.w);
  m.topRightCorner<3, 1>() = xi.v;
  return m;
}

Twist vee6(const Mat4& m, Frame frame) {
  if (m.row(3).cwiseAbs().maxCoeff() > kSkewTol) {
    throw Error(ErrorCode::kMalformedSe3, "se(3) matrix must have a zero bottom row");
  }
  return {m.topRightCorner<3, 1>(), vee3(m.topLeftCorner<3, 3>()), frame};
}

Mat3 exp_so3(const Vec3& phi) {
  const double a2 = phi.squaredNorm();
  const double a = std::sqrt(a2);
  double s, c;  // sin(a)/a, (1 - cos a)/a²
  if (a < 1e-4) {
    s = 1.0 - a2 / 6.0;
    c = 0.5 - a2 / 24.0;
  } else {
    s = std::sin(a) / a;
    c = (1.0 - std::cos(a)) / a2;
  }
  const Mat3 k = hat3(phi);
  return Mat3::Identity() + s * k + c * k * k;
}

Vec3 log_so3(const Mat3& r) {
  const double theta = std::acos(std::clamp(0.5 * (r.trace() - 1.0), -1.0, 1.0));
  if (theta >= kPiCutoff) {
    throw Error(ErrorCode::kNearPiRotation, "rotation angle too close to pi for the principal log");
  }
  const Vec3 axis_scaled = 0.5 * vee_unchecked(r - r.transpose());  // sin(θ)·axis
  if (theta > 2.0) {
    // sin θ is small here; read the axis from the symmetric part instead.
    const Mat3 b = 0.5 * (r + r.transpose()) - std::cos(theta) * Mat3::Identity();  // (1 − cos θ)·aaᵀ
    int k = 0;
    b.diagonal().maxCoeff(&k);
    Vec3 axis = b.col(k).normalized();
    if (axis.dot(axis_scaled) < 0.0) axis = -axis;
    return theta * axis;
  }
  const double factor = theta < 1e-4 ? 1.0 + theta * theta / 6.0 : theta / std::sin(theta);
  return factor * axis_scaled;
}

Pose exp_se3(const Twist& xi, double theta) {
  const Vec3 phi = xi.w * theta;
  const Vec3 rho = xi.v * theta;
  const double a2 = phi.squaredNorm();
  const double a = std::sqrt(a2);
  double b, c;  // (1 - cos a)/a², (a - sin a)/a³
  if (a < 1e-4) {
    b = 0.5 - a2 / 24.0;
    c = 1.0 / 6.0 - a2 / 120.0;
  } else {
    b = (1.0 - std::cos(a)) / a2;
    c = (a - std::sin(a)) / (a2 * a);
  }
  const Mat3 k = hat3(phi);
  const Mat3 v = Mat3::Identity() + b * k + c * k * k;
  return {Rotation::unchecked(exp_so3(phi)), v * rho};
}

Twist log_se3(const Pose& g) {
  const Vec3 phi = log_so3(g.R());
  const double a2 = phi.squaredNorm();
  const double a = std::sqrt(a2);
  double d;
  if (a < 1e-4) {
    d = 1.0 / 12.0 + a2 / 720.0;
  } else {
    d = (1.0 - a * std::sin(a) / (2.0 * (1.0 - std::cos(a)))) / a2;
  }
  const Mat3 k = hat3(phi);
  const Mat3 v_inv = Mat3::Identity() - 0.5 * k + d * k * k;
  return {v_inv * g.pos, phi, Frame::kBody};
}

Pose compose(const Pose& a, const Pose& b) { return {a.rot * b.rot, a.R() * b.pos + a.pos}; }

Pose inverse(const Pose& g) {
  const Rotation rt = g.rot.transpose();
  return {rt, -(rt.matrix() * g.pos)};
}

Mat6 adjoint(const Pose& g) {
  Mat6 m = Mat6::Zero();
  m.topLeftCorner<3, 3>() = g.R();
  m.topRightCorner<3, 3>() = hat3(g.pos) * g.R();
  m.bottomRightCorner<3, 3>() = g.R();
  return m;
}

Mat6 ad(const Vec6& v) {
  Mat6 m = Mat6::Zero();
  const Mat3 w_hat = hat3(v.tail<3>());
  m.topLeftCorner<3, 3>() = w_hat;
  m.topRightCorner<3, 3>() = hat3(v.head<3>());
  m.bottomRightCorner<3, 3>() = w_hat;
  return m;
}

Vec6 gcev(const Pose& g, const Pose& g_d) {
  const Mat3& r = g.R();
  const Mat3& rd = g_d.R();
  const Mat3 rdt_r = rd.transpose() * r;
  Vec6 e;
  e.head<3>() = r.transpose() * (g.pos - g_d.pos);
  e.tail<3>() = vee_unchecked(rdt_r - rdt_r.transpose());
  return e;
}

double distance(const Pose& g, const Pose& g_d) {
  const Vec3 dp = g.pos - g_d.pos;
  return (Mat3::Identity() - g_d.R().transpose() * g.R()).trace() + 0.5 * dp.dot(dp);
}

Wrench elastic_wrench(const Pose& g, const Pose& g_d, const ImpedanceGains& gains) {
  const Mat3& r = g.R();
  const Mat3& rd = g_d.R();
  const Mat3 kp = gains.kp.asDiagonal();
  const Mat3 kr = gains.kr.asDiagonal();
  const Mat3 rdt_r = rd.transpose() * r;
  const Mat3 a = kr * rdt_r;
  Wrench out;
  out.f = rdt_r.transpose() * kp * rd.transpose() * (g.pos - g_d.pos);
  out.tau = vee_unchecked(a - a.transpose());
  out.frame = Frame::kBody;
  return out;
}

Twist velocity_error(const Pose& g, const Pose& g_d, const Twist& v_b, const Twist& v_d_b) {
  require_body(v_b, "V_b");
  require_body(v_d_b, "V_d_b");
  const Pose g_bd{Rotation::unchecked(g.R().transpose() * g_d.R()), -(g.R().transpose() * (g.pos - g_d.pos))};
  return Twist::from_vector(v_b.vector() - adjoint(g_bd) * v_d_b.vector(), Frame::kBody);
}

Vec6 cartesian_error(const Pose& g, const Pose& g_d) {
  const Mat3& r = g.R();
  const Mat3& rd = g_d.R();
  Vec6 e;
  e.head<3>() = g.pos - g_d.pos;
  e.tail<3>() = rd.col(0).cross(r.col(0)) + rd.col(1).cross(r.col(1)) + rd.col(2).cross(r.col(2));
  return e;
}

Wrench wrench_body_to_spatial(const Pose& g, const Wrench& f) {
  if (f.frame != Frame::kBody) {
    throw Error(ErrorCode::kFrameMismatch, "wrench_body_to_spatial expects a body wrench");
  }
  return Wrench::from_vector(adjoint(inverse(g)).transpose() * f.vector(), Frame::kSpatial);
}

Wrench wrench_spatial_to_body(const Pose& g, const Wrench& f) {
  if (f.frame != Frame::kSpatial) {
    throw Error(ErrorCode::kFrameMismatch, "wrench_spatial_to_body expects a spatial wrench");
  }
  return Wrench::from_vector(adjoint(g).transpose() * f.vector(), Frame::kBody);
}

Rotation orthonormalize(const Mat3& m) {
  const double drift = (m * m.transpose() - Mat3::Identity()).cwiseAbs().rowwise().sum().maxCoeff();
  if (drift <= kDriftTol) return Rotation::unchecked(m);
  Eigen::JacobiSVD<Mat3> svd(m, Eigen::ComputeFullU | Eigen::ComputeFullV);
  Mat3 u = svd.matrixU();
  if ((u * svd.matrixV().transpose()).determinant() < 0.0) u.col(2) *= -1.0;
  return Rotation::unchecked(u * svd.matrixV().transpose());
}

Pose integrate_body(const Pose& g, const Twist& v_b, double dt) {
  require_body(v_b, "V_b");
  const Pose next = compose(g, exp_se3(v_b, dt));
  return {orthonormalize(next.R()), next.pos};
}

Rotation sample_rotation(std::mt19937_64& rng) {
  std::normal_distribution<double> n(0.0, 1.0);
  Eigen::Quaterniond q;
  do {
    q = Eigen::Quaterniond(n(rng), n(rng), n(rng), n(rng));
  } while (q.norm() < 1e-6);
  return Rotation::from_quaternion(q);
}

Pose sample_pose(std::mt19937_64& rng, double half_extent) {
  std::uniform_real_distribution<double> u(-half_extent, half_extent);
  const Rotation r = sample_rotation(rng);
  return {r, Vec3(u(rng), u(rng), u(rng))};
}

}  // namespace gic
