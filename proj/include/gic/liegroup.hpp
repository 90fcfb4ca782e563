#pragma once

#include <random>

#include <Eigen/Core>
#include <Eigen/Geometry>

#include "gic/gains.hpp"

namespace gic {

using Vec3 = Eigen::Vector3d;
using Vec6 = Eigen::Matrix<double, 6, 1>;
using Mat3 = Eigen::Matrix3d;
using Mat4 = Eigen::Matrix4d;
using Mat6 = Eigen::Matrix<double, 6, 6>;

enum class Frame { kBody, kSpatial };

const char* to_string(Frame frame);

/// Element of SO(3). Construction through from_matrix() validates
/// orthonormality (1e-9, ∞-norm) and det = +1.
class Rotation {
 public:
  Rotation() : m_(Mat3::Identity()) {}

  static Rotation identity() { return Rotation(); }
  static Rotation from_matrix(const Mat3& m);
  /// Normalizes the quaternion first; never throws for a nonzero input.
  static Rotation from_quaternion(const Eigen::Quaterniond& q);
  static Rotation about_axis(const Vec3& axis, double angle);
  static Rotation rot_x(double angle) { return about_axis(Vec3::UnitX(), angle); }
  static Rotation rot_y(double angle) { return about_axis(Vec3::UnitY(), angle); }
  static Rotation rot_z(double angle) { return about_axis(Vec3::UnitZ(), angle); }

  /// Trusted construction for matrices produced by group operations.
  static Rotation unchecked(const Mat3& m) { return Rotation(m); }

  const Mat3& matrix() const { return m_; }
  Rotation transpose() const { return Rotation(m_.transpose()); }
  Rotation operator*(const Rotation& other) const { return Rotation(m_ * other.m_); }
  Vec3 operator*(const Vec3& v) const { return m_ * v; }

  /// Unit quaternion with w >= 0.
  Eigen::Quaterniond quaternion() const;
  /// Rotation angle in [0, π].
  double angle() const;

 private:
  explicit Rotation(const Mat3& m) : m_(m) {}
  Mat3 m_;
};

struct Pose {
  Rotation rot;
  Vec3 pos = Vec3::Zero();

  static Pose identity() { return {}; }
  static Pose translation(const Vec3& p) { return {Rotation::identity(), p}; }
  static Pose from_matrix(const Mat4& m);

  const Mat3& R() const { return rot.matrix(); }
  const Vec3& p() const { return pos; }
  Mat4 matrix() const;
};

struct Twist {
  Vec3 v = Vec3::Zero();
  Vec3 w = Vec3::Zero();
  Frame frame = Frame::kBody;

  static Twist from_vector(const Vec6& xi, Frame frame = Frame::kBody);
  Vec6 vector() const;
};

struct Wrench {
  Vec3 f = Vec3::Zero();
  Vec3 tau = Vec3::Zero();
  Frame frame = Frame::kBody;

  static Wrench from_vector(const Vec6& w, Frame frame = Frame::kBody);
  Vec6 vector() const;
};

// --- hat / vee ---------------------------------------------------------------

Mat3 hat3(const Vec3& w);
/// Throws NotSkew when ‖m + mᵀ‖∞ > 1e-8.
Vec3 vee3(const Mat3& m);
Mat4 hat6(const Twist& xi);
/// Throws MalformedSe3 when the bottom row is not zero (1e-8).
Twist vee6(const Mat4& m, Frame frame = Frame::kBody);

// --- exponential coordinates ---------------------------------------------------

Mat3 exp_so3(const Vec3& phi);
/// Principal-branch logarithm; throws NearPiRotation at angle ≥ π − 1e-6.
Vec3 log_so3(const Mat3& r);
/// exp(ξ̂ θ) in closed form (Rodrigues rotation block, standard translation
/// block).
Pose exp_se3(const Twist& xi, double theta);
/// Returns ξ with exp_se3(ξ, 1) == g.
Twist log_se3(const Pose& g);

// --- group structure -----------------------------------------------------------

Pose compose(const Pose& a, const Pose& b);
Pose inverse(const Pose& g);
Mat6 adjoint(const Pose& g);
/// Lie bracket matrix ad_V for V = (v, ω): [[ω̂, v̂], [0, ω̂]].
Mat6 ad(const Vec6& v);

// --- error functions on SE(3) -------------------------------------------------

/// Body-frame error vector (e_p, e_R) that is left-invariant in (g, g_d).
Vec6 gcev(const Pose& g, const Pose& g_d);
/// tr(I − R_dᵀR) + ½‖p − p_d‖².
double distance(const Pose& g, const Pose& g_d);
/// Elastic wrench of the SE(3) potential, in the body frame.
Wrench elastic_wrench(const Pose& g, const Pose& g_d, const ImpedanceGains& gains);
/// e_V = V^b − Ad_{g_bd} V_d^b. Throws FrameMismatch on spatial inputs.
Twist velocity_error(const Pose& g, const Pose& g_d, const Twist& v_b, const Twist& v_d_b);
/// Cartesian error (p − p_d, Σ r_di × r_i) used by the benchmark controller.
Vec6 cartesian_error(const Pose& g, const Pose& g_d);
/// Ad_{g⁻¹}ᵀ f. Throws FrameMismatch unless f is body-tagged.
Wrench wrench_body_to_spatial(const Pose& g, const Wrench& f);
Wrench wrench_spatial_to_body(const Pose& g, const Wrench& f);

// --- numerics helpers ----------------------------------------------------------

/// Polar projection onto SO(3), applied only when ‖RRᵀ − I‖∞ > 1e-8.
Rotation orthonormalize(const Mat3& m);
/// g · exp(V̂ dt) for a body twist, with drift repair.
Pose integrate_body(const Pose& g, const Twist& v_b, double dt);

/// Uniform rotation from a normalized Gaussian quaternion.
Rotation sample_rotation(std::mt19937_64& rng);
/// Uniform rotation with a translation uniform in [-half_extent, half_extent]³.
Pose sample_pose(std::mt19937_64& rng, double half_extent);

}  // namespace gic
