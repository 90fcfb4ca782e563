#pragma once

#include <numbers>
#include <string>
#include <vector>

#include <Eigen/Core>
#include <nlohmann/json.hpp>

#include "gic/liegroup.hpp"

namespace gic {

using VecX = Eigen::VectorXd;
using MatX = Eigen::MatrixXd;
using Mat6X = Eigen::Matrix<double, 6, Eigen::Dynamic>;

/// Mass properties of one link. The link frame coincides with the spatial
/// frame at the zero configuration, so `com` and `inertia` are given in
/// spatial coordinates at q = 0 (inertia about the center of mass).
struct LinkInertia {
  double mass = 1.0;
  Vec3 com = Vec3::Zero();
  Mat3 inertia = Mat3::Identity();
};

struct JointLimit {
  double min = -std::numbers::pi;
  double max = std::numbers::pi;
};

struct ManipulatorModel {
  std::vector<Twist> joint_twists;  // spatial axes ξ_i at q = 0
  Pose zero_pose;                   // end-effector pose g(0)
  std::vector<LinkInertia> links;
  Vec3 gravity{0.0, 0.0, -9.81};
  std::vector<JointLimit> limits;

  int dof() const { return static_cast<int>(joint_twists.size()); }
  /// Throws InvalidModel when an invariant is violated.
  void validate() const;
};

struct JointState {
  VecX q;
  VecX qdot;
  double t = 0.0;
};

struct Jacobian {
  Mat6X m;
  Frame frame = Frame::kBody;
};

/// Everything the simulation loop needs at one (q, q̇), computed in a single
/// kinematic pass. `bias` is C(q, q̇)·q̇ evaluated by body-frame Newton–Euler
/// terms rather than by differentiating M.
struct RobotTerms {
  Pose ee;
  Mat6X body_jacobian;
  Mat6X spatial_jacobian;
  MatX mass;
  VecX bias;
  VecX gravity;
};

struct OperationalSpace {
  Mat6 mass;
  Mat6 coriolis;
  Vec6 gravity;
};

Pose forward_kinematics(const ManipulatorModel& model, const VecX& q);
Jacobian body_jacobian(const ManipulatorModel& model, const VecX& q);
Jacobian spatial_jacobian(const ManipulatorModel& model, const VecX& q);
MatX mass_matrix(const ManipulatorModel& model, const VecX& q);
VecX gravity_vector(const ManipulatorModel& model, const VecX& q);
/// Christoffel-symbol Coriolis matrix from central differences of M (h = 1e-6).
MatX coriolis_matrix(const ManipulatorModel& model, const VecX& q, const VecX& qdot);
/// C(q, q̇)·q̇ without forming C.
VecX bias_torque(const ManipulatorModel& model, const VecX& q, const VecX& qdot);
RobotTerms evaluate(const ManipulatorModel& model, const VecX& q, const VecX& qdot);

/// Requires n = 6 and cond(J_b) < 1e6, else SingularJacobian.
OperationalSpace operational_space(const ManipulatorModel& model, const VecX& q, const VecX& qdot);

double kinetic_energy(const ManipulatorModel& model, const VecX& q, const VecX& qdot);
double potential_energy(const ManipulatorModel& model, const VecX& q);

/// Semi-implicit Euler on M q̈ + C q̇ + G = T + T_e.
JointState step(const ManipulatorModel& model, const JointState& state, const VecX& torque,
                const VecX& external_torque, double dt);
/// Same integrator, reusing terms already evaluated at `state`.
JointState step(const RobotTerms& terms, const JointState& state, const VecX& torque,
                const VecX& external_torque, double dt);

struct IkResult {
  VecX q;
  bool converged = false;
  double residual = 0.0;
  int iterations = 0;
};

/// Newton iteration on log(g(q)⁻¹ g_target) through the body Jacobian.
IkResult inverse_kinematics(const ManipulatorModel& model, const Pose& target, const VecX& seed,
                            double tol = 1e-12, int max_iterations = 200);

ManipulatorModel model_from_json(const nlohmann::json& doc);
nlohmann::json model_to_json(const ManipulatorModel& model);
ManipulatorModel load_model(const std::string& path);

}  // namespace gic
