#include "gic/dynamics.hpp"

#include <cmath>
#include <fstream>

#include <Eigen/Cholesky>
#include <Eigen/Eigenvalues>
#include <Eigen/LU>
#include <Eigen/SVD>

#include "gic/error.hpp"
#include "gic/json_io.hpp"

namespace gic {

namespace {

constexpr double kFdStep = 1e-6;
constexpr double kMaxCondition = 1e6;
constexpr double kBlowupSpeed = 1e4;

void require_dof(const ManipulatorModel& model, const VecX& v, const char* what) {
  if (v.size() != model.dof()) {
    throw Error(ErrorCode::kDimensionMismatch, std::string(what) + " has " + std::to_string(v.size()) +
                                                   " entries, model has " + std::to_string(model.dof()) +
                                                   " joints");
  }
}

Mat6 spatial_inertia(const LinkInertia& link) {
  Mat6 g = Mat6::Zero();
  g.topLeftCorner<3, 3>() = link.mass * Mat3::Identity();
  g.bottomRightCorner<3, 3>() = link.inertia;
  return g;
}

// One pass over the chain. Link frames are world-aligned at q = 0, so the
// pose of link i is the product of the first i+1 joint exponentials.
struct ChainPass {
  std::vector<Pose> link_poses;
  Mat6X spatial;  // columns Ad_{P_{j-1}} ξ_j
  Pose ee;

  ChainPass(const ManipulatorModel& model, const VecX& q) {
    const int n = model.dof();
    link_poses.reserve(n);
    spatial.resize(6, n);
    Pose prefix;
    for (int j = 0; j < n; ++j) {
      spatial.col(j) = adjoint(prefix) * model.joint_twists[j].vector();
      prefix = compose(prefix, exp_se3(model.joint_twists[j], q[j]));
      link_poses.push_back(prefix);
    }
    ee = compose(prefix, model.zero_pose);
  }

  Pose com_pose(const ManipulatorModel& model, int i) const {
    return compose(link_poses[i], Pose::translation(model.links[i].com));
  }

  // Body Jacobian of the center-of-mass frame of link i (zero beyond column i).
  Mat6X com_jacobian(const Pose& com_pose, int i, int n) const {
    Mat6X j = Mat6X::Zero(6, n);
    j.leftCols(i + 1) = adjoint(inverse(com_pose)) * spatial.leftCols(i + 1);
    return j;
  }
};

}  // namespace

void ManipulatorModel::validate() const {
  const auto n = joint_twists.size();
  if (n < 1) throw Error(ErrorCode::kInvalidModel, "model needs at least one joint");
  if (links.size() != n) throw Error(ErrorCode::kInvalidModel, "one link inertia per joint required");
  if (!limits.empty() && limits.size() != n) throw Error(ErrorCode::kInvalidModel, "one limit per joint required");
  for (const auto& link : links) {
    if (!(link.mass > 0.0)) throw Error(ErrorCode::kInvalidModel, "link mass must be positive");
    if ((link.inertia - link.inertia.transpose()).cwiseAbs().maxCoeff() > 1e-12) {
      throw Error(ErrorCode::kInvalidModel, "link inertia must be symmetric");
    }
    Eigen::SelfAdjointEigenSolver<Mat3> eig(link.inertia);
    const Vec3 m = eig.eigenvalues();
    if (!(m.minCoeff() > 0.0)) throw Error(ErrorCode::kInvalidModel, "link inertia must be positive definite");
    if (m[0] + m[1] < m[2] - 1e-12 || m[0] + m[2] < m[1] - 1e-12 || m[1] + m[2] < m[0] - 1e-12) {
      throw Error(ErrorCode::kInvalidModel, "principal moments violate the triangle inequality");
    }
  }
  for (const auto& lim : limits) {
    if (!(lim.min < lim.max)) throw Error(ErrorCode::kInvalidModel, "joint limit min must be below max");
  }
}

Pose forward_kinematics(const ManipulatorModel& model, const VecX& q) {
  require_dof(model, q, "q");
  Pose g;
  for (int j = 0; j < model.dof(); ++j) g = compose(g, exp_se3(model.joint_twists[j], q[j]));
  return compose(g, model.zero_pose);
}

Jacobian spatial_jacobian(const ManipulatorModel& model, const VecX& q) {
  require_dof(model, q, "q");
  return {ChainPass(model, q).spatial, Frame::kSpatial};
}

Jacobian body_jacobian(const ManipulatorModel& model, const VecX& q) {
  require_dof(model, q, "q");
  const ChainPass pass(model, q);
  return {adjoint(inverse(pass.ee)) * pass.spatial, Frame::kBody};
}

MatX mass_matrix(const ManipulatorModel& model, const VecX& q) {
  require_dof(model, q, "q");
  const int n = model.dof();
  const ChainPass pass(model, q);
  MatX m = MatX::Zero(n, n);
  for (int i = 0; i < n; ++i) {
    const Mat6X j = pass.com_jacobian(pass.com_pose(model, i), i, n);
    m.noalias() += j.transpose() * spatial_inertia(model.links[i]) * j;
  }
  return 0.5 * (m + m.transpose());
}

VecX gravity_vector(const ManipulatorModel& model, const VecX& q) {
  require_dof(model, q, "q");
  const int n = model.dof();
  const ChainPass pass(model, q);
  VecX g = VecX::Zero(n);
  for (int i = 0; i < n; ++i) {
    const Pose com = pass.com_pose(model, i);
    const Mat6X j = pass.com_jacobian(com, i, n);
    g.noalias() -= j.topRows<3>().transpose() * (com.R().transpose() * (model.links[i].mass * model.gravity));
  }
  return g;
}

MatX coriolis_matrix(const ManipulatorModel& model, const VecX& q, const VecX& qdot) {
  require_dof(model, q, "q");
  require_dof(model, qdot, "qdot");
  const int n = model.dof();
  std::vector<MatX> dm(n);
  for (int k = 0; k < n; ++k) {
    VecX qp = q, qm = q;
    qp[k] += kFdStep;
    qm[k] -= kFdStep;
    dm[k] = (mass_matrix(model, qp) - mass_matrix(model, qm)) / (2.0 * kFdStep);
  }
  MatX c = MatX::Zero(n, n);
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) {
      double sum = 0.0;
      for (int k = 0; k < n; ++k) {
        sum += 0.5 * (dm[k](i, j) + dm[j](i, k) - dm[i](j, k)) * qdot[k];
      }
      c(i, j) = sum;
    }
  }
  return c;
}

RobotTerms evaluate(const ManipulatorModel& model, const VecX& q, const VecX& qdot) {
  require_dof(model, q, "q");
  require_dof(model, qdot, "qdot");
  const int n = model.dof();
  const ChainPass pass(model, q);

  RobotTerms out;
  out.ee = pass.ee;
  out.spatial_jacobian = pass.spatial;
  out.body_jacobian = adjoint(inverse(pass.ee)) * pass.spatial;
  out.mass = MatX::Zero(n, n);
  out.bias = VecX::Zero(n);
  out.gravity = VecX::Zero(n);

  // d/dt of spatial column j is ad(V_s of the prefix) times the column.
  Mat6X spatial_dot_qdot(6, n);
  Vec6 prefix_velocity = Vec6::Zero();
  for (int j = 0; j < n; ++j) {
    spatial_dot_qdot.col(j) = ad(prefix_velocity) * pass.spatial.col(j) * qdot[j];
    prefix_velocity += pass.spatial.col(j) * qdot[j];
  }

  Vec6 accumulated_dot = Vec6::Zero();
  for (int i = 0; i < n; ++i) {
    accumulated_dot += spatial_dot_qdot.col(i);
    const Pose com = pass.com_pose(model, i);
    const Mat6 ad_inv = adjoint(inverse(com));
    Mat6X j = Mat6X::Zero(6, n);
    j.leftCols(i + 1) = ad_inv * pass.spatial.leftCols(i + 1);
    const Mat6 inertia = spatial_inertia(model.links[i]);
    const Vec6 velocity = j * qdot;
    const Vec6 bias_accel = ad_inv * accumulated_dot;
    const Vec6 momentum = inertia * velocity;
    out.mass.noalias() += j.transpose() * inertia * j;
    out.bias.noalias() += j.transpose() * (inertia * bias_accel - ad(velocity).transpose() * momentum);
    out.gravity.noalias() -=
        j.topRows<3>().transpose() * (com.R().transpose() * (model.links[i].mass * model.gravity));
  }
  out.mass = 0.5 * (out.mass + out.mass.transpose());
  return out;
}

VecX bias_torque(const ManipulatorModel& model, const VecX& q, const VecX& qdot) {
  return evaluate(model, q, qdot).bias;
}

OperationalSpace operational_space(const ManipulatorModel& model, const VecX& q, const VecX& qdot) {
  if (model.dof() != 6) {
    throw Error(ErrorCode::kDimensionMismatch, "operational space form needs a 6-joint model");
  }
  require_dof(model, qdot, "qdot");
  const Mat6 jb = body_jacobian(model, q).m;
  Eigen::JacobiSVD<Mat6> svd(jb);
  const auto& s = svd.singularValues();
  if (!(s[5] > 0.0) || s[0] / s[5] > kMaxCondition) {
    throw Error(ErrorCode::kSingularJacobian, "body Jacobian condition number exceeds 1e6");
  }
  const Mat6 jdot = (body_jacobian(model, q + kFdStep * qdot).m - body_jacobian(model, q - kFdStep * qdot).m) /
                    (2.0 * kFdStep);
  const Mat6 jinv = jb.inverse();
  const Mat6 jinv_t = jinv.transpose();
  const Mat6 m = mass_matrix(model, q);
  const Mat6 c = coriolis_matrix(model, q, qdot);
  OperationalSpace out;
  out.mass = jinv_t * m * jinv;
  out.mass = 0.5 * (out.mass + out.mass.transpose());
  out.coriolis = jinv_t * (c - m * jinv * jdot) * jinv;
  out.gravity = jinv_t * gravity_vector(model, q);
  return out;
}

double kinetic_energy(const ManipulatorModel& model, const VecX& q, const VecX& qdot) {
  require_dof(model, qdot, "qdot");
  return 0.5 * qdot.dot(mass_matrix(model, q) * qdot);
}

double potential_energy(const ManipulatorModel& model, const VecX& q) {
  require_dof(model, q, "q");
  const ChainPass pass(model, q);
  double u = 0.0;
  for (int i = 0; i < model.dof(); ++i) {
    u -= model.links[i].mass * model.gravity.dot(pass.com_pose(model, i).pos);
  }
  return u;
}

JointState step(const ManipulatorModel& model, const JointState& state, const VecX& torque,
                const VecX& external_torque, double dt) {
  return step(evaluate(model, state.q, state.qdot), state, torque, external_torque, dt);
}

JointState step(const RobotTerms& terms, const JointState& state, const VecX& torque,
                const VecX& external_torque, double dt) {
  if (!(dt > 0.0 && dt <= 0.01)) throw Error(ErrorCode::kInvalidArgument, "dt must lie in (0, 0.01]");
  const auto n = state.q.size();
  if (torque.size() != n || external_torque.size() != n || state.qdot.size() != n) {
    throw Error(ErrorCode::kDimensionMismatch, "torque/state sizes disagree");
  }
  Eigen::LLT<MatX> llt(terms.mass);
  if (llt.info() != Eigen::Success) throw Error(ErrorCode::kNumericalBlowup, "mass matrix not factorizable");
  const VecX qddot = llt.solve(torque + external_torque - terms.bias - terms.gravity);
  JointState next;
  next.qdot = state.qdot + dt * qddot;
  if (!next.qdot.allFinite() || next.qdot.norm() > kBlowupSpeed) {
    throw Error(ErrorCode::kNumericalBlowup, "joint speed exceeded 1e4");
  }
  next.q = state.q + dt * next.qdot;
  next.t = state.t + dt;
  return next;
}

IkResult inverse_kinematics(const ManipulatorModel& model, const Pose& target, const VecX& seed, double tol,
                            int max_iterations) {
  require_dof(model, seed, "seed");
  IkResult res;
  res.q = seed;
  for (res.iterations = 0; res.iterations < max_iterations; ++res.iterations) {
    const Pose g = forward_kinematics(model, res.q);
    const Vec6 err = log_se3(compose(inverse(g), target)).vector();
    res.residual = err.norm();
    if (res.residual < tol) {
      res.converged = true;
      return res;
    }
    const Mat6X jb = body_jacobian(model, res.q).m;
    Eigen::JacobiSVD<MatX> svd(jb, Eigen::ComputeThinU | Eigen::ComputeThinV);
    // Damped steps far from the target, plain Newton once close.
    const double lambda = res.residual > 1e-3 ? 1e-2 : 0.0;
    const auto& s = svd.singularValues();
    VecX step = VecX::Zero(model.dof());
    for (int k = 0; k < s.size(); ++k) {
      const double denom = s[k] * s[k] + lambda * lambda;
      if (denom > 1e-16) step += svd.matrixV().col(k) * (s[k] / denom) * svd.matrixU().col(k).dot(err);
    }
    const double max_step = 0.3;
    if (step.norm() > max_step) step *= max_step / step.norm();
    res.q += step;
  }
  res.residual = log_se3(compose(inverse(forward_kinematics(model, res.q)), target)).vector().norm();
  res.converged = res.residual < tol;
  return res;
}

ManipulatorModel model_from_json(const nlohmann::json& doc) {
  ManipulatorModel model;
  try {
    for (const auto& joint : doc.at("joints")) {
      model.joint_twists.push_back(Twist::from_vector(vec6_from_json(joint.at("twist")), Frame::kSpatial));
    }
    model.zero_pose = pose_from_json(doc.at("zero_pose"));
    for (const auto& link : doc.at("links")) {
      LinkInertia li;
      li.mass = link.at("mass").get<double>();
      li.com = vec3_from_json(link.at("com"));
      const auto& in = link.at("inertia");
      if (!in.is_array() || in.size() != 9) throw Error(ErrorCode::kInvalidModel, "inertia needs 9 entries");
      for (int r = 0; r < 3; ++r)
        for (int c = 0; c < 3; ++c) li.inertia(r, c) = in[3 * r + c].get<double>();
      model.links.push_back(li);
    }
    if (doc.contains("gravity")) model.gravity = vec3_from_json(doc.at("gravity"));
    if (doc.contains("limits")) {
      for (const auto& lim : doc.at("limits")) model.limits.push_back({lim.at(0).get<double>(), lim.at(1).get<double>()});
    }
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::kInvalidModel, e.what());
  }
  model.validate();
  return model;
}

nlohmann::json model_to_json(const ManipulatorModel& model) {
  nlohmann::json doc;
  doc["joints"] = nlohmann::json::array();
  for (const auto& xi : model.joint_twists) doc["joints"].push_back({{"twist", vec6_to_json(xi.vector())}});
  doc["zero_pose"] = pose_to_json(model.zero_pose);
  doc["links"] = nlohmann::json::array();
  for (const auto& link : model.links) {
    std::vector<double> inertia(link.inertia.data(), link.inertia.data() + 9);  // symmetric: order irrelevant
    doc["links"].push_back({{"mass", link.mass}, {"com", {link.com.x(), link.com.y(), link.com.z()}}, {"inertia", inertia}});
  }
  doc["gravity"] = {model.gravity.x(), model.gravity.y(), model.gravity.z()};
  doc["limits"] = nlohmann::json::array();
  for (const auto& lim : model.limits) doc["limits"].push_back({lim.min, lim.max});
  return doc;
}

ManipulatorModel load_model(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::kInvalidModel, "cannot open model file " + path);
  nlohmann::json doc;
  try {
    in >> doc;
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::kInvalidModel, e.what());
  }
  return model_from_json(doc);
}

}  // namespace gic
