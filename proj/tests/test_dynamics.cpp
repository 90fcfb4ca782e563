#include <cmath>
#include <numbers>

#include <Eigen/Eigenvalues>
#include <gtest/gtest.h>

#include "generators.hpp"
#include "gic/error.hpp"
#include "gic/reference_arm.hpp"
#include "sim_helpers.hpp"

using namespace gic;
using gic::testing::Gen;
using gic::testing::inf_norm;
using gic::testing::pendulum;

namespace {

constexpr double kPi = std::numbers::pi;
constexpr double kG = 9.81;

// exp of a 4×4 matrix by scaling and squaring with a Taylor core.
Mat4 expm(const Mat4& a) {
  int s = 0;
  double norm = a.cwiseAbs().rowwise().sum().maxCoeff();
  while (norm > 0.1) {
    norm /= 2.0;
    ++s;
  }
  const Mat4 b = a / std::pow(2.0, s);
  Mat4 term = Mat4::Identity(), sum = Mat4::Identity();
  for (int k = 1; k < 20; ++k) {
    term = term * b / k;
    sum += term;
  }
  for (int i = 0; i < s; ++i) sum = sum * sum;
  return sum;
}

Mat4 fk_oracle(const ManipulatorModel& model, const VecX& q) {
  Mat4 g = Mat4::Identity();
  for (int i = 0; i < model.dof(); ++i) g = g * expm(hat6(model.joint_twists[i]) * q[i]);
  return g * model.zero_pose.matrix();
}

// Link i frame: exp(ξ₁q₁)···exp(ξᵢqᵢ), coinciding with the spatial frame at q = 0.
Mat4 link_frame(const ManipulatorModel& model, const VecX& q, int i) {
  Mat4 g = Mat4::Identity();
  for (int j = 0; j <= i; ++j) g = g * expm(hat6(model.joint_twists[j]) * q[j]);
  return g;
}

// Σ ½ m|ṗ_c|² + ½ ωᵀ(R I Rᵀ)ω with velocities from finite differences in time.
double kinetic_energy_oracle(const ManipulatorModel& model, const VecX& q, const VecX& qdot) {
  const double h = 1e-6;
  double t = 0.0;
  for (int i = 0; i < model.dof(); ++i) {
    const Mat4 gp = link_frame(model, q + h * qdot, i), gm = link_frame(model, q - h * qdot, i);
    const Mat4 g0 = link_frame(model, q, i);
    const Vec3 com = model.links[i].com;
    const Vec3 cp = gp.topLeftCorner<3, 3>() * com + gp.topRightCorner<3, 1>();
    const Vec3 cm = gm.topLeftCorner<3, 3>() * com + gm.topRightCorner<3, 1>();
    const Vec3 v = (cp - cm) / (2 * h);
    const Mat3 rdot = (gp.topLeftCorner<3, 3>() - gm.topLeftCorner<3, 3>()) / (2 * h);
    const Mat3 r = g0.topLeftCorner<3, 3>();
    const Mat3 w_hat = rdot * r.transpose();
    const Vec3 w(w_hat(2, 1), w_hat(0, 2), w_hat(1, 0));
    const Mat3 inertia = r * model.links[i].inertia * r.transpose();
    t += 0.5 * model.links[i].mass * v.squaredNorm() + 0.5 * w.dot(inertia * w);
  }
  return t;
}

VecX random_q(Gen& gen) { return reference_home() + gen.vecx(6, 0.8); }

}  // namespace

TEST(Model, ReferenceArmIsValid) {
  EXPECT_NO_THROW(reference_arm().validate());
  ManipulatorModel bad = reference_arm();
  bad.links[2].mass = 0.0;
  EXPECT_THROW(bad.validate(), Error);
  bad = reference_arm();
  bad.links[1].inertia = Vec3(1.0, 1.0, 3.0).asDiagonal();
  EXPECT_THROW(bad.validate(), Error);
}

TEST(Model, JsonRoundTrip) {
  const ManipulatorModel m = reference_arm();
  const ManipulatorModel back = model_from_json(model_to_json(m));
  Gen gen(1);
  const VecX q = random_q(gen);
  EXPECT_LT(inf_norm(forward_kinematics(back, q).matrix() - forward_kinematics(m, q).matrix()), 1e-15);
  EXPECT_LT(inf_norm(mass_matrix(back, q) - mass_matrix(m, q)), 1e-15);
}

TEST(Kinematics, ZeroConfigurationAndSingleJoint) {
  const ManipulatorModel arm = reference_arm();
  EXPECT_LT(inf_norm(forward_kinematics(arm, VecX::Zero(6)).matrix() - arm.zero_pose.matrix()), 1e-15);
  ManipulatorModel one;
  one.joint_twists = {Twist{Vec3::Zero(), Vec3::UnitZ(), Frame::kSpatial}};
  one.zero_pose = Pose::translation(Vec3(1, 0, 0));
  one.links = {LinkInertia{}};
  const Pose g = forward_kinematics(one, VecX::Constant(1, kPi / 2));
  EXPECT_LT(inf_norm(g.matrix() - compose(Pose{Rotation::rot_z(kPi / 2), Vec3::Zero()}, one.zero_pose).matrix()),
            1e-15);
  EXPECT_THROW(forward_kinematics(arm, VecX::Zero(5)), Error);
}

TEST(Kinematics, MatchesMatrixExponentialOracle) {
  const ManipulatorModel arm = reference_arm();
  Gen gen(2);
  for (int i = 0; i < 200; ++i) {
    const VecX q = gen.vecx(6, kPi);
    EXPECT_LT(inf_norm(forward_kinematics(arm, q).matrix() - fk_oracle(arm, q)), 1e-9);
  }
}

TEST(Kinematics, BodyJacobianMatchesFiniteDifferences) {
  const ManipulatorModel arm = reference_arm();
  Gen gen(3);
  const double h = 1e-6;
  for (int s = 0; s < 50; ++s) {
    const VecX q = random_q(gen);
    const Mat6X jb = body_jacobian(arm, q).m;
    const Pose g = forward_kinematics(arm, q);
    for (int i = 0; i < 6; ++i) {
      VecX qp = q, qm = q;
      qp[i] += h;
      qm[i] -= h;
      const Mat4 dg = (forward_kinematics(arm, qp).matrix() - forward_kinematics(arm, qm).matrix()) / (2 * h);
      Mat4 xi_hat = inverse(g).matrix() * dg;
      xi_hat.row(3).setZero();
      xi_hat.topLeftCorner<3, 3>() = 0.5 * (xi_hat.topLeftCorner<3, 3>() - xi_hat.topLeftCorner<3, 3>().transpose());
      EXPECT_LT((vee6(xi_hat).vector() - jb.col(i)).cwiseAbs().maxCoeff(), 1e-5);
    }
  }
}

TEST(Kinematics, SpatialJacobianIsAdjointOfBody) {
  const ManipulatorModel arm = reference_arm();
  Gen gen(4);
  for (int s = 0; s < 1000; ++s) {
    const VecX q = gen.vecx(6, kPi);
    const Mat6X js = spatial_jacobian(arm, q).m;
    const Mat6X jb = body_jacobian(arm, q).m;
    EXPECT_LT(inf_norm(js - adjoint(forward_kinematics(arm, q)) * jb), 1e-9);
  }
  EXPECT_EQ(body_jacobian(arm, VecX::Zero(6)).frame, Frame::kBody);
  EXPECT_EQ(spatial_jacobian(arm, VecX::Zero(6)).frame, Frame::kSpatial);
}

TEST(Kinematics, SingleRevoluteJointHasConstantBodyTwist) {
  const ManipulatorModel p = pendulum(1.0, 0.5);
  const Vec6 j0 = body_jacobian(p, VecX::Constant(1, 0.0)).m.col(0);
  for (const double q : {0.3, 1.0, -2.0}) {
    EXPECT_LT((body_jacobian(p, VecX::Constant(1, q)).m.col(0) - j0).norm(), 1e-14);
  }
}

TEST(Kinematics, InverseKinematicsConverges) {
  const ManipulatorModel arm = reference_arm();
  Gen gen(5);
  for (int s = 0; s < 50; ++s) {
    const VecX q_true = reference_home() + gen.vecx(6, 0.3);
    const Pose target = forward_kinematics(arm, q_true);
    const IkResult ik = inverse_kinematics(arm, target, reference_home());
    ASSERT_TRUE(ik.converged);
    EXPECT_LT(distance(forward_kinematics(arm, ik.q), target), 1e-12);
  }
}

TEST(Pendulum, MassGravityAndCoriolis) {
  const double m = 2.0, l = 0.7;
  const ManipulatorModel p = pendulum(m, l, 1e-9);
  for (const double q : {0.0, 0.4, 2.0}) {
    EXPECT_NEAR(mass_matrix(p, VecX::Constant(1, q))(0, 0), m * l * l + 1e-9, 1e-12);
    EXPECT_NEAR(coriolis_matrix(p, VecX::Constant(1, q), VecX::Constant(1, 3.0))(0, 0), 0.0, 1e-6);
  }
  // Hanging straight down: no gravity torque. Horizontal: magnitude m·g·l.
  EXPECT_NEAR(gravity_vector(p, VecX::Constant(1, kPi / 2))[0], 0.0, 1e-12);
  EXPECT_NEAR(std::abs(gravity_vector(p, VecX::Constant(1, 0.0))[0]), m * kG * l, 1e-12);
  // Gravity pulls the horizontal rod toward the hanging configuration (+q).
  EXPECT_LT(gravity_vector(p, VecX::Constant(1, 0.0))[0], 0.0);
}

TEST(Pendulum, EnergyDriftBelowOnePercent) {
  const ManipulatorModel p = pendulum(1.5, 0.6);
  JointState s{VecX::Constant(1, 0.0), VecX::Zero(1), 0.0};
  auto energy = [&](const JointState& x) { return kinetic_energy(p, x.q, x.qdot) + potential_energy(p, x.q); };
  const double e0 = energy(s);
  const double swing = 1.5 * kG * 0.6;  // energy scale of the swing
  double worst = 0.0;
  for (int k = 0; k < 10000; ++k) {
    s = step(p, s, VecX::Zero(1), VecX::Zero(1), 1e-3);
    worst = std::max(worst, std::abs(energy(s) - e0));
  }
  EXPECT_LT(worst / swing, 0.01);
}

TEST(Dynamics, MassMatrixSymmetricPositiveDefinite) {
  const ManipulatorModel arm = reference_arm();
  Gen gen(6);
  for (int s = 0; s < 1000; ++s) {
    const MatX mm = mass_matrix(arm, gen.vecx(6, kPi));
    EXPECT_LT(inf_norm(mm - mm.transpose()), 1e-10);
    EXPECT_GT(Eigen::SelfAdjointEigenSolver<MatX>(mm).eigenvalues().minCoeff(), 0.0);
  }
}

TEST(Dynamics, KineticEnergyMatchesPerLinkOracle) {
  const ManipulatorModel arm = reference_arm();
  Gen gen(7);
  for (int s = 0; s < 50; ++s) {
    const VecX q = gen.vecx(6, kPi), qdot = gen.vecx(6, 1.0);
    const double oracle = kinetic_energy_oracle(arm, q, qdot);
    EXPECT_NEAR(kinetic_energy(arm, q, qdot), oracle, 1e-6 * std::max(1.0, oracle));
  }
}

TEST(Dynamics, GravityIsGradientOfPotential) {
  const ManipulatorModel arm = reference_arm();
  Gen gen(8);
  const double h = 1e-6;
  for (int s = 0; s < 100; ++s) {
    const VecX q = gen.vecx(6, kPi);
    const VecX g = gravity_vector(arm, q);
    for (int i = 0; i < 6; ++i) {
      VecX qp = q, qm = q;
      qp[i] += h;
      qm[i] -= h;
      EXPECT_NEAR(g[i], (potential_energy(arm, qp) - potential_energy(arm, qm)) / (2 * h), 1e-6);
    }
  }
}

TEST(Dynamics, MdotMinusTwoCIsSkew) {
  const ManipulatorModel arm = reference_arm();
  Gen gen(9);
  const double h = 1e-6;
  for (int s = 0; s < 200; ++s) {
    const VecX q = gen.vecx(6, kPi), qdot = gen.vecx(6, 2.0), v = gen.vecx(6, 1.0);
    const MatX mdot = (mass_matrix(arm, q + h * qdot) - mass_matrix(arm, q - h * qdot)) / (2 * h);
    const MatX c = coriolis_matrix(arm, q, qdot);
    const double residual = std::abs(v.dot((mdot - 2.0 * c) * v));
    EXPECT_LE(residual, 1e-4 * v.squaredNorm() * qdot.norm());
  }
  EXPECT_LT(inf_norm(coriolis_matrix(arm, reference_home(), VecX::Zero(6))), 1e-12);
}

TEST(Dynamics, NewtonEulerBiasMatchesChristoffel) {
  const ManipulatorModel arm = reference_arm();
  Gen gen(10);
  for (int s = 0; s < 200; ++s) {
    const VecX q = gen.vecx(6, kPi), qdot = gen.vecx(6, 2.0);
    const VecX ref = coriolis_matrix(arm, q, qdot) * qdot;
    EXPECT_LT((bias_torque(arm, q, qdot) - ref).cwiseAbs().maxCoeff(), 1e-5 * std::max(1.0, ref.norm()));
  }
}

TEST(Dynamics, EvaluateAgreesWithSeparateCalls) {
  const ManipulatorModel arm = reference_arm();
  Gen gen(11);
  const VecX q = random_q(gen), qdot = gen.vecx(6, 1.0);
  const RobotTerms t = evaluate(arm, q, qdot);
  EXPECT_LT(inf_norm(t.mass - mass_matrix(arm, q)), 1e-12);
  EXPECT_LT(inf_norm(t.gravity - gravity_vector(arm, q)), 1e-12);
  EXPECT_LT(inf_norm(t.bias - bias_torque(arm, q, qdot)), 1e-12);
  EXPECT_LT(inf_norm(t.body_jacobian - body_jacobian(arm, q).m), 1e-12);
  EXPECT_LT(inf_norm(t.ee.matrix() - forward_kinematics(arm, q).matrix()), 1e-12);
}

TEST(Dynamics, OperationalSpacePowerBalance) {
  const ManipulatorModel arm = reference_arm();
  Gen gen(12);
  const double h = 1e-6;
  for (int s = 0; s < 200; ++s) {
    const VecX q = random_q(gen), qdot = gen.vecx(6, 1.0), qddot = gen.vecx(6, 3.0);
    const MatX m = mass_matrix(arm, q);
    const VecX joint_side = m * qddot + coriolis_matrix(arm, q, qdot) * qdot + gravity_vector(arm, q);
    const Mat6 jb = body_jacobian(arm, q).m;
    const Mat6 jdot = (body_jacobian(arm, q + h * qdot).m - body_jacobian(arm, q - h * qdot).m) / (2 * h);
    const Vec6 v = jb * qdot, vdot = jb * qddot + jdot * qdot;
    const OperationalSpace os = operational_space(arm, q, qdot);
    const double lhs = qdot.dot(joint_side);
    const double rhs = v.dot(os.mass * vdot + os.coriolis * v + os.gravity);
    EXPECT_NEAR(lhs, rhs, 1e-8 * std::max(1.0, std::abs(lhs)));
    EXPECT_GT(Eigen::SelfAdjointEigenSolver<Mat6>(os.mass).eigenvalues().minCoeff(), 0.0);
  }
}

TEST(Dynamics, OperationalSpaceRejectsSingularity) {
  // Elbow straight and wrist aligned: joints 4 and 6 share an axis.
  const ManipulatorModel arm = reference_arm();
  EXPECT_THROW(operational_space(arm, VecX::Zero(6), VecX::Zero(6)), Error);
  EXPECT_THROW(operational_space(pendulum(1, 1), VecX::Zero(1), VecX::Zero(1)), Error);
}

TEST(Integrator, RestStatesStayAtRest) {
  ManipulatorModel arm = reference_arm();
  arm.gravity.setZero();
  JointState s{reference_home(), VecX::Zero(6), 0.0};
  const JointState next = step(arm, s, VecX::Zero(6), VecX::Zero(6), 1e-3);
  EXPECT_EQ(next.q, s.q);
  EXPECT_EQ(next.qdot, s.qdot);

  const ManipulatorModel heavy = reference_arm();
  JointState c{reference_home(), VecX::Zero(6), 0.0};
  for (int k = 0; k < 1000; ++k) c = step(heavy, c, gravity_vector(heavy, c.q), VecX::Zero(6), 1e-3);
  EXPECT_LT((c.q - reference_home()).cwiseAbs().maxCoeff(), 1e-12);
}

TEST(Integrator, BlowupIsReported) {
  const ManipulatorModel p = pendulum(1e-3, 0.1, 1e-9);
  JointState s{VecX::Zero(1), VecX::Zero(1), 0.0};
  try {
    step(p, s, VecX::Constant(1, 1e6), VecX::Zero(1), 1e-3);
    FAIL() << "expected NumericalBlowup";
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kNumericalBlowup);
  }
}

TEST(Integrator, DampedArmLosesEnergy) {
  // Gravity compensation plus body-frame damping is passive.
  const ManipulatorModel arm = reference_arm();
  Gen gen(13);
  const Mat6 kd = damping_from_gains(action_to_gains(Action()));
  for (int trial = 0; trial < 5; ++trial) {
    JointState s{random_q(gen), gen.vecx(6, 0.5), 0.0};
    double prev = kinetic_energy(arm, s.q, s.qdot);
    for (int k = 0; k < 2000; ++k) {
      const RobotTerms t = evaluate(arm, s.q, s.qdot);
      const Vec6 v = t.body_jacobian * s.qdot;
      const VecX torque = t.body_jacobian.transpose() * (-kd * v) + t.gravity;
      s = step(t, s, torque, VecX::Zero(6), 1e-3);
      const double e = kinetic_energy(arm, s.q, s.qdot);
      EXPECT_LE(e, prev + 1e-6 * std::max(1.0, prev));
      prev = e;
    }
  }
}
