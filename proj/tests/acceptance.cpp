// Acceptance run: one PASS/FAIL line per criterion. Exit status is the number
// of failed criteria.

#include <algorithm>
#include <chrono>
#include <limits>
#include <cstdio>
#include <filesystem>
#include <functional>
#include <numbers>
#include <string>

#include <Eigen/Cholesky>
#include <Eigen/Eigenvalues>

#include "generators.hpp"
#include "gic/control.hpp"
#include "gic/error.hpp"
#include "gic/experiments.hpp"
#include "gic/persistence.hpp"
#include "gic/reference_arm.hpp"
#include "sim_helpers.hpp"

using namespace gic;
using gic::testing::Gen;
using gic::testing::inf_norm;

namespace {

// Tolerances and budgets.
constexpr double kInvarianceTol = 1e-9;
constexpr double kInvarianceBudget = 10.0;      // s
constexpr double kSkewTol = 1e-4;
constexpr double kJacobianTol = 1e-9;
constexpr double kPowerTol = 1e-8;
constexpr double kDynamicsBudget = 60.0;        // s
constexpr double kRegulationThreshold = 1e-3;   // Ψ
constexpr double kRegulationHorizon = 10.0;     // s simulated
constexpr double kRegulationRate = 0.99;
constexpr double kGradientTol = 1e-5;
constexpr double kTransferBand = 10.0;          // percentage points
constexpr double kTransferDefaultFloor = 90.0;  // percent
constexpr double kCicDrop = 50.0;               // percentage points
constexpr double kTraceTol = 1e-6;
constexpr double kTraceDivergence = 1e-3;
constexpr double kTransferBudget = 15.0 * 60.0; // s
constexpr double kRewardTol = 1e-12;
constexpr double kRichardsonLow = 1.8;
constexpr double kRichardsonHigh = 2.2;

constexpr int kSamples = 10000;
constexpr int kDynamicsSamples = 1000;
constexpr int kRegulationStarts = 1000;
constexpr int kEpisodesPerCell = 100;
constexpr int kTrajectories = 300;

int failures = 0;

void report(bool pass, const char* name, const std::string& detail) {
  std::printf("%s  %-28s %s\n", pass ? "PASS" : "FAIL", name, detail.c_str());
  std::fflush(stdout);
  failures += !pass;
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

std::string fmt(const char* f, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

const PropertyResult& property(const PropcheckReport& r, const std::string& name) {
  for (const auto& p : r.properties)
    if (p.name == name) return p;
  throw std::runtime_error("missing property " + name);
}

double prefix_gap(const EpisodeResult& a, const EpisodeResult& b, ErrorKind input);

void invariance_criteria() {
  PropcheckOptions opts;
  opts.samples = kSamples;
  opts.tolerance = kInvarianceTol;
  const auto t0 = std::chrono::steady_clock::now();
  const PropcheckReport r = cmd_propcheck(opts);
  const double elapsed = seconds_since(t0);

  double worst = 0.0;
  bool ok = true;
  for (const char* n : {"left_invariance_gcev", "left_invariance_elastic_wrench", "left_invariance_distance",
                        "left_invariance_velocity_error"}) {
    worst = std::max(worst, property(r, n).max_residual);
    ok = ok && property(r, n).pass;
  }
  report(ok && elapsed < kInvarianceBudget, "left-invariance",
         fmt("max residual %.2e (tol %.0e), %d samples, %.2f s", worst, kInvarianceTol, kSamples, elapsed));

  const PropertyResult& id = property(r, "randomization_identity");
  report(id.pass, "randomization identity", fmt("max residual %.2e (tol %.0e)", id.max_residual, kInvarianceTol));

  const PropertyResult& eq = property(r, "spatial_feedback_equivariance");
  report(eq.pass, "feedback equivariance", fmt("max residual %.2e (tol %.0e)", eq.max_residual, kInvarianceTol));
}

void dynamics_criterion() {
  const ManipulatorModel arm = reference_arm();
  Gen gen(101);
  const auto t0 = std::chrono::steady_clock::now();
  const double h = 1e-6;
  int spd = 0;
  double skew = 0.0, jac = 0.0, power = 0.0;
  for (int s = 0; s < kDynamicsSamples; ++s) {
    const VecX q = gen.vecx(6, std::numbers::pi), qdot = gen.vecx(6, 2.0), v = gen.vecx(6, 1.0);
    const MatX m = mass_matrix(arm, q);
    spd += Eigen::LLT<MatX>(m).info() == Eigen::Success &&
           Eigen::SelfAdjointEigenSolver<MatX>(m).eigenvalues().minCoeff() > 0.0;

    const MatX mdot = (mass_matrix(arm, q + h * qdot) - mass_matrix(arm, q - h * qdot)) / (2 * h);
    const MatX c = coriolis_matrix(arm, q, qdot);
    skew = std::max(skew, std::abs(v.dot((mdot - 2.0 * c) * v)) / (v.squaredNorm() * qdot.norm()));

    jac = std::max(jac, inf_norm(spatial_jacobian(arm, q).m - adjoint(forward_kinematics(arm, q)) * body_jacobian(arm, q).m));

    // Power balance away from singular wrist configurations.
    const VecX qn = reference_home() + gen.vecx(6, 0.8), qd = gen.vecx(6, 1.0), qdd = gen.vecx(6, 3.0);
    const VecX joint_side = mass_matrix(arm, qn) * qdd + coriolis_matrix(arm, qn, qd) * qd + gravity_vector(arm, qn);
    const Mat6 jb = body_jacobian(arm, qn).m;
    const Mat6 jdot = (body_jacobian(arm, qn + h * qd).m - body_jacobian(arm, qn - h * qd).m) / (2 * h);
    const Vec6 vb = jb * qd, vbdot = jb * qdd + jdot * qd;
    const OperationalSpace os = operational_space(arm, qn, qd);
    const double lhs = qd.dot(joint_side);
    const double rhs = vb.dot(os.mass * vbdot + os.coriolis * vb + os.gravity);
    power = std::max(power, std::abs(lhs - rhs) / std::max(1.0, std::abs(lhs)));
  }
  const double elapsed = seconds_since(t0);
  const bool ok = spd == kDynamicsSamples && skew <= kSkewTol && jac <= kJacobianTol && power <= kPowerTol &&
                  elapsed < kDynamicsBudget;
  report(ok, "dynamics identities",
         fmt("SPD %d/%d, skew %.1e, J_s-Ad J_b %.1e, power %.1e, %.1f s", spd, kDynamicsSamples, skew, jac, power,
             elapsed));
}

void regulation_criterion() {
  const ManipulatorModel arm = reference_arm();
  const Pose g_d = forward_kinematics(arm, reference_home());
  const ImpedanceGains k = action_to_gains(Action());
  Gen gen(202);
  int converged = 0;
  double slowest = 0.0;
  for (int s = 0; s < kRegulationStarts; ++s) {
    const auto out = gic::testing::regulate_gic(arm, reference_home() + gen.vecx(6, 0.3), g_d, k, kRegulationHorizon,
                                                kRegulationThreshold);
    converged += out.converged;
    if (out.converged) slowest = std::max(slowest, out.time);
  }
  const double rate = static_cast<double>(converged) / kRegulationStarts;
  report(rate >= kRegulationRate, "GIC regulation",
         fmt("%d/%d reach Psi < %.0e within %.0f s (slowest %.2f s)", converged, kRegulationStarts,
             kRegulationThreshold, kRegulationHorizon, slowest));
}

void gradient_criterion() {
  std::mt19937_64 rng(303);
  const MlpPolicy p = MlpPolicy::create({6, 16, 16, 6}, rng);
  Gen gen(304);
  const MatX x = MatX::NullaryExpr(6, 32, [&] { return gen.uniform(-1, 1); });
  const MatX y = MatX::NullaryExpr(6, 32, [&] { return gen.uniform(-0.9, 0.9); });
  try {
    const GradientCheckReport r = policy_gradient_check(p, x, y, kGradientTol);
    report(true, "gradient check", fmt("max relative error %.2e over %zu parameters", r.max_relative_error, r.checked));
  } catch (const Error& e) {
    report(false, "gradient check", e.what());
  }
}

void transfer_criterion() {
  const auto t0 = std::chrono::steady_clock::now();
  const ManipulatorModel arm = reference_arm();
  ExperimentConfig cfg;
  cfg.episodes_per_cell = kEpisodesPerCell;
  cfg.out_dir = (std::filesystem::temp_directory_path() / "gic_acceptance").string();
  std::filesystem::create_directories(cfg.out_dir);

  const Demonstrations demos = cmd_collect(arm, cfg, kTrajectories);
  const CollectPaths paths = dataset_paths(cfg.out_dir);
  PolicySet policies;
  policies[ErrorKind::kGcev] = cmd_train(paths.gcev, ErrorKind::kGcev, cfg.train, cfg.out_dir + "/policy_gcev.json");
  policies[ErrorKind::kCev] = cmd_train(paths.cev, ErrorKind::kCev, cfg.train, cfg.out_dir + "/policy_cev.json");
  const ResultTable table = cmd_eval(arm, policies, cfg);
  std::printf("%s", table.formatted().c_str());

  const Combo gic{ControllerKind::kGic, ErrorKind::kGcev};
  const Combo cic{ControllerKind::kCic, ErrorKind::kCev};
  const double gic_default = table.cell(gic, SceneCase::kDefault).percent();
  double gic_worst_gap = 0.0;
  for (const SceneCase c : {SceneCase::kCase1, SceneCase::kCase2, SceneCase::kCase3})
    gic_worst_gap = std::max(gic_worst_gap, std::abs(table.cell(gic, c).percent() - gic_default));
  const bool a_ok = gic_default >= kTransferDefaultFloor && gic_worst_gap <= kTransferBand;

  const double cic_default = table.cell(cic, SceneCase::kDefault).percent();
  const double cic_case3 = table.cell(cic, SceneCase::kCase3).percent();
  const bool b_ok = cic_default - cic_case3 >= kCicDrop;

  // Rotation about the vertical axis of the first joint maps the arm onto itself.
  const TaskScene base = cfg.scene(SceneCase::kDefault);
  const Pose g_l = rotation_about_point(Vec3::UnitZ(), 35.0 * std::numbers::pi / 180.0, Vec3(-0.55, 0.0, 0.0));
  const TaskScene moved = transform_scene(base, g_l);
  double gic_gap = 0.0, cic_gap = std::numeric_limits<double>::infinity();
  double cic_prefix = std::numeric_limits<double>::infinity();
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    const EpisodeResult a = cmd_trace(arm, policies[ErrorKind::kGcev], gic, base, seed, cfg.episode);
    const EpisodeResult b = cmd_trace(arm, policies[ErrorKind::kGcev], gic, moved, seed, cfg.episode);
    gic_gap = std::max(gic_gap, trace_gap(a, b, ErrorKind::kGcev));
    const EpisodeResult c = cmd_trace(arm, policies[ErrorKind::kCev], cic, base, seed, cfg.episode);
    const EpisodeResult d = cmd_trace(arm, policies[ErrorKind::kCev], cic, moved, seed, cfg.episode);
    cic_gap = std::min(cic_gap, trace_gap(c, d, ErrorKind::kCev));
    cic_prefix = std::min(cic_prefix, prefix_gap(c, d, ErrorKind::kCev));
  }
  const bool c_ok = gic_gap <= kTraceTol && cic_gap > kTraceDivergence && cic_prefix > kTraceDivergence;
  const double elapsed = seconds_since(t0);

  report(a_ok, "transfer (a) GIC+GCEV",
         fmt("default %.0f%%, worst case gap %.0f points (band %.0f, floor %.0f%%)", gic_default, gic_worst_gap,
             kTransferBand, kTransferDefaultFloor));
  report(b_ok, "transfer (b) CIC+CEV",
         fmt("default %.0f%%, case3 %.0f%% (needs drop >= %.0f points)", cic_default, cic_case3, kCicDrop));
  report(c_ok && elapsed < kTransferBudget, "transfer (c) equivariance",
         fmt("GIC trace gap %.1e (tol %.0e), CIC min gap %.1e (shared prefix %.1e); study %.0f s, %d of %d demos kept",
             gic_gap, kTraceTol, cic_gap, cic_prefix, elapsed, demos.successes, demos.attempts));
}

void reward_criterion() {
  const TaskScene s = make_scene(SceneCase::kDefault);
  auto at = [](const Pose& g, const Wrench& f) {
    SimState st;
    st.ee_pose = g;
    st.f_ext = f;
    return st;
  };
  const double r1 = reward(at(s.hole_pose, Wrench()), s);
  const Pose mid = Pose::translation(Vec3(0, 0, 0.03));
  const double r2 = reward(at(mid, Wrench()), s);
  const double e2 = 0.01 - 0.1 * (0.5 * 0.03 * 0.03);
  const Pose off = Pose::translation(Vec3(0.005, 0, 0.05));
  const double r3 = reward(at(off, Wrench{Vec3(0, 0, 10.0), Vec3::Zero(), Frame::kBody}), s);
  const double e3 = -0.1 * (0.5 * (0.005 * 0.005 + 0.05 * 0.05)) - 0.05;
  const bool ok = r1 == 120.0 && std::abs(r2 - e2) <= kRewardTol && std::abs(r3 - e3) <= kRewardTol;
  report(ok, "reward examples", fmt("%.6f / %.8f / %.8f", r1, r2, r3));
}

void gac_criterion() {
  const Pose g_d = Pose::identity();
  const Pose g0{Rotation::about_axis(Vec3(1, 2, 3).normalized(), 0.6), Vec3(0.05, -0.04, 0.03)};
  const ImpedanceGains k = action_to_gains(Action());
  const Pose end = gic::testing::gac_rollout(g0, g_d, k, Wrench(), 1e-3, 10.0);
  const double psi = distance(end, g_d);

  const double horizon = 0.2;
  const Pose a = gic::testing::gac_rollout(g0, g_d, k, Wrench(), 4e-4, horizon);
  const Pose b = gic::testing::gac_rollout(g0, g_d, k, Wrench(), 2e-4, horizon);
  const Pose c = gic::testing::gac_rollout(g0, g_d, k, Wrench(), 1e-4, horizon);
  const double ratio = log_se3(compose(inverse(b), a)).vector().norm() / log_se3(compose(inverse(c), b)).vector().norm();
  report(psi < kRegulationThreshold && ratio >= kRichardsonLow && ratio <= kRichardsonHigh, "GAC convergence",
         fmt("Psi %.1e after 10 s, Richardson ratio %.3f", psi, ratio));
}

// Largest gap over the rows both traces share.
double prefix_gap(const EpisodeResult& a, const EpisodeResult& b, ErrorKind input) {
  double gap = 0.0;
  const std::size_t n = std::min(a.trace.size(), b.trace.size());
  for (std::size_t i = 0; i < n; ++i) {
    const TraceRow& x = a.trace[i];
    const TraceRow& y = b.trace[i];
    const Vec6 dx = input == ErrorKind::kGcev ? Vec6(x.gcev - y.gcev) : Vec6(x.cev - y.cev);
    gap = std::max({gap, dx.cwiseAbs().maxCoeff(), (x.action - y.action).cwiseAbs().maxCoeff(),
                    (x.gains - y.gains).cwiseAbs().maxCoeff()});
  }
  return gap;
}

void run(const std::function<void()>& fn, const char* name) {
  try {
    fn();
  } catch (const std::exception& e) {
    report(false, name, std::string("threw: ") + e.what());
  }
}

}  // namespace

int main() {
  run(invariance_criteria, "invariance");
  run(dynamics_criterion, "dynamics identities");
  run(regulation_criterion, "GIC regulation");
  run(gradient_criterion, "gradient check");
  run(reward_criterion, "reward examples");
  run(gac_criterion, "GAC convergence");
  run(transfer_criterion, "transfer study");
  std::printf("%d criteria failed\n", failures);
  return failures;
}
