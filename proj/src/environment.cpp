#include "gic/environment.hpp"

#include <cmath>
#include <iomanip>
#include <numbers>
#include <sstream>

#include <Eigen/LU>

#include "gic/error.hpp"
#include "gic/json_io.hpp"
#include "gic/reference_arm.hpp"

namespace gic {

namespace {

constexpr double kBlockThickness = 0.1;
constexpr double kSuccessAxial = 0.026;
constexpr double kSuccessRadial = 0.002;
constexpr double kMinRcond = 1e-6;
constexpr double kIkTolerance = 1e-10;
constexpr int kRimSamples = 8;

struct Penetration {
  double depth;
  Vec3 normal;  // out of the solid, hole frame
};

// Solid = surface block outside the hole footprint plus everything below the
// hole bottom, both truncated at ±surface_extent and kBlockThickness.
std::optional<Penetration> penetrate(const TaskScene& s, const Vec3& y) {
  if (std::abs(y.x()) > s.surface_extent || std::abs(y.y()) > s.surface_extent) return std::nullopt;
  if (y.z() >= s.hole_depth || y.z() <= s.hole_depth - kBlockThickness) return std::nullopt;
  const double r = std::hypot(y.x(), y.y());
  if (r < s.hole_radius) {
    if (y.z() >= 0.0) return std::nullopt;
    return Penetration{-y.z(), Vec3::UnitZ()};
  }
  Penetration best{s.hole_depth - y.z(), Vec3::UnitZ()};
  if (y.z() > 0.0 && r - s.hole_radius < best.depth) {
    best = {r - s.hole_radius, Vec3(-y.x() / r, -y.y() / r, 0.0)};
  }
  return best;
}

std::vector<Vec3> peg_samples(const TaskScene& s) {
  std::vector<Vec3> pts;
  pts.reserve(1 + 2 * kRimSamples);
  pts.emplace_back(Vec3::Zero());
  for (const double z : {0.0, s.peg_station}) {
    for (int k = 0; k < kRimSamples; ++k) {
      const double a = 2.0 * std::numbers::pi * k / kRimSamples;
      pts.emplace_back(s.peg_radius * std::cos(a), s.peg_radius * std::sin(a), z);
    }
  }
  return pts;
}

double get_or(const nlohmann::json& doc, const char* key, double fallback) {
  return doc.contains(key) ? doc.at(key).get<double>() : fallback;
}

}  // namespace

const char* to_string(SceneCase c) {
  switch (c) {
    case SceneCase::kDefault: return "default";
    case SceneCase::kCase1: return "case1";
    case SceneCase::kCase2: return "case2";
    case SceneCase::kCase3: return "case3";
  }
  return "?";
}

SceneCase scene_case_from_string(const std::string& s) {
  for (const SceneCase c : all_cases()) {
    if (s == to_string(c)) return c;
  }
  throw Error(ErrorCode::kInvalidArgument, "unknown scene case '" + s + "'");
}

const std::vector<SceneCase>& all_cases() {
  static const std::vector<SceneCase> cases{SceneCase::kDefault, SceneCase::kCase1, SceneCase::kCase2,
                                            SceneCase::kCase3};
  return cases;
}

void TaskScene::validate() const {
  if (!(peg_radius > 0.0 && peg_radius < hole_radius)) {
    throw Error(ErrorCode::kInvalidArgument, "peg radius must be positive and below the hole radius");
  }
  if (!(hole_depth > 0.0)) throw Error(ErrorCode::kInvalidArgument, "hole depth must be positive");
  if (!(surface_extent > hole_radius)) throw Error(ErrorCode::kInvalidArgument, "surface must surround the hole");
}

Vec3 TaskScene::mouth() const { return hole_pose.R() * Vec3(0.0, 0.0, hole_depth) + hole_pose.p(); }

Pose rotation_about_point(const Vec3& axis, double angle, const Vec3& point) {
  const Rotation r = Rotation::about_axis(axis, angle);
  return {r, point - r * point};
}

TaskScene apply_case(const TaskScene& base, SceneCase c) {
  const double deg = std::numbers::pi / 180.0;
  const Vec3 m = base.mouth();
  switch (c) {
    case SceneCase::kDefault: return base;
    case SceneCase::kCase1: return transform_scene(base, rotation_about_point(Vec3::UnitX(), 30.0 * deg, m));
    case SceneCase::kCase2: return transform_scene(base, rotation_about_point(Vec3::UnitY(), -30.0 * deg, m));
    case SceneCase::kCase3: return transform_scene(base, rotation_about_point(Vec3::UnitY(), -90.0 * deg, m));
  }
  return base;
}

TaskScene make_scene(SceneCase c) { return apply_case(TaskScene{}, c); }

TaskScene transform_scene(const TaskScene& scene, const Pose& g_l) {
  TaskScene out = scene;
  out.hole_pose = compose(g_l, scene.hole_pose);
  return out;
}

Wrench contact_wrench(const TaskScene& scene, const Pose& g, const Twist& v_b, const ContactParams& params,
                      ContactState* state) {
  const Pose to_hole = compose(inverse(scene.hole_pose), g);
  const Mat3& r = to_hole.R();
  const std::vector<Vec3> samples = peg_samples(scene);
  if (state) state->anchors.resize(samples.size());
  Vec3 force = Vec3::Zero();
  Vec3 torque = Vec3::Zero();
  for (std::size_t i = 0; i < samples.size(); ++i) {
    const Vec3& s = samples[i];
    const Vec3 y = r * s + to_hole.p();
    const auto pen = penetrate(scene, y);
    if (!pen) {
      if (state) state->anchors[i].reset();
      continue;
    }
    const Vec3 u = r * (v_b.v + v_b.w.cross(s));
    const double rate = -u.dot(pen->normal);
    const double f_n = params.k_n * pen->depth + params.d_n * std::max(rate, 0.0);
    Vec3 f = f_n * pen->normal;
    if (state) {
      auto& anchor = state->anchors[i];
      if (!anchor) anchor = y;
      Vec3 slip = y - *anchor;
      slip -= slip.dot(pen->normal) * pen->normal;
      const double slip_norm = slip.norm();
      const double limit = params.mu * f_n;
      if (params.k_t * slip_norm > limit) {
        // Sliding: the anchor trails the point at the cone boundary.
        const Vec3 dir = slip / slip_norm;
        f -= limit * dir;
        *anchor = y - dir * (params.k_t > 0.0 ? limit / params.k_t : 0.0);
      } else {
        f -= params.k_t * slip;
      }
    }
    const Vec3 f_body = r.transpose() * f;
    force += f_body;
    torque += s.cross(f_body);
  }
  return {force, torque, Frame::kBody};
}

HoleOffset hole_offset(const Pose& g, const TaskScene& scene) {
  const Vec3 y = scene.hole_pose.R().transpose() * (g.p() - scene.hole_pose.p());
  return {y.z(), std::hypot(y.x(), y.y())};
}

double reward(const SimState& state, const TaskScene& scene) {
  const HoleOffset off = hole_offset(state.ee_pose, scene);
  const double r1 = -0.1 * distance(state.ee_pose, scene.hole_pose);
  double r2 = 0.0;
  if (off.axial < 0.026) {
    r2 = 120.0;
  } else if (off.axial < 0.04) {
    r2 = 0.04 - off.axial;
  }
  const double r3 = off.radial > 0.002 ? -0.005 * std::abs(state.f_ext.f.z()) : 0.0;
  return r1 + r2 + r3;
}

bool success(const SimState& state, const TaskScene& scene) {
  const HoleOffset off = hole_offset(state.ee_pose, scene);
  return off.axial < kSuccessAxial && off.radial < kSuccessRadial;
}

Pose sample_initial_offset(std::mt19937_64& rng, const InitialPoseRanges& ranges) {
  std::uniform_real_distribution<double> unit(-1.0, 1.0);
  std::normal_distribution<double> normal;
  Vec3 dp;
  for (int i = 0; i < 3; ++i) dp[i] = ranges.translation * unit(rng);
  Vec3 axis(normal(rng), normal(rng), normal(rng));
  if (axis.norm() < 1e-12) axis = Vec3::UnitZ();
  const double angle = ranges.rotation_deg * std::numbers::pi / 180.0 * 0.5 * (unit(rng) + 1.0);
  return {Rotation::about_axis(axis, angle), Vec3(0.0, 0.0, ranges.nominal_offset) + dp};
}

Pose sample_initial_pose(std::mt19937_64& rng, const TaskScene& scene, const InitialPoseRanges& ranges) {
  return compose(scene.hole_pose, sample_initial_offset(rng, ranges));
}

EpisodeStart solve_start(const ManipulatorModel& model, const TaskScene& scene, const Pose& offset) {
  const VecX home = model.dof() == 6 ? reference_home() : VecX::Zero(model.dof());
  const Pose nominal = compose(scene.hole_pose, Pose::translation(Vec3(0.0, 0.0, InitialPoseRanges{}.nominal_offset)));
  const IkResult first = inverse_kinematics(model, nominal, home);
  const Pose target = compose(scene.hole_pose, offset);
  const IkResult ik = inverse_kinematics(model, target, first.converged ? first.q : home);
  if (ik.residual > kIkTolerance) {
    throw Error(ErrorCode::kSingularJacobian, "start pose is not reachable (IK residual " +
                                                  std::to_string(ik.residual) + ")");
  }
  return {target, ik.q};
}

EpisodeResult run_episode(const ManipulatorModel& model, const TaskScene& scene, ControllerKind controller,
                          GainSchedule& policy, const EpisodeConfig& config, const QueryHook& hook) {
  scene.validate();
  EpisodeResult result;
  std::mt19937_64 rng(config.seed);
  const Pose offset = config.start_offset ? *config.start_offset : sample_initial_offset(rng, config.ranges);
  const int n = model.dof();
  const int horizon_steps = static_cast<int>(std::lround(config.horizon / config.dt));
  const Pose& g_d = scene.hole_pose;

  JointState js;
  SimState st;
  try {
    js = {solve_start(model, scene, offset).q, VecX::Zero(n), 0.0};
    policy.reset();
    Action action;
    ImpedanceGains gains;
    Twist v_admittance;
    ContactState contact;
    for (int k = 0; k <= horizon_steps; ++k) {
      const RobotTerms terms = evaluate(model, js.q, js.qdot);
      const Mat6 jb = terms.body_jacobian;
      const Twist v_b = Twist::from_vector(jb * js.qdot, Frame::kBody);
      st = {js, terms.ee, v_b, contact_wrench(scene, terms.ee, v_b, config.contact, &contact), js.t};
      result.steps = k;
      if (success(st, scene)) {
        result.success = true;
        break;
      }
      if (k == horizon_steps) break;

      if (k % config.update_period == 0) {
        const Observation obs{js.t, gcev(terms.ee, g_d), cartesian_error(terms.ee, g_d)};
        action = policy.act(obs);
        gains = policy.to_gains(action);
        if (hook) hook(obs, action);
      }

      const Eigen::PartialPivLU<Mat6> lu(jb);
      if (!(lu.rcond() > kMinRcond)) throw Error(ErrorCode::kSingularJacobian, "body Jacobian is near singular");

      VecX torque;
      Vec6 feedback;
      switch (controller) {
        case ControllerKind::kGic: {
          const Vec6 g_tilde = lu.transpose().solve(terms.gravity);
          const Wrench w = gic_regulation(terms.ee, g_d, v_b, gains, g_tilde);
          feedback = w.vector() - g_tilde;
          torque = wrench_to_torque({jb, Frame::kBody}, w);
          break;
        }
        case ControllerKind::kCic: {
          const Mat6 js_m = terms.spatial_jacobian;
          const Twist v_s = Twist::from_vector(js_m * js.qdot, Frame::kSpatial);
          const Vec6 g_tilde = js_m.transpose().partialPivLu().solve(terms.gravity);
          const Wrench w = cic(terms.ee, g_d, v_s, gains, g_tilde);
          feedback = w.vector() - g_tilde;
          torque = wrench_to_torque({js_m, Frame::kSpatial}, w);
          break;
        }
        case ControllerKind::kGac: {
          v_admittance = gac_step(v_admittance, terms.ee, g_d, config.admittance_inertia, gains, st.f_ext, config.dt);
          feedback = v_admittance.vector();
          torque = joint_velocity_pd(desired_joint_velocity(jb, v_admittance), js.qdot, config.joint_kv,
                                     terms.gravity);
          break;
        }
      }

      const double r = reward(st, scene);
      result.return_sum += r;
      if (config.record_trace) {
        result.trace.push_back({js.t, terms.ee, gcev(terms.ee, g_d), cartesian_error(terms.ee, g_d),
                                action.vector(), gains.stacked(), st.f_ext.vector(), feedback, r});
      }
      const VecX external = jb.transpose() * st.f_ext.vector();
      js = step(terms, js, torque, external, config.dt);
    }
  } catch (const Error& e) {
    result.success = false;
    result.failure = e.what();
  }
  if (st.joints.q.size() == n) result.final_depth = hole_offset(st.ee_pose, scene).axial;
  return result;
}

TaskScene scene_from_json(const nlohmann::json& doc, SceneCase c) {
  TaskScene base;
  try {
    if (doc.contains("hole_pose")) base.hole_pose = pose_from_json(doc.at("hole_pose"));
    base.hole_radius = get_or(doc, "hole_radius", base.hole_radius);
    base.peg_radius = get_or(doc, "peg_radius", base.peg_radius);
    base.hole_depth = get_or(doc, "hole_depth", base.hole_depth);
    base.surface_extent = get_or(doc, "surface_extent", base.surface_extent);
    base.peg_station = get_or(doc, "peg_station", base.peg_station);
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::kInvalidArgument, e.what());
  }
  base.validate();
  return apply_case(base, c);
}

ContactParams contact_from_json(const nlohmann::json& doc) {
  ContactParams p;
  try {
    p.k_n = get_or(doc, "k_n", p.k_n);
    p.d_n = get_or(doc, "d_n", p.d_n);
    p.mu = get_or(doc, "mu", p.mu);
    p.k_t = get_or(doc, "k_t", p.k_t);
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::kInvalidArgument, e.what());
  }
  if (p.k_n < 0 || p.d_n < 0 || p.mu < 0 || p.k_t < 0) {
    throw Error(ErrorCode::kInvalidArgument, "contact parameters must be non-negative");
  }
  return p;
}

InitialPoseRanges ranges_from_json(const nlohmann::json& doc) {
  InitialPoseRanges r;
  try {
    r.nominal_offset = get_or(doc, "nominal_offset", r.nominal_offset);
    r.translation = get_or(doc, "translation", r.translation);
    r.rotation_deg = get_or(doc, "rotation_deg", r.rotation_deg);
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::kInvalidArgument, e.what());
  }
  return r;
}

std::string csv_header() { return "case,controller,error_kind,seed,success,steps,final_depth,return"; }

std::string csv_row(SceneCase c, ControllerKind controller, ErrorKind error, std::uint64_t seed,
                    const EpisodeResult& r) {
  std::ostringstream os;
  os << to_string(c) << ',' << to_string(controller) << ',' << to_string(error) << ',' << seed << ','
     << (r.success ? 1 : 0) << ',' << r.steps << ',' << std::setprecision(9) << r.final_depth << ','
     << r.return_sum;
  return os.str();
}

}  // namespace gic
