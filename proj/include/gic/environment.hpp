#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "gic/control.hpp"
#include "gic/dynamics.hpp"

namespace gic {

enum class SceneCase { kDefault, kCase1, kCase2, kCase3 };

const char* to_string(SceneCase c);
SceneCase scene_case_from_string(const std::string& s);
const std::vector<SceneCase>& all_cases();

/// Hole frame at the hole bottom, z along the insertion axis pointing out of
/// the hole. The mouth lies at z = hole_depth and the surrounding surface is
/// the plane z = hole_depth, out to ±surface_extent.
struct TaskScene {
  Pose hole_pose;
  double hole_radius = 0.010;
  double peg_radius = 0.0095;
  double hole_depth = 0.040;
  double surface_extent = 0.15;
  /// Axial distance from the peg tip to the upper ring of contact samples.
  double peg_station = 0.035;

  void validate() const;
  Vec3 mouth() const;
};

struct ContactParams {
  double k_n = 2e4;
  double d_n = 50.0;
  double mu = 0.3;
  double k_t = 5e3;
};

/// Stick anchors of the peg sample points, in hole coordinates. A point gets
/// an anchor when it first penetrates; the anchor is dragged along once the
/// tangential spring force exceeds the friction cone.
struct ContactState {
  std::vector<std::optional<Vec3>> anchors;
  void reset() { anchors.clear(); }
};

struct InitialPoseRanges {
  double nominal_offset = 0.08;
  double translation = 0.02;
  double rotation_deg = 10.0;
};

/// Default scene: hole frame at the spatial origin, axis along +z (against
/// gravity). The other cases rotate it about the mouth.
TaskScene make_scene(SceneCase c);
/// Rotates `base` as the case prescribes, about world axes through its mouth.
TaskScene apply_case(const TaskScene& base, SceneCase c);
TaskScene transform_scene(const TaskScene& scene, const Pose& g_l);
/// Rotation about a world axis through `point`.
Pose rotation_about_point(const Vec3& axis, double angle, const Vec3& point);

/// Body-frame wrench at the end-effector origin from penalty contact. Friction
/// needs the anchors in `state`; without it every call is a fresh touch and
/// only normal forces act.
Wrench contact_wrench(const TaskScene& scene, const Pose& g, const Twist& v_b, const ContactParams& params,
                      ContactState* state = nullptr);

struct SimState {
  JointState joints;
  Pose ee_pose;
  Twist ee_twist;
  Wrench f_ext;
  double t = 0.0;
};

struct HoleOffset {
  double axial;   // (z − z_d) along the hole axis
  double radial;  // d_p, distance from the axis
};

HoleOffset hole_offset(const Pose& g, const TaskScene& scene);
/// r1 + r2 + r3 with the axial/radial terms in the hole frame.
double reward(const SimState& state, const TaskScene& scene);
/// Axial offset < 0.026 and radial offset < 0.002.
bool success(const SimState& state, const TaskScene& scene);

/// Nominal start (0.08 m out along the hole axis) perturbed by a uniform
/// translation and a uniform-axis rotation, both in the hole frame.
Pose sample_initial_pose(std::mt19937_64& rng, const TaskScene& scene, const InitialPoseRanges& ranges);
/// The same sample expressed relative to the hole, independent of the scene.
Pose sample_initial_offset(std::mt19937_64& rng, const InitialPoseRanges& ranges);

/// What a gain schedule sees at a policy query.
struct Observation {
  double t = 0.0;
  Vec6 gcev = Vec6::Zero();
  Vec6 cev = Vec6::Zero();
};

class GainSchedule {
 public:
  virtual ~GainSchedule() = default;
  virtual void reset() {}
  virtual Action act(const Observation& obs) = 0;
  virtual ImpedanceGains to_gains(const Action& a) const { return action_to_gains(a); }
};

/// Emits zero stiffness regardless of the observation.
class ZeroGainSchedule : public GainSchedule {
 public:
  Action act(const Observation&) override { return Action(); }
  ImpedanceGains to_gains(const Action&) const override {
    return {Vec3::Zero(), Vec3::Zero()};
  }
};

struct EpisodeConfig {
  double dt = 1e-3;
  double horizon = 15.0;
  int update_period = 10;
  std::uint64_t seed = 0;
  ContactParams contact;
  InitialPoseRanges ranges;
  double joint_kv = 50.0;
  Mat6 admittance_inertia = default_admittance_inertia();
  bool record_trace = false;
  /// Overrides the sampled start (given relative to the hole frame).
  std::optional<Pose> start_offset;
};

struct TraceRow {
  double t;
  Pose pose;
  Vec6 gcev;
  Vec6 cev;
  Vec6 action;
  Vec6 gains;
  Vec6 f_ext;
  Vec6 feedback;  // control wrench minus gravity compensation, controller frame
  double reward;
};

struct EpisodeResult {
  bool success = false;
  int steps = 0;
  double final_depth = 0.0;
  double return_sum = 0.0;
  std::string failure;  // solver error that ended the episode, if any
  std::vector<TraceRow> trace;
};

/// Called at every policy query with the observation and the applied action.
using QueryHook = std::function<void(const Observation&, const Action&)>;

/// Initial joint configuration for the sampled start, seeded from the scene's
/// nominal inverse-kinematics solution.
struct EpisodeStart {
  Pose pose;
  VecX q;
};
EpisodeStart solve_start(const ManipulatorModel& model, const TaskScene& scene, const Pose& offset);

EpisodeResult run_episode(const ManipulatorModel& model, const TaskScene& scene, ControllerKind controller,
                          GainSchedule& policy, const EpisodeConfig& config, const QueryHook& hook = {});

// --- configuration ---------------------------------------------------------------

TaskScene scene_from_json(const nlohmann::json& doc, SceneCase c);
ContactParams contact_from_json(const nlohmann::json& doc);
InitialPoseRanges ranges_from_json(const nlohmann::json& doc);

std::string csv_header();
std::string csv_row(SceneCase c, ControllerKind controller, ErrorKind error, std::uint64_t seed,
                    const EpisodeResult& r);

}  // namespace gic
