#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "gic/bc_trainer.hpp"
#include "gic/environment.hpp"
#include "gic/expert.hpp"
#include "gic/mlp.hpp"

namespace gic {

/// A controller paired with the error vector its policy reads. The controller
/// keeps its own native error inside the feedback law.
struct Combo {
  ControllerKind controller;
  ErrorKind error;

  std::string name() const;
  bool operator==(const Combo&) const = default;
};

const std::vector<Combo>& all_combos();
/// Accepts "GIC+GCEV", "gic+gcev" and similar.
Combo combo_from_string(const std::string& s);

/// Feeds the configured error vector of each observation to an MLP.
class PolicySchedule : public GainSchedule {
 public:
  PolicySchedule(const MlpPolicy& policy, ErrorKind input) : policy_(policy), input_(input) {}
  Action act(const Observation& obs) override {
    return policy_.act(input_ == ErrorKind::kGcev ? obs.gcev : obs.cev);
  }

 private:
  const MlpPolicy& policy_;
  ErrorKind input_;
};

struct ExperimentConfig {
  std::vector<SceneCase> cases = all_cases();
  std::vector<Combo> combos = all_combos();
  int episodes_per_cell = 100;
  std::uint64_t seed = 0;
  std::string out_dir = ".";
  TaskScene base_scene;
  EpisodeConfig episode;
  int n_traj = 300;
  double noise_sigma = 0.05;
  ExpertParams expert;
  TrainConfig train;

  void validate() const;
  TaskScene scene(SceneCase c) const { return apply_case(base_scene, c); }
};

ExperimentConfig config_from_json(const nlohmann::json& doc);
ExperimentConfig load_config(const std::string& path);

/// Independent stream per (master seed, combo, case, episode).
std::uint64_t episode_seed(std::uint64_t master, int combo, int scene, int episode);

/// Runs `count` independent jobs on a pool of worker threads. Results are
/// placed by index, so the output does not depend on scheduling.
template <typename Result, typename Fn>
std::vector<Result> parallel_map(int count, Fn&& fn);

// --- collect ---------------------------------------------------------------------

struct Demonstrations {
  DemoDataset gcev;
  DemoDataset cev;
  int attempts = 0;
  int successes = 0;
};

/// Scripted expert with GIC on the default scene; only the start pose is
/// randomized. Each policy query yields one record per error kind labelled with
/// the noiseless expert action. Throws ExpertFailureRate below 90% success.
Demonstrations collect_demonstrations(const ManipulatorModel& model, const ExperimentConfig& cfg, int n_traj);

struct CollectPaths {
  std::string gcev;
  std::string cev;
};
CollectPaths dataset_paths(const std::string& out_dir);
Demonstrations cmd_collect(const ManipulatorModel& model, const ExperimentConfig& cfg, int n_traj);

// --- train -----------------------------------------------------------------------

/// Throws InvalidArgument when `error_kind` disagrees with the dataset.
MlpPolicy cmd_train(const std::string& dataset_path, ErrorKind error_kind, const TrainConfig& cfg,
                    const std::string& out_path, TrainReport* report = nullptr);

// --- eval ------------------------------------------------------------------------

struct CellResult {
  Combo combo;
  SceneCase scene;
  int episodes = 0;
  int successes = 0;
  int solver_failures = 0;
  double mean_steps = 0.0;

  double percent() const { return episodes ? 100.0 * successes / episodes : 0.0; }
};

struct ResultTable {
  std::vector<CellResult> cells;
  std::vector<std::string> rows;  // one CSV row per episode

  const CellResult& cell(const Combo& combo, SceneCase scene) const;
  std::string csv() const;
  /// Combos as rows and cases as columns, in percent.
  std::string formatted() const;
};

using PolicySet = std::map<ErrorKind, MlpPolicy>;

/// Throws MissingPolicy when a combo needs a policy that is not in `policies`.
ResultTable cmd_eval(const ManipulatorModel& model, const PolicySet& policies, const ExperimentConfig& cfg);

// --- propcheck -------------------------------------------------------------------

struct PropcheckOptions {
  int samples = 10000;
  double tolerance = 1e-9;
  std::uint64_t seed = 0;
  /// Negative control: negate e_R inside the audited error function.
  bool flip_rotation_error = false;
};

struct PropertyResult {
  std::string name;
  double max_residual = 0.0;
  double tolerance = 0.0;
  bool pass = false;
};

struct PropcheckReport {
  std::vector<PropertyResult> properties;
  bool pass() const;
  nlohmann::json to_json() const;
  std::string summary() const;
};

PropcheckReport cmd_propcheck(const PropcheckOptions& opts);

// --- trace -----------------------------------------------------------------------

EpisodeResult cmd_trace(const ManipulatorModel& model, const MlpPolicy& policy, const Combo& combo,
                        const TaskScene& scene, std::uint64_t seed, const EpisodeConfig& base);
std::string trace_csv(const EpisodeResult& r);

/// Largest ∞-norm gap between two traces over the policy input, action and
/// gain sequences; infinity if the traces differ in length.
double trace_gap(const EpisodeResult& a, const EpisodeResult& b, ErrorKind input);

}  // namespace gic

#include "gic/parallel.ipp"
