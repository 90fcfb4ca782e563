// gicctl: demonstration collection, behavior cloning, transfer evaluation,
// property audit, trace export and the teleoperation server.

#include <atomic>
#include <chrono>
#include <csignal>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <thread>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "gic/error.hpp"
#include "gic/experiments.hpp"
#include "gic/persistence.hpp"
#include "gic/reference_arm.hpp"
#include "gic/teleop_server.hpp"

namespace fs = std::filesystem;
using namespace gic;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitFailure = 1;
constexpr int kExitProperty = 2;
constexpr int kExitMissing = 3;

std::atomic<bool> g_stop{false};

struct MissingArtifact : std::runtime_error {
  using std::runtime_error::runtime_error;
};

void require_file(const std::string& path, const std::string& what) {
  if (!fs::exists(path)) throw MissingArtifact(what + " not found: " + path);
}

struct Globals {
  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::string out_dir;
};

ExperimentConfig make_config(const Globals& g, ManipulatorModel& model) {
  nlohmann::json doc = nlohmann::json::object();
  if (!g.config_path.empty()) {
    require_file(g.config_path, "config");
    std::ifstream in(g.config_path);
    doc = nlohmann::json::parse(in, nullptr, false);
    if (doc.is_discarded()) throw Error(ErrorCode::kInvalidArgument, "config is not valid JSON: " + g.config_path);
  }
  model = reference_arm();
  if (doc.contains("model")) {
    const auto& m = doc.at("model");
    model = m.is_string() ? load_model(m.get<std::string>()) : model_from_json(m);
  }
  ExperimentConfig cfg = config_from_json(doc);
  if (g.seed) cfg.seed = *g.seed;
  if (!g.out_dir.empty()) cfg.out_dir = g.out_dir;
  return cfg;
}

void write_text(const std::string& path, const std::string& text) {
  const auto parent = fs::path(path).parent_path();
  if (!parent.empty()) fs::create_directories(parent);
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorCode::kInvalidArgument, "cannot write " + path);
  out << text;
}

std::string policy_path(const std::string& out_dir, ErrorKind e) {
  return (fs::path(out_dir) / (std::string("policy_") + to_string(e) + ".json")).string();
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Geometric impedance control experiments"};
  app.require_subcommand(1);
  Globals g;
  app.add_option("--config", g.config_path, "experiment config (JSON)");
  app.add_option("--seed", g.seed, "master seed");
  app.add_option("--out-dir", g.out_dir, "output directory");

  auto* collect = app.add_subcommand("collect", "record scripted-expert demonstrations on the default scene");
  std::optional<int> n_traj;
  std::optional<double> noise;
  collect->add_option("--n-traj", n_traj, "number of trajectories");
  collect->add_option("--noise", noise, "expert action noise sigma");

  auto* train = app.add_subcommand("train", "behavior-clone a policy from a dataset");
  std::string train_error = "gcev", train_dataset, train_out;
  std::optional<int> epochs;
  train->add_option("--error", train_error, "policy input error vector")->check(CLI::IsMember({"gcev", "cev"}));
  train->add_option("--dataset", train_dataset, "dataset path (default: out-dir/demos_<error>.jsonl)");
  train->add_option("--out", train_out, "policy path (default: out-dir/policy_<error>.json)");
  train->add_option("--epochs", epochs, "maximum epochs");

  auto* eval = app.add_subcommand("eval", "run the combo x case transfer matrix");
  std::vector<std::string> eval_combos, eval_cases;
  std::string eval_gcev, eval_cev, eval_csv;
  std::optional<int> episodes;
  eval->add_option("--combo", eval_combos, "combos such as GIC+GCEV (repeatable)");
  eval->add_option("--case", eval_cases, "default, case1, case2, case3 (repeatable)");
  eval->add_option("--episodes", episodes, "episodes per cell");
  eval->add_option("--policy-gcev", eval_gcev, "GCEV policy (default: out-dir/policy_gcev.json)");
  eval->add_option("--policy-cev", eval_cev, "CEV policy (default: out-dir/policy_cev.json)");
  eval->add_option("--csv", eval_csv, "per-episode CSV (default: out-dir/eval.csv)");

  auto* prop = app.add_subcommand("propcheck", "audit invariance and equivariance properties");
  PropcheckOptions popts;
  std::string prop_json;
  prop->add_option("--samples", popts.samples, "samples per property")->check(CLI::PositiveNumber);
  prop->add_option("--tolerance", popts.tolerance, "residual tolerance")->check(CLI::NonNegativeNumber);
  prop->add_flag("--flip-rotation-error", popts.flip_rotation_error, "negate e_R (negative control)");
  prop->add_option("--json", prop_json, "write the JSON report here");

  auto* trace = app.add_subcommand("trace", "export a per-step episode trace");
  std::string tr_controller = "gic", tr_error = "gcev", tr_case = "default", tr_policy, tr_out;
  trace->add_option("--controller", tr_controller)->check(CLI::IsMember({"gic", "cic", "gac"}));
  trace->add_option("--error", tr_error)->check(CLI::IsMember({"gcev", "cev"}));
  trace->add_option("--case", tr_case);
  trace->add_option("--policy", tr_policy, "policy path (default: out-dir/policy_<error>.json)");
  trace->add_option("--out", tr_out, "trace CSV (default: out-dir/trace_<controller>_<error>_<case>.csv)");

  auto* serve = app.add_subcommand("serve", "run the teleoperation WebSocket server");
  ServerOptions sopts;
  std::string serve_case = "default";
  serve->add_option("--address", sopts.address);
  serve->add_option("--port", sopts.port);
  serve->add_option("--tick-rate", sopts.tick_rate, "control ticks per second (0: free-run)");
  serve->add_option("--case", serve_case);

  CLI11_PARSE(app, argc, argv);

  try {
    ManipulatorModel model;
    ExperimentConfig cfg = make_config(g, model);

    if (*collect) {
      if (noise) cfg.noise_sigma = *noise;
      const Demonstrations d = cmd_collect(model, cfg, n_traj.value_or(cfg.n_traj));
      const CollectPaths paths = dataset_paths(cfg.out_dir);
      std::cout << "collected " << d.successes << "/" << d.attempts << " successful trajectories, "
                << d.gcev.records.size() << " records\n"
                << paths.gcev << "\n" << paths.cev << "\n";
      return kExitOk;
    }

    if (*train) {
      const ErrorKind e = error_kind_from_string(train_error);
      if (train_dataset.empty()) {
        const CollectPaths paths = dataset_paths(cfg.out_dir);
        train_dataset = e == ErrorKind::kGcev ? paths.gcev : paths.cev;
      }
      if (train_out.empty()) train_out = policy_path(cfg.out_dir, e);
      require_file(train_dataset, "dataset");
      require_file(dataset_meta_path(train_dataset), "dataset metadata");
      TrainConfig tc = cfg.train;
      if (epochs) tc.max_epochs = *epochs;
      if (g.seed) tc.seed = *g.seed;
      TrainReport report;
      cmd_train(train_dataset, e, tc, train_out, &report);
      std::cout << "epochs " << report.epochs << ", best epoch " << report.best_epoch << ", validation loss "
                << report.initial_validation_loss << " -> " << report.best_validation_loss << "\n"
                << train_out << "\n";
      return kExitOk;
    }

    if (*eval) {
      if (!eval_combos.empty()) {
        cfg.combos.clear();
        for (const auto& c : eval_combos) cfg.combos.push_back(combo_from_string(c));
      }
      if (!eval_cases.empty()) {
        cfg.cases.clear();
        for (const auto& c : eval_cases) cfg.cases.push_back(scene_case_from_string(c));
      }
      if (episodes) cfg.episodes_per_cell = *episodes;
      cfg.validate();
      PolicySet policies;
      for (const auto& combo : cfg.combos) {
        if (policies.count(combo.error)) continue;
        std::string path = combo.error == ErrorKind::kGcev ? eval_gcev : eval_cev;
        if (path.empty()) path = policy_path(cfg.out_dir, combo.error);
        policies.emplace(combo.error, load_policy(path));
      }
      const ResultTable table = cmd_eval(model, policies, cfg);
      if (eval_csv.empty()) eval_csv = (fs::path(cfg.out_dir) / "eval.csv").string();
      write_text(eval_csv, table.csv());
      std::cout << table.formatted() << eval_csv << "\n";
      return kExitOk;
    }

    if (*prop) {
      if (g.seed) popts.seed = *g.seed;
      const PropcheckReport report = cmd_propcheck(popts);
      if (!prop_json.empty()) write_text(prop_json, report.to_json().dump(2) + "\n");
      std::cout << report.summary();
      return report.pass() ? kExitOk : kExitProperty;
    }

    if (*trace) {
      const Combo combo{controller_from_string(tr_controller), error_kind_from_string(tr_error)};
      const SceneCase sc = scene_case_from_string(tr_case);
      if (tr_policy.empty()) tr_policy = policy_path(cfg.out_dir, combo.error);
      const MlpPolicy policy = load_policy(tr_policy);
      if (policy.error_kind != combo.error) {
        throw Error(ErrorCode::kInvalidArgument, std::string("policy reads ") + to_string(policy.error_kind));
      }
      const EpisodeResult r = cmd_trace(model, policy, combo, cfg.scene(sc), cfg.seed, cfg.episode);
      if (tr_out.empty()) {
        tr_out = (fs::path(cfg.out_dir) / ("trace_" + tr_controller + "_" + tr_error + "_" + tr_case + ".csv")).string();
      }
      write_text(tr_out, trace_csv(r));
      std::cout << (r.success ? "success" : "failure") << " after " << r.steps << " steps\n" << tr_out << "\n";
      return kExitOk;
    }

    if (*serve) {
      SessionConfig sc;
      sc.base_scene = cfg.base_scene;
      sc.episode = cfg.episode;
      sc.initial_case = scene_case_from_string(serve_case);
      sc.seed = cfg.seed;
      TeleopServer server(model, sc, sopts);
      server.start();
      std::signal(SIGINT, [](int) { g_stop = true; });
      std::signal(SIGTERM, [](int) { g_stop = true; });
      std::cout << "listening on ws://" << sopts.address << ":" << server.port() << "/session" << std::endl;
      while (!g_stop) std::this_thread::sleep_for(std::chrono::milliseconds(100));
      server.stop();
      std::cout << "stopped after " << server.tick_count() << " ticks\n";
      return kExitOk;
    }
  } catch (const MissingArtifact& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitMissing;
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return e.code() == ErrorCode::kMissingPolicy ? kExitMissing : kExitFailure;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitFailure;
  }
  return kExitFailure;
}
