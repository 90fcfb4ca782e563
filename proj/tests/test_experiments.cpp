#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>

#include <gtest/gtest.h>
#include <sys/wait.h>

#include "gic/error.hpp"
#include "gic/experiments.hpp"
#include "gic/persistence.hpp"
#include "gic/reference_arm.hpp"

using namespace gic;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / "gic_experiment_tests" / name;
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

int run(const std::string& args) {
  const std::string cmd = std::string(GICCTL_PATH) + " " + args + " > /dev/null 2>&1";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

ExperimentConfig small_config() {
  ExperimentConfig cfg;
  cfg.episode.horizon = 6.0;
  cfg.train.hidden = {16, 16};
  cfg.train.max_epochs = 2;
  return cfg;
}

const PropertyResult& property(const PropcheckReport& r, const std::string& name) {
  for (const auto& p : r.properties)
    if (p.name == name) return p;
  throw std::runtime_error("no property " + name);
}

}  // namespace

TEST(Propcheck, AllPropertiesHold) {
  const PropcheckReport r = cmd_propcheck(PropcheckOptions{});
  EXPECT_TRUE(r.pass()) << r.summary();
  EXPECT_GE(r.properties.size(), 10u);
  EXPECT_EQ(r.to_json()["pass"], true);
}

TEST(Propcheck, FlippedRotationErrorIsDetected) {
  PropcheckOptions opts;
  opts.samples = 1000;
  opts.flip_rotation_error = true;
  const PropcheckReport r = cmd_propcheck(opts);
  EXPECT_FALSE(r.pass());
  EXPECT_FALSE(property(r, "gcev_single_axis_closed_form").pass);
  // A sign flip is still left-invariant, so invariance alone cannot catch it.
  EXPECT_TRUE(property(r, "left_invariance_gcev").pass);
}

TEST(Propcheck, ZeroToleranceFails) {
  PropcheckOptions opts;
  opts.samples = 1000;
  opts.tolerance = 0.0;
  EXPECT_FALSE(cmd_propcheck(opts).pass());
}

TEST(Combos, ParseAndName) {
  EXPECT_EQ(all_combos().size(), 4u);
  for (const Combo& c : all_combos()) EXPECT_EQ(combo_from_string(c.name()), c);
  EXPECT_EQ(combo_from_string("cic+cev"), (Combo{ControllerKind::kCic, ErrorKind::kCev}));
  EXPECT_THROW(combo_from_string("GIC-GCEV"), Error);
}

TEST(Seeds, EpisodeStreamsAreDistinct) {
  std::set<std::uint64_t> seen;
  for (int c = 0; c < 4; ++c)
    for (int s = 0; s < 4; ++s)
      for (int e = 0; e < 50; ++e) seen.insert(episode_seed(7, c, s, e));
  EXPECT_EQ(seen.size(), 800u);
  EXPECT_EQ(episode_seed(7, 1, 2, 3), episode_seed(7, 1, 2, 3));
  EXPECT_NE(episode_seed(7, 1, 2, 3), episode_seed(8, 1, 2, 3));
}

TEST(ParallelMap, ResultsAreIndexed) {
  const auto out = parallel_map<int>(200, [](int i) { return i * i; });
  ASSERT_EQ(out.size(), 200u);
  for (int i = 0; i < 200; ++i) EXPECT_EQ(out[i], i * i);
}

TEST(Collect, RecordsPairUpAcrossErrorKinds) {
  ExperimentConfig cfg = small_config();
  const Demonstrations d = collect_demonstrations(reference_arm(), cfg, 3);
  EXPECT_EQ(d.attempts, 3);
  EXPECT_EQ(d.successes, 3);
  ASSERT_EQ(d.gcev.records.size(), d.cev.records.size());
  EXPECT_GT(d.gcev.records.size(), 0u);
  EXPECT_EQ(d.gcev.error_kind, ErrorKind::kGcev);
  EXPECT_EQ(d.cev.error_kind, ErrorKind::kCev);
  for (std::size_t i = 0; i < d.gcev.records.size(); ++i) {
    EXPECT_EQ(d.gcev.records[i].action, d.cev.records[i].action);
    EXPECT_EQ(d.gcev.records[i].t, d.cev.records[i].t);
  }
  EXPECT_THROW(collect_demonstrations(reference_arm(), cfg, 0), Error);
}

TEST(Train, RejectsMismatchedErrorKind) {
  const fs::path dir = scratch("train_mismatch");
  ExperimentConfig cfg = small_config();
  cfg.out_dir = dir.string();
  const CollectPaths paths = dataset_paths(cfg.out_dir);
  cmd_collect(reference_arm(), cfg, 2);
  EXPECT_THROW(cmd_train(paths.gcev, ErrorKind::kCev, cfg.train, (dir / "p.json").string()), Error);
  TrainReport rep;
  cmd_train(paths.gcev, ErrorKind::kGcev, cfg.train, (dir / "p.json").string(), &rep);
  EXPECT_TRUE(fs::exists(dir / "p.json"));
  EXPECT_EQ(rep.epochs, 2);
}

TEST(Eval, CountsReconcile) {
  std::mt19937_64 rng(1);
  PolicySet policies;
  policies[ErrorKind::kGcev] = MlpPolicy::create({6, 8, 6}, rng);
  ExperimentConfig cfg = small_config();
  cfg.episodes_per_cell = 3;
  cfg.episode.horizon = 0.5;
  cfg.combos = {Combo{ControllerKind::kGic, ErrorKind::kGcev}, Combo{ControllerKind::kCic, ErrorKind::kGcev}};
  cfg.cases = {SceneCase::kDefault, SceneCase::kCase3};
  const ResultTable t = cmd_eval(reference_arm(), policies, cfg);
  EXPECT_EQ(t.cells.size(), 4u);
  EXPECT_EQ(t.rows.size(), 12u);
  int total = 0;
  for (const auto& c : t.cells) {
    EXPECT_EQ(c.episodes, 3);
    EXPECT_LE(c.successes + c.solver_failures, c.episodes);
    total += c.episodes;
  }
  EXPECT_EQ(total, static_cast<int>(t.rows.size()));
  std::istringstream csv(t.csv());
  std::string line;
  int lines = 0;
  while (std::getline(csv, line)) ++lines;
  EXPECT_EQ(lines, 13);
  EXPECT_NE(t.formatted().find("GIC+GCEV"), std::string::npos);

  cfg.combos = {Combo{ControllerKind::kGic, ErrorKind::kCev}};
  try {
    cmd_eval(reference_arm(), policies, cfg);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kMissingPolicy);
  }
}

TEST(Config, JsonOverridesAndValidation) {
  const ExperimentConfig cfg = config_from_json({{"episodes_per_cell", 7}, {"seed", 3}, {"collect", {{"noise_sigma", 0.1}}}});
  EXPECT_EQ(cfg.episodes_per_cell, 7);
  EXPECT_EQ(cfg.seed, 3u);
  EXPECT_EQ(cfg.noise_sigma, 0.1);
  EXPECT_THROW(config_from_json({{"episodes_per_cell", 0}}), Error);
}

TEST(Cli, PipelineIsDeterministic) {
  const fs::path dir = scratch("cli");
  const std::string common = "--seed 11 --out-dir " + dir.string();
  ASSERT_EQ(run(common + " collect --n-traj 2"), 0);
  ASSERT_EQ(run(common + " train --error gcev --epochs 2"), 0);
  const std::string eval = common + " eval --combo GIC+GCEV --case default --case case2 --episodes 2 --csv ";
  ASSERT_EQ(run(eval + (dir / "a.csv").string()), 0);
  ASSERT_EQ(run(eval + (dir / "b.csv").string()), 0);
  const std::string a = slurp(dir / "a.csv");
  EXPECT_FALSE(a.empty());
  EXPECT_EQ(a, slurp(dir / "b.csv"));
}

TEST(Cli, ExitCodes) {
  const fs::path dir = scratch("cli_codes");
  EXPECT_EQ(run("propcheck --samples 200"), 0);
  EXPECT_EQ(run("propcheck --samples 200 --flip-rotation-error"), 2);
  EXPECT_EQ(run("--out-dir " + dir.string() + " eval --combo CIC+CEV --episodes 1"), 3);
  EXPECT_EQ(run("--out-dir " + dir.string() + " train --error cev"), 3);
  EXPECT_NE(run("eval --combo NOPE"), 0);
}
