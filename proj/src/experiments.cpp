#include "gic/experiments.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <limits>
#include <numbers>
#include <sstream>

#include "gic/error.hpp"
#include "gic/persistence.hpp"

namespace gic {

namespace {

constexpr int kCollectStream = 1000;
constexpr double kMinExpertSuccess = 0.9;
constexpr double kClosedFormTolerance = 1e-6;

std::uint64_t splitmix(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

int combo_index(const Combo& c) {
  const auto& all = all_combos();
  return static_cast<int>(std::find(all.begin(), all.end(), c) - all.begin());
}

std::string upper(std::string s) {
  for (char& ch : s) ch = static_cast<char>(std::toupper(static_cast<unsigned char>(ch)));
  return s;
}

template <typename T>
void read_if(const nlohmann::json& doc, const char* key, T& target) {
  if (doc.contains(key)) target = doc.at(key).get<T>();
}

double inf_norm(const Vec6& v) { return v.cwiseAbs().maxCoeff(); }

}  // namespace

std::string Combo::name() const { return upper(to_string(controller)) + "+" + upper(to_string(error)); }

const std::vector<Combo>& all_combos() {
  static const std::vector<Combo> combos{{ControllerKind::kGic, ErrorKind::kGcev},
                                         {ControllerKind::kCic, ErrorKind::kCev},
                                         {ControllerKind::kGic, ErrorKind::kCev},
                                         {ControllerKind::kCic, ErrorKind::kGcev}};
  return combos;
}

Combo combo_from_string(const std::string& s) {
  const auto plus = s.find('+');
  if (plus == std::string::npos) throw Error(ErrorCode::kInvalidArgument, "combo must look like GIC+GCEV");
  std::string a = s.substr(0, plus), b = s.substr(plus + 1);
  for (auto* part : {&a, &b})
    for (char& ch : *part) ch = static_cast<char>(std::tolower(static_cast<unsigned char>(ch)));
  return {controller_from_string(a), error_kind_from_string(b)};
}

void ExperimentConfig::validate() const {
  if (cases.empty() || combos.empty()) throw Error(ErrorCode::kInvalidArgument, "select at least one case and combo");
  if (episodes_per_cell < 1) throw Error(ErrorCode::kInvalidArgument, "episodes_per_cell must be at least 1");
  base_scene.validate();
  train.validate();
}

ExperimentConfig config_from_json(const nlohmann::json& doc) {
  ExperimentConfig cfg;
  try {
    if (doc.contains("cases")) {
      cfg.cases.clear();
      for (const auto& c : doc.at("cases")) cfg.cases.push_back(scene_case_from_string(c.get<std::string>()));
    }
    if (doc.contains("combos")) {
      cfg.combos.clear();
      for (const auto& c : doc.at("combos")) cfg.combos.push_back(combo_from_string(c.get<std::string>()));
    }
    read_if(doc, "episodes_per_cell", cfg.episodes_per_cell);
    read_if(doc, "seed", cfg.seed);
    read_if(doc, "out_dir", cfg.out_dir);
    if (doc.contains("scene")) cfg.base_scene = scene_from_json(doc.at("scene"), SceneCase::kDefault);
    if (doc.contains("contact")) cfg.episode.contact = contact_from_json(doc.at("contact"));
    if (doc.contains("ranges")) cfg.episode.ranges = ranges_from_json(doc.at("ranges"));
    if (doc.contains("episode")) {
      const auto& e = doc.at("episode");
      read_if(e, "dt", cfg.episode.dt);
      read_if(e, "horizon", cfg.episode.horizon);
      read_if(e, "update_period", cfg.episode.update_period);
      read_if(e, "joint_kv", cfg.episode.joint_kv);
    }
    if (doc.contains("collect")) {
      const auto& c = doc.at("collect");
      read_if(c, "n_traj", cfg.n_traj);
      read_if(c, "noise_sigma", cfg.noise_sigma);
      read_if(c, "lateral", cfg.expert.lateral);
      read_if(c, "entry_depth", cfg.expert.entry_depth);
      read_if(c, "band", cfg.expert.band);
    }
    if (doc.contains("train")) {
      const auto& t = doc.at("train");
      read_if(t, "batch_size", cfg.train.batch_size);
      read_if(t, "learning_rate", cfg.train.learning_rate);
      read_if(t, "decay_every", cfg.train.decay_every);
      read_if(t, "decay_factor", cfg.train.decay_factor);
      read_if(t, "max_epochs", cfg.train.max_epochs);
      read_if(t, "patience", cfg.train.patience);
      read_if(t, "validation_fraction", cfg.train.validation_fraction);
      read_if(t, "seed", cfg.train.seed);
      read_if(t, "hidden", cfg.train.hidden);
    }
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::kInvalidArgument, std::string("config: ") + e.what());
  }
  if (!(cfg.episode.dt > 0.0 && cfg.episode.dt <= 0.01) || !(cfg.episode.horizon > 0.0) ||
      cfg.episode.update_period < 1) {
    throw Error(ErrorCode::kInvalidArgument, "config: episode timing out of range");
  }
  cfg.validate();
  return cfg;
}

ExperimentConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::kInvalidArgument, "cannot open config " + path);
  try {
    return config_from_json(nlohmann::json::parse(in));
  } catch (const nlohmann::json::parse_error& e) {
    throw Error(ErrorCode::kInvalidArgument, std::string("config: ") + e.what());
  }
}

std::uint64_t episode_seed(std::uint64_t master, int combo, int scene, int episode) {
  std::uint64_t h = splitmix(master);
  h = splitmix(h ^ static_cast<std::uint64_t>(combo));
  h = splitmix(h ^ static_cast<std::uint64_t>(scene));
  return splitmix(h ^ static_cast<std::uint64_t>(episode));
}

// --- collect ---------------------------------------------------------------------

Demonstrations collect_demonstrations(const ManipulatorModel& model, const ExperimentConfig& cfg, int n_traj) {
  if (n_traj < 1) throw Error(ErrorCode::kInvalidArgument, "n_traj must be at least 1");
  const TaskScene scene = cfg.scene(SceneCase::kDefault);

  struct Job {
    bool success = false;
    std::vector<DemoRecord> gcev, cev;
  };
  auto jobs = parallel_map<Job>(n_traj, [&](int i) {
    const std::uint64_t seed = episode_seed(cfg.seed, kCollectStream, 0, i);
    ExpertSchedule expert(cfg.noise_sigma, splitmix(seed), cfg.expert);
    EpisodeConfig ep = cfg.episode;
    ep.seed = seed;
    Job job;
    auto hook = [&](const Observation& obs, const Action&) {
      job.gcev.push_back({obs.gcev, expert.last_clean().vector(), obs.t, i});
      job.cev.push_back({obs.cev, expert.last_clean().vector(), obs.t, i});
    };
    job.success = run_episode(model, scene, ControllerKind::kGic, expert, ep, hook).success;
    return job;
  });

  Demonstrations out;
  out.attempts = n_traj;
  const nlohmann::json provenance{{"scene", "default"},
                                  {"master_seed", cfg.seed},
                                  {"n_traj", n_traj},
                                  {"noise_sigma", cfg.noise_sigma}};
  out.gcev.error_kind = ErrorKind::kGcev;
  out.cev.error_kind = ErrorKind::kCev;
  for (auto* d : {&out.gcev, &out.cev}) {
    d->source = "scripted";
    d->provenance = provenance;
  }
  for (auto& job : jobs) {
    if (!job.success) continue;
    ++out.successes;
    out.gcev.records.insert(out.gcev.records.end(), job.gcev.begin(), job.gcev.end());
    out.cev.records.insert(out.cev.records.end(), job.cev.begin(), job.cev.end());
  }
  const double rate = static_cast<double>(out.successes) / n_traj;
  for (auto* d : {&out.gcev, &out.cev}) d->provenance["expert_success_rate"] = rate;
  if (rate < kMinExpertSuccess) {
    throw Error(ErrorCode::kExpertFailureRate, "expert succeeded in " + std::to_string(out.successes) + " of " +
                                                   std::to_string(n_traj) + " episodes");
  }
  return out;
}

CollectPaths dataset_paths(const std::string& out_dir) {
  const std::filesystem::path dir(out_dir);
  return {(dir / "demos_gcev.jsonl").string(), (dir / "demos_cev.jsonl").string()};
}

Demonstrations cmd_collect(const ManipulatorModel& model, const ExperimentConfig& cfg, int n_traj) {
  Demonstrations d = collect_demonstrations(model, cfg, n_traj);
  std::filesystem::create_directories(cfg.out_dir);
  const CollectPaths paths = dataset_paths(cfg.out_dir);
  save_dataset(paths.gcev, d.gcev);
  save_dataset(paths.cev, d.cev);
  return d;
}

// --- train -----------------------------------------------------------------------

MlpPolicy cmd_train(const std::string& dataset_path, ErrorKind error_kind, const TrainConfig& cfg,
                    const std::string& out_path, TrainReport* report) {
  const DemoDataset data = load_dataset(dataset_path);
  if (data.error_kind != error_kind) {
    throw Error(ErrorCode::kInvalidArgument, std::string("dataset holds ") + to_string(data.error_kind) +
                                                 " records, requested " + to_string(error_kind));
  }
  MlpPolicy p = bc_train(data, cfg, report);
  const auto parent = std::filesystem::path(out_path).parent_path();
  if (!parent.empty()) std::filesystem::create_directories(parent);
  save_policy(out_path, p);
  return p;
}

// --- eval ------------------------------------------------------------------------

const CellResult& ResultTable::cell(const Combo& combo, SceneCase scene) const {
  for (const auto& c : cells) {
    if (c.combo == combo && c.scene == scene) return c;
  }
  throw Error(ErrorCode::kInvalidArgument, "no cell for " + combo.name() + " / " + to_string(scene));
}

std::string ResultTable::csv() const {
  std::string out = csv_header() + "\n";
  for (const auto& r : rows) out += r + "\n";
  return out;
}

std::string ResultTable::formatted() const {
  std::vector<SceneCase> scenes;
  std::vector<Combo> combos;
  for (const auto& c : cells) {
    if (std::find(scenes.begin(), scenes.end(), c.scene) == scenes.end()) scenes.push_back(c.scene);
    if (std::find(combos.begin(), combos.end(), c.combo) == combos.end()) combos.push_back(c.combo);
  }
  std::ostringstream os;
  os << std::left << std::setw(12) << "combo";
  for (const auto s : scenes) os << std::right << std::setw(9) << to_string(s);
  os << '\n';
  for (const auto& combo : combos) {
    os << std::left << std::setw(12) << combo.name();
    for (const auto s : scenes) os << std::right << std::setw(9) << std::fixed << std::setprecision(0)
                                   << cell(combo, s).percent();
    os << '\n';
  }
  return os.str();
}

ResultTable cmd_eval(const ManipulatorModel& model, const PolicySet& policies, const ExperimentConfig& cfg) {
  cfg.validate();
  for (const auto& combo : cfg.combos) {
    if (!policies.count(combo.error)) {
      throw Error(ErrorCode::kMissingPolicy, std::string("no ") + to_string(combo.error) + " policy for " + combo.name());
    }
  }
  const int per = cfg.episodes_per_cell;
  const int n_cells = static_cast<int>(cfg.combos.size() * cfg.cases.size());

  struct Job {
    EpisodeResult result;
    std::uint64_t seed = 0;
  };
  auto jobs = parallel_map<Job>(n_cells * per, [&](int k) {
    const int cell = k / per, ep_index = k % per;
    const Combo combo = cfg.combos[static_cast<std::size_t>(cell) / cfg.cases.size()];
    const SceneCase sc = cfg.cases[static_cast<std::size_t>(cell) % cfg.cases.size()];
    Job job;
    job.seed = episode_seed(cfg.seed, combo_index(combo), static_cast<int>(sc), ep_index);
    PolicySchedule schedule(policies.at(combo.error), combo.error);
    EpisodeConfig ep = cfg.episode;
    ep.seed = job.seed;
    ep.record_trace = false;
    job.result = run_episode(model, cfg.scene(sc), combo.controller, schedule, ep);
    return job;
  });

  ResultTable table;
  for (int cell = 0; cell < n_cells; ++cell) {
    CellResult cr;
    cr.combo = cfg.combos[static_cast<std::size_t>(cell) / cfg.cases.size()];
    cr.scene = cfg.cases[static_cast<std::size_t>(cell) % cfg.cases.size()];
    double steps = 0.0;
    for (int e = 0; e < per; ++e) {
      const Job& job = jobs[static_cast<std::size_t>(cell * per + e)];
      ++cr.episodes;
      cr.successes += job.result.success ? 1 : 0;
      cr.solver_failures += job.result.failure.empty() ? 0 : 1;
      steps += job.result.steps;
      table.rows.push_back(csv_row(cr.scene, cr.combo.controller, cr.combo.error, job.seed, job.result));
    }
    cr.mean_steps = steps / per;
    table.cells.push_back(cr);
  }
  return table;
}

// --- propcheck -------------------------------------------------------------------

bool PropcheckReport::pass() const {
  return std::all_of(properties.begin(), properties.end(), [](const PropertyResult& p) { return p.pass; });
}

nlohmann::json PropcheckReport::to_json() const {
  nlohmann::json props = nlohmann::json::array();
  for (const auto& p : properties) {
    props.push_back({{"name", p.name}, {"max_residual", p.max_residual}, {"tolerance", p.tolerance}, {"pass", p.pass}});
  }
  return {{"pass", pass()}, {"properties", props}};
}

std::string PropcheckReport::summary() const {
  std::ostringstream os;
  for (const auto& p : properties) {
    os << (p.pass ? "PASS " : "FAIL ") << std::left << std::setw(34) << p.name << " max residual "
       << std::scientific << std::setprecision(3) << p.max_residual << " (tol " << p.tolerance << ")\n";
  }
  os << (pass() ? "all properties hold\n" : "property failures\n");
  return os.str();
}

PropcheckReport cmd_propcheck(const PropcheckOptions& opts) {
  if (opts.samples < 1) throw Error(ErrorCode::kInvalidArgument, "samples must be at least 1");
  std::mt19937_64 rng(opts.seed);
  std::uniform_real_distribution<double> unit(-1.0, 1.0);
  auto random_vec6 = [&] {
    Vec6 v;
    for (int i = 0; i < 6; ++i) v[i] = unit(rng);
    return v;
  };
  auto error_fn = [&](const Pose& g, const Pose& g_d) {
    Vec6 e = gcev(g, g_d);
    if (opts.flip_rotation_error) e.tail<3>() *= -1.0;
    return e;
  };

  double r_gcev = 0, r_wrench = 0, r_dist = 0, r_vel = 0, r_random = 0, r_equiv = 0;
  double r_explog = 0, r_adjoint = 0, r_closed = 0, r_small = 0, r_zero = 0;
  for (int i = 0; i < opts.samples; ++i) {
    const Pose g = sample_pose(rng, 2.0), g_d = sample_pose(rng, 2.0), g_l = sample_pose(rng, 2.0);
    const ImpedanceGains k = action_to_gains(Action(random_vec6()));
    const Pose lg = compose(g_l, g), lgd = compose(g_l, g_d);
    const Twist vb = Twist::from_vector(random_vec6()), vdb = Twist::from_vector(random_vec6());

    r_gcev = std::max(r_gcev, inf_norm(error_fn(lg, lgd) - error_fn(g, g_d)));
    const Wrench f = elastic_wrench(g, g_d, k);
    r_wrench = std::max(r_wrench, inf_norm(elastic_wrench(lg, lgd, k).vector() - f.vector()));
    r_dist = std::max(r_dist, std::abs(distance(lg, lgd) - distance(g, g_d)));
    r_vel = std::max(r_vel, inf_norm(velocity_error(lg, lgd, vb, vdb).vector() - velocity_error(g, g_d, vb, vdb).vector()));
    r_random = std::max(r_random, inf_norm(elastic_wrench(g, lgd, k).vector() -
                                           elastic_wrench(compose(inverse(g_l), g), g_d, k).vector()));

    const Vec6 damping = damping_from_gains(k) * vb.vector();
    const Wrench fb = Wrench::from_vector(-f.vector() - damping);
    const Wrench fb_l = Wrench::from_vector(-elastic_wrench(lg, lgd, k).vector() - damping);
    const Vec6 spatial = wrench_body_to_spatial(g, fb).vector();
    const Vec6 spatial_l = wrench_body_to_spatial(lg, fb_l).vector();
    r_equiv = std::max(r_equiv, inf_norm(spatial_l - adjoint(inverse(g_l)).transpose() * spatial));

    if (g.rot.angle() < std::numbers::pi - 1e-3) {
      r_explog = std::max(r_explog, (exp_se3(log_se3(g), 1.0).matrix() - g.matrix()).cwiseAbs().maxCoeff());
    }
    r_adjoint = std::max(r_adjoint, (adjoint(compose(g, g_d)) - adjoint(g) * adjoint(g_d)).cwiseAbs().maxCoeff());

    const double theta = std::numbers::pi * 0.5 * (unit(rng) + 1.0);
    const Vec6 e_rot = error_fn(Pose{Rotation::rot_z(theta), Vec3::Zero()}, Pose::identity());
    r_closed = std::max(r_closed, inf_norm(e_rot - (Vec6() << 0, 0, 0, 0, 0, 2.0 * std::sin(theta)).finished()));

    const Vec3 axis = Vec3(unit(rng), unit(rng), unit(rng)).normalized();
    const double tiny = 1e-3 * 0.5 * (unit(rng) + 1.0) + 1e-9;
    const Rotation r_small_rot = Rotation::about_axis(axis, tiny);
    const Vec3 e_r = error_fn(Pose{r_small_rot, Vec3::Zero()}, Pose::identity()).tail<3>();
    const Vec3 ref = 2.0 * log_so3(r_small_rot.matrix());
    r_small = std::max(r_small, (e_r - ref).norm() / ref.norm());

    // Ψ = 0 and e_G = 0 at g = g_d; both positive for distinct poses.
    const double at_goal = distance(g, g) + inf_norm(error_fn(g, g));
    const bool distinct_ok = distance(g, g_d) > 0.0 && error_fn(g, g_d).norm() > 0.0;
    r_zero = std::max(r_zero, distinct_ok ? at_goal : std::numeric_limits<double>::infinity());
  }

  const double tol = opts.tolerance;
  PropcheckReport rep;
  auto add = [&](const char* name, double residual, double t) { rep.properties.push_back({name, residual, t, residual <= t}); };
  add("left_invariance_gcev", r_gcev, tol);
  add("left_invariance_elastic_wrench", r_wrench, tol);
  add("left_invariance_distance", r_dist, tol);
  add("left_invariance_velocity_error", r_vel, tol);
  add("randomization_identity", r_random, tol);
  add("spatial_feedback_equivariance", r_equiv, tol);
  add("exp_log_round_trip", r_explog, tol);
  add("adjoint_composition", r_adjoint, tol);
  add("distance_zero_iff_gcev_zero", r_zero, tol);
  add("gcev_single_axis_closed_form", r_closed, kClosedFormTolerance);
  add("small_angle_rotation_error", r_small, kClosedFormTolerance);
  return rep;
}

// --- trace -----------------------------------------------------------------------

EpisodeResult cmd_trace(const ManipulatorModel& model, const MlpPolicy& policy, const Combo& combo,
                        const TaskScene& scene, std::uint64_t seed, const EpisodeConfig& base) {
  PolicySchedule schedule(policy, combo.error);
  EpisodeConfig ep = base;
  ep.seed = seed;
  ep.record_trace = true;
  return run_episode(model, scene, combo.controller, schedule, ep);
}

std::string trace_csv(const EpisodeResult& r) {
  std::ostringstream os;
  os << "t,px,py,pz,qw,qx,qy,qz";
  for (const char* prefix : {"eg", "ec", "a", "k", "f"})
    for (int i = 1; i <= 6; ++i) os << ',' << prefix << i;
  os << ",reward\n";
  os << std::setprecision(10);
  for (const auto& row : r.trace) {
    const Eigen::Quaterniond q = row.pose.rot.quaternion();
    os << row.t << ',' << row.pose.p().x() << ',' << row.pose.p().y() << ',' << row.pose.p().z() << ',' << q.w()
       << ',' << q.x() << ',' << q.y() << ',' << q.z();
    for (const Vec6* v : {&row.gcev, &row.cev, &row.action, &row.gains, &row.f_ext})
      for (int i = 0; i < 6; ++i) os << ',' << (*v)[i];
    os << ',' << row.reward << '\n';
  }
  return os.str();
}

double trace_gap(const EpisodeResult& a, const EpisodeResult& b, ErrorKind input) {
  if (a.trace.size() != b.trace.size()) return std::numeric_limits<double>::infinity();
  double gap = 0.0;
  for (std::size_t i = 0; i < a.trace.size(); ++i) {
    const auto& x = a.trace[i];
    const auto& y = b.trace[i];
    const Vec6& ex = input == ErrorKind::kGcev ? x.gcev : x.cev;
    const Vec6& ey = input == ErrorKind::kGcev ? y.gcev : y.cev;
    gap = std::max({gap, inf_norm(ex - ey), inf_norm(x.action - y.action),
                    inf_norm(x.gains - y.gains) / std::max(1.0, inf_norm(x.gains))});
  }
  return gap;
}

}  // namespace gic
