#pragma once

#include <cstdint>
#include <deque>
#include <mutex>
#include <random>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "gic/dataset.hpp"
#include "gic/environment.hpp"

namespace gic {

struct SessionConfig {
  TaskScene base_scene;
  EpisodeConfig episode;
  SceneCase initial_case = SceneCase::kDefault;
  int telemetry_every = 20;  // control ticks per telemetry frame
  std::size_t queue_capacity = 256;
  std::uint64_t seed = 0;
};

/// One teleoperated GAC session. The owner thread calls tick(); any thread may
/// call enqueue(). Commands queued before a tick are applied at that tick.
class SessionCore {
 public:
  SessionCore(ManipulatorModel model, SessionConfig config);

  /// Thread-safe. Returns false (and queues an error frame) when the queue is full.
  bool enqueue(nlohmann::json command);
  /// Advances one control tick and returns the frames produced by it.
  std::vector<nlohmann::json> tick();

  std::uint64_t tick_count() const { return tick_; }
  bool recording() const { return recording_; }
  std::size_t record_count() const { return buffer_.size(); }
  const Action& action() const { return action_; }
  const SimState& state() const { return sim_; }
  const TaskScene& scene() const { return scene_; }
  SceneCase scene_case() const { return case_; }
  bool succeeded() const { return success_; }
  const std::vector<DemoRecord>& buffer() const { return buffer_; }

 private:
  struct Pending {
    nlohmann::json command;
    std::uint64_t received_tick;
  };

  nlohmann::json apply(const Pending& p);
  void reset(SceneCase c);
  void refresh_state();
  nlohmann::json telemetry(const Vec6& e_g) const;
  static nlohmann::json error_frame(const std::string& message, std::uint64_t tick);

  ManipulatorModel model_;
  SessionConfig config_;
  std::mt19937_64 rng_;
  SceneCase case_;
  TaskScene scene_;
  SimState sim_;
  RobotTerms terms_;
  ContactState contact_;
  Twist v_admittance_;
  Action action_;
  bool recording_ = false;
  bool success_ = false;
  int episode_ = 0;
  std::uint64_t tick_ = 0;
  std::vector<DemoRecord> buffer_;

  std::mutex queue_mutex_;
  std::deque<Pending> queue_;
  std::vector<nlohmann::json> overflow_frames_;
};

}  // namespace gic
