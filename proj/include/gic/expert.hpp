#pragma once

#include <random>

#include "gic/control.hpp"
#include "gic/environment.hpp"

namespace gic {

enum class ExpertPhase { kAlign, kInsert };

/// Thresholds of the two-phase expert. `entry_depth` is the axial error below
/// which the tip counts as inside the mouth.
struct ExpertParams {
  double lateral = 0.002;
  double entry_depth = 0.039;
  double band = 0.0005;
};

struct ExpertOutput {
  Action action;
  ExpertPhase phase;
};

/// ALIGN: (+1, +1, −1, +1, +1, +1). INSERT: all +1. Enter INSERT once the
/// lateral error is within `lateral` and the tip is below `entry_depth`;
/// fall back once either exceeds its threshold by `band`.
ExpertOutput scripted_expert(const Vec6& e, ExpertPhase phase, const ExpertParams& params = {});

/// clamp(a + N(0, σ²I), −1, 1).
Action add_noise(const Action& a, double sigma, std::mt19937_64& rng);

/// Scripted expert fed with the GCEV. With sigma > 0 the applied action is
/// perturbed while `last_clean()` keeps the noiseless label.
class ExpertSchedule : public GainSchedule {
 public:
  explicit ExpertSchedule(double sigma = 0.0, std::uint64_t seed = 0, ExpertParams params = {})
      : sigma_(sigma), seed_(seed), rng_(seed), params_(params) {}

  void reset() override {
    phase_ = ExpertPhase::kAlign;
    rng_.seed(seed_);
  }
  Action act(const Observation& obs) override;

  const Action& last_clean() const { return clean_; }
  ExpertPhase phase() const { return phase_; }

 private:
  double sigma_;
  std::uint64_t seed_;
  std::mt19937_64 rng_;
  ExpertParams params_;
  ExpertPhase phase_ = ExpertPhase::kAlign;
  Action clean_;
};

}  // namespace gic
