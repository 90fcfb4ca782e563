#include "gic/expert.hpp"

#include <cmath>

namespace gic {

ExpertOutput scripted_expert(const Vec6& e, ExpertPhase phase, const ExpertParams& params) {
  const double lateral = std::hypot(e[0], e[1]);
  const double axial = e[2];
  if (phase == ExpertPhase::kAlign) {
    if (lateral <= params.lateral && axial <= params.entry_depth) phase = ExpertPhase::kInsert;
  } else if (lateral > params.lateral + params.band || axial > params.entry_depth + params.band) {
    phase = ExpertPhase::kAlign;
  }
  Vec6 a = Vec6::Ones();
  if (phase == ExpertPhase::kAlign) a[2] = -1.0;
  return {Action(a), phase};
}

Action add_noise(const Action& a, double sigma, std::mt19937_64& rng) {
  if (sigma == 0.0) return a;
  std::normal_distribution<double> noise(0.0, sigma);
  Vec6 out = a.vector();
  for (int i = 0; i < 6; ++i) out[i] += noise(rng);
  return Action(out);
}

Action ExpertSchedule::act(const Observation& obs) {
  const ExpertOutput out = scripted_expert(obs.gcev, phase_, params_);
  phase_ = out.phase;
  clean_ = out.action;
  return add_noise(clean_, sigma_, rng_);
}

}  // namespace gic
