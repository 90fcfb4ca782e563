#pragma once

#include <cstdint>
#include <vector>

#include "gic/dataset.hpp"
#include "gic/mlp.hpp"

namespace gic {

struct TrainConfig {
  int batch_size = 256;
  double learning_rate = 1e-3;
  int decay_every = 20;  // epochs between halvings
  double decay_factor = 0.5;
  int max_epochs = 60;
  int patience = 10;
  double validation_fraction = 0.1;
  std::uint64_t seed = 0;
  std::vector<int> hidden{128, 128, 128};

  void validate() const;
};

struct TrainReport {
  double initial_validation_loss = 0.0;
  double best_validation_loss = 0.0;
  double final_training_loss = 0.0;
  int epochs = 0;
  int best_epoch = 0;
};

/// Minibatch Adam on the mean squared action error with stepped learning-rate
/// decay and early stopping on a held-out split. Inputs are standardized with
/// training-split statistics, which are folded into the first layer of the
/// returned network. Deterministic for a given seed.
MlpPolicy bc_train(const DemoDataset& data, const TrainConfig& cfg, TrainReport* report = nullptr);

}  // namespace gic
