#pragma once

#include <functional>
#include <random>
#include <vector>

#include "gic/control.hpp"
#include "gic/dynamics.hpp"

namespace gic {

/// Fully connected network with ReLU hidden layers and a tanh output layer.
/// Weight matrices are stored out × in.
struct MlpPolicy {
  std::vector<MatX> weights;
  std::vector<VecX> biases;
  ErrorKind error_kind = ErrorKind::kGcev;

  /// Uniform fan-in initialization U(−1/√fan_in, 1/√fan_in), zero biases.
  static MlpPolicy create(const std::vector<int>& arch, std::mt19937_64& rng);
  static std::vector<int> default_arch() { return {6, 128, 128, 128, 6}; }

  std::vector<int> arch() const;
  std::size_t parameter_count() const;

  /// Throws NonFiniteInput on NaN/Inf inputs.
  VecX forward(const VecX& x) const;
  Action act(const Vec6& e) const { return Action(Vec6(forward(e))); }
  /// Columns of `x` are samples.
  MatX forward_batch(const MatX& x) const;
};

struct MlpGradients {
  std::vector<MatX> weights;
  std::vector<VecX> biases;
};

/// (1/N) Σ ‖y_i − μ(x_i)‖², columns are samples.
double mse_loss(const MlpPolicy& p, const MatX& x, const MatX& y);
double loss_and_gradient(const MlpPolicy& p, const MatX& x, const MatX& y, MlpGradients& grad);

using GradientFn = std::function<double(const MlpPolicy&, const MatX&, const MatX&, MlpGradients&)>;

struct GradientCheckReport {
  double max_relative_error = 0.0;
  int layer = -1;
  bool is_bias = false;
  int row = -1;
  int col = -1;
  std::size_t checked = 0;
};

/// Compares `gradient` (backpropagation by default) with central differences
/// (h = 1e-5) on every parameter. The relative error of one coordinate is
/// |g − g_fd| / max(|g|, |g_fd|, 1e-3). Throws GradientMismatch naming the
/// worst coordinate when it exceeds `tol`.
GradientCheckReport policy_gradient_check(const MlpPolicy& p, const MatX& x, const MatX& y, double tol,
                                          const GradientFn& gradient = loss_and_gradient);

}  // namespace gic
