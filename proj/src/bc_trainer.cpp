#include "gic/bc_trainer.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

#include "gic/error.hpp"

namespace gic {

namespace {

constexpr double kBeta1 = 0.9;
constexpr double kBeta2 = 0.999;
constexpr double kEps = 1e-8;

struct Adam {
  MlpGradients m, v;
  long t = 0;

  explicit Adam(const MlpPolicy& p) {
    for (std::size_t l = 0; l < p.weights.size(); ++l) {
      m.weights.push_back(MatX::Zero(p.weights[l].rows(), p.weights[l].cols()));
      m.biases.push_back(VecX::Zero(p.biases[l].size()));
    }
    v = m;
  }

  template <typename P, typename G, typename S>
  static void update(P& param, const G& grad, S& m1, S& m2, double lr, double c1, double c2) {
    m1 = kBeta1 * m1 + (1.0 - kBeta1) * grad;
    m2 = kBeta2 * m2 + (1.0 - kBeta2) * grad.cwiseProduct(grad);
    param.array() -= lr * (m1.array() / c1) / ((m2.array() / c2).sqrt() + kEps);
  }

  void step(MlpPolicy& p, const MlpGradients& g, double lr) {
    ++t;
    const double c1 = 1.0 - std::pow(kBeta1, static_cast<double>(t));
    const double c2 = 1.0 - std::pow(kBeta2, static_cast<double>(t));
    for (std::size_t l = 0; l < p.weights.size(); ++l) {
      update(p.weights[l], g.weights[l], m.weights[l], v.weights[l], lr, c1, c2);
      update(p.biases[l], g.biases[l], m.biases[l], v.biases[l], lr, c1, c2);
    }
  }
};

MatX gather(const MatX& src, const std::vector<int>& idx, std::size_t begin, std::size_t end) {
  MatX out(src.rows(), static_cast<Eigen::Index>(end - begin));
  for (std::size_t k = begin; k < end; ++k) out.col(static_cast<Eigen::Index>(k - begin)) = src.col(idx[k]);
  return out;
}

}  // namespace

void TrainConfig::validate() const {
  if (batch_size < 1 || !(learning_rate > 0.0) || decay_every < 1 || !(decay_factor > 0.0) || max_epochs < 1 ||
      patience < 1) {
    throw Error(ErrorCode::kInvalidArgument, "training hyperparameters must be positive");
  }
  if (!(validation_fraction > 0.0 && validation_fraction <= 0.5)) {
    throw Error(ErrorCode::kInvalidArgument, "validation fraction must lie in (0, 0.5]");
  }
  for (const int h : hidden) {
    if (h < 1) throw Error(ErrorCode::kInvalidArgument, "hidden widths must be positive");
  }
}

MlpPolicy bc_train(const DemoDataset& data, const TrainConfig& cfg, TrainReport* report) {
  data.validate();
  cfg.validate();
  const int n = static_cast<int>(data.records.size());
  if (n < cfg.batch_size) {
    throw Error(ErrorCode::kInvalidArgument, "dataset has " + std::to_string(n) + " records, fewer than one batch");
  }

  std::mt19937_64 rng(cfg.seed);
  std::vector<int> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::shuffle(order.begin(), order.end(), rng);
  const int n_val = std::clamp(static_cast<int>(std::lround(cfg.validation_fraction * n)), 1, n - 1 > 0 ? n - 1 : 1);
  const int n_train = std::max(n - n_val, 1);

  MatX x_all(6, n), y_all(6, n);
  for (int i = 0; i < n; ++i) {
    x_all.col(i) = data.records[i].error;
    y_all.col(i) = data.records[i].action;
  }
  std::vector<int> train_idx(order.begin(), order.begin() + n_train);
  std::vector<int> val_idx(order.end() - n_val, order.end());

  const MatX x_train_raw = gather(x_all, train_idx, 0, train_idx.size());
  const VecX mean = x_train_raw.rowwise().mean();
  VecX scale = ((x_train_raw.colwise() - mean).array().square().rowwise().mean()).sqrt();
  for (Eigen::Index i = 0; i < scale.size(); ++i) {
    if (!(scale[i] > 1e-12)) scale[i] = 1.0;
  }
  const MatX x_std = (x_all.colwise() - mean).array().colwise() / scale.array();

  const MatX x_val = gather(x_std, val_idx, 0, val_idx.size());
  const MatX y_val = gather(y_all, val_idx, 0, val_idx.size());

  std::vector<int> arch{6};
  arch.insert(arch.end(), cfg.hidden.begin(), cfg.hidden.end());
  arch.push_back(6);
  MlpPolicy net = MlpPolicy::create(arch, rng);
  net.error_kind = data.error_kind;

  TrainReport rep;
  rep.initial_validation_loss = mse_loss(net, x_val, y_val);
  if (!std::isfinite(rep.initial_validation_loss)) throw Error(ErrorCode::kDegenerate, "validation loss is not finite");
  MlpPolicy best = net;
  rep.best_validation_loss = rep.initial_validation_loss;

  Adam adam(net);
  MlpGradients grad;
  int since_best = 0;
  for (int epoch = 1; epoch <= cfg.max_epochs; ++epoch) {
    const double lr = cfg.learning_rate * std::pow(cfg.decay_factor, (epoch - 1) / cfg.decay_every);
    std::shuffle(train_idx.begin(), train_idx.end(), rng);
    double sum = 0.0;
    for (std::size_t b = 0; b < train_idx.size(); b += cfg.batch_size) {
      const std::size_t e = std::min(train_idx.size(), b + cfg.batch_size);
      const MatX xb = gather(x_std, train_idx, b, e);
      const MatX yb = gather(y_all, train_idx, b, e);
      sum += loss_and_gradient(net, xb, yb, grad) * static_cast<double>(e - b);
      adam.step(net, grad, lr);
    }
    rep.final_training_loss = sum / static_cast<double>(train_idx.size());
    rep.epochs = epoch;
    const double val = mse_loss(net, x_val, y_val);
    if (!std::isfinite(val)) throw Error(ErrorCode::kDegenerate, "validation loss is not finite");
    if (val < rep.best_validation_loss) {
      rep.best_validation_loss = val;
      rep.best_epoch = epoch;
      best = net;
      since_best = 0;
    } else if (++since_best >= cfg.patience) {
      break;
    }
  }

  // Fold the input standardization into the first layer.
  MatX& w0 = best.weights.front();
  w0 = w0 * scale.cwiseInverse().asDiagonal();
  best.biases.front() -= w0 * mean;
  if (report) *report = rep;
  return best;
}

}  // namespace gic
