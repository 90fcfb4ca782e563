#include "gic/mlp.hpp"

#include <cmath>
#include <sstream>

#include "gic/error.hpp"

namespace gic {

namespace {

constexpr double kFdStep = 1e-5;
constexpr double kRelativeFloor = 1e-3;

struct ForwardPass {
  std::vector<MatX> pre;   // z_l
  std::vector<MatX> post;  // h_l, post[0] = x
};

ForwardPass run(const MlpPolicy& p, const MatX& x) {
  ForwardPass fp;
  fp.post.push_back(x);
  const std::size_t layers = p.weights.size();
  for (std::size_t l = 0; l < layers; ++l) {
    MatX z = p.weights[l] * fp.post.back();
    z.colwise() += p.biases[l];
    MatX h = (l + 1 == layers) ? MatX(z.array().tanh()) : MatX(z.cwiseMax(0.0));
    fp.pre.push_back(std::move(z));
    fp.post.push_back(std::move(h));
  }
  return fp;
}

void check_shapes(const MlpPolicy& p, const MatX& x, const MatX& y) {
  const auto a = p.arch();
  if (x.rows() != a.front() || y.rows() != a.back() || x.cols() != y.cols() || x.cols() == 0) {
    throw Error(ErrorCode::kDimensionMismatch, "batch shape does not match the network");
  }
}

}  // namespace

MlpPolicy MlpPolicy::create(const std::vector<int>& arch, std::mt19937_64& rng) {
  if (arch.size() < 2) throw Error(ErrorCode::kInvalidArgument, "network needs at least two layer widths");
  MlpPolicy p;
  for (std::size_t l = 0; l + 1 < arch.size(); ++l) {
    if (arch[l] < 1 || arch[l + 1] < 1) throw Error(ErrorCode::kInvalidArgument, "layer widths must be positive");
    const double bound = 1.0 / std::sqrt(static_cast<double>(arch[l]));
    std::uniform_real_distribution<double> u(-bound, bound);
    MatX w(arch[l + 1], arch[l]);
    for (Eigen::Index c = 0; c < w.cols(); ++c)
      for (Eigen::Index r = 0; r < w.rows(); ++r) w(r, c) = u(rng);
    p.weights.push_back(std::move(w));
    p.biases.push_back(VecX::Zero(arch[l + 1]));
  }
  return p;
}

std::vector<int> MlpPolicy::arch() const {
  std::vector<int> a;
  if (weights.empty()) return a;
  a.push_back(static_cast<int>(weights.front().cols()));
  for (const auto& w : weights) a.push_back(static_cast<int>(w.rows()));
  return a;
}

std::size_t MlpPolicy::parameter_count() const {
  std::size_t n = 0;
  for (std::size_t l = 0; l < weights.size(); ++l) n += weights[l].size() + biases[l].size();
  return n;
}

VecX MlpPolicy::forward(const VecX& x) const {
  if (!x.allFinite()) throw Error(ErrorCode::kNonFiniteInput, "policy input contains NaN or Inf");
  if (weights.empty() || x.size() != weights.front().cols()) {
    throw Error(ErrorCode::kDimensionMismatch, "policy input width mismatch");
  }
  VecX h = x;
  for (std::size_t l = 0; l < weights.size(); ++l) {
    VecX z = weights[l] * h + biases[l];
    h = (l + 1 == weights.size()) ? VecX(z.array().tanh()) : VecX(z.cwiseMax(0.0));
  }
  return h;
}

MatX MlpPolicy::forward_batch(const MatX& x) const {
  if (!x.allFinite()) throw Error(ErrorCode::kNonFiniteInput, "policy input contains NaN or Inf");
  return run(*this, x).post.back();
}

double mse_loss(const MlpPolicy& p, const MatX& x, const MatX& y) {
  check_shapes(p, x, y);
  return (p.forward_batch(x) - y).squaredNorm() / static_cast<double>(x.cols());
}

double loss_and_gradient(const MlpPolicy& p, const MatX& x, const MatX& y, MlpGradients& grad) {
  check_shapes(p, x, y);
  const ForwardPass fp = run(p, x);
  const double n = static_cast<double>(x.cols());
  const MatX& out = fp.post.back();
  const MatX diff = out - y;
  const std::size_t layers = p.weights.size();
  grad.weights.resize(layers);
  grad.biases.resize(layers);

  MatX delta = (2.0 / n) * diff.array() * (1.0 - out.array().square());
  for (std::size_t l = layers; l-- > 0;) {
    grad.weights[l].noalias() = delta * fp.post[l].transpose();
    grad.biases[l] = delta.rowwise().sum();
    if (l > 0) {
      MatX back = p.weights[l].transpose() * delta;
      delta = back.array() * (fp.pre[l - 1].array() > 0.0).cast<double>();
    }
  }
  return diff.squaredNorm() / n;
}

GradientCheckReport policy_gradient_check(const MlpPolicy& p, const MatX& x, const MatX& y, double tol,
                                          const GradientFn& gradient) {
  MlpGradients g;
  gradient(p, x, y, g);
  MlpPolicy probe = p;
  GradientCheckReport rep;

  auto check = [&](double& param, double analytic, int layer, bool is_bias, int row, int col) {
    const double saved = param;
    param = saved + kFdStep;
    const double up = mse_loss(probe, x, y);
    param = saved - kFdStep;
    const double down = mse_loss(probe, x, y);
    param = saved;
    const double fd = (up - down) / (2.0 * kFdStep);
    const double rel =
        std::abs(analytic - fd) / std::max({std::abs(analytic), std::abs(fd), kRelativeFloor});
    ++rep.checked;
    const double score = std::isnan(rel) ? INFINITY : rel;
    if (rep.layer < 0 || score > rep.max_relative_error) {
      rep.max_relative_error = score;
      rep.layer = layer;
      rep.is_bias = is_bias;
      rep.row = row;
      rep.col = col;
    }
  };

  for (std::size_t l = 0; l < probe.weights.size(); ++l) {
    MatX& w = probe.weights[l];
    for (Eigen::Index c = 0; c < w.cols(); ++c)
      for (Eigen::Index r = 0; r < w.rows(); ++r)
        check(w(r, c), g.weights[l](r, c), static_cast<int>(l), false, static_cast<int>(r), static_cast<int>(c));
    VecX& b = probe.biases[l];
    for (Eigen::Index r = 0; r < b.size(); ++r)
      check(b[r], g.biases[l][r], static_cast<int>(l), true, static_cast<int>(r), 0);
  }

  if (!(rep.max_relative_error < tol)) {
    std::ostringstream os;
    os << "relative error " << rep.max_relative_error << " at layer " << rep.layer << (rep.is_bias ? " bias[" : " weight[")
       << rep.row;
    if (!rep.is_bias) os << ',' << rep.col;
    os << ']';
    throw Error(ErrorCode::kGradientMismatch, os.str());
  }
  return rep;
}

}  // namespace gic
