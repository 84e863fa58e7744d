#include "vlrep/weighting.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>

namespace vlrep {

namespace {

// Numerically careful logistic, clamped into the open interval (0, 1) so the
// weight contract holds even in deep saturation.
double sigmoid_open(double x) {
  double s;
  if (x >= 0.0) {
    s = 1.0 / (1.0 + std::exp(-x));
  } else {
    const double e = std::exp(x);
    s = e / (1.0 + e);
  }
  return std::clamp(s, std::numeric_limits<double>::min(),
                    std::nextafter(1.0, 0.0));
}

void check_loss(double loss) {
  if (!std::isfinite(loss))
    throw std::invalid_argument("weightnet: non-finite loss input");
}

}  // namespace

// ---------------------------------------------------------------------------
// WeightNetParams
// ---------------------------------------------------------------------------

void WeightNetParams::validate() const {
  const std::size_t h = hidden();
  if (h == 0) throw std::invalid_argument("WeightNetParams: hidden width must be >= 1");
  if (w1.rows != h || w1.cols != 1 || w2.rows != 1 || w2.cols != h)
    throw std::invalid_argument("WeightNetParams: layer shape mismatch");
  if (!w1.all_finite() || !w2.all_finite() || !std::isfinite(b2))
    throw std::invalid_argument("WeightNetParams: non-finite parameter");
  for (double v : b1)
    if (!std::isfinite(v)) throw std::invalid_argument("WeightNetParams: non-finite parameter");
}

std::vector<double> WeightNetParams::flatten() const {
  validate();
  std::vector<double> flat;
  flat.reserve(param_count());
  flat.insert(flat.end(), w1.data.begin(), w1.data.end());
  flat.insert(flat.end(), b1.begin(), b1.end());
  flat.insert(flat.end(), w2.data.begin(), w2.data.end());
  flat.push_back(b2);
  return flat;
}

WeightNetParams WeightNetParams::from_flat(std::span<const double> flat,
                                           std::size_t hidden) {
  if (hidden == 0 || flat.size() != 3 * hidden + 1)
    throw std::invalid_argument("WeightNetParams::from_flat: expected 3H+1 = " +
                                std::to_string(3 * hidden + 1) + " values, got " +
                                std::to_string(flat.size()));
  WeightNetParams theta;
  theta.w1 = Matrix(hidden, 1);
  std::copy_n(flat.begin(), hidden, theta.w1.data.begin());
  theta.b1.assign(flat.begin() + static_cast<std::ptrdiff_t>(hidden),
                  flat.begin() + static_cast<std::ptrdiff_t>(2 * hidden));
  theta.w2 = Matrix(1, hidden);
  std::copy_n(flat.begin() + static_cast<std::ptrdiff_t>(2 * hidden), hidden,
              theta.w2.data.begin());
  theta.b2 = flat[3 * hidden];
  theta.validate();
  return theta;
}

WeightNetParams WeightNetParams::init(std::size_t hidden, Rng& rng) {
  if (hidden == 0) throw std::invalid_argument("WeightNetParams::init: hidden width must be >= 1");
  const double bound = 1.0 / std::sqrt(static_cast<double>(hidden));
  WeightNetParams theta;
  theta.w1 = rng.matrix_uniform(hidden, 1, -bound, bound);
  theta.b1.resize(hidden);
  for (double& v : theta.b1) v = rng.uniform(-bound, bound);
  theta.w2 = Matrix(1, hidden);  // zero
  theta.b2 = 0.0;
  return theta;
}

void WeightingScheme::validate() const {
  if (!(gamma_f >= 0.0))
    throw std::invalid_argument("WeightingScheme: gamma_f must be >= 0");
  if (!(lambda_spl > 0.0))
    throw std::invalid_argument("WeightingScheme: lambda_spl must be > 0");
}

// ---------------------------------------------------------------------------
// Forward / gradients
// ---------------------------------------------------------------------------

double weightnet_forward(const WeightNetParams& theta, double loss) {
  theta.validate();
  check_loss(loss);
  const std::size_t h = theta.hidden();
  double out = theta.b2;
  for (std::size_t j = 0; j < h; ++j) {
    const double pre = theta.w1.at(j, 0) * loss + theta.b1[j];
    if (pre > 0.0) out += theta.w2.at(0, j) * pre;
  }
  return sigmoid_open(out);
}

WeightNetParams weightnet_grad(const WeightNetParams& theta, double loss) {
  theta.validate();
  check_loss(loss);
  const std::size_t h = theta.hidden();

  std::vector<double> pre(h);
  double out = theta.b2;
  for (std::size_t j = 0; j < h; ++j) {
    pre[j] = theta.w1.at(j, 0) * loss + theta.b1[j];
    if (pre[j] > 0.0) out += theta.w2.at(0, j) * pre[j];
  }
  const double w = sigmoid_open(out);
  const double dout = w * (1.0 - w);  // d sigmoid

  WeightNetParams grad;
  grad.w1 = Matrix(h, 1);
  grad.b1.assign(h, 0.0);
  grad.w2 = Matrix(1, h);
  grad.b2 = dout;
  for (std::size_t j = 0; j < h; ++j) {
    grad.w2.at(0, j) = dout * std::max(pre[j], 0.0);
    if (pre[j] > 0.0) {
      const double dpre = dout * theta.w2.at(0, j);
      grad.b1[j] = dpre;
      grad.w1.at(j, 0) = dpre * loss;
    }
  }
  return grad;
}

double weightnet_loss_grad(const WeightNetParams& theta, double loss) {
  theta.validate();
  check_loss(loss);
  const std::size_t h = theta.hidden();
  double out = theta.b2;
  double chain = 0.0;
  for (std::size_t j = 0; j < h; ++j) {
    const double pre = theta.w1.at(j, 0) * loss + theta.b1[j];
    if (pre > 0.0) {
      out += theta.w2.at(0, j) * pre;
      chain += theta.w2.at(0, j) * theta.w1.at(j, 0);
    }
  }
  const double w = sigmoid_open(out);
  return w * (1.0 - w) * chain;
}

// ---------------------------------------------------------------------------
// Baselines
// ---------------------------------------------------------------------------

double baseline_weight(const WeightingScheme& scheme, double loss) {
  scheme.validate();
  check_loss(loss);
  switch (scheme.variant) {
    case WeightingScheme::Variant::focal:
      return std::pow(1.0 - std::exp(-loss), scheme.gamma_f);
    case WeightingScheme::Variant::spl:
      return loss < scheme.lambda_spl ? 1.0 : 0.0;
    case WeightingScheme::Variant::uniform:
      return 1.0;
    case WeightingScheme::Variant::mlp:
    case WeightingScheme::Variant::l2rw:
      throw std::invalid_argument("baseline_weight: variant is not a pointwise per-loss scheme");
  }
  throw std::invalid_argument("baseline_weight: unknown variant");
}

std::vector<double> l2rw_weights(const std::vector<std::vector<double>>& train_grads,
                                 std::span<const double> meta_grad) {
  if (train_grads.empty())
    throw std::invalid_argument("l2rw_weights: empty gradient list");
  std::vector<double> w(train_grads.size());
  double total = 0.0;
  for (std::size_t j = 0; j < train_grads.size(); ++j) {
    if (train_grads[j].size() != meta_grad.size())
      throw std::invalid_argument("l2rw_weights: gradient size mismatch at sample " +
                                  std::to_string(j));
    w[j] = std::max(dot(train_grads[j], meta_grad), 0.0);
    total += w[j];
  }
  if (total > 0.0) {
    for (double& v : w) v /= total;
  } else {
    const double u = 1.0 / static_cast<double>(w.size());
    for (double& v : w) v = u;
  }
  return w;
}

}  // namespace vlrep
