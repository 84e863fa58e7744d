#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "vlrep/numerics.hpp"

namespace vlrep {

// Parameters of the loss -> weight MLP: 1 -> H (relu) -> 1 (sigmoid).
// Flat layout is [w1 (H), b1 (H), w2 (H), b2], 3H+1 values.
struct WeightNetParams {
  Matrix w1;               // H x 1 input weights
  std::vector<double> b1;  // H hidden biases
  Matrix w2;               // 1 x H output weights
  double b2 = 0.0;

  std::size_t hidden() const { return b1.size(); }
  std::size_t param_count() const { return 3 * hidden() + 1; }

  void validate() const;
  std::vector<double> flatten() const;
  static WeightNetParams from_flat(std::span<const double> flat, std::size_t hidden);

  // Hidden layer uniform in [-1/sqrt(H), 1/sqrt(H)], output layer zero,
  // so every sample starts at weight exactly 0.5.
  static WeightNetParams init(std::size_t hidden, Rng& rng);
};

struct WeightingScheme {
  enum class Variant { mlp, focal, spl, l2rw, uniform };

  Variant variant = Variant::mlp;
  double gamma_f = 2.0;    // focal exponent
  double lambda_spl = 1.0; // self-paced hard threshold

  void validate() const;
};

// sigmoid(w2 . relu(w1 * loss + b1) + b2), clamped to the nearest
// representable doubles inside (0, 1).
double weightnet_forward(const WeightNetParams& theta, double loss);

// Exact d weight / d theta, same shape as theta. Relu subgradient is 0 at
// the kink (pre-activation exactly 0).
WeightNetParams weightnet_grad(const WeightNetParams& theta, double loss);

// d weight / d loss at fixed theta.
double weightnet_loss_grad(const WeightNetParams& theta, double loss);

// Per-loss baseline weights: focal (1-e^{-loss})^gamma_f, SPL hard
// threshold (1 if loss < lambda_spl else 0), uniform 1. The mlp and l2rw
// variants are not pointwise functions of one loss and are rejected here.
double baseline_weight(const WeightingScheme& scheme, double loss);

// w_j = max(<g_j, g_meta>, 0), normalized to sum 1; uniform 1/B when every
// alignment is nonpositive.
std::vector<double> l2rw_weights(const std::vector<std::vector<double>>& train_grads,
                                 std::span<const double> meta_grad);

}  // namespace vlrep
