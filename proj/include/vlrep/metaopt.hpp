#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

#include "vlrep/encoders.hpp"
#include "vlrep/objectives.hpp"
#include "vlrep/weighting.hpp"

namespace vlrep {

// meta: three-phase bilevel step (virtual model update, weightnet update on
// the meta batch, real model update with refreshed weights).
// joint: simultaneous gradient steps of model and weightnet on the weighted
// training objective.
enum class Strategy { meta, joint };

struct TrainConfig {
  double alpha = 0.05;  // model learning rate
  double beta = 0.05;   // weightnet learning rate
  double tau = 1.0;
  double eta = 1.0;
  std::size_t batch_size = 32;
  std::size_t meta_batch_size = 16;
  std::size_t steps = 200;
  MarginSchedule sched;
  WeightingScheme scheme;
  Strategy strategy = Strategy::meta;
  std::uint64_t seed = 1;

  // Model/weightnet sizing.
  std::size_t d_hidden = 24;
  std::size_t d_embed = 16;
  std::size_t n_classes = 10;
  std::size_t weightnet_hidden = 100;

  // Feed (loss - mean)/std instead of raw losses to the weightnet;
  // experimental, off by default, meta strategy only.
  bool standardize_loss_input = false;

  void validate() const;
};

struct StepTrace {
  std::size_t step = 0;
  double mu = 0.0;
  std::vector<double> losses;   // per train sample, length B
  std::vector<double> weights;  // the weights actually applied, length B
  double meta_loss = 0.0;       // mean meta-batch loss observed this step
  double grad_norm_model = 0.0;       // |Theta' - Theta| / alpha
  double grad_norm_weightnet = 0.0;   // |theta' - theta| / beta, 0 without a weightnet step

  double mean_loss() const;
};

struct TrainResult {
  EncoderParams encoder;
  WeightNetParams weightnet;
  std::vector<StepTrace> trace;
};

// --- Algorithm phases (standalone, recompute their inputs; deterministic) ---

// Virtual update: Theta_hat = Theta - (alpha/B) sum_j w(theta, L_j) grad_j.
EncoderParams inner_estimate(const EncoderParams& enc, const WeightNetParams& wn,
                             const Batch& batch, std::size_t k, const TrainConfig& cfg);

// Weightnet update through the explicit Jacobian d Theta_hat / d theta
// (chain rule materialized as a P x T matrix).
WeightNetParams meta_update_direct(const WeightNetParams& wn, const EncoderParams& enc,
                                   const Batch& batch, const Batch& meta_batch,
                                   std::size_t k, const TrainConfig& cfg);

// Same update in the closed form theta + (alpha*beta/(B*M)) sum_ij G_ij dw_j,
// G_ij = <meta grad_i at Theta_hat, train grad_j at Theta>.
WeightNetParams meta_update_derived(const WeightNetParams& wn, const EncoderParams& enc,
                                    const Batch& batch, const Batch& meta_batch,
                                    std::size_t k, const TrainConfig& cfg);

// Real update: same gradients as inner_estimate, weights recomputed with the
// updated weightnet on the same per-sample losses.
EncoderParams model_update(const EncoderParams& enc, const WeightNetParams& wn_next,
                           const Batch& batch, std::size_t k, const TrainConfig& cfg);

// --- Raw kernels over pre-computed gradients (constructed-instance tests) ---

// The closed-form weightnet update delta; linear in beta (and alpha), so
// doubling beta doubles the returned vector bit-exactly.
std::vector<double> weightnet_meta_delta_derived(
    const WeightNetParams& wn, const std::vector<double>& weight_inputs,
    const std::vector<std::vector<double>>& train_grads,
    const std::vector<std::vector<double>>& meta_grads, double alpha, double beta);

WeightNetParams weightnet_meta_step_derived(
    const WeightNetParams& wn, const std::vector<double>& weight_inputs,
    const std::vector<std::vector<double>>& train_grads,
    const std::vector<std::vector<double>>& meta_grads, double alpha, double beta);

// --- Training loop ---

// Initializes model and weightnet from cfg.seed, then runs cfg.steps steps.
// Rng consumption order: encoder init, weightnet init, then minibatch index
// shuffles as epochs are exhausted (train cycle first each step, then meta).
// Minibatches cycle without replacement and are reshuffled per epoch; a
// partial tail shorter than the batch size is dropped.
TrainResult train(const TrainConfig& cfg, const Batch& train_data, const Batch& meta_data);

}  // namespace vlrep
