#include "vlrep/metaopt.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace vlrep {

namespace {

// Per-sample losses and gradients at fixed parameters, plus the values fed
// to the weighting function.
struct StepWorkspace {
  std::vector<double> flat;  // flattened encoder parameters
  LossBreakdown losses;
  std::vector<std::vector<double>> grads;
  std::vector<double> inputs;  // weightnet inputs (raw or standardized losses)
};

std::vector<double> make_weight_inputs(const std::vector<double>& losses,
                                       const TrainConfig& cfg) {
  if (!cfg.standardize_loss_input) return losses;
  double mean = 0.0;
  for (double l : losses) mean += l;
  mean /= static_cast<double>(losses.size());
  double var = 0.0;
  for (double l : losses) var += (l - mean) * (l - mean);
  var /= static_cast<double>(losses.size());
  const double sd = std::sqrt(var);
  std::vector<double> x(losses.size());
  for (std::size_t j = 0; j < losses.size(); ++j)
    x[j] = (losses[j] - mean) / (sd > 0.0 ? sd : 1.0);
  return x;
}

StepWorkspace make_workspace(const EncoderParams& enc, const Batch& batch,
                             std::size_t k, const TrainConfig& cfg) {
  StepWorkspace ws;
  ws.flat = enc.flatten();
  const double mu = margin_at(cfg.sched, k);
  PerSampleGrads psg = per_sample_loss_and_grads(enc, batch, mu, cfg.tau, cfg.eta);
  ws.losses = std::move(psg.losses);
  ws.grads = std::move(psg.grads);
  ws.inputs = make_weight_inputs(ws.losses.per_sample, cfg);
  return ws;
}

std::vector<double> weightnet_weights(const WeightNetParams& wn,
                                      const std::vector<double>& inputs) {
  std::vector<double> w(inputs.size());
  for (std::size_t j = 0; j < inputs.size(); ++j) w[j] = weightnet_forward(wn, inputs[j]);
  return w;
}

// (scale) * sum_j weights[j] * grads[j], fixed left-to-right order.
std::vector<double> weighted_grad_sum(const std::vector<std::vector<double>>& grads,
                                      const std::vector<double>& weights, double scale) {
  std::vector<double> acc(grads.front().size(), 0.0);
  for (std::size_t j = 0; j < grads.size(); ++j) axpy(scale * weights[j], grads[j], acc);
  return acc;
}

EncoderParams apply_model_step(const std::vector<double>& flat,
                               const std::vector<double>& direction, double alpha,
                               const EncoderShapes& shapes) {
  std::vector<double> next = flat;
  axpy(-alpha, direction, next);
  return EncoderParams::from_flat(next, shapes);
}

// Mean per-sample gradient of the meta batch at the given parameters, plus
// the per-sample gradients and mean loss.
struct MetaEval {
  std::vector<std::vector<double>> grads;
  double mean_loss = 0.0;
};

MetaEval eval_meta(const EncoderParams& at, const Batch& meta_batch, std::size_t k,
                   const TrainConfig& cfg) {
  const double mu = margin_at(cfg.sched, k);
  PerSampleGrads psg = per_sample_loss_and_grads(at, meta_batch, mu, cfg.tau, cfg.eta);
  MetaEval me;
  me.grads = std::move(psg.grads);
  double total = 0.0;
  for (double l : psg.losses.per_sample) total += l;
  me.mean_loss = total / static_cast<double>(psg.losses.per_sample.size());
  return me;
}

double mean_batch_loss(const EncoderParams& enc, const Batch& batch, std::size_t k,
                       const TrainConfig& cfg) {
  const double mu = margin_at(cfg.sched, k);
  const EmbeddingBatch emb = encode(enc, batch.video, batch.text);
  const SimilarityMatrix sim = similarity(emb);
  const std::vector<int>* labels = batch.labels.empty() ? nullptr : &batch.labels;
  Matrix llh;
  const bool labeled = batch.any_label();
  if (labeled) llh = fusion_log_likelihood_matrix(enc, emb);
  const LossBreakdown lb =
      combined_loss_at_margin(sim, labels, labeled ? &llh : nullptr, mu, cfg.tau, cfg.eta);
  double total = 0.0;
  for (double l : lb.per_sample) total += l;
  return total / static_cast<double>(lb.per_sample.size());
}

void check_batch_for_step(const Batch& batch, const char* what) {
  if (batch.size() == 0) throw std::invalid_argument(std::string(what) + " batch is empty");
}

// Minibatch index stream: without replacement, reshuffled per epoch,
// partial tails dropped.
class IndexCycler {
 public:
  IndexCycler(std::size_t n, std::size_t batch) : batch_(batch), pos_(n), order_(n) {
    if (batch == 0 || batch > n)
      throw std::invalid_argument("train: batch size " + std::to_string(batch) +
                                  " exceeds dataset size " + std::to_string(n));
    for (std::size_t i = 0; i < n; ++i) order_[i] = i;
  }

  std::vector<std::size_t> next(Rng& rng) {
    if (pos_ + batch_ > order_.size()) {
      rng.shuffle(order_);
      pos_ = 0;
    }
    std::vector<std::size_t> idx(order_.begin() + static_cast<std::ptrdiff_t>(pos_),
                                 order_.begin() + static_cast<std::ptrdiff_t>(pos_ + batch_));
    pos_ += batch_;
    return idx;
  }

 private:
  std::size_t batch_;
  std::size_t pos_;
  std::vector<std::size_t> order_;
};

Batch gather(const Batch& data, const std::vector<std::size_t>& idx) {
  Batch out;
  out.video = Matrix(idx.size(), data.video.cols);
  out.text = Matrix(idx.size(), data.text.cols);
  if (!data.labels.empty()) out.labels.resize(idx.size());
  for (std::size_t r = 0; r < idx.size(); ++r) {
    const std::size_t s = idx[r];
    for (std::size_t c = 0; c < data.video.cols; ++c)
      out.video.at(r, c) = data.video.at(s, c);
    for (std::size_t c = 0; c < data.text.cols; ++c)
      out.text.at(r, c) = data.text.at(s, c);
    if (!data.labels.empty()) out.labels[r] = data.labels[s];
  }
  return out;
}

void check_finite_trace(const StepTrace& t) {
  bool ok = std::isfinite(t.mu) && std::isfinite(t.meta_loss) &&
            std::isfinite(t.grad_norm_model) && std::isfinite(t.grad_norm_weightnet);
  for (double v : t.losses) ok &= std::isfinite(v);
  for (double v : t.weights) ok &= std::isfinite(v);
  if (!ok)
    throw std::runtime_error("train: non-finite trace value at step " + std::to_string(t.step));
}

}  // namespace

// ---------------------------------------------------------------------------
// Config
// ---------------------------------------------------------------------------

void TrainConfig::validate() const {
  if (!(alpha > 0.0) || !(beta > 0.0))
    throw std::invalid_argument("TrainConfig: learning rates must be > 0");
  if (!(tau > 0.0)) throw std::invalid_argument("TrainConfig: tau must be > 0");
  if (batch_size == 0 || meta_batch_size == 0)
    throw std::invalid_argument("TrainConfig: batch sizes must be >= 1");
  if (d_hidden == 0 || d_embed == 0 || n_classes == 0 || weightnet_hidden == 0)
    throw std::invalid_argument("TrainConfig: model dimensions must be >= 1");
  sched.validate();
  scheme.validate();
  if (strategy == Strategy::joint && scheme.variant != WeightingScheme::Variant::mlp)
    throw std::invalid_argument("TrainConfig: joint strategy requires the mlp scheme");
  if (standardize_loss_input && strategy == Strategy::joint)
    throw std::invalid_argument("TrainConfig: loss standardization is not supported with joint strategy");
}

double StepTrace::mean_loss() const {
  double total = 0.0;
  for (double l : losses) total += l;
  return losses.empty() ? 0.0 : total / static_cast<double>(losses.size());
}

// ---------------------------------------------------------------------------
// Algorithm phases
// ---------------------------------------------------------------------------

EncoderParams inner_estimate(const EncoderParams& enc, const WeightNetParams& wn,
                             const Batch& batch, std::size_t k, const TrainConfig& cfg) {
  check_batch_for_step(batch, "train");
  const StepWorkspace ws = make_workspace(enc, batch, k, cfg);
  const std::vector<double> w = weightnet_weights(wn, ws.inputs);
  const std::vector<double> dir =
      weighted_grad_sum(ws.grads, w, 1.0 / static_cast<double>(batch.size()));
  return apply_model_step(ws.flat, dir, cfg.alpha, enc.shapes());
}

WeightNetParams meta_update_direct(const WeightNetParams& wn, const EncoderParams& enc,
                                   const Batch& batch, const Batch& meta_batch,
                                   std::size_t k, const TrainConfig& cfg) {
  check_batch_for_step(batch, "train");
  check_batch_for_step(meta_batch, "meta");
  const StepWorkspace ws = make_workspace(enc, batch, k, cfg);
  const std::vector<double> w = weightnet_weights(wn, ws.inputs);
  const std::size_t b = batch.size();
  const std::size_t p = ws.flat.size();
  const std::size_t t = wn.param_count();

  // J = d Theta_hat / d theta = -(alpha/B) sum_j g_j (outer) dw_j.
  Matrix jac(p, t);
  const double jf = -cfg.alpha / static_cast<double>(b);
  for (std::size_t j = 0; j < b; ++j) {
    const std::vector<double> dw = weightnet_grad(wn, ws.inputs[j]).flatten();
    for (std::size_t r = 0; r < p; ++r) {
      const double gr = jf * ws.grads[j][r];
      if (gr == 0.0) continue;
      axpy(gr, dw, jac.row(r));
    }
  }

  const std::vector<double> dir =
      weighted_grad_sum(ws.grads, w, 1.0 / static_cast<double>(b));
  const EncoderParams theta_hat = apply_model_step(ws.flat, dir, cfg.alpha, enc.shapes());

  const MetaEval me = eval_meta(theta_hat, meta_batch, k, cfg);
  std::vector<double> gm_sum(p, 0.0);
  for (const auto& g : me.grads) axpy(1.0, g, gm_sum);

  // theta' = theta - (beta/M) J^T gm_sum; beta applied last so the update is
  // exactly linear in it.
  std::vector<double> jt_g(t, 0.0);
  for (std::size_t r = 0; r < p; ++r)
    if (gm_sum[r] != 0.0) axpy(gm_sum[r], jac.row(r), jt_g);
  std::vector<double> next = wn.flatten();
  axpy(-cfg.beta / static_cast<double>(meta_batch.size()), jt_g, next);
  return WeightNetParams::from_flat(next, wn.hidden());
}

WeightNetParams meta_update_derived(const WeightNetParams& wn, const EncoderParams& enc,
                                    const Batch& batch, const Batch& meta_batch,
                                    std::size_t k, const TrainConfig& cfg) {
  check_batch_for_step(batch, "train");
  check_batch_for_step(meta_batch, "meta");
  const StepWorkspace ws = make_workspace(enc, batch, k, cfg);
  const std::vector<double> w = weightnet_weights(wn, ws.inputs);
  const std::vector<double> dir =
      weighted_grad_sum(ws.grads, w, 1.0 / static_cast<double>(batch.size()));
  const EncoderParams theta_hat = apply_model_step(ws.flat, dir, cfg.alpha, enc.shapes());
  const MetaEval me = eval_meta(theta_hat, meta_batch, k, cfg);
  return weightnet_meta_step_derived(wn, ws.inputs, ws.grads, me.grads, cfg.alpha, cfg.beta);
}

EncoderParams model_update(const EncoderParams& enc, const WeightNetParams& wn_next,
                           const Batch& batch, std::size_t k, const TrainConfig& cfg) {
  check_batch_for_step(batch, "train");
  const StepWorkspace ws = make_workspace(enc, batch, k, cfg);
  const std::vector<double> w = weightnet_weights(wn_next, ws.inputs);
  const std::vector<double> dir =
      weighted_grad_sum(ws.grads, w, 1.0 / static_cast<double>(batch.size()));
  return apply_model_step(ws.flat, dir, cfg.alpha, enc.shapes());
}

// ---------------------------------------------------------------------------
// Raw kernels
// ---------------------------------------------------------------------------

std::vector<double> weightnet_meta_delta_derived(
    const WeightNetParams& wn, const std::vector<double>& weight_inputs,
    const std::vector<std::vector<double>>& train_grads,
    const std::vector<std::vector<double>>& meta_grads, double alpha, double beta) {
  const std::size_t b = train_grads.size();
  const std::size_t m = meta_grads.size();
  if (b == 0 || m == 0)
    throw std::invalid_argument("weightnet_meta_delta_derived: empty gradient set");
  if (weight_inputs.size() != b)
    throw std::invalid_argument("weightnet_meta_delta_derived: loss/gradient count mismatch");

  std::vector<double> acc(wn.param_count(), 0.0);
  for (std::size_t j = 0; j < b; ++j) {
    // coeff_j = sum_i G_ij, G_ij = <meta grad_i, train grad_j>.
    double coeff = 0.0;
    for (std::size_t i = 0; i < m; ++i) {
      if (meta_grads[i].size() != train_grads[j].size())
        throw std::invalid_argument("weightnet_meta_delta_derived: gradient size mismatch");
      coeff += dot(meta_grads[i], train_grads[j]);
    }
    const std::vector<double> dw = weightnet_grad(wn, weight_inputs[j]).flatten();
    axpy(coeff, dw, acc);
  }
  // Learning-rate factor applied last: the delta is exactly linear in beta.
  const double scale = alpha * beta / (static_cast<double>(b) * static_cast<double>(m));
  for (double& v : acc) v *= scale;
  return acc;
}

WeightNetParams weightnet_meta_step_derived(
    const WeightNetParams& wn, const std::vector<double>& weight_inputs,
    const std::vector<std::vector<double>>& train_grads,
    const std::vector<std::vector<double>>& meta_grads, double alpha, double beta) {
  const std::vector<double> delta =
      weightnet_meta_delta_derived(wn, weight_inputs, train_grads, meta_grads, alpha, beta);
  std::vector<double> next = wn.flatten();
  axpy(1.0, delta, next);
  return WeightNetParams::from_flat(next, wn.hidden());
}

// ---------------------------------------------------------------------------
// Training loop
// ---------------------------------------------------------------------------

TrainResult train(const TrainConfig& cfg, const Batch& train_data, const Batch& meta_data) {
  cfg.validate();
  train_data.validate();
  meta_data.validate();
  if (train_data.video.cols == 0 || train_data.text.cols == 0)
    throw std::invalid_argument("train: empty feature dimensions");
  if (meta_data.video.cols != train_data.video.cols ||
      meta_data.text.cols != train_data.text.cols)
    throw std::invalid_argument("train: train/meta feature dimensions differ");

  const EncoderShapes shapes{train_data.video.cols, train_data.text.cols, cfg.d_hidden,
                             cfg.d_embed, cfg.n_classes};
  Rng rng(cfg.seed);
  TrainResult result;
  result.encoder = EncoderParams::init(shapes, rng);
  result.weightnet = WeightNetParams::init(cfg.weightnet_hidden, rng);
  result.trace.reserve(cfg.steps);

  IndexCycler train_cycle(train_data.size(), cfg.batch_size);
  IndexCycler meta_cycle(meta_data.size(), cfg.meta_batch_size);

  const bool mlp = cfg.scheme.variant == WeightingScheme::Variant::mlp;
  const bool l2rw = cfg.scheme.variant == WeightingScheme::Variant::l2rw;

  for (std::size_t k = 0; k < cfg.steps; ++k) {
    const Batch batch = gather(train_data, train_cycle.next(rng));
    const Batch meta_batch = gather(meta_data, meta_cycle.next(rng));
    const std::size_t b = batch.size();
    const double inv_b = 1.0 / static_cast<double>(b);

    StepTrace tr;
    tr.step = k;
    tr.mu = margin_at(cfg.sched, k);

    const StepWorkspace ws = make_workspace(result.encoder, batch, k, cfg);
    tr.losses = ws.losses.per_sample;

    std::vector<double> dir;  // mean applied model gradient

    if (cfg.strategy == Strategy::joint) {
      // Exact gradient of (1/B) sum_j w(theta, L_j) L_j: the model part
      // carries the product-rule term through dw/dloss, the weightnet part
      // is (1/B) sum_j L_j dw_j/dtheta.
      const std::vector<double> w = weightnet_weights(result.weightnet, ws.inputs);
      std::vector<double> model_coeffs(b);
      for (std::size_t j = 0; j < b; ++j)
        model_coeffs[j] =
            w[j] + ws.losses.per_sample[j] *
                       weightnet_loss_grad(result.weightnet, ws.inputs[j]);
      dir = weighted_grad_sum(ws.grads, model_coeffs, inv_b);

      std::vector<double> wn_grad(result.weightnet.param_count(), 0.0);
      for (std::size_t j = 0; j < b; ++j)
        axpy(inv_b * ws.losses.per_sample[j],
             weightnet_grad(result.weightnet, ws.inputs[j]).flatten(), wn_grad);
      std::vector<double> wn_next = result.weightnet.flatten();
      axpy(-cfg.beta, wn_grad, wn_next);
      result.weightnet = WeightNetParams::from_flat(wn_next, cfg.weightnet_hidden);

      tr.weights = w;
      tr.grad_norm_weightnet = l2_norm(wn_grad);
      result.encoder = apply_model_step(ws.flat, dir, cfg.alpha, shapes);
      tr.meta_loss = mean_batch_loss(result.encoder, meta_batch, k, cfg);
    } else if (mlp) {
      // Algorithm phases sharing one workspace; bitwise identical to the
      // standalone inner_estimate / meta_update_derived / model_update chain.
      const std::vector<double> w0 = weightnet_weights(result.weightnet, ws.inputs);
      const std::vector<double> dir0 = weighted_grad_sum(ws.grads, w0, inv_b);
      const EncoderParams theta_hat = apply_model_step(ws.flat, dir0, cfg.alpha, shapes);
      const MetaEval me = eval_meta(theta_hat, meta_batch, k, cfg);
      tr.meta_loss = me.mean_loss;

      const WeightNetParams wn_prev = result.weightnet;
      result.weightnet = weightnet_meta_step_derived(wn_prev, ws.inputs, ws.grads,
                                                     me.grads, cfg.alpha, cfg.beta);
      {
        std::vector<double> prev_flat = wn_prev.flatten();
        std::vector<double> next_flat = result.weightnet.flatten();
        axpy(-1.0, next_flat, prev_flat);
        tr.grad_norm_weightnet = l2_norm(prev_flat) / cfg.beta;
      }

      tr.weights = weightnet_weights(result.weightnet, ws.inputs);
      dir = weighted_grad_sum(ws.grads, tr.weights, inv_b);
      result.encoder = apply_model_step(ws.flat, dir, cfg.alpha, shapes);
    } else if (l2rw) {
      // Virtual uniform-weight step, meta mean gradient there, then
      // alignment-normalized weights on the real step.
      const std::vector<double> ones(b, 1.0);
      const std::vector<double> dir0 = weighted_grad_sum(ws.grads, ones, inv_b);
      const EncoderParams theta_hat = apply_model_step(ws.flat, dir0, cfg.alpha, shapes);
      const MetaEval me = eval_meta(theta_hat, meta_batch, k, cfg);
      tr.meta_loss = me.mean_loss;
      std::vector<double> gm_mean(ws.flat.size(), 0.0);
      for (const auto& g : me.grads)
        axpy(1.0 / static_cast<double>(me.grads.size()), g, gm_mean);
      tr.weights = l2rw_weights(ws.grads, gm_mean);
      // Weights are already normalized to sum 1, so no 1/B factor here.
      dir = weighted_grad_sum(ws.grads, tr.weights, 1.0);
      result.encoder = apply_model_step(ws.flat, dir, cfg.alpha, shapes);
    } else {
      // Pointwise baseline weighting (focal / spl / uniform): plain
      // weighted SGD, no weightnet involvement.
      tr.weights.resize(b);
      for (std::size_t j = 0; j < b; ++j)
        tr.weights[j] = baseline_weight(cfg.scheme, ws.losses.per_sample[j]);
      dir = weighted_grad_sum(ws.grads, tr.weights, inv_b);
      result.encoder = apply_model_step(ws.flat, dir, cfg.alpha, shapes);
      tr.meta_loss = mean_batch_loss(result.encoder, meta_batch, k, cfg);
    }

    tr.grad_norm_model = l2_norm(dir);
    check_finite_trace(tr);
    result.trace.push_back(std::move(tr));
  }
  return result;
}

}  // namespace vlrep
