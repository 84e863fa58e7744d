#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "vlrep/numerics.hpp"
#include "vlrep/objectives.hpp"

namespace vlrep {

// One affine layer y = w x + b, with w stored out x in.
struct AffineParams {
  Matrix w;
  std::vector<double> b;

  std::size_t out_dim() const { return w.rows; }
  std::size_t in_dim() const { return w.cols; }
  std::size_t param_count() const { return w.data.size() + b.size(); }
};

// Two-layer encoder: affine -> relu -> affine.
struct MlpParams {
  AffineParams l1;
  AffineParams l2;

  std::size_t param_count() const { return l1.param_count() + l2.param_count(); }
};

struct EncoderShapes {
  std::size_t d_video = 16;
  std::size_t d_text = 16;
  std::size_t d_hidden = 24;
  std::size_t d_embed = 16;
  std::size_t n_classes = 10;

  void validate() const;
};

// The full trainable model: dual encoders plus a fusion head mapping the
// concatenated pair embedding (2*D_e) to class logits.
struct EncoderParams {
  MlpParams video;
  MlpParams text;
  AffineParams fusion;

  EncoderShapes shapes() const;
  std::size_t param_count() const;
  void validate() const;

  // Flat layout: video.l1.w, video.l1.b, video.l2.w, video.l2.b, then the
  // same for text, then fusion.w, fusion.b (matrices row-major).
  std::vector<double> flatten() const;
  static EncoderParams from_flat(std::span<const double> flat, const EncoderShapes& shapes);

  // Uniform +-1/sqrt(fan_in) per layer (weights and biases), drawn in flat
  // layout order.
  static EncoderParams init(const EncoderShapes& shapes, Rng& rng);
};

// A training batch of pre-pooled features. `labels` is per-sample, -1 for
// unlabeled; an empty vector means fully unlabeled.
struct Batch {
  Matrix video;  // B x D_v
  Matrix text;   // B x D_t
  std::vector<int> labels;

  std::size_t size() const { return video.rows; }
  bool any_label() const;
  void validate() const;
};

// Row-normalized embeddings of a batch.
struct EmbeddingBatch {
  Matrix video;  // B x D_e, unit rows
  Matrix text;   // B x D_e, unit rows
};

struct PerSampleGrads {
  LossBreakdown losses;
  std::vector<std::vector<double>> grads;  // B flat gradients, flatten() layout
};

EmbeddingBatch encode(const EncoderParams& params, const Matrix& raw_video,
                      const Matrix& raw_text);

// S = video . text^T, clamped into [-1, 1].
SimilarityMatrix similarity(const EmbeddingBatch& emb);

// Log-softmax class scores of fusion([video_i ; text_i]); one row per sample.
Matrix fusion_log_likelihood_matrix(const EncoderParams& params,
                                    const EmbeddingBatch& emb);
std::vector<double> fusion_log_likelihoods(const EncoderParams& params,
                                           const EmbeddingBatch& emb, std::size_t i);

// Exact reverse-mode per-sample gradients of the combined objective at a
// fixed margin. grads[j] is d(per_sample[j])/d(params) in flatten() layout.
PerSampleGrads per_sample_loss_and_grads(const EncoderParams& params,
                                         const Batch& batch, double mu,
                                         double tau, double eta);

}  // namespace vlrep
