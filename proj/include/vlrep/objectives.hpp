#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "vlrep/numerics.hpp"

namespace vlrep {

// Retrieval direction. v2t scores a video query against all texts (rows of
// the similarity matrix); t2v scores a text query against all videos
// (columns).
enum class Direction { v2t, t2v };

// B x B cosine similarities, entry (i, j) = similarity of video i and text j.
// The diagonal holds the positive pairs.
struct SimilarityMatrix {
  Matrix s;

  SimilarityMatrix() = default;
  explicit SimilarityMatrix(Matrix m);

  std::size_t batch_size() const { return s.rows; }
};

// Elementwise arccos image of a SimilarityMatrix, radians in [0, pi].
struct AngleMatrix {
  Matrix lambda;

  AngleMatrix() = default;
  explicit AngleMatrix(Matrix m);
  static AngleMatrix from_similarity(const SimilarityMatrix& sim);

  std::size_t batch_size() const { return lambda.rows; }
};

// Margin schedule mu(k) = a0 / (a1 + exp(-a2 * k)). With a2 > 0 the margin
// rises monotonically towards the limit a0/a1.
struct MarginSchedule {
  double a0 = 2.0;
  double a1 = 10.0;
  double a2 = 0.1;

  void validate() const;
};

double margin_at(const MarginSchedule& sched, std::size_t k);

// Per-sample decomposition of the combined training objective:
// per_sample[i] = v2t[i] + t2v[i] + eta * ce[i], with eta forced to zero
// per-sample for unlabeled rows.
struct LossBreakdown {
  std::vector<double> per_sample;
  std::vector<double> v2t;
  std::vector<double> t2v;
  std::vector<double> ce;
  double eta = 0.0;
};

// Softmax negative log likelihood of entry `target` among `logits`:
// log_sum_exp(logits) - logits[target]. Shared by the contrastive and
// angular losses so their coinciding cases are bit-identical.
double softmax_nll(std::span<const double> logits, std::size_t target);

// The logit row the angular loss uses for query i: cos(angle)/tau with the
// margined positive substituted when lambda_ii <= pi/2. Exposed so backward
// passes reuse the exact forward floating-point path.
std::vector<double> angular_logits(const AngleMatrix& angles, double mu,
                                   double tau, std::size_t i, Direction dir);

std::vector<double> contrastive_loss(const SimilarityMatrix& sim, double tau,
                                     Direction dir);

// Angular loss with subtractive margin on the positive pair. For
// lambda_ii <= pi/2 the positive logit is cos(max(lambda_ii - mu, 0))/tau
// (boundary lambda_ii = pi/2 included); otherwise the plain cos(lambda_ii)/tau.
// Negative logits are always cos(lambda_ij)/tau.
std::vector<double> angular_margin_loss(const AngleMatrix& angles, double mu,
                                        double tau, Direction dir);

// Closed-form d L_angular,i / d lambda_ii:
//   sin(max(lambda_ii - mu, 0))/tau * (1 - softmax_i(logits)),
// i.e. zero whenever lambda_ii <= mu. Above pi/2 this is the derivative of
// the unmargined branch.
double angular_loss_grad(const AngleMatrix& angles, double mu, double tau,
                         std::size_t i, Direction dir = Direction::v2t);

// |dL_angular/dlambda_ii| / |dL_contrastive/dlambda_ii| via the closed form
//   sin(max(lambda_ii-mu,0))/sin(lambda_ii) * sum_exp(plain)/sum_exp(margined).
// Requires 0 < lambda_ii <= pi/2; always in [0, 1].
double gradient_ratio(const AngleMatrix& angles, double mu, double tau,
                      std::size_t i, Direction dir = Direction::v2t);

// -log q(target). `log_likelihoods` must be normalized log-probabilities
// (sum of exps within 1e-9 of 1).
double cross_entropy(std::span<const double> log_likelihoods,
                     std::size_t target);

// Combined per-sample objective: both angular directions plus eta * CE for
// labeled rows. `labels` may be null (fully unlabeled batch); entries < 0
// mark unlabeled samples. `fusion_log_likelihoods` is B x C and required
// whenever any label is present.
LossBreakdown combined_loss(const SimilarityMatrix& sim,
                            const std::vector<int>* labels,
                            const Matrix* fusion_log_likelihoods,
                            const MarginSchedule& sched, std::size_t k,
                            double tau, double eta);

// Same objective at an explicit margin value (the scheduled variant above
// delegates here with mu = margin_at(sched, k)).
LossBreakdown combined_loss_at_margin(const SimilarityMatrix& sim,
                                      const std::vector<int>* labels,
                                      const Matrix* fusion_log_likelihoods,
                                      double mu, double tau, double eta);

}  // namespace vlrep
