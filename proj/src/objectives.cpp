#include "vlrep/objectives.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>
#include <string>

namespace vlrep {

namespace {

constexpr double kHalfPi = std::numbers::pi / 2.0;

void check_square(const Matrix& m, const char* what) {
  if (m.rows == 0 || m.rows != m.cols)
    throw std::invalid_argument(std::string(what) + ": matrix must be square and nonempty");
  if (!m.all_finite())
    throw std::invalid_argument(std::string(what) + ": non-finite entry");
}

void check_tau(double tau) {
  if (!(tau > 0.0))
    throw std::invalid_argument("tau must be > 0, got " + std::to_string(tau));
}

void check_mu(double mu) {
  if (!(mu >= 0.0) || !(mu < kHalfPi))
    throw std::invalid_argument("mu must lie in [0, pi/2), got " + std::to_string(mu));
}

// Row i of the effective logit table: entry j is the angle (or similarity)
// of pair (i, j) for v2t and (j, i) for t2v. The diagonal is unaffected.
double pair_entry(const Matrix& m, std::size_t i, std::size_t j, Direction dir) {
  return dir == Direction::v2t ? m.at(i, j) : m.at(j, i);
}

}  // namespace

// ---------------------------------------------------------------------------
// Domain types
// ---------------------------------------------------------------------------

SimilarityMatrix::SimilarityMatrix(Matrix m) : s(std::move(m)) {
  check_square(s, "SimilarityMatrix");
  for (double v : s.data)
    if (v < -1.0 || v > 1.0)
      throw std::invalid_argument("SimilarityMatrix: entry outside [-1, 1]: " + std::to_string(v));
}

AngleMatrix::AngleMatrix(Matrix m) : lambda(std::move(m)) {
  check_square(lambda, "AngleMatrix");
  for (double v : lambda.data)
    if (v < 0.0 || v > std::numbers::pi)
      throw std::invalid_argument("AngleMatrix: entry outside [0, pi]: " + std::to_string(v));
}

AngleMatrix AngleMatrix::from_similarity(const SimilarityMatrix& sim) {
  Matrix lam(sim.s.rows, sim.s.cols);
  for (std::size_t k = 0; k < sim.s.data.size(); ++k)
    lam.data[k] = safe_arccos(sim.s.data[k]);
  return AngleMatrix(std::move(lam));
}

void MarginSchedule::validate() const {
  if (!std::isfinite(a0) || !std::isfinite(a1) || !std::isfinite(a2))
    throw std::invalid_argument("MarginSchedule: non-finite coefficient");
  if (!(a1 > 0.0))
    throw std::invalid_argument("MarginSchedule: a1 must be > 0, got " + std::to_string(a1));
  if (a0 < 0.0)
    throw std::invalid_argument("MarginSchedule: a0 must be >= 0, got " + std::to_string(a0));
  // Supremum of mu(k) over k >= 0: the k->inf limit a0/a1 when a2 > 0
  // (monotone increasing), otherwise the k=0 value a0/(a1+1).
  const double sup = a2 > 0.0 ? a0 / a1 : a0 / (a1 + 1.0);
  if (!(sup < kHalfPi))
    throw std::invalid_argument("MarginSchedule: margin range [0, " + std::to_string(sup) +
                                "] must stay below pi/2");
}

double margin_at(const MarginSchedule& sched, std::size_t k) {
  sched.validate();
  const double mu = sched.a0 / (sched.a1 + std::exp(-sched.a2 * static_cast<double>(k)));
  if (!std::isfinite(mu))
    throw std::runtime_error("margin_at: non-finite margin at step " + std::to_string(k));
  return mu;
}

// ---------------------------------------------------------------------------
// Losses
// ---------------------------------------------------------------------------

double softmax_nll(std::span<const double> logits, std::size_t target) {
  if (target >= logits.size())
    throw std::invalid_argument("softmax_nll: target out of range");
  return log_sum_exp(logits) - logits[target];
}

std::vector<double> contrastive_loss(const SimilarityMatrix& sim, double tau,
                                     Direction dir) {
  check_tau(tau);
  const std::size_t b = sim.batch_size();
  std::vector<double> losses(b);
  std::vector<double> z(b);
  for (std::size_t i = 0; i < b; ++i) {
    for (std::size_t j = 0; j < b; ++j) z[j] = pair_entry(sim.s, i, j, dir) / tau;
    losses[i] = softmax_nll(z, i);
  }
  return losses;
}

std::vector<double> angular_logits(const AngleMatrix& angles, double mu,
                                   double tau, std::size_t i, Direction dir) {
  check_tau(tau);
  check_mu(mu);
  const std::size_t b = angles.batch_size();
  if (i >= b) throw std::invalid_argument("angular_logits: index out of range");
  std::vector<double> z(b);
  for (std::size_t j = 0; j < b; ++j)
    z[j] = std::cos(pair_entry(angles.lambda, i, j, dir)) / tau;
  // Margined positive only below/at pi/2; the else case keeps the plain
  // cos(lambda_ii)/tau already in z[i], the exact contrastive path.
  const double lam = angles.lambda.at(i, i);
  if (lam <= kHalfPi) z[i] = std::cos(std::max(lam - mu, 0.0)) / tau;
  return z;
}

std::vector<double> angular_margin_loss(const AngleMatrix& angles, double mu,
                                        double tau, Direction dir) {
  const std::size_t b = angles.batch_size();
  std::vector<double> losses(b);
  for (std::size_t i = 0; i < b; ++i)
    losses[i] = softmax_nll(angular_logits(angles, mu, tau, i, dir), i);
  return losses;
}

double angular_loss_grad(const AngleMatrix& angles, double mu, double tau,
                         std::size_t i, Direction dir) {
  const std::vector<double> z = angular_logits(angles, mu, tau, i, dir);
  const double lam = angles.lambda.at(i, i);
  const double m_eff = lam <= kHalfPi ? std::max(lam - mu, 0.0) : lam;
  // d/dlambda_ii [LSE(z) - z_i] = -sin(m_eff)/tau * (p_i - 1).
  const double p_i = std::exp(z[i] - log_sum_exp(z));
  return std::sin(m_eff) / tau * (1.0 - p_i);
}

double gradient_ratio(const AngleMatrix& angles, double mu, double tau,
                      std::size_t i, Direction dir) {
  check_tau(tau);
  check_mu(mu);
  const std::size_t b = angles.batch_size();
  if (i >= b) throw std::invalid_argument("gradient_ratio: index out of range");
  const double lam = angles.lambda.at(i, i);
  if (!(lam > 0.0) || !(lam <= kHalfPi))
    throw std::invalid_argument("gradient_ratio: lambda_ii must lie in (0, pi/2], got " +
                                std::to_string(lam));
  std::vector<double> z_plain(b);
  for (std::size_t j = 0; j < b; ++j)
    z_plain[j] = std::cos(pair_entry(angles.lambda, i, j, dir)) / tau;
  const double m_eff = std::max(lam - mu, 0.0);
  std::vector<double> z_margin = z_plain;
  z_margin[i] = std::cos(m_eff) / tau;
  // ratio = sin(m_eff)/sin(lam) * sum(exp(plain)) / sum(exp(margined)),
  // evaluated through stable log-sum-exps. Both factors are <= 1.
  return std::sin(m_eff) / std::sin(lam) *
         std::exp(log_sum_exp(z_plain) - log_sum_exp(z_margin));
}

double cross_entropy(std::span<const double> log_likelihoods,
                     std::size_t target) {
  if (log_likelihoods.empty())
    throw std::invalid_argument("cross_entropy: empty log-likelihood vector");
  if (target >= log_likelihoods.size())
    throw std::invalid_argument("cross_entropy: target out of range");
  const double lse = log_sum_exp(log_likelihoods);
  if (std::abs(std::expm1(lse)) > 1e-9)
    throw std::invalid_argument("cross_entropy: log-likelihoods not normalized (sum exp = " +
                                std::to_string(std::exp(lse)) + ")");
  return -log_likelihoods[target];
}

LossBreakdown combined_loss(const SimilarityMatrix& sim,
                            const std::vector<int>* labels,
                            const Matrix* fusion_log_likelihoods,
                            const MarginSchedule& sched, std::size_t k,
                            double tau, double eta) {
  return combined_loss_at_margin(sim, labels, fusion_log_likelihoods,
                                 margin_at(sched, k), tau, eta);
}

LossBreakdown combined_loss_at_margin(const SimilarityMatrix& sim,
                                      const std::vector<int>* labels,
                                      const Matrix* fusion_log_likelihoods,
                                      double mu, double tau, double eta) {
  const std::size_t b = sim.batch_size();
  bool any_label = false;
  if (labels != nullptr) {
    if (labels->size() != b)
      throw std::invalid_argument("combined_loss: labels size mismatch");
    for (int y : *labels) any_label |= y >= 0;
  }
  if (any_label && fusion_log_likelihoods == nullptr)
    throw std::invalid_argument("combined_loss: labels present but fusion log-likelihoods missing");
  if (fusion_log_likelihoods != nullptr && fusion_log_likelihoods->rows != b)
    throw std::invalid_argument("combined_loss: fusion log-likelihood batch mismatch");

  const AngleMatrix angles = AngleMatrix::from_similarity(sim);

  LossBreakdown out;
  out.eta = eta;
  out.v2t = angular_margin_loss(angles, mu, tau, Direction::v2t);
  out.t2v = angular_margin_loss(angles, mu, tau, Direction::t2v);
  out.ce.assign(b, 0.0);
  out.per_sample.resize(b);
  for (std::size_t i = 0; i < b; ++i) {
    double ce_term = 0.0;
    if (labels != nullptr && (*labels)[i] >= 0) {
      const auto y = static_cast<std::size_t>((*labels)[i]);
      if (y >= fusion_log_likelihoods->cols)
        throw std::invalid_argument("combined_loss: label out of range at row " + std::to_string(i));
      out.ce[i] = cross_entropy(fusion_log_likelihoods->row(i), y);
      ce_term = eta * out.ce[i];
    }
    out.per_sample[i] = out.v2t[i] + out.t2v[i] + ce_term;
  }
  return out;
}

}  // namespace vlrep
