#pragma once

#include <cstddef>
#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "vlrep/encoders.hpp"
#include "vlrep/metaopt.hpp"
#include "vlrep/numerics.hpp"

namespace vlrep {

enum class Split { train, meta, test };

// Controls the synthetic paired-feature generator. Each sample draws a
// latent z from its concept's Gaussian; video = A_v z + feature noise and
// text = A_t z + feature noise, with extra misalignment noise added to the
// text side of training samples only.
struct SyntheticDatasetSpec {
  std::size_t n_concepts = 10;
  // Explicit concept probabilities; empty means Zipf(zipf_exponent) over
  // n_concepts ranks.
  std::vector<double> concept_distribution;
  double zipf_exponent = 1.2;
  std::size_t n_train = 2000;
  std::size_t n_meta = 100;  // must be divisible by n_concepts
  std::size_t n_test = 500;
  std::size_t d_latent = 8;
  std::size_t d_video = 16;
  std::size_t d_text = 16;
  double misalign_sigma = 0.0;
  double label_fraction = 1.0;  // share of train samples carrying labels
  double concept_spread = 2.0;  // stddev of concept means
  double latent_noise = 0.5;    // within-concept latent stddev
  double feat_noise = 0.02;     // additive feature noise stddev
  bool share_projections = false;  // A_t = A_v (requires d_video == d_text)
  std::uint64_t seed = 1;

  void validate() const;
  // Resolved concept probabilities (explicit vector or Zipf), summing to 1.
  std::vector<double> distribution() const;
};

// Row layout: train samples first, then meta, then test. Train concepts are
// drawn from the concept distribution; meta and test are exactly balanced
// round-robin. Meta and test rows are always labeled and carry no
// misalignment noise.
struct Dataset {
  SyntheticDatasetSpec spec;
  Matrix video_feats;
  Matrix text_feats;
  std::vector<int> labels;   // -1 where unlabeled
  std::vector<int> concept_id;  // generator ground truth, always present
  std::vector<Split> split;

  std::size_t size() const { return video_feats.rows; }
  std::size_t count(Split s) const;
  Batch batch_for(Split s) const;
  std::vector<int> concepts_for(Split s) const;
  void validate() const;
};

Dataset generate(const SyntheticDatasetSpec& spec);

// Retrieval recall with index-matched ground truth; ranking ties broken by
// lower gallery index.
struct RecallPair {
  double v2t = 0.0;
  double t2v = 0.0;
};
RecallPair recall_at_k(const EmbeddingBatch& emb, std::size_t k);

struct AccuracyReport {
  double overall = 0.0;
  std::map<int, double> per_concept;
  std::map<int, std::pair<std::size_t, std::size_t>> counts;  // hits, total
};
AccuracyReport accuracy(const std::vector<int>& predictions, const std::vector<int>& labels);

struct ConceptMetrics {
  std::size_t count = 0;
  std::size_t hits_r1_v2t = 0;
  std::size_t hits_r1_t2v = 0;
  std::size_t hits_accuracy = 0;

  double r1_v2t() const { return static_cast<double>(hits_r1_v2t) / static_cast<double>(count); }
  double r1_t2v() const { return static_cast<double>(hits_r1_t2v) / static_cast<double>(count); }
  double acc() const { return static_cast<double>(hits_accuracy) / static_cast<double>(count); }
  // Mean of the two retrieval directions at rank 1.
  double r1_mean() const { return 0.5 * (r1_v2t() + r1_t2v()); }
};

struct RecallSet {
  double r1 = 0.0;
  double r5 = 0.0;
  double r10 = 0.0;
};

struct MetricsReport {
  std::string variant;
  RecallSet v2t;
  RecallSet t2v;
  double accuracy = 0.0;
  std::map<int, ConceptMetrics> per_concept;

  double r1_mean() const { return 0.5 * (v2t.r1 + t2v.r1); }
};

// Test-split metrics of a trained model: retrieval recalls, fusion-head
// accuracy, and per-concept breakdowns.
MetricsReport evaluate(const EncoderParams& params, const Dataset& data,
                       const std::string& variant_name);

// One experiment arm: overrides applied on top of the base TrainConfig.
struct Variant {
  std::string name;
  std::optional<MarginSchedule> sched;
  std::optional<WeightingScheme> scheme;
  std::optional<Strategy> strategy;
  std::optional<std::uint64_t> seed;
};

// Constant-margin schedule (a2 = 0) evaluating to exactly mu at every step.
MarginSchedule fixed_margin_schedule(double mu);

TrainConfig apply_variant(const TrainConfig& base, const Variant& v);

// Trains every variant on the same generated dataset and evaluates each on
// the held-out test split. Variants run concurrently when `parallel`.
std::vector<MetricsReport> run_experiment(const TrainConfig& cfg,
                                          const SyntheticDatasetSpec& spec,
                                          const std::vector<Variant>& variants,
                                          bool parallel = true);

}  // namespace vlrep
