#include "vlrep/harness.hpp"

#include <algorithm>
#include <cmath>
#include <future>
#include <stdexcept>
#include <string>

namespace vlrep {

namespace {

int draw_concept(const std::vector<double>& dist, Rng& rng) {
  const double u = rng.uniform();
  double acc = 0.0;
  for (std::size_t c = 0; c < dist.size(); ++c) {
    acc += dist[c];
    if (u < acc) return static_cast<int>(c);
  }
  return static_cast<int>(dist.size()) - 1;  // guard against rounding shortfall
}

std::vector<double> draw_vector(Rng& rng, std::size_t n, double sigma) {
  std::vector<double> v(n);
  for (double& x : v) x = rng.normal(0.0, sigma);
  return v;
}

// rank of the true pair (gallery index q) among row scores, ties broken by
// lower gallery index.
std::size_t pair_rank(std::span<const double> scores, std::size_t q) {
  std::size_t rank = 1;
  for (std::size_t j = 0; j < scores.size(); ++j) {
    if (scores[j] > scores[q]) ++rank;
    else if (scores[j] == scores[q] && j < q) ++rank;
  }
  return rank;
}

}  // namespace

// ---------------------------------------------------------------------------
// Spec / dataset
// ---------------------------------------------------------------------------

void SyntheticDatasetSpec::validate() const {
  if (n_concepts == 0) throw std::invalid_argument("SyntheticDatasetSpec: need >= 1 concept");
  if (!concept_distribution.empty()) {
    if (concept_distribution.size() != n_concepts)
      throw std::invalid_argument("SyntheticDatasetSpec: distribution length != n_concepts");
    double total = 0.0;
    for (double p : concept_distribution) {
      if (!(p >= 0.0)) throw std::invalid_argument("SyntheticDatasetSpec: negative probability");
      total += p;
    }
    if (std::abs(total - 1.0) > 1e-9)
      throw std::invalid_argument("SyntheticDatasetSpec: probabilities sum to " +
                                  std::to_string(total) + ", expected 1");
  } else if (!(zipf_exponent > 0.0)) {
    throw std::invalid_argument("SyntheticDatasetSpec: zipf_exponent must be > 0");
  }
  if (n_train == 0 || n_meta == 0 || n_test == 0)
    throw std::invalid_argument("SyntheticDatasetSpec: all splits must be nonempty");
  if (n_meta % n_concepts != 0)
    throw std::invalid_argument("SyntheticDatasetSpec: n_meta = " + std::to_string(n_meta) +
                                " not divisible by " + std::to_string(n_concepts) +
                                " concepts; exact balance infeasible");
  if (n_test % n_concepts != 0)
    throw std::invalid_argument("SyntheticDatasetSpec: n_test must be divisible by n_concepts "
                                "(balanced test split)");
  if (d_latent == 0 || d_video == 0 || d_text == 0)
    throw std::invalid_argument("SyntheticDatasetSpec: dimensions must be >= 1");
  if (!(misalign_sigma >= 0.0))
    throw std::invalid_argument("SyntheticDatasetSpec: misalign_sigma must be >= 0");
  if (!(label_fraction >= 0.0 && label_fraction <= 1.0))
    throw std::invalid_argument("SyntheticDatasetSpec: label_fraction outside [0, 1]");
  if (!(concept_spread >= 0.0) || !(latent_noise >= 0.0) || !(feat_noise >= 0.0))
    throw std::invalid_argument("SyntheticDatasetSpec: noise scales must be >= 0");
  if (share_projections && d_video != d_text)
    throw std::invalid_argument("SyntheticDatasetSpec: shared projections need d_video == d_text");
}

std::vector<double> SyntheticDatasetSpec::distribution() const {
  validate();
  if (!concept_distribution.empty()) return concept_distribution;
  std::vector<double> p(n_concepts);
  double total = 0.0;
  for (std::size_t c = 0; c < n_concepts; ++c) {
    p[c] = std::pow(static_cast<double>(c + 1), -zipf_exponent);
    total += p[c];
  }
  for (double& v : p) v /= total;
  return p;
}

std::size_t Dataset::count(Split s) const {
  std::size_t n = 0;
  for (Split x : split) n += x == s ? 1 : 0;
  return n;
}

Batch Dataset::batch_for(Split s) const {
  Batch b;
  const std::size_t n = count(s);
  b.video = Matrix(n, video_feats.cols);
  b.text = Matrix(n, text_feats.cols);
  b.labels.resize(n);
  std::size_t r = 0;
  for (std::size_t i = 0; i < size(); ++i) {
    if (split[i] != s) continue;
    for (std::size_t c = 0; c < video_feats.cols; ++c) b.video.at(r, c) = video_feats.at(i, c);
    for (std::size_t c = 0; c < text_feats.cols; ++c) b.text.at(r, c) = text_feats.at(i, c);
    b.labels[r] = labels[i];
    ++r;
  }
  return b;
}

std::vector<int> Dataset::concepts_for(Split s) const {
  std::vector<int> out;
  for (std::size_t i = 0; i < size(); ++i)
    if (split[i] == s) out.push_back(concept_id[i]);
  return out;
}

void Dataset::validate() const {
  spec.validate();
  const std::size_t n = size();
  if (text_feats.rows != n || labels.size() != n || concept_id.size() != n || split.size() != n)
    throw std::invalid_argument("Dataset: inconsistent row counts");
  // Exact meta balance.
  std::vector<std::size_t> meta_counts(spec.n_concepts, 0);
  for (std::size_t i = 0; i < n; ++i) {
    if (concept_id[i] < 0 || static_cast<std::size_t>(concept_id[i]) >= spec.n_concepts)
      throw std::invalid_argument("Dataset: concept id out of range at row " + std::to_string(i));
    if (split[i] == Split::meta) {
      ++meta_counts[static_cast<std::size_t>(concept_id[i])];
      if (labels[i] != concept_id[i])
        throw std::invalid_argument("Dataset: meta split must be fully labeled");
    }
  }
  const std::size_t per = spec.n_meta / spec.n_concepts;
  for (std::size_t c = 0; c < spec.n_concepts; ++c)
    if (meta_counts[c] != per)
      throw std::invalid_argument("Dataset: meta split unbalanced at concept " + std::to_string(c));
}

Dataset generate(const SyntheticDatasetSpec& spec) {
  spec.validate();
  const std::vector<double> dist = spec.distribution();
  Rng rng(spec.seed);

  // Draw order: concept means, video projection, text projection (skipped
  // when shared), then per sample (split-major: train, meta, test): latent,
  // video noise, text noise, misalignment noise (train only), label coin
  // (train only).
  const Matrix means = rng.matrix_normal(spec.n_concepts, spec.d_latent, 0.0, spec.concept_spread);
  const double proj_sigma = 1.0 / std::sqrt(static_cast<double>(spec.d_latent));
  const Matrix a_v = rng.matrix_normal(spec.d_video, spec.d_latent, 0.0, proj_sigma);
  const Matrix a_t =
      spec.share_projections ? a_v : rng.matrix_normal(spec.d_text, spec.d_latent, 0.0, proj_sigma);

  const std::size_t n = spec.n_train + spec.n_meta + spec.n_test;
  Dataset data;
  data.spec = spec;
  data.video_feats = Matrix(n, spec.d_video);
  data.text_feats = Matrix(n, spec.d_text);
  data.labels.resize(n);
  data.concept_id.resize(n);
  data.split.resize(n);

  std::size_t row = 0;
  for (Split s : {Split::train, Split::meta, Split::test}) {
    const std::size_t count = s == Split::train ? spec.n_train
                              : s == Split::meta ? spec.n_meta
                                                 : spec.n_test;
    for (std::size_t i = 0; i < count; ++i, ++row) {
      const int c = s == Split::train ? draw_concept(dist, rng)
                                      : static_cast<int>(i % spec.n_concepts);
      std::vector<double> z(spec.d_latent);
      for (std::size_t d = 0; d < spec.d_latent; ++d)
        z[d] = means.at(static_cast<std::size_t>(c), d) + rng.normal(0.0, spec.latent_noise);

      const std::vector<double> eps_v = draw_vector(rng, spec.d_video, spec.feat_noise);
      for (std::size_t d = 0; d < spec.d_video; ++d) {
        double acc = eps_v[d];
        for (std::size_t l = 0; l < spec.d_latent; ++l) acc += a_v.at(d, l) * z[l];
        data.video_feats.at(row, d) = acc;
      }
      const std::vector<double> eps_t = draw_vector(rng, spec.d_text, spec.feat_noise);
      for (std::size_t d = 0; d < spec.d_text; ++d) {
        double acc = eps_t[d];
        for (std::size_t l = 0; l < spec.d_latent; ++l) acc += a_t.at(d, l) * z[l];
        data.text_feats.at(row, d) = acc;
      }
      if (s == Split::train) {
        // Misalignment corrupts the text side of training pairs only; the
        // draw happens even at sigma = 0 so the stream is comparable
        // across sigma values.
        const std::vector<double> eta = draw_vector(rng, spec.d_text, 1.0);
        for (std::size_t d = 0; d < spec.d_text; ++d)
          data.text_feats.at(row, d) += spec.misalign_sigma * eta[d];
        data.labels[row] = rng.uniform() < spec.label_fraction ? c : -1;
      } else {
        data.labels[row] = c;
      }
      data.concept_id[row] = c;
      data.split[row] = s;
    }
  }
  data.validate();
  return data;
}

// ---------------------------------------------------------------------------
// Metrics
// ---------------------------------------------------------------------------

RecallPair recall_at_k(const EmbeddingBatch& emb, std::size_t k) {
  const std::size_t n = emb.video.rows;
  if (n == 0 || emb.text.rows != n)
    throw std::invalid_argument("recall_at_k: empty or mismatched embeddings");
  if (k < 1 || k > n)
    throw std::invalid_argument("recall_at_k: k = " + std::to_string(k) +
                                " out of range [1, " + std::to_string(n) + "]");
  const SimilarityMatrix sim = similarity(emb);
  std::size_t hits_v2t = 0;
  std::size_t hits_t2v = 0;
  std::vector<double> col(n);
  for (std::size_t i = 0; i < n; ++i) {
    if (pair_rank(sim.s.row(i), i) <= k) ++hits_v2t;
    for (std::size_t j = 0; j < n; ++j) col[j] = sim.s.at(j, i);
    if (pair_rank(col, i) <= k) ++hits_t2v;
  }
  return {static_cast<double>(hits_v2t) / static_cast<double>(n),
          static_cast<double>(hits_t2v) / static_cast<double>(n)};
}

AccuracyReport accuracy(const std::vector<int>& predictions, const std::vector<int>& labels) {
  if (predictions.size() != labels.size())
    throw std::invalid_argument("accuracy: prediction/label length mismatch");
  if (labels.empty()) throw std::invalid_argument("accuracy: empty inputs");
  AccuracyReport rep;
  std::size_t hits = 0;
  for (std::size_t i = 0; i < labels.size(); ++i) {
    auto& [c_hits, c_total] = rep.counts[labels[i]];
    ++c_total;
    if (predictions[i] == labels[i]) {
      ++c_hits;
      ++hits;
    }
  }
  rep.overall = static_cast<double>(hits) / static_cast<double>(labels.size());
  for (const auto& [c, ht] : rep.counts)
    rep.per_concept[c] = static_cast<double>(ht.first) / static_cast<double>(ht.second);
  return rep;
}

MetricsReport evaluate(const EncoderParams& params, const Dataset& data,
                       const std::string& variant_name) {
  data.validate();
  const Batch test = data.batch_for(Split::test);
  const std::vector<int> concepts = data.concepts_for(Split::test);
  const std::size_t n = test.size();

  const EmbeddingBatch emb = encode(params, test.video, test.text);
  const SimilarityMatrix sim = similarity(emb);
  const Matrix llh = fusion_log_likelihood_matrix(params, emb);

  MetricsReport rep;
  rep.variant = variant_name;

  std::size_t hits[2][3] = {{0, 0, 0}, {0, 0, 0}};  // [direction][k index]
  const std::size_t ks[3] = {1, 5, 10};
  std::size_t acc_hits = 0;
  std::vector<double> col(n);
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t rank_v2t = pair_rank(sim.s.row(i), i);
    for (std::size_t j = 0; j < n; ++j) col[j] = sim.s.at(j, i);
    const std::size_t rank_t2v = pair_rank(col, i);

    // argmax prediction, ties toward the lower class index
    std::size_t pred = 0;
    for (std::size_t c = 1; c < llh.cols; ++c)
      if (llh.at(i, c) > llh.at(i, pred)) pred = c;
    const bool correct = static_cast<int>(pred) == concepts[i];

    for (std::size_t t = 0; t < 3; ++t) {
      if (ks[t] > n)
        throw std::invalid_argument("evaluate: test split smaller than recall rank " +
                                    std::to_string(ks[t]));
      hits[0][t] += rank_v2t <= ks[t] ? 1 : 0;
      hits[1][t] += rank_t2v <= ks[t] ? 1 : 0;
    }
    acc_hits += correct ? 1 : 0;

    ConceptMetrics& cm = rep.per_concept[concepts[i]];
    ++cm.count;
    cm.hits_r1_v2t += rank_v2t <= 1 ? 1 : 0;
    cm.hits_r1_t2v += rank_t2v <= 1 ? 1 : 0;
    cm.hits_accuracy += correct ? 1 : 0;
  }

  const auto frac = [n](std::size_t h) {
    return static_cast<double>(h) / static_cast<double>(n);
  };
  rep.v2t = {frac(hits[0][0]), frac(hits[0][1]), frac(hits[0][2])};
  rep.t2v = {frac(hits[1][0]), frac(hits[1][1]), frac(hits[1][2])};
  rep.accuracy = frac(acc_hits);
  return rep;
}

// ---------------------------------------------------------------------------
// Experiments
// ---------------------------------------------------------------------------

MarginSchedule fixed_margin_schedule(double mu) {
  // a2 = 0 makes mu(k) = a0/(a1+1); with a1 = 1 and a0 = 2*mu the value is
  // exactly mu (scaling by 2 is lossless).
  MarginSchedule sched;
  sched.a0 = 2.0 * mu;
  sched.a1 = 1.0;
  sched.a2 = 0.0;
  sched.validate();
  return sched;
}

TrainConfig apply_variant(const TrainConfig& base, const Variant& v) {
  TrainConfig cfg = base;
  if (v.sched) cfg.sched = *v.sched;
  if (v.scheme) cfg.scheme = *v.scheme;
  if (v.strategy) cfg.strategy = *v.strategy;
  if (v.seed) cfg.seed = *v.seed;
  cfg.validate();
  return cfg;
}

std::vector<MetricsReport> run_experiment(const TrainConfig& cfg,
                                          const SyntheticDatasetSpec& spec,
                                          const std::vector<Variant>& variants,
                                          bool parallel) {
  if (variants.empty()) throw std::invalid_argument("run_experiment: no variants");
  const Dataset data = generate(spec);
  const Batch train_batch = data.batch_for(Split::train);
  const Batch meta_batch = data.batch_for(Split::meta);

  auto run_one = [&](const Variant& v) {
    const TrainConfig vcfg = apply_variant(cfg, v);
    const TrainResult result = train(vcfg, train_batch, meta_batch);
    return evaluate(result.encoder, data, v.name);
  };

  std::vector<MetricsReport> reports;
  reports.reserve(variants.size());
  if (parallel && variants.size() > 1) {
    std::vector<std::future<MetricsReport>> futures;
    futures.reserve(variants.size());
    for (const Variant& v : variants)
      futures.push_back(std::async(std::launch::async, run_one, std::cref(v)));
    for (auto& f : futures) reports.push_back(f.get());
  } else {
    for (const Variant& v : variants) reports.push_back(run_one(v));
  }
  return reports;
}

}  // namespace vlrep
