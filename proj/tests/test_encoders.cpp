#include <doctest.h>

#include <cmath>
#include <numbers>
#include <vector>

#include "oracles.hpp"
#include "vlrep/encoders.hpp"
#include "vlrep/numerics.hpp"
#include "vlrep/objectives.hpp"

using namespace vlrep;

namespace {

EncoderShapes toy_shapes() {
  EncoderShapes s;
  s.d_video = 3;
  s.d_text = 3;
  s.d_hidden = 4;
  s.d_embed = 3;
  s.n_classes = 3;
  return s;
}

// Square identity towers: relu passes positive inputs through unchanged, so
// the embedding is exactly x / |x|.
EncoderParams identity_params(std::size_t d, std::size_t n_classes) {
  EncoderParams p;
  auto eye = [&](std::size_t n) {
    Matrix m(n, n);
    for (std::size_t i = 0; i < n; ++i) m.at(i, i) = 1.0;
    return m;
  };
  p.video.l1.w = eye(d);
  p.video.l1.b.assign(d, 0.0);
  p.video.l2.w = eye(d);
  p.video.l2.b.assign(d, 0.0);
  p.text = p.video;
  p.fusion.w = Matrix(n_classes, 2 * d);
  p.fusion.b.assign(n_classes, 0.0);
  return p;
}

}  // namespace

// ---------------------------------------------------------------------------
// Forward pass
// ---------------------------------------------------------------------------

TEST_CASE("identity towers normalize positive inputs in place") {
  const EncoderParams p = identity_params(3, 2);
  Matrix video(2, 3);
  video.data = {3.0, 4.0, 0.0, 1.0, 2.0, 2.0};
  Matrix text(2, 3);
  text.data = {1.0, 0.0, 0.0, 0.5, 0.5, 0.5};
  const EmbeddingBatch emb = encode(p, video, text);
  CHECK(emb.video.at(0, 0) == doctest::Approx(0.6).epsilon(1e-15));
  CHECK(emb.video.at(0, 1) == doctest::Approx(0.8).epsilon(1e-15));
  CHECK(emb.video.at(0, 2) == 0.0);
  CHECK(emb.video.at(1, 0) == doctest::Approx(1.0 / 3.0).epsilon(1e-15));
  CHECK(emb.text.at(0, 0) == 1.0);
  for (std::size_t r = 0; r < 2; ++r) {
    CHECK(std::fabs(l2_norm(emb.video.row(r)) - 1.0) < 1e-12);
    CHECK(std::fabs(l2_norm(emb.text.row(r)) - 1.0) < 1e-12);
  }
}

TEST_CASE("embeddings have unit rows on random draws") {
  Rng rng(21);
  const EncoderShapes s = toy_shapes();
  for (int trial = 0; trial < 20; ++trial) {
    const EncoderParams p = EncoderParams::init(s, rng);
    const Matrix video = rng.matrix_normal(4, s.d_video);
    const Matrix text = rng.matrix_normal(4, s.d_text);
    const EmbeddingBatch emb = encode(p, video, text);
    for (std::size_t r = 0; r < 4; ++r) {
      CHECK(std::fabs(l2_norm(emb.video.row(r)) - 1.0) < 1e-9);
      CHECK(std::fabs(l2_norm(emb.text.row(r)) - 1.0) < 1e-9);
    }
  }
}

TEST_CASE("encode matches the straight-line oracle row by row") {
  Rng rng(22);
  EncoderShapes s;
  s.d_video = 5;
  s.d_text = 4;
  s.d_hidden = 7;
  s.d_embed = 6;
  s.n_classes = 3;
  for (int trial = 0; trial < 10; ++trial) {
    const EncoderParams p = EncoderParams::init(s, rng);
    const Matrix video = rng.matrix_normal(3, s.d_video);
    const Matrix text = rng.matrix_normal(3, s.d_text);
    const EmbeddingBatch emb = encode(p, video, text);
    for (std::size_t r = 0; r < 3; ++r) {
      auto vrow = video.row(r);
      const auto v_want = testing::oracle_encode_row(p.video, {vrow.begin(), vrow.end()});
      auto trow = text.row(r);
      const auto t_want = testing::oracle_encode_row(p.text, {trow.begin(), trow.end()});
      for (std::size_t c = 0; c < s.d_embed; ++c) {
        CHECK(std::fabs(emb.video.at(r, c) - v_want[c]) < 1e-13);
        CHECK(std::fabs(emb.text.at(r, c) - t_want[c]) < 1e-13);
      }
    }
  }
}

TEST_CASE("degenerate pre-normalization rows are reported by row and tower") {
  EncoderParams p = identity_params(3, 2);
  // Zero the video output layer entirely: every pre-normalization row is 0.
  p.video.l2.w = Matrix(3, 3);
  p.video.l2.b.assign(3, 0.0);
  Matrix video(2, 3, 1.0);
  Matrix text(2, 3, 1.0);
  CHECK_THROWS_WITH_AS(encode(p, video, text), doctest::Contains("video"), std::runtime_error);
  CHECK_THROWS_WITH_AS(encode(p, video, text), doctest::Contains("row 0"), std::runtime_error);
}

TEST_CASE("encode validates input shapes") {
  Rng rng(23);
  const EncoderParams p = EncoderParams::init(toy_shapes(), rng);
  CHECK_THROWS_AS(encode(p, Matrix(2, 5, 1.0), Matrix(2, 3, 1.0)), std::invalid_argument);
  CHECK_THROWS_AS(encode(p, Matrix(2, 3, 1.0), Matrix(3, 3, 1.0)), std::invalid_argument);
}

// ---------------------------------------------------------------------------
// Scale invariance of the normalized embedding
// ---------------------------------------------------------------------------

TEST_CASE("scaling the output layers by a power of two leaves embeddings bit-identical") {
  Rng rng(24);
  const EncoderShapes s = toy_shapes();
  EncoderParams p = EncoderParams::init(s, rng);
  const Matrix video = rng.matrix_normal(4, s.d_video);
  const Matrix text = rng.matrix_normal(4, s.d_text);
  const EmbeddingBatch base = encode(p, video, text);

  EncoderParams scaled = p;
  for (double& v : scaled.video.l2.w.data) v *= 4.0;
  for (double& v : scaled.video.l2.b) v *= 4.0;
  for (double& v : scaled.text.l2.w.data) v *= 4.0;
  for (double& v : scaled.text.l2.b) v *= 4.0;
  const EmbeddingBatch same = encode(scaled, video, text);
  CHECK(testing::bitwise_equal(same.video.data, base.video.data));
  CHECK(testing::bitwise_equal(same.text.data, base.text.data));
}

TEST_CASE("scaling the output layers by any positive factor preserves embeddings") {
  Rng rng(25);
  const EncoderShapes s = toy_shapes();
  EncoderParams p = EncoderParams::init(s, rng);
  const Matrix video = rng.matrix_normal(4, s.d_video);
  const Matrix text = rng.matrix_normal(4, s.d_text);
  const EmbeddingBatch base = encode(p, video, text);

  for (double c : {3.0, 0.017, 250.0}) {
    EncoderParams scaled = p;
    for (double& v : scaled.video.l2.w.data) v *= c;
    for (double& v : scaled.video.l2.b) v *= c;
    for (double& v : scaled.text.l2.w.data) v *= c;
    for (double& v : scaled.text.l2.b) v *= c;
    const EmbeddingBatch same = encode(scaled, video, text);
    CHECK(testing::max_abs_diff(same.video.data, base.video.data) < 1e-9);
    CHECK(testing::max_abs_diff(same.text.data, base.text.data) < 1e-9);
  }
}

// ---------------------------------------------------------------------------
// Similarity
// ---------------------------------------------------------------------------

TEST_CASE("similarity of exact basis embeddings is the identity matrix") {
  EmbeddingBatch emb;
  emb.video = Matrix(2, 3);
  emb.video.at(0, 0) = 1.0;
  emb.video.at(1, 1) = 1.0;
  emb.text = emb.video;
  const SimilarityMatrix sim = similarity(emb);
  CHECK(sim.s.at(0, 0) == 1.0);
  CHECK(sim.s.at(1, 1) == 1.0);
  CHECK(sim.s.at(0, 1) == 0.0);
  CHECK(sim.s.at(1, 0) == 0.0);
  // Orthogonal pairs land at exactly pi/2 after arccos.
  const AngleMatrix ang = AngleMatrix::from_similarity(sim);
  CHECK(ang.lambda.at(0, 1) == std::acos(0.0));
  // The diagonal sits in the arccos clamp region.
  CHECK(ang.lambda.at(0, 0) == doctest::Approx(std::sqrt(2e-12)).epsilon(1e-3));
}

TEST_CASE("similarity equals a brute-force clamped dot product") {
  Rng rng(26);
  const EncoderShapes s = toy_shapes();
  const EncoderParams p = EncoderParams::init(s, rng);
  const Matrix video = rng.matrix_normal(5, s.d_video);
  const Matrix text = rng.matrix_normal(5, s.d_text);
  const EmbeddingBatch emb = encode(p, video, text);
  const SimilarityMatrix sim = similarity(emb);
  for (std::size_t i = 0; i < 5; ++i) {
    for (std::size_t j = 0; j < 5; ++j) {
      double acc = 0.0;
      for (std::size_t k = 0; k < s.d_embed; ++k) acc += emb.video.at(i, k) * emb.text.at(j, k);
      acc = std::clamp(acc, -1.0, 1.0);
      CHECK(sim.s.at(i, j) == acc);
    }
  }
}

TEST_CASE("swapping the two embedding sides transposes the similarity matrix") {
  Rng rng(27);
  const EncoderShapes s = toy_shapes();
  const EncoderParams p = EncoderParams::init(s, rng);
  const Matrix video = rng.matrix_normal(4, s.d_video);
  const Matrix text = rng.matrix_normal(4, s.d_text);
  const EmbeddingBatch emb = encode(p, video, text);
  const SimilarityMatrix fwd = similarity(emb);
  EmbeddingBatch swapped;
  swapped.video = emb.text;
  swapped.text = emb.video;
  const SimilarityMatrix rev = similarity(swapped);
  const Matrix rev_t = transpose(rev.s);
  CHECK(testing::bitwise_equal(fwd.s.data, rev_t.data));
}

TEST_CASE("similarity rejects non-unit rows") {
  EmbeddingBatch emb;
  emb.video = Matrix(2, 3, 0.7);
  emb.text = Matrix(2, 3, 0.7);
  CHECK_THROWS_AS(similarity(emb), std::invalid_argument);
  emb.video = Matrix(2, 3);
  emb.video.at(0, 0) = 1.0;
  emb.video.at(1, 0) = 1.0;
  emb.text = Matrix(3, 3);
  CHECK_THROWS_AS(similarity(emb), std::invalid_argument);
}

// ---------------------------------------------------------------------------
// Fusion head
// ---------------------------------------------------------------------------

TEST_CASE("zero fusion head yields exactly uniform log-likelihoods") {
  const std::size_t c = 5;
  EncoderParams p = identity_params(3, c);
  Matrix video(2, 3, 1.0);
  Matrix text(2, 3, 2.0);
  const EmbeddingBatch emb = encode(p, video, text);
  const Matrix llh = fusion_log_likelihood_matrix(p, emb);
  REQUIRE(llh.rows == 2);
  REQUIRE(llh.cols == c);
  for (double v : llh.data) CHECK(v == -std::log(static_cast<double>(c)));
}

TEST_CASE("fusion log-likelihood rows are normalized within 1e-9") {
  Rng rng(28);
  const EncoderShapes s = toy_shapes();
  for (int trial = 0; trial < 20; ++trial) {
    const EncoderParams p = EncoderParams::init(s, rng);
    const EmbeddingBatch emb =
        encode(p, rng.matrix_normal(4, s.d_video), rng.matrix_normal(4, s.d_text));
    const Matrix llh = fusion_log_likelihood_matrix(p, emb);
    for (std::size_t r = 0; r < llh.rows; ++r) {
      double sum = 0.0;
      for (std::size_t c = 0; c < llh.cols; ++c) sum += std::exp(llh.at(r, c));
      CHECK(std::fabs(sum - 1.0) < 1e-9);
    }
  }
}

TEST_CASE("fusion head matches a long-double softmax oracle") {
  Rng rng(29);
  const EncoderShapes s = toy_shapes();
  const EncoderParams p = EncoderParams::init(s, rng);
  const EmbeddingBatch emb =
      encode(p, rng.matrix_normal(3, s.d_video), rng.matrix_normal(3, s.d_text));
  const Matrix llh = fusion_log_likelihood_matrix(p, emb);
  for (std::size_t i = 0; i < 3; ++i) {
    std::vector<long double> u(s.n_classes);
    for (std::size_t c = 0; c < s.n_classes; ++c) {
      long double acc = p.fusion.b[c];
      for (std::size_t k = 0; k < s.d_embed; ++k) {
        acc += static_cast<long double>(p.fusion.w.at(c, k)) * emb.video.at(i, k);
        acc += static_cast<long double>(p.fusion.w.at(c, s.d_embed + k)) * emb.text.at(i, k);
      }
      u[c] = acc;
    }
    long double sum = 0.0L;
    for (long double v : u) sum += std::exp(v);
    const long double lse = std::log(sum);
    for (std::size_t c = 0; c < s.n_classes; ++c) {
      CHECK(std::fabs(llh.at(i, c) - static_cast<double>(u[c] - lse)) < 1e-12);
    }
  }
  // Row accessor agrees with the matrix form.
  const auto row1 = fusion_log_likelihoods(p, emb, 1);
  for (std::size_t c = 0; c < s.n_classes; ++c) CHECK(row1[c] == llh.at(1, c));
  CHECK_THROWS_AS(fusion_log_likelihoods(p, emb, 9), std::invalid_argument);
}

// ---------------------------------------------------------------------------
// Parameter plumbing
// ---------------------------------------------------------------------------

TEST_CASE("flatten and from_flat round trip bit for bit") {
  Rng rng(30);
  const EncoderShapes s = toy_shapes();
  const EncoderParams p = EncoderParams::init(s, rng);
  const std::vector<double> flat = p.flatten();
  CHECK(flat.size() == p.param_count());
  const EncoderParams back = EncoderParams::from_flat(flat, s);
  CHECK(testing::bitwise_equal(back.flatten(), flat));
  std::vector<double> wrong(flat.begin(), flat.end() - 1);
  CHECK_THROWS_AS(EncoderParams::from_flat(wrong, s), std::invalid_argument);
}

TEST_CASE("init respects the fan-in bound per layer and is seed-deterministic") {
  Rng rng(31);
  EncoderShapes s;
  s.d_video = 9;
  s.d_text = 4;
  s.d_hidden = 16;
  s.d_embed = 8;
  s.n_classes = 5;
  const EncoderParams p = EncoderParams::init(s, rng);
  auto check_layer = [](const AffineParams& a) {
    const double bound = 1.0 / std::sqrt(static_cast<double>(a.in_dim()));
    for (double v : a.w.data) {
      CHECK(v >= -bound);
      CHECK(v < bound);
    }
    for (double v : a.b) {
      CHECK(v >= -bound);
      CHECK(v < bound);
    }
  };
  check_layer(p.video.l1);
  check_layer(p.video.l2);
  check_layer(p.text.l1);
  check_layer(p.text.l2);
  check_layer(p.fusion);

  Rng rng2(31);
  const EncoderParams q = EncoderParams::init(s, rng2);
  CHECK(testing::bitwise_equal(p.flatten(), q.flatten()));
  CHECK(p.shapes().d_video == 9);
  CHECK(p.shapes().n_classes == 5);
}

TEST_CASE("parameter and batch validation") {
  Rng rng(32);
  EncoderParams p = EncoderParams::init(toy_shapes(), rng);
  CHECK_NOTHROW(p.validate());
  p.fusion.w = Matrix(3, 5);  // wrong input width
  CHECK_THROWS_AS(p.validate(), std::invalid_argument);

  Batch b;
  b.video = Matrix(2, 3, 1.0);
  b.text = Matrix(3, 3, 1.0);
  CHECK_THROWS_AS(b.validate(), std::invalid_argument);
  b.text = Matrix(2, 3, 1.0);
  CHECK_NOTHROW(b.validate());
  b.labels = {1};
  CHECK_THROWS_AS(b.validate(), std::invalid_argument);
  b.labels = {1, -1};
  CHECK_NOTHROW(b.validate());
  CHECK(b.any_label());
  b.labels = {-1, -1};
  CHECK_FALSE(b.any_label());
  b.labels.clear();
  CHECK_FALSE(b.any_label());
  b.video.at(0, 0) = std::nan("");
  CHECK_THROWS_AS(b.validate(), std::invalid_argument);
}

// ---------------------------------------------------------------------------
// Per-sample gradients
// ---------------------------------------------------------------------------

TEST_CASE("per-sample gradients sum to the whole-batch gradient") {
  Rng rng(33);
  const EncoderShapes s = toy_shapes();
  for (int trial = 0; trial < 20; ++trial) {
    const EncoderParams p = EncoderParams::init(s, rng);
    const Batch batch = testing::random_batch(rng, 4, s.d_video, s.d_text, s.n_classes, 0.6);
    const double mu = rng.uniform(0.0, 0.4);
    const double tau = 0.5 + 0.5 * rng.uniform();
    const double eta = trial % 2 == 0 ? 1.0 : 0.3;

    const PerSampleGrads per = per_sample_loss_and_grads(p, batch, mu, tau, eta);
    const auto oracle = testing::oracle_batch_grad(p, batch, mu, tau, eta);

    double loss_sum = 0.0;
    for (double l : per.losses.per_sample) loss_sum += l;
    CHECK(std::fabs(loss_sum - oracle.total_loss) <= 1e-10 * std::max(1.0, oracle.total_loss));

    std::vector<double> grad_sum(p.param_count(), 0.0);
    for (const auto& g : per.grads) axpy(1.0, g, grad_sum);
    CHECK(testing::max_rel_diff(grad_sum, oracle.grad) < 1e-10);
  }
}

TEST_CASE("per-sample losses match the combined objective exactly") {
  Rng rng(34);
  const EncoderShapes s = toy_shapes();
  const EncoderParams p = EncoderParams::init(s, rng);
  const Batch batch = testing::random_batch(rng, 5, s.d_video, s.d_text, s.n_classes, 0.5);
  const double mu = 0.15, tau = 0.7, eta = 0.9;
  const PerSampleGrads per = per_sample_loss_and_grads(p, batch, mu, tau, eta);

  const EmbeddingBatch emb = encode(p, batch.video, batch.text);
  const SimilarityMatrix sim = similarity(emb);
  const Matrix llh = fusion_log_likelihood_matrix(p, emb);
  const LossBreakdown direct =
      combined_loss_at_margin(sim, &batch.labels, &llh, mu, tau, eta);
  CHECK(testing::bitwise_equal(per.losses.per_sample, direct.per_sample));
  CHECK(testing::bitwise_equal(per.losses.v2t, direct.v2t));
  CHECK(testing::bitwise_equal(per.losses.t2v, direct.t2v));
  CHECK(testing::bitwise_equal(per.losses.ce, direct.ce));
}

TEST_CASE("per-sample gradients match finite differences") {
  Rng rng(35);
  const EncoderShapes s = toy_shapes();
  int checked = 0;
  while (checked < 10) {
    const EncoderParams p = EncoderParams::init(s, rng);
    Batch batch = testing::random_batch(rng, 3, s.d_video, s.d_text, s.n_classes, 0.5);
    const double tau = checked % 2 == 0 ? 0.5 : 1.0;
    const double mu = rng.uniform(0.0, 0.5);
    const double eta = 1.0;

    // Skip draws near any non-differentiable kink: relu pre-activations,
    // similarity clamp, margin hinge, branch boundary at pi/2.
    bool near_kink = false;
    const EmbeddingBatch emb = encode(p, batch.video, batch.text);
    const SimilarityMatrix sim = similarity(emb);
    for (double v : sim.s.data)
      if (std::fabs(v) > 0.99) near_kink = true;
    for (std::size_t i = 0; i < batch.size() && !near_kink; ++i) {
      const double lam = safe_arccos(sim.s.at(i, i));
      if (std::fabs(lam - mu) < 1e-3) near_kink = true;
      if (std::fabs(lam - std::numbers::pi / 2.0) < 1e-3) near_kink = true;
    }
    if (near_kink) continue;

    const PerSampleGrads per = per_sample_loss_and_grads(p, batch, mu, tau, eta);
    const std::size_t j = rng.below(batch.size());
    const std::vector<double> flat = p.flatten();
    auto f = [&](std::span<const double> x) {
      const EncoderParams probe = EncoderParams::from_flat(x, s);
      return per_sample_loss_and_grads(probe, batch, mu, tau, eta).losses.per_sample[j];
    };
    const std::vector<double> fd = finite_diff_grad(f, flat, 1e-6);
    for (std::size_t k = 0; k < fd.size(); ++k) {
      CHECK(std::fabs(fd[k] - per.grads[j][k]) <= 1e-7 + 1e-5 * std::fabs(per.grads[j][k]));
    }
    ++checked;
  }
}

TEST_CASE("gradients are margin-independent when every positive sits below both margins") {
  Rng rng(36);
  const EncoderShapes s = toy_shapes();
  EncoderParams p = EncoderParams::init(s, rng);
  p.text = p.video;  // identical towers
  Batch batch;
  batch.video = rng.matrix_normal(3, s.d_video);
  batch.text = batch.video;  // identical features: diagonal angles ~ 0
  batch.labels = {0, 1, 2};
  const PerSampleGrads a = per_sample_loss_and_grads(p, batch, 0.5, 0.8, 1.0);
  const PerSampleGrads b = per_sample_loss_and_grads(p, batch, 0.3, 0.8, 1.0);
  CHECK(testing::bitwise_equal(a.losses.per_sample, b.losses.per_sample));
  REQUIRE(a.grads.size() == b.grads.size());
  for (std::size_t j = 0; j < a.grads.size(); ++j) {
    CHECK(testing::bitwise_equal(a.grads[j], b.grads[j]));
  }
}
