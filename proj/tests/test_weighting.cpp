#include <doctest.h>

#include <cfloat>
#include <cmath>
#include <limits>
#include <vector>

#include "oracles.hpp"
#include "vlrep/numerics.hpp"
#include "vlrep/weighting.hpp"

using namespace vlrep;

namespace {

WeightNetParams random_weightnet(Rng& rng, std::size_t hidden, double scale = 1.0) {
  WeightNetParams theta;
  theta.w1 = rng.matrix_uniform(hidden, 1, -scale, scale);
  theta.b1.resize(hidden);
  for (double& v : theta.b1) v = rng.uniform(-scale, scale);
  theta.w2 = rng.matrix_uniform(1, hidden, -scale, scale);
  theta.b2 = rng.uniform(-scale, scale);
  return theta;
}

}  // namespace

// ---------------------------------------------------------------------------
// Forward
// ---------------------------------------------------------------------------

TEST_CASE("zero-initialized output layer maps every loss to exactly one half") {
  Rng rng(1);
  const WeightNetParams theta = WeightNetParams::init(100, rng);
  for (double loss : {-3.0, 0.0, 0.5, 10.0, 1e6}) {
    CHECK(weightnet_forward(theta, loss) == 0.5);
  }
}

TEST_CASE("zero input weights make the weight loss-independent") {
  Rng rng(2);
  WeightNetParams theta = random_weightnet(rng, 16);
  for (double& v : theta.w1.data) v = 0.0;
  const double at_zero = weightnet_forward(theta, 0.0);
  for (double loss : {-5.0, 1.0, 2.5, 100.0}) {
    CHECK(weightnet_forward(theta, loss) == at_zero);
  }
}

TEST_CASE("forward matches the straight-line oracle") {
  Rng rng(3);
  for (int trial = 0; trial < 200; ++trial) {
    const std::size_t hidden = 1 + rng.below(40);
    const WeightNetParams theta = random_weightnet(rng, hidden);
    const double loss = rng.uniform(-4.0, 8.0);
    const double got = weightnet_forward(theta, loss);
    const double want = testing::oracle_weightnet(theta, loss);
    CHECK(std::fabs(got - want) <= 1e-15 * std::max(1.0, std::fabs(want)));
    CHECK(got > 0.0);
    CHECK(got < 1.0);
  }
}

TEST_CASE("saturated outputs stay strictly inside the open unit interval") {
  Rng rng(4);
  WeightNetParams theta = random_weightnet(rng, 4);
  theta.b2 = 1000.0;
  const double high = weightnet_forward(theta, 0.0);
  CHECK(high < 1.0);
  CHECK(high == std::nextafter(1.0, 0.0));
  theta.b2 = -1000.0;
  const double low = weightnet_forward(theta, 0.0);
  CHECK(low > 0.0);
  CHECK(low == std::numeric_limits<double>::min());
}

TEST_CASE("negative losses are legal inputs") {
  Rng rng(5);
  const WeightNetParams theta = random_weightnet(rng, 8);
  CHECK_NOTHROW(weightnet_forward(theta, -2.5));
  CHECK_THROWS_AS(weightnet_forward(theta, std::nan("")), std::invalid_argument);
  CHECK_THROWS_AS(weightnet_forward(theta, std::numeric_limits<double>::infinity()),
                  std::invalid_argument);
}

// ---------------------------------------------------------------------------
// Gradients
// ---------------------------------------------------------------------------

TEST_CASE("weightnet gradient db2 equals w(1-w) exactly") {
  Rng rng(6);
  for (int trial = 0; trial < 50; ++trial) {
    const WeightNetParams theta = random_weightnet(rng, 1 + rng.below(20));
    const double loss = rng.uniform(-2.0, 4.0);
    const double w = weightnet_forward(theta, loss);
    const WeightNetParams g = weightnet_grad(theta, loss);
    CHECK(g.b2 == w * (1.0 - w));
  }
}

TEST_CASE("weightnet gradient masks inactive hidden units") {
  Rng rng(7);
  WeightNetParams theta = random_weightnet(rng, 6);
  // Force units 0 and 3 inactive at loss = 2.
  theta.w1.at(0, 0) = -1.0;
  theta.b1[0] = -1.0;
  theta.w1.at(3, 0) = 0.5;
  theta.b1[3] = -2.0;  // pre = 0.5*2 - 2 = -1
  const WeightNetParams g = weightnet_grad(theta, 2.0);
  CHECK(g.w1.at(0, 0) == 0.0);
  CHECK(g.b1[0] == 0.0);
  CHECK(g.w2.at(0, 0) == 0.0);
  CHECK(g.w1.at(3, 0) == 0.0);
  CHECK(g.b1[3] == 0.0);
  CHECK(g.w2.at(0, 3) == 0.0);
}

TEST_CASE("relu subgradient at an exact kink is zero") {
  WeightNetParams theta;
  theta.w1 = Matrix(1, 1, 1.0);
  theta.b1 = {-2.0};  // pre = loss - 2 == 0 at loss = 2
  theta.w2 = Matrix(1, 1, 3.0);
  theta.b2 = 0.1;
  const WeightNetParams g = weightnet_grad(theta, 2.0);
  CHECK(g.w1.at(0, 0) == 0.0);
  CHECK(g.b1[0] == 0.0);
  CHECK(g.w2.at(0, 0) == 0.0);
  CHECK(g.b2 > 0.0);
  CHECK(weightnet_loss_grad(theta, 2.0) == 0.0);
}

TEST_CASE("weightnet gradient matches finite differences on a thousand random pairs") {
  Rng rng(8);
  const double h = 1e-6;
  int checked = 0;
  while (checked < 1000) {
    const std::size_t hidden = 1 + rng.below(20);
    const WeightNetParams theta = random_weightnet(rng, hidden);
    const double loss = rng.uniform(-2.0, 4.0);
    // Skip draws sitting on a relu kink; the subgradient convention there is
    // deliberate, not differentiable.
    bool near_kink = false;
    for (std::size_t j = 0; j < hidden; ++j) {
      if (std::fabs(theta.w1.at(j, 0) * loss + theta.b1[j]) < 1e-3) near_kink = true;
    }
    if (near_kink) continue;

    const std::vector<double> flat = theta.flatten();
    auto f = [&](std::span<const double> x) {
      return weightnet_forward(WeightNetParams::from_flat(x, hidden), loss);
    };
    const std::vector<double> fd = finite_diff_grad(f, flat, h);
    const std::vector<double> cf = weightnet_grad(theta, loss).flatten();
    REQUIRE(fd.size() == cf.size());
    for (std::size_t k = 0; k < fd.size(); ++k) {
      CHECK(std::fabs(fd[k] - cf[k]) <= 1e-6 * std::max(1.0, std::fabs(cf[k])));
    }
    ++checked;
  }
}

TEST_CASE("weightnet loss gradient matches scalar finite differences") {
  Rng rng(9);
  int checked = 0;
  while (checked < 200) {
    const std::size_t hidden = 1 + rng.below(12);
    const WeightNetParams theta = random_weightnet(rng, hidden);
    const double loss = rng.uniform(-2.0, 4.0);
    bool near_kink = false;
    for (std::size_t j = 0; j < hidden; ++j) {
      if (std::fabs(theta.w1.at(j, 0) * loss + theta.b1[j]) < 1e-3) near_kink = true;
    }
    if (near_kink) continue;
    const double h = 1e-6;
    const double fd =
        (weightnet_forward(theta, loss + h) - weightnet_forward(theta, loss - h)) / (2.0 * h);
    const double cf = weightnet_loss_grad(theta, loss);
    CHECK(std::fabs(fd - cf) <= 1e-6 * std::max(1.0, std::fabs(cf)));
    ++checked;
  }
}

// ---------------------------------------------------------------------------
// Parameter plumbing
// ---------------------------------------------------------------------------

TEST_CASE("init draws the hidden layer within one over sqrt hidden and zeroes the head") {
  Rng rng(10);
  const std::size_t hidden = 100;
  const WeightNetParams theta = WeightNetParams::init(hidden, rng);
  const double bound = 1.0 / std::sqrt(100.0);
  for (double v : theta.w1.data) {
    CHECK(v >= -bound);
    CHECK(v < bound);
  }
  for (double v : theta.b1) {
    CHECK(v >= -bound);
    CHECK(v < bound);
  }
  for (double v : theta.w2.data) CHECK(v == 0.0);
  CHECK(theta.b2 == 0.0);
  CHECK(theta.param_count() == 301);
  CHECK_THROWS_AS(WeightNetParams::init(0, rng), std::invalid_argument);
}

TEST_CASE("flatten and from_flat round trip bit for bit") {
  Rng rng(11);
  const WeightNetParams theta = random_weightnet(rng, 17);
  const std::vector<double> flat = theta.flatten();
  REQUIRE(flat.size() == 3 * 17 + 1);
  const WeightNetParams back = WeightNetParams::from_flat(flat, 17);
  CHECK(testing::bitwise_equal(back.flatten(), flat));
  CHECK(back.b2 == theta.b2);
  std::vector<double> wrong(flat.begin(), flat.end() - 1);
  CHECK_THROWS_AS(WeightNetParams::from_flat(wrong, 17), std::invalid_argument);
  CHECK_THROWS_AS(WeightNetParams::from_flat(flat, 0), std::invalid_argument);
}

TEST_CASE("validate rejects malformed parameters") {
  Rng rng(12);
  WeightNetParams theta = random_weightnet(rng, 4);
  CHECK_NOTHROW(theta.validate());
  theta.b2 = std::nan("");
  CHECK_THROWS_AS(theta.validate(), std::invalid_argument);
  theta = random_weightnet(rng, 4);
  theta.w2 = Matrix(2, 4);
  CHECK_THROWS_AS(theta.validate(), std::invalid_argument);
  theta = random_weightnet(rng, 4);
  theta.b1.pop_back();
  CHECK_THROWS_AS(theta.validate(), std::invalid_argument);
}

// ---------------------------------------------------------------------------
// Baseline schemes
// ---------------------------------------------------------------------------

TEST_CASE("focal weight spans the unit interval and grows with the loss") {
  WeightingScheme focal;
  focal.variant = WeightingScheme::Variant::focal;
  focal.gamma_f = 1.0;
  CHECK(baseline_weight(focal, 0.0) == 0.0);
  CHECK(baseline_weight(focal, std::log(2.0)) == doctest::Approx(0.5).epsilon(1e-12));
  double prev = -1.0;
  for (double loss = 0.0; loss < 6.0; loss += 0.25) {
    const double w = baseline_weight(focal, loss);
    CHECK(w >= 0.0);
    CHECK(w < 1.0);
    CHECK(w > prev);
    prev = w;
  }
  focal.gamma_f = 2.0;
  CHECK(baseline_weight(focal, std::log(2.0)) == doctest::Approx(0.25).epsilon(1e-12));
}

TEST_CASE("self-paced weight is a hard threshold") {
  WeightingScheme spl;
  spl.variant = WeightingScheme::Variant::spl;
  spl.lambda_spl = 1.0;
  CHECK(baseline_weight(spl, 0.999) == 1.0);
  CHECK(baseline_weight(spl, 1.0) == 0.0);  // boundary excluded
  CHECK(baseline_weight(spl, 5.0) == 0.0);
}

TEST_CASE("uniform weight is one and non-pointwise schemes are rejected") {
  WeightingScheme uniform;
  uniform.variant = WeightingScheme::Variant::uniform;
  CHECK(baseline_weight(uniform, 3.7) == 1.0);
  WeightingScheme mlp;
  mlp.variant = WeightingScheme::Variant::mlp;
  CHECK_THROWS_AS(baseline_weight(mlp, 1.0), std::invalid_argument);
  WeightingScheme l2rw;
  l2rw.variant = WeightingScheme::Variant::l2rw;
  CHECK_THROWS_AS(baseline_weight(l2rw, 1.0), std::invalid_argument);
}

TEST_CASE("scheme validation") {
  WeightingScheme bad;
  bad.gamma_f = -1.0;
  CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
  bad = WeightingScheme{};
  bad.lambda_spl = 0.0;
  CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
}

// ---------------------------------------------------------------------------
// l2rw reweighting
// ---------------------------------------------------------------------------

TEST_CASE("l2rw keeps aligned gradients and normalizes to one") {
  std::vector<std::vector<double>> grads{{3.0, 0.0}, {1.0, 0.0}};
  std::vector<double> meta{1.0, 0.0};
  const auto w = l2rw_weights(grads, meta);
  CHECK(w[0] == doctest::Approx(0.75).epsilon(1e-15));
  CHECK(w[1] == doctest::Approx(0.25).epsilon(1e-15));
  CHECK(w[0] + w[1] == doctest::Approx(1.0).epsilon(1e-15));
}

TEST_CASE("l2rw truncates anti-aligned gradients at zero") {
  std::vector<std::vector<double>> grads{{1.0, 0.0}, {-2.0, 0.0}};
  std::vector<double> meta{1.0, 0.0};
  const auto w = l2rw_weights(grads, meta);
  CHECK(w[0] == 1.0);
  CHECK(w[1] == 0.0);
}

TEST_CASE("l2rw falls back to uniform when every alignment is nonpositive") {
  std::vector<std::vector<double>> grads{{-1.0, 0.0}, {0.0, -3.0}, {-0.5, -0.5}};
  std::vector<double> meta{1.0, 1.0};
  const auto w = l2rw_weights(grads, meta);
  for (double v : w) CHECK(v == 1.0 / 3.0);
}

TEST_CASE("l2rw single sample gets full weight") {
  std::vector<std::vector<double>> grads{{0.2, 0.4}};
  std::vector<double> meta{1.0, 1.0};
  const auto w = l2rw_weights(grads, meta);
  REQUIRE(w.size() == 1);
  CHECK(w[0] == 1.0);
}

TEST_CASE("l2rw validates shapes") {
  std::vector<std::vector<double>> grads{{1.0, 2.0}, {1.0}};
  std::vector<double> meta{1.0, 0.0};
  CHECK_THROWS_AS(l2rw_weights(grads, meta), std::invalid_argument);
  std::vector<std::vector<double>> empty;
  CHECK_THROWS_AS(l2rw_weights(empty, meta), std::invalid_argument);
}

TEST_CASE("l2rw weights always sum to one on random draws") {
  Rng rng(13);
  for (int trial = 0; trial < 50; ++trial) {
    const std::size_t b = 1 + rng.below(8);
    const std::size_t dim = 1 + rng.below(10);
    std::vector<std::vector<double>> grads(b);
    for (auto& g : grads) {
      g.resize(dim);
      for (double& v : g) v = rng.normal();
    }
    std::vector<double> meta(dim);
    for (double& v : meta) v = rng.normal();
    const auto w = l2rw_weights(grads, meta);
    double total = 0.0;
    for (double v : w) {
      CHECK(v >= 0.0);
      total += v;
    }
    CHECK(std::fabs(total - 1.0) < 1e-12);
  }
}
