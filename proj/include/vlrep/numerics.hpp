#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <random>
#include <span>
#include <vector>

namespace vlrep {

// Dense row-major matrix, 64-bit throughout. All reductions over matrix data
// run left-to-right in row-major order so repeated runs are bit-identical.
struct Matrix {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<double> data;  // rows*cols entries, row-major

  Matrix() = default;
  Matrix(std::size_t r, std::size_t c, double fill = 0.0)
      : rows(r), cols(c), data(r * c, fill) {}

  double& at(std::size_t r, std::size_t c) { return data[r * cols + c]; }
  double at(std::size_t r, std::size_t c) const { return data[r * cols + c]; }

  std::span<double> row(std::size_t r) { return {data.data() + r * cols, cols}; }
  std::span<const double> row(std::size_t r) const {
    return {data.data() + r * cols, cols};
  }

  bool all_finite() const;
  bool same_shape(const Matrix& other) const {
    return rows == other.rows && cols == other.cols;
  }
};

Matrix transpose(const Matrix& m);

// c = a * b, accumulation left-to-right over the shared dimension.
Matrix matmul(const Matrix& a, const Matrix& b);
// c = a * b^T
Matrix matmul_nt(const Matrix& a, const Matrix& b);

// Deterministic PRNG. Engine is std::mt19937_64 (fully specified by the
// standard, so the raw stream is identical on every platform); the output
// transforms below are fixed here rather than delegated to std distribution
// objects, whose algorithms are implementation-defined:
//   - uniform():  (next_u64() >> 11) * 2^-53, giving [0, 1)
//   - normal():   Box-Muller, sqrt(-2 ln(1-u1)) * cos(2 pi u2)
//   - below(n):   rejection sampling, unbiased
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  std::uint64_t next_u64() { return engine_(); }

  double uniform() {
    return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
  }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  double normal();
  double normal(double mean, double stddev) { return mean + stddev * normal(); }

  // Unbiased draw from [0, n).
  std::uint64_t below(std::uint64_t n);

  template <class T>
  void shuffle(std::vector<T>& v) {
    for (std::size_t i = v.size(); i > 1; --i) {
      std::swap(v[i - 1], v[static_cast<std::size_t>(below(i))]);
    }
  }

  Matrix matrix_uniform(std::size_t rows, std::size_t cols, double lo, double hi);
  Matrix matrix_normal(std::size_t rows, std::size_t cols, double mean = 0.0,
                       double stddev = 1.0);

 private:
  std::mt19937_64 engine_;
};

// arccos(clamp(x, -1+eps, 1-eps)) with eps = 1e-12. Total on finite inputs;
// the clamp keeps the derivative finite at |x| = 1.
double safe_arccos(double x);

// Derivative of safe_arccos: -1/sqrt(1-x^2) inside the clamp, 0 in the
// flat clamped region.
double safe_arccos_deriv(double x);

inline constexpr double kArccosClampEps = 1e-12;

// Stable log(sum(exp(values))) via max-shift. Exact for a single element.
double log_sum_exp(std::span<const double> values);

// Central finite differences (f(x+h e_i) - f(x-h e_i)) / (2h) per coordinate.
// Throws if an evaluation of f is non-finite, naming the coordinate.
std::vector<double> finite_diff_grad(
    const std::function<double(std::span<const double>)>& f,
    std::span<const double> x, double h);

// Vector helpers; accumulation order is left-to-right.
double dot(std::span<const double> a, std::span<const double> b);
double l2_norm(std::span<const double> v);
// y += a * x
void axpy(double a, std::span<const double> x, std::span<double> y);

}  // namespace vlrep
