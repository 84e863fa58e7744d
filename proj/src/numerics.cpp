#include "vlrep/numerics.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>
#include <string>

namespace vlrep {

bool Matrix::all_finite() const {
  for (double v : data) {
    if (!std::isfinite(v)) return false;
  }
  return true;
}

Matrix transpose(const Matrix& m) {
  Matrix out(m.cols, m.rows);
  for (std::size_t r = 0; r < m.rows; ++r) {
    for (std::size_t c = 0; c < m.cols; ++c) {
      out.at(c, r) = m.at(r, c);
    }
  }
  return out;
}

Matrix matmul(const Matrix& a, const Matrix& b) {
  if (a.cols != b.rows) {
    throw std::invalid_argument("matmul: inner dimensions differ (" +
                                std::to_string(a.cols) + " vs " +
                                std::to_string(b.rows) + ")");
  }
  Matrix out(a.rows, b.cols, 0.0);
  for (std::size_t i = 0; i < a.rows; ++i) {
    for (std::size_t j = 0; j < b.cols; ++j) {
      double acc = 0.0;
      for (std::size_t k = 0; k < a.cols; ++k) {
        acc += a.at(i, k) * b.at(k, j);
      }
      out.at(i, j) = acc;
    }
  }
  return out;
}

Matrix matmul_nt(const Matrix& a, const Matrix& b) {
  if (a.cols != b.cols) {
    throw std::invalid_argument("matmul_nt: inner dimensions differ (" +
                                std::to_string(a.cols) + " vs " +
                                std::to_string(b.cols) + ")");
  }
  Matrix out(a.rows, b.rows, 0.0);
  for (std::size_t i = 0; i < a.rows; ++i) {
    for (std::size_t j = 0; j < b.rows; ++j) {
      out.at(i, j) = dot(a.row(i), b.row(j));
    }
  }
  return out;
}

double Rng::normal() {
  // 1-u1 keeps the log argument in (0, 1].
  double u1 = 1.0 - uniform();
  double u2 = uniform();
  return std::sqrt(-2.0 * std::log(u1)) *
         std::cos(2.0 * std::numbers::pi * u2);
}

std::uint64_t Rng::below(std::uint64_t n) {
  if (n == 0) throw std::invalid_argument("Rng::below: n must be positive");
  const std::uint64_t threshold = (0u - n) % n;  // 2^64 mod n
  for (;;) {
    std::uint64_t x = next_u64();
    if (x >= threshold) return x % n;
  }
}

Matrix Rng::matrix_uniform(std::size_t rows, std::size_t cols, double lo,
                           double hi) {
  Matrix m(rows, cols);
  for (double& v : m.data) v = uniform(lo, hi);
  return m;
}

Matrix Rng::matrix_normal(std::size_t rows, std::size_t cols, double mean,
                          double stddev) {
  Matrix m(rows, cols);
  for (double& v : m.data) v = normal(mean, stddev);
  return m;
}

double safe_arccos(double x) {
  const double c = std::clamp(x, -1.0 + kArccosClampEps, 1.0 - kArccosClampEps);
  return std::acos(c);
}

double safe_arccos_deriv(double x) {
  if (std::abs(x) >= 1.0 - kArccosClampEps) return 0.0;
  return -1.0 / std::sqrt(1.0 - x * x);
}

double log_sum_exp(std::span<const double> values) {
  if (values.empty()) {
    throw std::invalid_argument("log_sum_exp: empty input");
  }
  double mx = values[0];
  for (double v : values) mx = std::max(mx, v);
  double acc = 0.0;
  for (double v : values) acc += std::exp(v - mx);
  return mx + std::log(acc);
}

std::vector<double> finite_diff_grad(
    const std::function<double(std::span<const double>)>& f,
    std::span<const double> x, double h) {
  if (h <= 0.0) throw std::invalid_argument("finite_diff_grad: h must be > 0");
  std::vector<double> pt(x.begin(), x.end());
  std::vector<double> grad(pt.size(), 0.0);
  for (std::size_t i = 0; i < pt.size(); ++i) {
    const double orig = pt[i];
    pt[i] = orig + h;
    const double fp = f(pt);
    pt[i] = orig - h;
    const double fm = f(pt);
    pt[i] = orig;
    if (!std::isfinite(fp) || !std::isfinite(fm)) {
      throw std::runtime_error(
          "finite_diff_grad: non-finite evaluation at coordinate " +
          std::to_string(i));
    }
    grad[i] = (fp - fm) / (2.0 * h);
  }
  return grad;
}

double dot(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) {
    throw std::invalid_argument("dot: size mismatch");
  }
  double acc = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) acc += a[i] * b[i];
  return acc;
}

double l2_norm(std::span<const double> v) {
  double acc = 0.0;
  for (double x : v) acc += x * x;
  return std::sqrt(acc);
}

void axpy(double a, std::span<const double> x, std::span<double> y) {
  if (x.size() != y.size()) {
    throw std::invalid_argument("axpy: size mismatch");
  }
  for (std::size_t i = 0; i < x.size(); ++i) y[i] += a * x[i];
}

}  // namespace vlrep
