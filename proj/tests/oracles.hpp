#pragma once

// Reference implementations written independently of the library code, used
// as ground truth in the tests. Plain loops, no shortcuts.

#include <cmath>
#include <functional>
#include <random>
#include <vector>

#include "moglow/tensor.hpp"

namespace oracle {

using moglow::Real;
using moglow::Tensor;

inline Tensor random_matrix(std::size_t rows, std::size_t cols, std::mt19937_64& rng, Real scale = 1.0) {
  std::normal_distribution<Real> n(0.0, scale);
  std::vector<Real> v(rows * cols);
  for (Real& x : v) x = n(rng);
  return Tensor::matrix(rows, cols, std::move(v));
}

inline Tensor naive_matmul(const Tensor& a, const Tensor& b) {
  Tensor out = Tensor::zeros(a.rows(), b.cols());
  for (std::size_t i = 0; i < a.rows(); ++i)
    for (std::size_t j = 0; j < b.cols(); ++j) {
      long double acc = 0.0L;
      for (std::size_t k = 0; k < a.cols(); ++k) acc += static_cast<long double>(a(i, k)) * b(k, j);
      out(i, j) = static_cast<Real>(acc);
    }
  return out;
}

inline Real max_abs_diff(const Tensor& a, const Tensor& b) {
  Real m = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a[i] - b[i]));
  return m;
}

/// log|det A| by Gaussian elimination with full pivoting in long double.
inline Real log_abs_det(const Tensor& a) {
  const std::size_t n = a.rows();
  std::vector<long double> m(n * n);
  for (std::size_t i = 0; i < n * n; ++i) m[i] = a[i];
  long double acc = 0.0L;
  std::vector<std::size_t> rows(n), cols(n);
  for (std::size_t i = 0; i < n; ++i) rows[i] = cols[i] = i;
  for (std::size_t k = 0; k < n; ++k) {
    std::size_t pr = k, pc = k;
    long double best = -1.0L;
    for (std::size_t i = k; i < n; ++i)
      for (std::size_t j = k; j < n; ++j)
        if (std::fabs(m[rows[i] * n + cols[j]]) > best) {
          best = std::fabs(m[rows[i] * n + cols[j]]);
          pr = i;
          pc = j;
        }
    std::swap(rows[k], rows[pr]);
    std::swap(cols[k], cols[pc]);
    const long double p = m[rows[k] * n + cols[k]];
    if (p == 0.0L) return -INFINITY;
    acc += std::log(std::fabs(p));
    for (std::size_t i = k + 1; i < n; ++i) {
      const long double f = m[rows[i] * n + cols[k]] / p;
      for (std::size_t j = k; j < n; ++j) m[rows[i] * n + cols[j]] -= f * m[rows[k] * n + cols[j]];
    }
  }
  return static_cast<Real>(acc);
}

/// Central-difference Jacobian of f: R^n → R^m at x, returned m × n.
inline Tensor fd_jacobian(const std::function<std::vector<Real>(const std::vector<Real>&)>& f,
                          std::vector<Real> x, Real eps) {
  const std::size_t n = x.size();
  const std::size_t m = f(x).size();
  Tensor j = Tensor::zeros(m, n);
  for (std::size_t c = 0; c < n; ++c) {
    const Real keep = x[c];
    x[c] = keep + eps;
    const std::vector<Real> hi = f(x);
    x[c] = keep - eps;
    const std::vector<Real> lo = f(x);
    x[c] = keep;
    for (std::size_t r = 0; r < m; ++r) j(r, c) = (hi[r] - lo[r]) / (2.0 * eps);
  }
  return j;
}

inline Real sigmoid(Real x) { return 1.0 / (1.0 + std::exp(-x)); }

/// One LSTM step for a single sequence, gate order [i, f, g, o].
struct ScalarLstm {
  std::vector<Real> h, c;
  void step(const std::vector<Real>& x, const Tensor& wx, const Tensor& wh, const Tensor& b) {
    const std::size_t hd = h.size();
    std::vector<Real> gates(4 * hd);
    for (std::size_t g = 0; g < 4 * hd; ++g) {
      Real a = b(0, g);
      for (std::size_t k = 0; k < x.size(); ++k) a += x[k] * wx(k, g);
      for (std::size_t k = 0; k < hd; ++k) a += h[k] * wh(k, g);
      gates[g] = a;
    }
    for (std::size_t k = 0; k < hd; ++k) {
      const Real i = sigmoid(gates[k]);
      const Real f = sigmoid(gates[hd + k]);
      const Real g = std::tanh(gates[2 * hd + k]);
      const Real o = sigmoid(gates[3 * hd + k]);
      c[k] = f * c[k] + i * g;
      h[k] = o * std::tanh(c[k]);
    }
  }
};

/// Composite Simpson rule on [a, b] with n (even) intervals.
inline Real simpson(const std::function<Real(Real)>& f, Real a, Real b, std::size_t n) {
  const Real h = (b - a) / static_cast<Real>(n);
  Real acc = f(a) + f(b);
  for (std::size_t i = 1; i < n; ++i) acc += (i % 2 ? 4.0 : 2.0) * f(a + h * static_cast<Real>(i));
  return acc * h / 3.0;
}

}  // namespace oracle
