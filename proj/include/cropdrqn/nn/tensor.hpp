// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cmath>
#include <span>
#include <string>
#include <vector>

#include "cropdrqn/core/error.hpp"

namespace cropdrqn::nn {

using Vector = std::vector<double>;

/// Dense row-major matrix.
struct Tensor2 {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<double> data;

  Tensor2() = default;
  Tensor2(std::size_t r, std::size_t c, double fill = 0.0) : rows(r), cols(c), data(r * c, fill) {}

  double& operator()(std::size_t r, std::size_t c) { return data[r * cols + c]; }
  double operator()(std::size_t r, std::size_t c) const { return data[r * cols + c]; }

  std::span<double> row(std::size_t r) { return {data.data() + r * cols, cols}; }
  std::span<const double> row(std::size_t r) const { return {data.data() + r * cols, cols}; }

  std::size_t size() const noexcept { return data.size(); }
  bool same_shape(const Tensor2& o) const noexcept { return rows == o.rows && cols == o.cols; }
  void zero() { std::fill(data.begin(), data.end(), 0.0); }

  bool all_finite() const {
    for (double v : data)
      if (!std::isfinite(v)) return false;
    return true;
  }

  friend bool operator==(const Tensor2&, const Tensor2&) = default;
};

/// A named trainable array and its gradient accumulator.
struct ParamRef {
  std::string name;
  Tensor2* value;
  Tensor2* grad;
};

inline void zero_grads(std::span<const ParamRef> params) {
  for (const auto& p : params) p.grad->zero();
}

inline void scale_grads(std::span<const ParamRef> params, double s) {
  for (const auto& p : params)
    for (double& g : p.grad->data) g *= s;
}

inline void require_size(std::size_t got, std::size_t want, const char* what) {
  if (got != want)
    throw ConfigError(std::string(what) + ": expected length " + std::to_string(want) + ", got " +
                      std::to_string(got));
}

namespace detail {
// Four partial sums; the fixed order keeps results bit-reproducible.
inline double dot(const double* a, const double* b, std::size_t n) {
  double s0 = 0.0, s1 = 0.0, s2 = 0.0, s3 = 0.0;
  const std::size_t n4 = n - n % 4;
  std::size_t i = 0;
  for (; i < n4; i += 4) {
    s0 += a[i] * b[i];
    s1 += a[i + 1] * b[i + 1];
    s2 += a[i + 2] * b[i + 2];
    s3 += a[i + 3] * b[i + 3];
  }
  for (; i < n; ++i) s0 += a[i] * b[i];
  return (s0 + s1) + (s2 + s3);
}

inline void axpy(double alpha, const double* x, double* y, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) y[i] += alpha * x[i];
}
}  // namespace detail

/// y += W x
inline void gemv_acc(const Tensor2& w, std::span<const double> x, std::span<double> y) {
  for (std::size_t r = 0; r < w.rows; ++r) y[r] += detail::dot(&w.data[r * w.cols], x.data(), w.cols);
}

/// y += W^T g
inline void gemv_t_acc(const Tensor2& w, std::span<const double> g, std::span<double> y) {
  for (std::size_t r = 0; r < w.rows; ++r)
    if (g[r] != 0.0) detail::axpy(g[r], &w.data[r * w.cols], y.data(), w.cols);
}

/// G += g x^T
inline void outer_acc(std::span<const double> g, std::span<const double> x, Tensor2& G) {
  for (std::size_t r = 0; r < G.rows; ++r)
    if (g[r] != 0.0) detail::axpy(g[r], x.data(), &G.data[r * G.cols], G.cols);
}

inline double sigmoid(double x) {
  if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

}  // namespace cropdrqn::nn
