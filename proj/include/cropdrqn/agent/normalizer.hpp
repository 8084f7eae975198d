// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cmath>
#include <span>

#include "cropdrqn/core/error.hpp"
#include "cropdrqn/nn/tensor.hpp"

namespace cropdrqn::agent {

/// Per-feature running mean and population SD (Welford). Features whose SD is
/// below 1e-8 are only centred.
class RunningNormalizer {
 public:
  RunningNormalizer() = default;
  explicit RunningNormalizer(std::size_t n) : mean_(n, 0.0), m2_(n, 0.0) {}

  std::size_t size() const noexcept { return mean_.size(); }
  double count() const noexcept { return count_; }
  bool frozen() const noexcept { return frozen_; }
  void freeze() noexcept { frozen_ = true; }

  void update(std::span<const double> x) {
    if (frozen_) return;
    nn::require_size(x.size(), mean_.size(), "normalizer input");
    count_ += 1.0;
    for (std::size_t j = 0; j < x.size(); ++j) {
      const double d = x[j] - mean_[j];
      mean_[j] += d / count_;
      m2_[j] += d * (x[j] - mean_[j]);
    }
  }

  double mean(std::size_t j) const { return mean_.at(j); }
  double sd(std::size_t j) const {
    const double s = count_ > 0 ? std::sqrt(m2_.at(j) / count_) : 0.0;
    return s < 1e-8 ? 1.0 : s;
  }

  void apply(std::span<double> x) const {
    nn::require_size(x.size(), mean_.size(), "normalizer input");
    for (std::size_t j = 0; j < x.size(); ++j) x[j] = (x[j] - mean_[j]) / sd(j);
  }

  /// Row-wise copy of a history matrix.
  nn::Tensor2 apply(const nn::Tensor2& h) const {
    nn::Tensor2 out = h;
    for (std::size_t r = 0; r < out.rows; ++r) apply(out.row(r));
    return out;
  }

  const nn::Vector& means() const noexcept { return mean_; }
  const nn::Vector& sum_squares() const noexcept { return m2_; }

  /// Frozen copy.
  RunningNormalizer frozen_copy() const {
    RunningNormalizer n = *this;
    n.frozen_ = true;
    return n;
  }

  /// Rebuilds from raw Welford state, e.g. a checkpoint. The result is frozen.
  static RunningNormalizer from_state(double count, nn::Vector mean, nn::Vector m2) {
    if (mean.size() != m2.size()) throw ConfigError("normalizer state length mismatch");
    if (!(count >= 0.0)) throw ConfigError("normalizer count must be nonnegative");
    for (double v : m2)
      if (!(v >= 0.0)) throw ConfigError("normalizer sum of squares must be nonnegative");
    RunningNormalizer n;
    n.mean_ = std::move(mean);
    n.m2_ = std::move(m2);
    n.count_ = count;
    n.frozen_ = true;
    return n;
  }

 private:
  nn::Vector mean_, m2_;
  double count_ = 0.0;
  bool frozen_ = false;
};

}  // namespace cropdrqn::agent
