// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <algorithm>
#include <cmath>
#include <numeric>
#include <span>
#include <vector>

#include "cropdrqn/core/error.hpp"

namespace cropdrqn {

inline double mean(std::span<const double> xs) {
  if (xs.empty()) throw DomainError("mean of empty sample");
  return std::accumulate(xs.begin(), xs.end(), 0.0) / static_cast<double>(xs.size());
}

/// Empirical quantile by linear interpolation between order statistics
/// (Hyndman-Fan type 7): position h = (n - 1) p on the sorted sample.
inline double percentile_sorted(std::span<const double> sorted, double p) {
  if (sorted.empty()) throw DomainError("percentile of empty sample");
  if (p < 0.0 || p > 1.0) throw DomainError("percentile outside [0, 1]");
  const double h = static_cast<double>(sorted.size() - 1) * p;
  const auto lo = static_cast<std::size_t>(std::floor(h));
  const std::size_t hi = std::min(lo + 1, sorted.size() - 1);
  return sorted[lo] + (h - static_cast<double>(lo)) * (sorted[hi] - sorted[lo]);
}

inline double percentile(std::span<const double> xs, double p) {
  std::vector<double> s(xs.begin(), xs.end());
  std::sort(s.begin(), s.end());
  return percentile_sorted(s, p);
}

/// Mean with a 95% empirical prediction interval.
struct MetricSummary {
  double mean = 0.0;
  double lo = 0.0;  // 2.5th percentile
  double hi = 0.0;  // 97.5th percentile
  std::size_t n = 0;
};

inline MetricSummary summarize_metric(std::span<const double> xs) {
  if (xs.empty()) throw DomainError("cannot summarize an empty sample");
  std::vector<double> s(xs.begin(), xs.end());
  std::sort(s.begin(), s.end());
  // Summing the sorted copy makes the mean independent of input order.
  MetricSummary out;
  out.mean = std::accumulate(s.begin(), s.end(), 0.0) / static_cast<double>(s.size());
  out.lo = percentile_sorted(s, 0.025);
  out.hi = percentile_sorted(s, 0.975);
  out.n = s.size();
  return out;
}

/// Coefficient of determination 1 - SS_res / SS_tot.
inline double r_squared(std::span<const double> observed, std::span<const double> predicted) {
  if (observed.size() != predicted.size() || observed.empty())
    throw DomainError("r_squared needs equal-length nonempty samples");
  const double m = mean(observed);
  double ss_res = 0.0, ss_tot = 0.0;
  for (std::size_t i = 0; i < observed.size(); ++i) {
    ss_res += (observed[i] - predicted[i]) * (observed[i] - predicted[i]);
    ss_tot += (observed[i] - m) * (observed[i] - m);
  }
  if (ss_tot == 0.0) throw DomainError("r_squared undefined for constant observations");
  return 1.0 - ss_res / ss_tot;
}

/// sum_t gamma^t r_t
inline double discounted_return(std::span<const double> rewards, double gamma) {
  double total = 0.0, w = 1.0;
  for (double r : rewards) {
    total += w * r;
    w *= gamma;
  }
  return total;
}

}  // namespace cropdrqn
