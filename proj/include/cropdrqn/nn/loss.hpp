// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cmath>
#include <numbers>
#include <utility>

#include "cropdrqn/nn/tensor.hpp"

namespace cropdrqn::nn {

enum class LossKind { MeanSquaredError, LogNormalNLL };

inline constexpr double kHalfLog2Pi = 0.91893853320467274178;  // 0.5 * ln(2 pi)

/// Standard log-normal density of y with log-location mu and log-scale sigma.
inline double lognormal_pdf(double y, double mu, double sigma) {
  if (y <= 0.0) return 0.0;
  const double d = std::log(y) - mu;
  return std::exp(-d * d / (2.0 * sigma * sigma)) / (y * sigma * std::sqrt(2.0 * std::numbers::pi));
}

/// -log p(y | mu, sigma = exp(log_sigma)) for one sample.
inline double lognormal_nll(double y, double mu, double log_sigma) {
  if (!(y > 0.0)) throw DomainError("log-normal NLL needs a strictly positive target");
  const double d = std::log(y) - mu;
  return std::log(y) + log_sigma + kHalfLog2Pi + d * d * std::exp(-2.0 * log_sigma) / 2.0;
}

/// Loss value and its gradient with respect to `prediction`.
///
/// MeanSquaredError: mean of squared residuals over all entries.
/// LogNormalNLL: `prediction` holds interleaved (mu, log sigma) pairs, one per
/// target; the loss is the negative log-likelihood summed over samples.
inline std::pair<double, Vector> loss_and_grad(LossKind kind, std::span<const double> prediction,
                                               std::span<const double> target) {
  if (kind == LossKind::MeanSquaredError) {
    require_size(prediction.size(), target.size(), "MSE prediction");
    if (target.empty()) throw ConfigError("MSE of empty vectors");
    const double n = static_cast<double>(target.size());
    double loss = 0.0;
    Vector grad(target.size());
    for (std::size_t i = 0; i < target.size(); ++i) {
      const double r = prediction[i] - target[i];
      loss += r * r;
      grad[i] = 2.0 * r / n;
    }
    return {loss / n, std::move(grad)};
  }
  require_size(prediction.size(), 2 * target.size(), "log-normal prediction");
  double loss = 0.0;
  Vector grad(prediction.size());
  for (std::size_t i = 0; i < target.size(); ++i) {
    const double mu = prediction[2 * i], log_sigma = prediction[2 * i + 1];
    loss += lognormal_nll(target[i], mu, log_sigma);
    const double inv_var = std::exp(-2.0 * log_sigma);
    const double d = std::log(target[i]) - mu;
    grad[2 * i] = -d * inv_var;
    grad[2 * i + 1] = 1.0 - d * d * inv_var;
  }
  return {loss, std::move(grad)};
}

}  // namespace cropdrqn::nn
