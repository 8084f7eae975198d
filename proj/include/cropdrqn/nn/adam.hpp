// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cmath>
#include <cstdint>
#include <vector>

#include "cropdrqn/nn/tensor.hpp"

namespace cropdrqn::nn {

/// Adam optimizer state; moments are allocated on the first step.
struct AdamState {
  double learning_rate = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
  std::vector<Tensor2> m, v;
  std::uint64_t step = 0;

  explicit AdamState(double lr = 1e-3) : learning_rate(lr) {}
};

/// One bias-corrected Adam update of every parameter from its gradient.
inline void adam_step(AdamState& s, std::span<const ParamRef> params) {
  if (s.m.empty()) {
    for (const auto& p : params) {
      s.m.emplace_back(p.value->rows, p.value->cols);
      s.v.emplace_back(p.value->rows, p.value->cols);
    }
  }
  if (s.m.size() != params.size()) throw ConfigError("Adam state built for a different parameter set");
  for (std::size_t k = 0; k < params.size(); ++k) {
    if (!params[k].grad->same_shape(*params[k].value) || !s.m[k].same_shape(*params[k].value))
      throw ConfigError("Adam shape mismatch for " + params[k].name);
  }
  ++s.step;
  const double t = static_cast<double>(s.step);
  const double c1 = 1.0 - std::pow(s.beta1, t);
  const double c2 = 1.0 - std::pow(s.beta2, t);
  for (std::size_t k = 0; k < params.size(); ++k) {
    auto& w = params[k].value->data;
    const auto& g = params[k].grad->data;
    auto& m = s.m[k].data;
    auto& v = s.v[k].data;
    for (std::size_t i = 0; i < w.size(); ++i) {
      m[i] = s.beta1 * m[i] + (1.0 - s.beta1) * g[i];
      v[i] = s.beta2 * v[i] + (1.0 - s.beta2) * g[i] * g[i];
      w[i] -= s.learning_rate * (m[i] / c1) / (std::sqrt(v[i] / c2) + s.epsilon);
    }
  }
}

}  // namespace cropdrqn::nn
