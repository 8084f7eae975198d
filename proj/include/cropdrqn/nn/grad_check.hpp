// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

#include "cropdrqn/nn/tensor.hpp"

namespace cropdrqn::nn {

struct GradCheckReport {
  double max_rel_error = 0.0;
  std::size_t checked = 0;
  std::string worst_param;
  std::size_t worst_index = 0;
  bool passed = true;
};

/// Compares analytic gradients to central finite differences on every parameter.
///
/// `evaluate(bool with_grad)` must return the loss for the current parameter
/// values; when `with_grad` is true it must also zero and then fill the
/// gradient accumulators. Relative error is |a - n| / max(|a|, |n|, floor).
template <typename Evaluate>
GradCheckReport grad_check(std::span<const ParamRef> params, Evaluate&& evaluate, double rel_tol,
                           double h = 1e-5, double floor = 1e-6) {
  GradCheckReport report;
  evaluate(true);
  std::vector<Tensor2> analytic;
  for (const auto& p : params) analytic.push_back(*p.grad);
  for (std::size_t k = 0; k < params.size(); ++k) {
    auto& w = params[k].value->data;
    for (std::size_t i = 0; i < w.size(); ++i) {
      const double orig = w[i];
      w[i] = orig + h;
      const double up = evaluate(false);
      w[i] = orig - h;
      const double down = evaluate(false);
      w[i] = orig;
      const double numeric = (up - down) / (2.0 * h);
      const double a = analytic[k].data[i];
      const double err = std::abs(a - numeric) / std::max({std::abs(a), std::abs(numeric), floor});
      ++report.checked;
      if (!(err <= report.max_rel_error)) {
        report.max_rel_error = std::isnan(err) ? INFINITY : err;
        report.worst_param = params[k].name;
        report.worst_index = i;
      }
    }
  }
  report.passed = report.max_rel_error < rel_tol;
  return report;
}

}  // namespace cropdrqn::nn
