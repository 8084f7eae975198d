// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <deque>
#include <vector>

#include "cropdrqn/core/error.hpp"
#include "cropdrqn/nn/tensor.hpp"

namespace cropdrqn::cropenv {

/// The last `l` rows of `buffer`, oldest first. Short buffers are left-padded with
/// copies of their earliest row.
template <typename Row>
std::vector<Row> observe_history(const std::deque<Row>& buffer, std::size_t l) {
  if (l == 0) throw ConfigError("history length must be at least 1");
  if (buffer.empty()) throw StateError("observation history is empty");
  std::vector<Row> out;
  out.reserve(l);
  const std::size_t have = buffer.size();
  for (std::size_t i = 0; i < l; ++i) {
    const std::size_t back = l - i;  // 1 = newest
    out.push_back(back <= have ? buffer[have - back] : buffer.front());
  }
  return out;
}

}  // namespace cropdrqn::cropenv
