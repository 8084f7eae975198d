// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <deque>

#include "cropdrqn/cropenv/history.hpp"
#include "cropdrqn/nn/tensor.hpp"

namespace cropdrqn::agent {

/// Rolling window of the last `l` raw observations.
class HistoryBuffer {
 public:
  explicit HistoryBuffer(std::size_t l) : l_(l) {
    if (l == 0) throw ConfigError("history length must be at least 1");
  }

  std::size_t length() const noexcept { return l_; }
  void clear() { rows_.clear(); }

  void push(nn::Vector obs) {
    rows_.push_back(std::move(obs));
    if (rows_.size() > l_) rows_.pop_front();
  }

  /// l x obs matrix, oldest first, left-padded with the earliest observation.
  nn::Tensor2 matrix() const {
    const auto rows = cropenv::observe_history(rows_, l_);
    nn::Tensor2 out(l_, rows.front().size());
    for (std::size_t r = 0; r < l_; ++r) {
      nn::require_size(rows[r].size(), out.cols, "observation");
      std::copy(rows[r].begin(), rows[r].end(), out.row(r).begin());
    }
    return out;
  }

 private:
  std::size_t l_;
  std::deque<nn::Vector> rows_;
};

}  // namespace cropdrqn::agent
