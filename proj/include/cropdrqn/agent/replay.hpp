// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <vector>

#include "cropdrqn/core/error.hpp"
#include "cropdrqn/core/rng.hpp"
#include "cropdrqn/nn/tensor.hpp"

namespace cropdrqn::agent {

/// One transition. Histories are l x obs matrices of raw observations, oldest row first.
struct ReplayEntry {
  nn::Tensor2 history;
  std::size_t action = 0;
  double reward = 0.0;
  nn::Tensor2 next_history;
  bool terminal = false;
};

/// Fixed-capacity FIFO ring buffer.
class ReplayMemory {
 public:
  explicit ReplayMemory(std::size_t capacity) : capacity_(capacity) {
    if (capacity == 0) throw ConfigError("replay capacity must be positive");
    data_.reserve(std::min<std::size_t>(capacity, 4096));
  }

  std::size_t size() const noexcept { return data_.size(); }
  std::size_t capacity() const noexcept { return capacity_; }
  bool empty() const noexcept { return data_.empty(); }

  void push(ReplayEntry e) {
    if (data_.size() < capacity_) {
      data_.push_back(std::move(e));
    } else {
      data_[head_] = std::move(e);
      head_ = (head_ + 1) % capacity_;
    }
  }

  /// i-th oldest entry.
  const ReplayEntry& at(std::size_t i) const {
    if (i >= data_.size()) throw DomainError("replay index out of range");
    return data_[(head_ + i) % data_.size()];
  }

  /// Uniform draw with replacement.
  const ReplayEntry& sample(RngStream& rng) const {
    if (data_.empty()) throw StateError("sampling from an empty replay memory");
    return data_[rng.index(data_.size())];
  }

 private:
  std::size_t capacity_;
  std::size_t head_ = 0;  // oldest entry once full
  std::vector<ReplayEntry> data_;
};

}  // namespace cropdrqn::agent
