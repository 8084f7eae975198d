// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <string>
#include <vector>

#include "cropdrqn/core/error.hpp"
#include "cropdrqn/core/rng.hpp"
#include "cropdrqn/nn/dense.hpp"
#include "cropdrqn/nn/gru.hpp"

namespace cropdrqn::agent {

struct QNetworkShape {
  std::size_t observation_size = 10;
  std::size_t gru_hidden = 64;
  std::size_t head_hidden = 64;  // 0 = linear head
  std::size_t actions = 25;

  friend bool operator==(const QNetworkShape&, const QNetworkShape&) = default;
};

/// GRU over the observation history, final hidden state into a small MLP head.
class QNetwork {
 public:
  struct Trace {
    std::vector<nn::GruTrace> gru;
    nn::Mlp::Trace head;
  };

  QNetwork() = default;
  explicit QNetwork(const QNetworkShape& s)
      : shape_(s),
        gru_(s.observation_size, s.gru_hidden),
        head_(s.gru_hidden,
              s.head_hidden ? std::vector<std::size_t>{s.head_hidden} : std::vector<std::size_t>{},
              s.actions) {
    if (s.actions == 0) throw ConfigError("Q-network needs at least one action");
  }

  void init(RngStream& rng) {
    gru_.init(rng);
    head_.init(rng);
  }

  const QNetworkShape& shape() const noexcept { return shape_; }
  std::size_t action_count() const noexcept { return shape_.actions; }

  /// Q-values for a normalized l x obs history.
  nn::Vector q_values(const nn::Tensor2& history) const {
    check_history(history);
    return head_.forward(nn::gru_sequence(gru_, history));
  }

  nn::Vector forward(const nn::Tensor2& history, Trace& trace) const {
    check_history(history);
    const nn::Vector h = nn::gru_sequence(gru_, history, &trace.gru);
    return head_.forward(h, trace.head);
  }

  /// Accumulates parameter gradients for dL/dQ = grad_q.
  void backward(const Trace& trace, std::span<const double> grad_q) {
    const nn::Vector gh = head_.backward(trace.head, grad_q);
    nn::gru_sequence_backward(gru_, trace.gru, gh);
  }

  std::vector<nn::ParamRef> parameters() {
    std::vector<nn::ParamRef> out;
    gru_.append_params(out, "gru");
    for (auto& p : head_.parameters("head")) out.push_back(p);
    return out;
  }

  /// theta <- other.theta. Throws ConfigError on an architecture mismatch.
  void copy_from(const QNetwork& other) {
    if (!(shape_ == other.shape_)) throw ConfigError("Q-network architecture mismatch");
    gru_ = other.gru_;
    head_ = other.head_;
  }

 private:
  void check_history(const nn::Tensor2& h) const {
    if (h.rows == 0) throw ConfigError("empty observation history");
    nn::require_size(h.cols, shape_.observation_size, "history width");
  }

  QNetworkShape shape_;
  nn::GruCell gru_;
  nn::Mlp head_;
};

/// theta_T <- theta_E.
inline void sync_target(const QNetwork& eval, QNetwork& target) { target.copy_from(eval); }

}  // namespace cropdrqn::agent
