// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <algorithm>
#include <cmath>
#include <optional>

#include "cropdrqn/agent/config.hpp"
#include "cropdrqn/agent/normalizer.hpp"
#include "cropdrqn/agent/qnetwork.hpp"
#include "cropdrqn/agent/replay.hpp"
#include "cropdrqn/core/error.hpp"
#include "cropdrqn/core/rng.hpp"
#include "cropdrqn/nn/adam.hpp"

namespace cropdrqn::agent {

/// Linear decay from `start` to `end` over `horizon` episodes, then flat.
struct EpsilonSchedule {
  double start = 1.0;
  double end = 0.05;
  std::size_t horizon = 0;

  double operator()(std::size_t episode) const {
    if (episode >= horizon) return end;
    const double f = static_cast<double>(episode) / static_cast<double>(horizon);
    return start + (end - start) * f;
  }

  static EpsilonSchedule from(const TrainConfig& c) {
    return {c.epsilon_start, c.epsilon_end, c.decay_horizon()};
  }
};

/// Index of the largest value; ties go to the lowest index.
inline std::size_t greedy_action(std::span<const double> q) {
  if (q.empty()) throw DomainError("no Q-values to choose from");
  std::size_t best = 0;
  for (std::size_t i = 1; i < q.size(); ++i)
    if (q[i] > q[best]) best = i;
  return best;
}

inline std::size_t select_action(std::span<const double> q, double epsilon, RngStream& rng) {
  if (!(epsilon >= 0.0 && epsilon <= 1.0)) throw DomainError("epsilon must lie in [0, 1]");
  if (epsilon > 0.0 && rng.uniform() < epsilon) return rng.index(q.size());
  return greedy_action(q);
}

/// Skips the forward pass when the draw explores.
inline std::size_t select_action(const QNetwork& net, const nn::Tensor2& normalized_history, double epsilon,
                                 RngStream& rng) {
  if (!(epsilon >= 0.0 && epsilon <= 1.0)) throw DomainError("epsilon must lie in [0, 1]");
  if (epsilon > 0.0 && rng.uniform() < epsilon) return rng.index(net.action_count());
  return greedy_action(net.q_values(normalized_history));
}

/// r + gamma * max_a Q_T(o', a), or r when terminal.
inline double bellman_target(double reward, bool terminal, std::span<const double> next_q, double gamma) {
  if (terminal) return reward;
  return reward + gamma * *std::max_element(next_q.begin(), next_q.end());
}

inline double bellman_target(const ReplayEntry& e, const QNetwork& target, const RunningNormalizer& norm,
                             double gamma) {
  if (e.terminal) return e.reward;
  return bellman_target(e.reward, false, target.q_values(norm.apply(e.next_history)), gamma);
}

inline double global_grad_norm(std::span<const nn::ParamRef> params) {
  double s = 0.0;
  for (const auto& p : params)
    for (double g : p.grad->data) s += g * g;
  return std::sqrt(s);
}

/// Accumulates the gradient of the batch loss (1/B) sum (Q_E(o, a) - y)^2 into
/// `eval`'s gradient buffers (after zeroing them) and returns the loss.
inline double batch_loss_and_grad(QNetwork& eval, const QNetwork& target, std::span<const ReplayEntry* const> batch,
                                  const RunningNormalizer& norm, double gamma) {
  auto params = eval.parameters();
  nn::zero_grads(params);
  const double inv_b = 1.0 / static_cast<double>(batch.size());
  double loss = 0.0;
  QNetwork::Trace trace;
  nn::Vector grad(eval.action_count(), 0.0);
  for (const ReplayEntry* e : batch) {
    const double y = bellman_target(*e, target, norm, gamma);
    const nn::Vector q = eval.forward(norm.apply(e->history), trace);
    const double diff = q[e->action] - y;
    loss += diff * diff * inv_b;
    grad.assign(grad.size(), 0.0);
    grad[e->action] = 2.0 * diff * inv_b;
    eval.backward(trace, grad);
  }
  return loss;
}

/// One minibatch Adam update of theta_E; theta_T is untouched. Returns nullopt
/// without touching anything when the memory holds fewer than a batch.
/// Throws TrainingError on a non-finite loss, before the update.
inline std::optional<double> train_step(QNetwork& eval, const QNetwork& target, const ReplayMemory& memory,
                                        const RunningNormalizer& norm, nn::AdamState& adam, const TrainConfig& cfg,
                                        RngStream& rng) {
  if (memory.size() < cfg.batch_size) return std::nullopt;
  std::vector<const ReplayEntry*> batch(cfg.batch_size);
  for (auto& p : batch) p = &memory.sample(rng);
  const double loss = batch_loss_and_grad(eval, target, batch, norm, cfg.gamma);
  auto params = eval.parameters();
  if (!std::isfinite(loss)) throw TrainingError("Q-network loss became non-finite");
  if (cfg.grad_clip > 0.0) {
    const double n = global_grad_norm(params);
    if (n > cfg.grad_clip) nn::scale_grads(params, cfg.grad_clip / n);
  }
  nn::adam_step(adam, params);
  return loss;
}

}  // namespace cropdrqn::agent
