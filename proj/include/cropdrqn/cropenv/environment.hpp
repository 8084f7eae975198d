// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <string>
#include <utility>
#include <vector>

#include "cropdrqn/core/rng.hpp"
#include "cropdrqn/nn/tensor.hpp"

namespace cropdrqn::cropenv {

struct StepResult {
  nn::Vector observation;
  double reward = 0.0;
  bool terminal = false;
};

using EpisodeMetrics = std::vector<std::pair<std::string, double>>;

/// Episodic environment with a flat observation vector and discrete actions.
///
/// Randomness comes from two streams: `world` drives exogenous conditions
/// (weather, task draws) and `noise` drives measurement-type noise (emission
/// sampling). Keeping them apart lets callers resample one while holding the
/// other fixed.
class Environment {
 public:
  virtual ~Environment() = default;
  virtual std::size_t observation_size() const = 0;
  virtual std::size_t action_count() const = 0;
  virtual nn::Vector reset(RngStream& world, RngStream& noise) = 0;
  /// Throws StateError after the terminal step.
  virtual StepResult step(std::size_t action) = 0;
  /// Named totals of the finished episode, for reports.
  virtual EpisodeMetrics episode_metrics() const { return {}; }

  /// Single-stream convenience: world and noise are derived from `rng`.
  nn::Vector reset(RngStream& rng) {
    RngStream world = rng.derive(1), noise = rng.derive(2);
    return reset(world, noise);
  }
};

}  // namespace cropdrqn::cropenv
