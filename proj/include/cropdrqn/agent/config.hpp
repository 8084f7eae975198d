// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cmath>
#include <cstdint>
#include <string>

#include <nlohmann/json.hpp>

#include "cropdrqn/agent/qnetwork.hpp"
#include "cropdrqn/core/error.hpp"
#include "cropdrqn/core/json.hpp"

namespace cropdrqn::agent {

struct TrainConfig {
  double gamma = 0.99;
  double learning_rate = 1e-5;
  std::size_t batch_size = 640;
  std::size_t history_length = 5;
  double epsilon_start = 1.0;
  double epsilon_end = 0.05;
  double epsilon_decay_fraction = 0.6;  // of the episode budget
  std::size_t sync_period = 1000;       // environment steps
  std::size_t replay_capacity = 100000;
  std::size_t episodes = 1000;
  std::size_t train_every = 1;          // environment steps per gradient step
  double reward_scale = 1.0;            // rewards are multiplied by this before storage
  double grad_clip = 0.0;               // global L2 norm; 0 disables
  std::size_t gru_hidden = 64;
  std::size_t head_hidden = 64;
  // Periodic greedy validation; the best snapshot is returned. 0 disables.
  std::size_t eval_every = 0;
  std::size_t eval_episodes = 0;
  std::string warm_start;               // policy checkpoint path, optional

  std::size_t decay_horizon() const {
    return static_cast<std::size_t>(std::llround(epsilon_decay_fraction * static_cast<double>(episodes)));
  }

  void validate() const {
    if (!(gamma >= 0.0 && gamma <= 1.0)) throw ConfigError("gamma must lie in [0, 1]");
    if (!(learning_rate > 0.0) || !std::isfinite(learning_rate)) throw ConfigError("learning_rate must be positive");
    if (batch_size == 0) throw ConfigError("batch_size must be positive");
    if (batch_size > replay_capacity) throw ConfigError("batch_size exceeds replay_capacity");
    if (history_length == 0) throw ConfigError("history_length must be at least 1");
    for (double e : {epsilon_start, epsilon_end})
      if (!(e >= 0.0 && e <= 1.0)) throw ConfigError("epsilon values must lie in [0, 1]");
    if (epsilon_end > epsilon_start) throw ConfigError("epsilon_end exceeds epsilon_start");
    if (!(epsilon_decay_fraction >= 0.0 && epsilon_decay_fraction <= 1.0))
      throw ConfigError("epsilon_decay_fraction must lie in [0, 1]");
    if (sync_period == 0) throw ConfigError("sync_period must be positive");
    if (episodes == 0) throw ConfigError("episodes must be positive");
    if (train_every == 0) throw ConfigError("train_every must be positive");
    if (!(reward_scale > 0.0) || !std::isfinite(reward_scale)) throw ConfigError("reward_scale must be positive");
    if (!(grad_clip >= 0.0)) throw ConfigError("grad_clip must be nonnegative");
    if (gru_hidden == 0) throw ConfigError("gru_hidden must be positive");
    if (eval_every > 0 && eval_episodes == 0) throw ConfigError("eval_every needs eval_episodes > 0");
  }
};

inline TrainConfig train_config_from_json(const nlohmann::json& j) {
  using jsonio::read_opt;
  const std::string w = "training";
  jsonio::check_keys(j, {"gamma", "learning_rate", "batch_size", "history_length", "epsilon_start", "epsilon_end",
                         "epsilon_decay_fraction", "sync_period", "replay_capacity", "episodes", "train_every",
                         "reward_scale", "grad_clip", "gru_hidden", "head_hidden", "eval_every", "eval_episodes",
                         "warm_start"},
                     w);
  TrainConfig c;
  read_opt(j, "gamma", c.gamma, w);
  read_opt(j, "learning_rate", c.learning_rate, w);
  read_opt(j, "batch_size", c.batch_size, w);
  read_opt(j, "history_length", c.history_length, w);
  read_opt(j, "epsilon_start", c.epsilon_start, w);
  read_opt(j, "epsilon_end", c.epsilon_end, w);
  read_opt(j, "epsilon_decay_fraction", c.epsilon_decay_fraction, w);
  read_opt(j, "sync_period", c.sync_period, w);
  read_opt(j, "replay_capacity", c.replay_capacity, w);
  read_opt(j, "episodes", c.episodes, w);
  read_opt(j, "train_every", c.train_every, w);
  read_opt(j, "reward_scale", c.reward_scale, w);
  read_opt(j, "grad_clip", c.grad_clip, w);
  read_opt(j, "gru_hidden", c.gru_hidden, w);
  read_opt(j, "head_hidden", c.head_hidden, w);
  read_opt(j, "eval_every", c.eval_every, w);
  read_opt(j, "eval_episodes", c.eval_episodes, w);
  read_opt(j, "warm_start", c.warm_start, w);
  c.validate();
  return c;
}

inline nlohmann::json train_config_to_json(const TrainConfig& c) {
  nlohmann::json j = {{"gamma", c.gamma},
                      {"learning_rate", c.learning_rate},
                      {"batch_size", c.batch_size},
                      {"history_length", c.history_length},
                      {"epsilon_start", c.epsilon_start},
                      {"epsilon_end", c.epsilon_end},
                      {"epsilon_decay_fraction", c.epsilon_decay_fraction},
                      {"sync_period", c.sync_period},
                      {"replay_capacity", c.replay_capacity},
                      {"episodes", c.episodes},
                      {"train_every", c.train_every},
                      {"reward_scale", c.reward_scale},
                      {"grad_clip", c.grad_clip},
                      {"gru_hidden", c.gru_hidden},
                      {"head_hidden", c.head_hidden},
                      {"eval_every", c.eval_every},
                      {"eval_episodes", c.eval_episodes}};
  if (!c.warm_start.empty()) j["warm_start"] = c.warm_start;
  return j;
}

}  // namespace cropdrqn::agent
