// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cmath>
#include <functional>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "cropdrqn/agent/config.hpp"
#include "cropdrqn/agent/dqn.hpp"
#include "cropdrqn/agent/evaluate.hpp"
#include "cropdrqn/agent/history.hpp"
#include "cropdrqn/agent/policy.hpp"
#include "cropdrqn/agent/replay.hpp"

namespace cropdrqn::agent {

struct CurvePoint {
  std::size_t episode = 0;
  double total_return = 0.0;  // undiscounted, unscaled
  double epsilon = 0.0;
  double loss = std::numeric_limits<double>::quiet_NaN();  // mean over the episode's train steps
  double validation = std::numeric_limits<double>::quiet_NaN();
};

struct TrainResult {
  PolicyHandle policy;
  std::vector<CurvePoint> curve;
  std::size_t env_steps = 0;
  std::size_t train_steps = 0;
  std::size_t best_episode = 0;  // episode after which the returned snapshot was taken
};

/// Training stopped on a non-finite loss; carries the last finite policy.
class TrainingAborted : public TrainingError {
 public:
  TrainingAborted(const std::string& what, PolicyHandle last_good, std::vector<CurvePoint> curve)
      : TrainingError(what), last_good_(std::move(last_good)), curve_(std::move(curve)) {}
  const PolicyHandle& last_good() const noexcept { return last_good_; }
  const std::vector<CurvePoint>& curve() const noexcept { return curve_; }

 private:
  PolicyHandle last_good_;
  std::vector<CurvePoint> curve_;
};

using ProgressFn = std::function<void(const CurvePoint&)>;

/// Recurrent DQN. With `warm` set, theta_E and theta_T start from the given
/// policy and its normalization statistics stay frozen.
///
/// Streams under `seed`: 1 init, 2 episode environments, 3 exploration,
/// 4 replay sampling, 5 validation episodes (the same ones each time).
inline TrainResult train_policy(const EnvFactory& factory, const TrainConfig& cfg, std::uint64_t seed,
                                const std::optional<PolicyHandle>& warm = std::nullopt,
                                PolicyLabel label = PolicyLabel::fixed(), const ProgressFn& progress = {}) {
  cfg.validate();
  auto env = factory();
  const RngStream root(seed, 0xD09);
  RngStream init_rng = root.derive(1), explore = root.derive(3), sampler = root.derive(4);

  QNetworkShape shape{env->observation_size(), cfg.gru_hidden, cfg.head_hidden, env->action_count()};
  RunningNormalizer norm(shape.observation_size);
  QNetwork eval(shape);
  eval.init(init_rng);
  if (warm) {
    if (warm->history_length() != cfg.history_length)
      throw ConfigError("warm-start policy history length differs from the training config");
    if (!(warm->network().shape() == shape)) throw ConfigError("warm-start policy architecture differs");
    eval.copy_from(warm->network());
    norm = warm->normalizer();
  }
  QNetwork target(shape);
  sync_target(eval, target);

  ReplayMemory memory(cfg.replay_capacity);
  nn::AdamState adam(cfg.learning_rate);
  const EpsilonSchedule schedule = EpsilonSchedule::from(cfg);
  HistoryBuffer hist(cfg.history_length);

  std::vector<CurvePoint> curve;
  curve.reserve(cfg.episodes);
  std::size_t steps = 0, updates = 0;
  const bool validating = cfg.eval_every > 0;
  double best_score = -std::numeric_limits<double>::infinity();
  std::optional<PolicyHandle> best;
  std::size_t best_episode = 0;

  auto snapshot = [&] { return PolicyHandle(eval, norm, cfg.history_length, label); };
  auto validate = [&] {
    const PolicyHandle p = snapshot();
    const RngStream vroot = root.derive(5);
    double sum = 0.0;
    for (std::size_t k = 0; k < cfg.eval_episodes; ++k) {
      RngStream world = vroot.derive(2 * k), noise = vroot.derive(2 * k + 1);
      sum += run_greedy_episode(p, *env, world, noise, cfg.gamma).total;
    }
    return sum / static_cast<double>(cfg.eval_episodes);
  };

  for (std::size_t ep = 0; ep < cfg.episodes; ++ep) {
    CurvePoint pt;
    pt.episode = ep;
    pt.epsilon = schedule(ep);
    const RngStream ep_rng = root.derive(2).derive(ep);
    RngStream world = ep_rng.derive(1), noise = ep_rng.derive(2);
    nn::Vector obs = env->reset(world, noise);
    hist.clear();
    norm.update(obs);
    hist.push(std::move(obs));
    nn::Tensor2 h = hist.matrix();
    double loss_sum = 0.0;
    std::size_t loss_n = 0;
    for (std::size_t t = 0;; ++t) {
      if (t >= kMaxEpisodeSteps) throw StateError("episode did not terminate");
      const std::size_t a = select_action(eval, norm.apply(h), pt.epsilon, explore);
      auto sr = env->step(a);
      pt.total_return += sr.reward;
      norm.update(sr.observation);
      hist.push(std::move(sr.observation));
      nn::Tensor2 next = hist.matrix();
      memory.push({h, a, sr.reward * cfg.reward_scale, next, sr.terminal});
      h = std::move(next);
      ++steps;
      if (steps % cfg.train_every == 0) {
        std::optional<double> loss;
        try {
          loss = train_step(eval, target, memory, norm, adam, cfg, sampler);
        } catch (const TrainingError& e) {
          pt.loss = std::numeric_limits<double>::quiet_NaN();
          curve.push_back(pt);
          throw TrainingAborted(std::string(e.what()) + " (episode " + std::to_string(ep) + ", step " +
                                    std::to_string(steps) + ")",
                                snapshot(), curve);
        }
        if (loss) {
          loss_sum += *loss;
          ++loss_n;
          ++updates;
        }
      }
      if (steps % cfg.sync_period == 0) sync_target(eval, target);
      if (sr.terminal) break;
    }
    if (loss_n) pt.loss = loss_sum / static_cast<double>(loss_n);
    if (validating && ((ep + 1) % cfg.eval_every == 0 || ep + 1 == cfg.episodes)) {
      pt.validation = validate();
      if (pt.validation > best_score) {
        best_score = pt.validation;
        best = snapshot();
        best_episode = ep;
      }
    }
    if (progress) progress(pt);
    curve.push_back(pt);
  }
  PolicyHandle out = best ? *best : snapshot();
  return {out, std::move(curve), steps, updates, best ? best_episode : cfg.episodes - 1};
}

inline void write_curve_csv(const std::vector<CurvePoint>& curve, std::ostream& os) {
  os << "episode,return,epsilon,loss,validation\n";
  for (const auto& p : curve)
    os << p.episode << ',' << text::exact(p.total_return) << ',' << text::exact(p.epsilon) << ','
       << (std::isnan(p.loss) ? std::string() : text::exact(p.loss)) << ','
       << (std::isnan(p.validation) ? std::string() : text::exact(p.validation)) << '\n';
}

}  // namespace cropdrqn::agent
