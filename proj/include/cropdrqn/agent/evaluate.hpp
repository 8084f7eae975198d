// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <atomic>
#include <exception>
#include <functional>
#include <memory>
#include <mutex>
#include <string>
#include <thread>
#include <vector>

#include "cropdrqn/agent/history.hpp"
#include "cropdrqn/agent/policy.hpp"
#include "cropdrqn/core/stats.hpp"
#include "cropdrqn/cropenv/environment.hpp"

namespace cropdrqn::agent {

using EnvFactory = std::function<std::unique_ptr<cropenv::Environment>()>;

inline constexpr std::size_t kMaxEpisodeSteps = 100000;

struct EpisodeRecord {
  std::vector<double> rewards;
  std::vector<std::size_t> actions;
  double total = 0.0;
  double discounted = 0.0;
  cropenv::EpisodeMetrics metrics;
};

/// One greedy episode. `choose` maps a raw history matrix to an action.
inline EpisodeRecord run_episode(cropenv::Environment& env, std::size_t history_length,
                                 const std::function<std::size_t(const nn::Tensor2&)>& choose, RngStream& world,
                                 RngStream& noise, double gamma) {
  HistoryBuffer hist(history_length);
  hist.push(env.reset(world, noise));
  EpisodeRecord rec;
  for (;;) {
    if (rec.rewards.size() >= kMaxEpisodeSteps) throw StateError("episode did not terminate");
    const std::size_t a = choose(hist.matrix());
    auto sr = env.step(a);
    rec.actions.push_back(a);
    rec.rewards.push_back(sr.reward);
    if (sr.terminal) break;
    hist.push(std::move(sr.observation));
  }
  for (double r : rec.rewards) rec.total += r;
  rec.discounted = discounted_return(rec.rewards, gamma);
  rec.metrics = env.episode_metrics();
  return rec;
}

inline EpisodeRecord run_greedy_episode(const PolicyHandle& policy, cropenv::Environment& env, RngStream& world,
                                        RngStream& noise, double gamma) {
  return run_episode(
      env, policy.history_length(), [&](const nn::Tensor2& h) { return policy.act(h); }, world, noise, gamma);
}

struct EvalOptions {
  std::size_t realizations = 300;
  std::uint64_t seed = 0;
  bool resample_weather = true;
  bool resample_noise = true;
  std::size_t workers = 1;
  double gamma = 0.99;
};

/// Streams for realization k. A disabled resample flag pins that stream to k = 0,
/// so every realization sees the same draw.
inline std::pair<RngStream, RngStream> realization_streams(const EvalOptions& o, std::size_t k) {
  const RngStream base(o.seed, 0xE7A1);
  return {base.derive(1).derive(o.resample_weather ? k : 0), base.derive(2).derive(o.resample_noise ? k : 0)};
}

struct EvalSummary {
  std::vector<EpisodeRecord> episodes;
  std::vector<std::pair<std::string, MetricSummary>> metrics;  // "reward", "discounted_reward", then env metrics

  const MetricSummary& metric(const std::string& name) const {
    for (const auto& [n, m] : metrics)
      if (n == name) return m;
    throw DomainError("no metric named '" + name + "'");
  }
};

inline EvalSummary summarize_episodes(std::vector<EpisodeRecord> episodes) {
  if (episodes.empty()) throw DomainError("no episodes to summarize");
  EvalSummary s;
  auto column = [&](auto get) {
    std::vector<double> v;
    v.reserve(episodes.size());
    for (const auto& e : episodes) v.push_back(get(e));
    return summarize_metric(v);
  };
  s.metrics.emplace_back("reward", column([](const EpisodeRecord& e) { return e.total; }));
  s.metrics.emplace_back("discounted_reward", column([](const EpisodeRecord& e) { return e.discounted; }));
  const auto& names = episodes.front().metrics;
  for (std::size_t i = 0; i < names.size(); ++i) {
    const std::string& name = names[i].first;
    s.metrics.emplace_back(name, column([&](const EpisodeRecord& e) {
                             if (e.metrics.size() != names.size() || e.metrics[i].first != name)
                               throw StateError("episodes report different metrics");
                             return e.metrics[i].second;
                           }));
  }
  s.episodes = std::move(episodes);
  return s;
}

/// Runs realizations 0..n-1 across `workers` threads. Each worker owns its own
/// environment; results land by index, so the output does not depend on the
/// worker count or scheduling.
template <typename EpisodeFn>
std::vector<EpisodeRecord> run_parallel(std::size_t n, std::size_t workers, const EnvFactory& factory,
                                        const EpisodeFn& fn) {
  if (n == 0) throw ConfigError("need at least one realization");
  workers = std::max<std::size_t>(1, std::min(workers, n));
  std::vector<std::unique_ptr<cropenv::Environment>> envs;
  for (std::size_t w = 0; w < workers; ++w) envs.push_back(factory());
  std::vector<EpisodeRecord> out(n);
  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_mu;
  auto work = [&](std::size_t w) {
    for (;;) {
      const std::size_t k = next.fetch_add(1);
      if (k >= n) return;
      try {
        out[k] = fn(*envs[w], k);
      } catch (...) {
        std::lock_guard lock(failure_mu);
        if (!failure) failure = std::current_exception();
        next.store(n);
        return;
      }
    }
  };
  if (workers == 1) {
    work(0);
  } else {
    std::vector<std::thread> pool;
    for (std::size_t w = 0; w < workers; ++w) pool.emplace_back(work, w);
    for (auto& t : pool) t.join();
  }
  if (failure) std::rethrow_exception(failure);
  return out;
}

inline EvalSummary evaluate_policy(const PolicyHandle& policy, const EnvFactory& factory, const EvalOptions& o) {
  auto episodes = run_parallel(o.realizations, o.workers, factory, [&](cropenv::Environment& env, std::size_t k) {
    auto [world, noise] = realization_streams(o, k);
    return run_greedy_episode(policy, env, world, noise, o.gamma);
  });
  return summarize_episodes(std::move(episodes));
}

}  // namespace cropdrqn::agent
