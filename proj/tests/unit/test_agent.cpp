// SPDX-License-Identifier: Apache-2.0
#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <cstring>
#include <map>
#include <sstream>

#include "cropdrqn/agent/toy.hpp"
#include "cropdrqn/agent/trainer.hpp"
#include "cropdrqn/cropenv/factory.hpp"
#include "cropdrqn/nn/grad_check.hpp"
#include "support/toy_oracle.hpp"

using namespace cropdrqn;
using namespace cropdrqn::agent;
using cropdrqn::oracle::toy_optimal_return;

namespace {

QNetworkShape small_shape(std::size_t obs = 3, std::size_t actions = 4) { return {obs, 6, 5, actions}; }

QNetwork random_net(const QNetworkShape& s, std::uint64_t seed) {
  QNetwork n(s);
  RngStream rng(seed, 0);
  n.init(rng);
  return n;
}

nn::Tensor2 random_history(std::size_t l, std::size_t obs, RngStream& rng) {
  nn::Tensor2 h(l, obs);
  for (double& v : h.data) v = rng.normal();
  return h;
}

RunningNormalizer identity_normalizer(std::size_t n) {
  return RunningNormalizer::from_state(1.0, nn::Vector(n, 0.0), nn::Vector(n, 1.0));
}

bool bit_equal(const nn::Vector& a, const nn::Vector& b) {
  return a.size() == b.size() && std::memcmp(a.data(), b.data(), a.size() * sizeof(double)) == 0;
}

TrainConfig toy_config(std::size_t history, std::size_t episodes) {
  TrainConfig c;
  c.gamma = 0.9;
  c.learning_rate = 3e-3;
  c.batch_size = 32;
  c.history_length = history;
  c.sync_period = 100;
  c.replay_capacity = 4000;
  c.episodes = episodes;
  c.gru_hidden = 16;
  c.head_hidden = 16;
  c.epsilon_decay_fraction = 0.5;
  return c;
}

EnvFactory toy_factory() {
  return [] { return std::make_unique<DelayedCueEnv>(); };
}

double greedy_toy_return(const PolicyHandle& p, std::size_t n) {
  EvalOptions o;
  o.realizations = n;
  o.seed = 99;
  o.gamma = 0.9;
  return evaluate_policy(p, toy_factory(), o).metric("reward").mean;
}

}  // namespace

TEST(SelectAction, EpsilonOneIsUniform) {
  RngStream rng(1, 0);
  std::vector<double> q(25, 0.0);
  q[7] = 100.0;
  std::vector<int> counts(25, 0);
  const int n = 100000;
  for (int i = 0; i < n; ++i) ++counts[select_action(q, 1.0, rng)];
  double chi2 = 0.0;
  const double expected = n / 25.0;
  for (int c : counts) {
    EXPECT_NEAR(c / static_cast<double>(n), 1.0 / 25.0, 0.01);
    chi2 += (c - expected) * (c - expected) / expected;
  }
  // 24 dof, 99.9th percentile is about 51.2.
  EXPECT_LT(chi2, 51.2);
}

TEST(SelectAction, EpsilonZeroIsArgmaxWithLowestTie) {
  RngStream rng(2, 0);
  EXPECT_EQ(select_action(std::vector<double>(25, 0.0), 0.0, rng), 0u);
  std::vector<double> q{1.0, 3.0, 2.0, 3.0};
  EXPECT_EQ(select_action(q, 0.0, rng), 1u);
  EXPECT_THROW(select_action(q, 1.5, rng), DomainError);
}

TEST(SelectAction, ArgmaxInvariantUnderPositiveAffineMaps) {
  RngStream rng(3, 0);
  for (int trial = 0; trial < 200; ++trial) {
    std::vector<double> q(25);
    for (double& v : q) v = rng.normal();
    const double a = std::exp(rng.uniform(-3.0, 3.0)), b = rng.uniform(-100.0, 100.0);
    std::vector<double> t(q);
    for (double& v : t) v = a * v + b;
    EXPECT_EQ(greedy_action(q), greedy_action(t));
  }
}

TEST(Bellman, Examples) {
  const std::vector<double> next{3.0, -1.0, 2.0};
  EXPECT_EQ(bellman_target(5.0, true, next, 0.99), 5.0);
  EXPECT_EQ(bellman_target(1.0, false, next, 0.0), 1.0);
  EXPECT_NEAR(bellman_target(1.0, false, next, 0.99), 3.97, 1e-12);
}

TEST(Bellman, EntryOverloadUsesTargetNetwork) {
  const auto s = small_shape();
  const QNetwork target = random_net(s, 4);
  RngStream rng(4, 1);
  ReplayEntry e{random_history(5, 3, rng), 1, 0.5, random_history(5, 3, rng), false};
  const auto norm = identity_normalizer(3);
  const auto q = target.q_values(e.next_history);
  EXPECT_DOUBLE_EQ(bellman_target(e, target, norm, 0.9), 0.5 + 0.9 * *std::max_element(q.begin(), q.end()));
  e.terminal = true;
  EXPECT_EQ(bellman_target(e, target, norm, 0.9), 0.5);
}

TEST(Replay, FifoEvictionAndCapacity) {
  ReplayMemory m(3);
  for (int i = 0; i < 5; ++i) {
    m.push({nn::Tensor2(1, 1), static_cast<std::size_t>(i), 0.0, nn::Tensor2(1, 1), false});
    EXPECT_LE(m.size(), 3u);
  }
  ASSERT_EQ(m.size(), 3u);
  EXPECT_EQ(m.at(0).action, 2u);
  EXPECT_EQ(m.at(1).action, 3u);
  EXPECT_EQ(m.at(2).action, 4u);
  EXPECT_THROW(ReplayMemory(0), ConfigError);
  RngStream rng(5, 0);
  EXPECT_THROW(ReplayMemory(2).sample(rng), StateError);
}

TEST(Normalizer, WelfordMatchesTwoPassOracle) {
  RngStream rng(6, 0);
  RunningNormalizer n(3);
  std::vector<nn::Vector> rows;
  for (int i = 0; i < 500; ++i) {
    nn::Vector x{rng.normal() * 5 + 2, rng.uniform(0, 100), 7.0};
    rows.push_back(x);
    n.update(x);
  }
  for (std::size_t j = 0; j < 3; ++j) {
    double m = 0, v = 0;
    for (const auto& r : rows) m += r[j];
    m /= rows.size();
    for (const auto& r : rows) v += (r[j] - m) * (r[j] - m);
    const double sd = std::sqrt(v / rows.size());
    EXPECT_NEAR(n.mean(j), m, 1e-12 * std::max(1.0, std::abs(m)));
    if (j < 2) EXPECT_NEAR(n.sd(j), sd, 1e-10 * sd);
  }
  EXPECT_EQ(n.sd(2), 1.0);  // constant feature is only centred
  auto frozen = n.frozen_copy();
  frozen.update(nn::Vector{1e6, 1e6, 1e6});
  EXPECT_EQ(frozen.count(), n.count());
}

TEST(TrainStep, SkipsWhenMemoryShort) {
  const auto s = small_shape();
  QNetwork eval = random_net(s, 7), target = random_net(s, 8);
  const QNetwork before = eval;
  ReplayMemory m(10);
  TrainConfig cfg;
  cfg.batch_size = 4;
  nn::AdamState adam(1e-3);
  RngStream rng(7, 0);
  m.push({nn::Tensor2(2, 3), 0, 1.0, nn::Tensor2(2, 3), true});
  EXPECT_FALSE(train_step(eval, target, m, identity_normalizer(3), adam, cfg, rng).has_value());
  RngStream probe(7, 1);
  const auto h = random_history(2, 3, probe);
  EXPECT_TRUE(bit_equal(eval.q_values(h), before.q_values(h)));
}

TEST(TrainStep, FixedPointLeavesParametersUnchanged) {
  const auto s = small_shape();
  QNetwork eval = random_net(s, 9), target = random_net(s, 10);
  RngStream rng(9, 0);
  const auto h = random_history(5, 3, rng);
  const double q = eval.q_values(h)[2];
  ReplayMemory m(8);
  for (int i = 0; i < 8; ++i) m.push({h, 2, q, h, true});
  TrainConfig cfg;
  cfg.batch_size = 8;
  nn::AdamState adam(1e-3);
  const QNetwork before = eval;
  auto loss = train_step(eval, target, m, identity_normalizer(3), adam, cfg, rng);
  ASSERT_TRUE(loss.has_value());
  EXPECT_EQ(*loss, 0.0);
  RngStream probe(9, 2);
  for (int i = 0; i < 5; ++i) {
    const auto x = random_history(5, 3, probe);
    EXPECT_TRUE(bit_equal(eval.q_values(x), before.q_values(x)));
  }
}

TEST(TrainStep, SingleEntryConvergesToFixedTarget) {
  const auto s = small_shape();
  QNetwork eval = random_net(s, 11), target = random_net(s, 12);
  RngStream rng(11, 0);
  const auto h = random_history(5, 3, rng);
  ReplayMemory m(1);
  m.push({h, 1, 0.7, h, true});
  TrainConfig cfg;
  cfg.batch_size = 1;
  nn::AdamState adam(1e-2);
  for (int i = 0; i < 500; ++i) train_step(eval, target, m, identity_normalizer(3), adam, cfg, rng);
  EXPECT_NEAR(eval.q_values(h)[1], 0.7, 1e-2);
}

TEST(TrainStep, LossGradientPassesFiniteDifferenceCheck) {
  const auto s = small_shape();
  QNetwork eval = random_net(s, 13);
  const QNetwork target = random_net(s, 14);
  RngStream rng(13, 0);
  std::vector<ReplayEntry> entries;
  for (int i = 0; i < 4; ++i)
    entries.push_back({random_history(5, 3, rng), static_cast<std::size_t>(i % 4), rng.normal(),
                       random_history(5, 3, rng), i == 3});
  std::vector<const ReplayEntry*> batch;
  for (const auto& e : entries) batch.push_back(&e);
  RunningNormalizer norm(3);
  for (int i = 0; i < 20; ++i) norm.update(nn::Vector{rng.normal(), 2 * rng.normal(), rng.uniform()});
  auto params = eval.parameters();
  auto report = nn::grad_check(params, [&](bool) { return batch_loss_and_grad(eval, target, batch, norm, 0.9); },
                               1e-4);
  EXPECT_TRUE(report.passed) << report.worst_param << "[" << report.worst_index << "] rel "
                             << report.max_rel_error;
  EXPECT_EQ(report.checked, 239u);  // every parameter of the small network
}

TEST(TrainStep, NonFiniteLossThrowsBeforeUpdate) {
  const auto s = small_shape();
  QNetwork eval = random_net(s, 15), target = random_net(s, 16);
  ReplayMemory m(1);
  m.push({nn::Tensor2(2, 3), 0, std::numeric_limits<double>::infinity(), nn::Tensor2(2, 3), true});
  TrainConfig cfg;
  cfg.batch_size = 1;
  nn::AdamState adam(1e-3);
  RngStream rng(15, 0);
  const QNetwork before = eval;
  EXPECT_THROW(train_step(eval, target, m, identity_normalizer(3), adam, cfg, rng), TrainingError);
  const nn::Tensor2 h(2, 3);
  EXPECT_TRUE(bit_equal(eval.q_values(h), before.q_values(h)));
}

TEST(Sync, CopiesExactlyAndIsIdempotent) {
  const auto s = small_shape();
  QNetwork eval = random_net(s, 17), target = random_net(s, 18);
  sync_target(eval, target);
  RngStream rng(17, 0);
  std::vector<nn::Tensor2> hs;
  for (int i = 0; i < 20; ++i) hs.push_back(random_history(5, 3, rng));
  for (const auto& h : hs) {
    EXPECT_TRUE(bit_equal(eval.q_values(h), target.q_values(h)));
    EXPECT_EQ(greedy_action(eval.q_values(h)), greedy_action(target.q_values(h)));
  }
  sync_target(eval, target);
  for (const auto& h : hs) EXPECT_TRUE(bit_equal(eval.q_values(h), target.q_values(h)));

  ReplayMemory m(4);
  for (int i = 0; i < 4; ++i) m.push({hs[i], 0, 1.0, hs[i + 1], false});
  TrainConfig cfg;
  cfg.batch_size = 4;
  nn::AdamState adam(1e-2);
  train_step(eval, target, m, identity_normalizer(3), adam, cfg, rng);
  EXPECT_FALSE(bit_equal(eval.q_values(hs[0]), target.q_values(hs[0])));

  QNetwork other(QNetworkShape{3, 7, 5, 4});
  EXPECT_THROW(sync_target(eval, other), ConfigError);
}

TEST(Epsilon, MonotoneAndExactAtHorizon) {
  TrainConfig c;
  c.episodes = 1000;
  const auto sched = EpsilonSchedule::from(c);
  EXPECT_EQ(sched.horizon, 600u);
  EXPECT_EQ(sched(0), 1.0);
  EXPECT_EQ(sched(600), 0.05);
  EXPECT_EQ(sched(999), 0.05);
  for (std::size_t e = 1; e < 1000; ++e) EXPECT_LE(sched(e), sched(e - 1));
  EXPECT_EQ((EpsilonSchedule{0.3, 0.3, 0})(0), 0.3);
}

TEST(Evaluator, DiscountedReturnMatchesHandRolledSum) {
  cropenv::SeasonConfig sc;
  auto env = cropenv::make_crop_env(sc);
  RngStream world(19, 1), noise(19, 2), pick(19, 3);
  auto rec = run_episode(*env, 5, [&](const nn::Tensor2&) { return pick.index(25); }, world, noise, 0.99);
  ASSERT_GT(rec.rewards.size(), 50u);
  double oracle = 0.0;
  for (std::size_t t = 0; t < rec.rewards.size(); ++t)
    oracle += std::pow(0.99, static_cast<double>(t)) * rec.rewards[t];
  EXPECT_NEAR(rec.discounted, oracle, 1e-12 * std::max(1.0, std::abs(oracle)));
}

TEST(Evaluator, DeterministicEnvironmentHasZeroWidthIntervals) {
  cropenv::SeasonConfig sc;
  sc.emission.noise = 0.0;
  EnvFactory factory = [sc] { return std::unique_ptr<cropenv::Environment>(cropenv::make_crop_env(sc)); };
  auto probe = factory();
  const QNetwork net = random_net({probe->observation_size(), 8, 8, probe->action_count()}, 20);
  const PolicyHandle p(net, identity_normalizer(probe->observation_size()), 5, PolicyLabel::fixed());
  EvalOptions o;
  o.realizations = 6;
  o.seed = 20;
  const auto s = evaluate_policy(p, factory, o);
  ASSERT_GE(s.metrics.size(), 7u);  // reward, discounted, and the five env totals
  for (const auto& [name, m] : s.metrics) {
    EXPECT_EQ(m.lo, m.hi) << name;
    EXPECT_EQ(m.n, 6u);
  }
}

TEST(Evaluator, WorkerCountDoesNotChangeResults) {
  cropenv::SeasonConfig sc;
  sc.weather.kind = cropenv::WeatherSpec::Kind::Generated;
  EnvFactory factory = [sc] { return std::unique_ptr<cropenv::Environment>(cropenv::make_crop_env(sc)); };
  auto probe = factory();
  const QNetwork net = random_net({probe->observation_size(), 8, 8, probe->action_count()}, 21);
  const PolicyHandle p(net, identity_normalizer(probe->observation_size()), 5, PolicyLabel::fixed());
  EvalOptions o;
  o.realizations = 6;
  o.seed = 21;
  const auto a = evaluate_policy(p, factory, o);
  o.workers = 3;
  const auto b = evaluate_policy(p, factory, o);
  ASSERT_EQ(a.episodes.size(), b.episodes.size());
  for (std::size_t k = 0; k < a.episodes.size(); ++k) EXPECT_EQ(a.episodes[k].rewards, b.episodes[k].rewards);
  EXPECT_GT(a.metric("reward").hi, a.metric("reward").lo);
}

TEST(Evaluator, ResampleFlagsPinStreams) {
  EvalOptions o;
  o.resample_weather = false;
  auto [w0, n0] = realization_streams(o, 0);
  auto [w5, n5] = realization_streams(o, 5);
  EXPECT_EQ(w0.uniform(), w5.uniform());
  EXPECT_NE(n0.uniform(), n5.uniform());
}

TEST(Percentile, MatchesSortingOracle) {
  RngStream rng(22, 0);
  for (int trial = 0; trial < 50; ++trial) {
    const std::size_t n = 1 + rng.index(40);
    std::vector<double> xs(n);
    for (double& v : xs) v = rng.normal();
    std::vector<double> sorted(xs);
    std::sort(sorted.begin(), sorted.end());
    for (double p : {0.0, 0.025, 0.3, 0.5, 0.975, 1.0}) {
      const double h = (n - 1) * p;
      const std::size_t lo = static_cast<std::size_t>(std::floor(h));
      const std::size_t hi = std::min(lo + 1, n - 1);
      const double oracle = sorted[lo] + (h - lo) * (sorted[hi] - sorted[lo]);
      EXPECT_EQ(percentile(xs, p), oracle);
    }
  }
}

TEST(Policy, CheckpointRoundTripIsExact) {
  const auto s = small_shape();
  const QNetwork net = random_net(s, 23);
  RunningNormalizer norm(3);
  RngStream rng(23, 0);
  for (int i = 0; i < 30; ++i) norm.update(nn::Vector{rng.normal(), rng.uniform(), 3 * rng.normal()});
  const PolicyHandle p(net, norm, 5, PolicyLabel::optimal("T+2"));
  const auto back = policy_from_checkpoint(nn::parse_checkpoint(nn::serialize_checkpoint(policy_to_checkpoint(p))));
  EXPECT_EQ(back.label(), PolicyLabel::optimal("T+2"));
  EXPECT_EQ(back.history_length(), 5u);
  for (int i = 0; i < 10; ++i) {
    const auto h = random_history(5, 3, rng);
    EXPECT_TRUE(bit_equal(p.q_values(h), back.q_values(h)));
  }
  EXPECT_THROW(PolicyLabel::parse("best"), ParseError);
}

TEST(Config, JsonRoundTripAndValidation) {
  TrainConfig c = toy_config(3, 77);
  c.warm_start = "policy.ckpt";
  const auto back = train_config_from_json(train_config_to_json(c));
  EXPECT_EQ(train_config_to_json(back), train_config_to_json(c));
  EXPECT_THROW(train_config_from_json({{"gama", 0.9}}), ConfigError);
  EXPECT_THROW(train_config_from_json({{"gamma", 1.5}}), ConfigError);
  EXPECT_THROW(train_config_from_json({{"batch_size", 10}, {"replay_capacity", 5}}), ConfigError);
  EXPECT_THROW(train_config_from_json({{"episodes", "many"}}), ConfigError);
}

TEST(Training, SameSeedGivesBitIdenticalCurves) {
  const auto cfg = toy_config(5, 60);
  const auto a = train_policy(toy_factory(), cfg, 31);
  const auto b = train_policy(toy_factory(), cfg, 31);
  ASSERT_EQ(a.curve.size(), b.curve.size());
  for (std::size_t i = 0; i < a.curve.size(); ++i) {
    EXPECT_EQ(a.curve[i].total_return, b.curve[i].total_return);
    EXPECT_EQ(std::isnan(a.curve[i].loss), std::isnan(b.curve[i].loss));
    if (!std::isnan(a.curve[i].loss)) EXPECT_EQ(a.curve[i].loss, b.curve[i].loss);
  }
  const nn::Tensor2 h(5, 2, 0.25);
  EXPECT_TRUE(bit_equal(a.policy.q_values(h), b.policy.q_values(h)));
  const auto c = train_policy(toy_factory(), cfg, 32);
  EXPECT_FALSE(bit_equal(a.policy.q_values(h), c.policy.q_values(h)));
}

TEST(Training, ExhaustiveOracleOnDelayedCue) {
  EXPECT_EQ(toy_optimal_return(5), 1.0);
  EXPECT_EQ(toy_optimal_return(4), 1.0);
  EXPECT_EQ(toy_optimal_return(1), 0.5);
}

TEST(Training, RecurrentAgentSolvesDelayedCueAndMemorylessCannot) {
  const double opt5 = toy_optimal_return(5);
  const auto rec = train_policy(toy_factory(), toy_config(5, 1500), 41);
  const double r5 = greedy_toy_return(rec.policy, 400);
  EXPECT_GE(r5, 0.95 * opt5) << "l=5 greedy return " << r5;

  const auto mem = train_policy(toy_factory(), toy_config(1, 1500), 41);
  const double r1 = greedy_toy_return(mem.policy, 400);
  EXPECT_LT(r1, 0.8 * opt5) << "l=1 greedy return " << r1;
}

TEST(Training, WarmStartReachesColdFinalReturnInHalfTheEpisodes) {
  const std::size_t episodes = 1500, window = 100;
  const auto cold = train_policy(toy_factory(), toy_config(5, episodes), 51);
  auto moving = [&](const std::vector<CurvePoint>& c, std::size_t end) {
    double s = 0.0;
    for (std::size_t i = end - window; i < end; ++i) s += c[i].total_return;
    return s / window;
  };
  const double cold_final = moving(cold.curve, episodes);

  auto warm_cfg = toy_config(5, episodes);
  warm_cfg.epsilon_start = warm_cfg.epsilon_end;  // a pre-trained policy does not restart exploration
  const auto warm = train_policy(toy_factory(), warm_cfg, 52, cold.policy);
  std::size_t reached = episodes + 1;
  for (std::size_t e = window; e <= episodes; ++e)
    if (moving(warm.curve, e) >= cold_final) {
      reached = e;
      break;
    }
  EXPECT_LE(reached, episodes / 2) << "cold final " << cold_final;
}

TEST(Training, WarmStartArchitectureMismatchIsConfigError) {
  const auto base = train_policy(toy_factory(), toy_config(5, 5), 61);
  auto cfg = toy_config(5, 5);
  cfg.gru_hidden = 8;
  EXPECT_THROW(train_policy(toy_factory(), cfg, 61, base.policy), ConfigError);
  cfg = toy_config(3, 5);
  EXPECT_THROW(train_policy(toy_factory(), cfg, 61, base.policy), ConfigError);
}

TEST(Training, NonFiniteLossAbortsWithLastGoodPolicy) {
  auto cfg = toy_config(5, 50);
  cfg.reward_scale = 1e300;
  cfg.batch_size = 4;
  try {
    train_policy(toy_factory(), cfg, 71);
    FAIL() << "expected TrainingAborted";
  } catch (const TrainingAborted& e) {
    EXPECT_NE(std::string(e.what()).find("non-finite"), std::string::npos);
    const nn::Tensor2 h(5, 2, 0.5);
    for (double q : e.last_good().q_values(h)) EXPECT_TRUE(std::isfinite(q));
    EXPECT_FALSE(e.curve().empty());
  }
}

TEST(Training, ValidationKeepsBestSnapshot) {
  auto cfg = toy_config(5, 200);
  cfg.eval_every = 50;
  cfg.eval_episodes = 20;
  const auto r = train_policy(toy_factory(), cfg, 81);
  double best = -1.0;
  std::size_t best_ep = 0;
  for (const auto& p : r.curve)
    if (!std::isnan(p.validation) && p.validation > best) {
      best = p.validation;
      best_ep = p.episode;
    }
  EXPECT_EQ(r.best_episode, best_ep);
  std::ostringstream os;
  write_curve_csv(r.curve, os);
  EXPECT_EQ(os.str().substr(0, 35), "episode,return,epsilon,loss,validat");
}
