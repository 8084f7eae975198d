// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <filesystem>
#include <fstream>
#include <functional>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include "cropdrqn/agent/evaluate.hpp"
#include "cropdrqn/agent/trainer.hpp"
#include "cropdrqn/core/checksum.hpp"
#include "cropdrqn/cropenv/factory.hpp"
#include "cropdrqn/harness/spec.hpp"

namespace cropdrqn::harness {

using Logger = std::function<void(const std::string&)>;

/// Seed for a named purpose under the experiment seed.
inline std::uint64_t stream_seed(std::uint64_t seed, const std::string& key) {
  return cropdrqn::detail::splitmix64(seed ^ fnv1a64(key));
}

/// Per-metric mean and 2.5/97.5 percentiles (linear interpolation between order
/// statistics) over realization records.
inline agent::EvalSummary summarize(std::vector<agent::EpisodeRecord> records) {
  return agent::summarize_episodes(std::move(records));
}

/// One climate scenario of a sweep.
struct Scenario {
  double temp_offset = 0.0;
  double rain_factor = 1.0;

  bool baseline() const { return temp_offset == 0.0 && rain_factor == 1.0; }

  /// Identifies the scenario across sweeps; the unperturbed climate has one key.
  std::string key() const {
    if (baseline()) return "baseline";
    std::string k;
    if (temp_offset != 0.0) k += "temp_" + text::exact(temp_offset);
    if (rain_factor != 1.0) k += (k.empty() ? "" : "_") + std::string("rain_") + text::exact(rain_factor);
    return k;
  }

  std::string label() const {
    if (baseline()) return "baseline";
    std::string l;
    if (temp_offset != 0.0) l += "T+" + text::exact(temp_offset) + "C";
    if (rain_factor != 1.0) {
      const long cut = std::lround((1.0 - rain_factor) * 100.0);
      l += (l.empty() ? "" : " ") + std::string("rain-") + std::to_string(cut) + "%";
      if (rain_factor <= 0.2 + 1e-12) l += " (drought)";
    }
    return l;
  }
};

inline Scenario scenario_at(ExperimentKind kind, double point) {
  return kind == ExperimentKind::PrecipSweep ? Scenario{0.0, point} : Scenario{point, 1.0};
}

struct Cell {
  std::string scenario;  // key, or "case<k>"
  std::string label;
  double point = 0.0;    // offset, rain factor, or case number
  PolicyKind policy = PolicyKind::Fixed;
  agent::EvalSummary summary;
};

/// One deterministic realization of the case study.
struct CaseRow {
  int case_id = 0;
  PolicyKind policy = PolicyKind::Fixed;
  double reward = 0.0;
  cropenv::EpisodeMetrics metrics;
  std::string weather_digest;
};

struct PolicyRecord {
  std::string name;
  std::string source;  // trained, fine-tuned, loaded
  std::uint64_t train_seed = 0;
  std::string checkpoint;  // where it was saved or loaded from
  std::size_t episodes = 0;
  // Fine-tune acceptance on validation realizations.
  std::optional<bool> accepted;
  double validation_candidate = 0.0;
  double validation_fixed = 0.0;
  std::vector<agent::CurvePoint> curve;
};

struct SweepResult {
  ExperimentSpec spec;
  std::vector<Cell> cells;  // canonical order: points, then policies
  std::vector<CaseRow> case_rows;
  std::vector<PolicyRecord> policies;
  std::uint64_t eval_seed = 0;

  const Cell& cell(const std::string& scenario, PolicyKind p) const {
    for (const auto& c : cells)
      if (c.scenario == scenario && c.policy == p) return c;
    throw DomainError("no cell for " + scenario + " / " + to_string(p));
  }
};

namespace detail {

inline agent::EnvFactory factory_for(const cropenv::SeasonConfig& season, const std::filesystem::path& base) {
  // Sources are shared across the environments a factory builds.
  auto weather = cropenv::make_weather_source(season.weather, base);
  auto emission = cropenv::make_emission_source(season.emission, base);
  return [season, weather, emission] {
    return std::unique_ptr<cropenv::Environment>(std::make_unique<cropenv::CropEnv>(season, weather, emission));
  };
}

inline cropenv::SeasonConfig case_season(const ExperimentSpec& s, int case_id) {
  auto season = s.season;
  season.weights = cropenv::RewardWeights::case_preset(case_id);
  return season;
}

inline cropenv::SeasonConfig scenario_season(const ExperimentSpec& s, const Scenario& sc) {
  auto season = s.season;
  season.weather.kind = cropenv::WeatherSpec::Kind::Generated;
  season.weather.scenario.temp_offset = sc.temp_offset;
  season.weather.scenario.rain_factor = sc.rain_factor;
  season.weather.scenario.preserve_monthly_totals = true;
  return season;
}

/// The season the fixed policy is trained on: the configured (by default the
/// reference-year) weather with the configured weights.
inline cropenv::SeasonConfig fixed_training_season(const ExperimentSpec& s) { return s.season; }

template <typename Fn>
void parallel_for(std::size_t n, std::size_t workers, const Fn& fn) {
  workers = std::max<std::size_t>(1, std::min(workers, n));
  if (workers == 1) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex mu;
  std::vector<std::thread> pool;
  for (std::size_t w = 0; w < workers; ++w)
    pool.emplace_back([&] {
      for (;;) {
        const std::size_t i = next.fetch_add(1);
        if (i >= n) return;
        try {
          fn(i);
        } catch (...) {
          std::lock_guard lock(mu);
          if (!failure) failure = std::current_exception();
          next.store(n);
          return;
        }
      }
    });
  for (auto& t : pool) t.join();
  if (failure) std::rethrow_exception(failure);
}

inline std::string weather_digest(const weather::WeatherSeries& w) {
  std::string bytes;
  for (const auto& d : w)
    bytes += format_date(d.date) + ',' + text::exact(d.srad) + ',' + text::exact(d.tmax) + ',' +
             text::exact(d.tmin) + ',' + text::exact(d.rain) + '\n';
  return to_hex(fnv1a64(bytes));
}

inline void ensure_dir(const std::filesystem::path& p) {
  std::error_code ec;
  std::filesystem::create_directories(p, ec);
  if (ec || !std::filesystem::is_directory(p)) throw IoError("cannot create directory " + p.string());
}

inline agent::EvalSummary evaluate_random(const agent::EnvFactory& factory, const agent::EvalOptions& o,
                                          std::uint64_t action_seed, std::size_t history_length) {
  auto episodes = agent::run_parallel(o.realizations, o.workers, factory,
                                      [&](cropenv::Environment& env, std::size_t k) {
                                        auto [world, noise] = agent::realization_streams(o, k);
                                        RngStream pick(action_seed, k);
                                        const std::size_t n = env.action_count();
                                        return agent::run_episode(
                                            env, history_length, [&](const nn::Tensor2&) { return pick.index(n); },
                                            world, noise, o.gamma);
                                      });
  return agent::summarize_episodes(std::move(episodes));
}

inline std::string policy_dir(const ExperimentSpec& s) {
  return s.policy_dir.empty() ? (std::filesystem::path(s.output_dir) / "policies").string() : s.resolve(s.policy_dir);
}

}  // namespace detail

/// Paths made absolute so the experiment can be re-run from anywhere (e.g. from its manifest).
inline ExperimentSpec resolved_spec(const ExperimentSpec& s) {
  ExperimentSpec r = s;
  auto abs = [&](std::string& p) {
    if (!p.empty()) p = std::filesystem::absolute(s.resolve(p)).lexically_normal().string();
  };
  abs(r.fixed_policy);
  abs(r.policy_dir);
  abs(r.season.weather.file);
  abs(r.season.weather.params_file);
  abs(r.season.weather.totals_file);
  abs(r.season.emission.checkpoint);
  r.base_dir.clear();
  return r;
}

/// Trains or loads the fixed policy used by the sweeps.
inline std::pair<agent::PolicyHandle, PolicyRecord> obtain_fixed_policy(const ExperimentSpec& s, const Logger& log) {
  const std::string path = s.fixed_policy.empty()
                               ? (std::filesystem::path(detail::policy_dir(s)) / "fixed.ckpt").string()
                               : s.resolve(s.fixed_policy);
  PolicyRecord rec;
  rec.name = "fixed";
  rec.checkpoint = path;
  if (std::filesystem::exists(path) && (!s.train || !s.fixed_policy.empty())) {
    if (log) log("loading fixed policy from " + path);
    rec.source = "loaded";
    return {agent::load_policy(path).relabeled(agent::PolicyLabel::fixed()), rec};
  }
  if (!s.train) throw ConfigError("fixed policy checkpoint " + path + " not found and training is disabled");
  rec.source = "trained";
  rec.train_seed = stream_seed(s.seed, "train/fixed");
  rec.episodes = s.training.episodes;
  if (log) log("training fixed policy (" + std::to_string(s.training.episodes) + " episodes)");
  const auto season = detail::fixed_training_season(s);
  auto r = agent::train_policy(detail::factory_for(season, s.base_dir), s.training, rec.train_seed, std::nullopt,
                               agent::PolicyLabel::fixed());
  detail::ensure_dir(std::filesystem::path(path).parent_path());
  agent::save_policy(r.policy, path);
  rec.curve = std::move(r.curve);
  return {r.policy, rec};
}

/// Warm-starts from `fixed` on the scenario, then keeps the result only if it
/// scores at least as well as `fixed` on validation realizations that are
/// disjoint from the evaluation realizations.
inline std::pair<agent::PolicyHandle, PolicyRecord> fine_tune(const ExperimentSpec& s, const Scenario& sc,
                                                              const agent::PolicyHandle& fixed) {
  PolicyRecord rec;
  rec.name = "optimal:" + sc.key();
  const auto label = agent::PolicyLabel::optimal(sc.key());
  const std::string path =
      (std::filesystem::path(detail::policy_dir(s)) / ("optimal_" + sc.key() + ".ckpt")).string();
  rec.checkpoint = path;
  if (!s.train) {
    if (!std::filesystem::exists(path))
      throw ConfigError("optimal policy checkpoint " + path + " not found and training is disabled");
    rec.source = "loaded";
    return {agent::load_policy(path).relabeled(label), rec};
  }
  const auto factory = detail::factory_for(detail::scenario_season(s, sc), s.base_dir);
  rec.source = "fine-tuned";
  rec.train_seed = stream_seed(s.seed, "finetune/" + sc.key());
  rec.episodes = s.fine_tune.episodes;
  auto r = agent::train_policy(factory, s.fine_tune, rec.train_seed, fixed, label);
  agent::EvalOptions vo;
  vo.realizations = s.validation_episodes;
  vo.seed = stream_seed(s.seed, "validate/" + sc.key());
  vo.gamma = s.fine_tune.gamma;
  rec.validation_candidate = agent::evaluate_policy(r.policy, factory, vo).metric("reward").mean;
  rec.validation_fixed = agent::evaluate_policy(fixed, factory, vo).metric("reward").mean;
  rec.accepted = rec.validation_candidate >= rec.validation_fixed;
  rec.curve = std::move(r.curve);
  agent::PolicyHandle chosen = *rec.accepted ? r.policy : fixed.relabeled(label);
  detail::ensure_dir(std::filesystem::path(path).parent_path());
  agent::save_policy(chosen, path);
  return {chosen, rec};
}

inline SweepResult run_sweep(const ExperimentSpec& spec, const Logger& log = {}) {
  if (spec.kind == ExperimentKind::CaseStudy) throw ConfigError("run_sweep needs a sweep experiment");
  spec.validate();
  SweepResult out;
  out.spec = resolved_spec(spec);
  const ExperimentSpec& s = spec;
  const auto points = s.grid();
  const auto pols = s.policy_list();
  const bool need_optimal = std::find(pols.begin(), pols.end(), PolicyKind::Optimal) != pols.end();
  const bool need_fixed =
      need_optimal || std::find(pols.begin(), pols.end(), PolicyKind::Fixed) != pols.end();

  std::optional<agent::PolicyHandle> fixed;
  if (need_fixed) {
    auto [p, rec] = obtain_fixed_policy(s, log);
    fixed = p;
    out.policies.push_back(std::move(rec));
  }

  std::vector<std::optional<agent::PolicyHandle>> optimal(points.size());
  if (need_optimal) {
    std::vector<PolicyRecord> recs(points.size());
    if (log) log("fine-tuning " + std::to_string(points.size()) + " scenario policies");
    detail::parallel_for(points.size(), s.workers, [&](std::size_t i) {
      auto [p, rec] = fine_tune(s, scenario_at(s.kind, points[i]), *fixed);
      optimal[i] = p;
      recs[i] = std::move(rec);
    });
    for (auto& r : recs) {
      if (log && r.accepted) log(r.name + (*r.accepted ? " accepted" : " rejected, keeping the fixed policy"));
      out.policies.push_back(std::move(r));
    }
  }

  agent::EvalOptions o;
  o.realizations = s.realizations;
  o.seed = stream_seed(s.seed, "eval");
  o.workers = s.workers;
  o.gamma = s.training.gamma;
  out.eval_seed = o.seed;
  const std::size_t l = fixed ? fixed->history_length() : s.training.history_length;
  for (std::size_t i = 0; i < points.size(); ++i) {
    const Scenario sc = scenario_at(s.kind, points[i]);
    const auto factory = detail::factory_for(detail::scenario_season(s, sc), s.base_dir);
    for (PolicyKind pk : pols) {
      if (log) log("evaluating " + sc.label() + " / " + to_string(pk));
      Cell c{sc.key(), sc.label(), points[i], pk, {}};
      switch (pk) {
        case PolicyKind::Fixed: c.summary = agent::evaluate_policy(*fixed, factory, o); break;
        case PolicyKind::Optimal: c.summary = agent::evaluate_policy(*optimal[i], factory, o); break;
        case PolicyKind::Random:
          c.summary = detail::evaluate_random(factory, o, stream_seed(s.seed, "random-actions"), l);
          break;
      }
      out.cells.push_back(std::move(c));
    }
  }
  return out;
}

inline SweepResult run_temp_sweep(ExperimentSpec spec, const Logger& log = {}) {
  spec.kind = ExperimentKind::TempSweep;
  return run_sweep(spec, log);
}

inline SweepResult run_precip_sweep(ExperimentSpec spec, const Logger& log = {}) {
  spec.kind = ExperimentKind::PrecipSweep;
  return run_sweep(spec, log);
}

/// Trains (or loads) one policy per reward case on the configured weather, runs
/// one noise-free realization per policy and an n-realization evaluation.
inline SweepResult run_case_study(const ExperimentSpec& spec, const Logger& log = {}) {
  spec.validate();
  if (spec.kind != ExperimentKind::CaseStudy) throw ConfigError("run_case_study needs a case_study experiment");
  const ExperimentSpec& s = spec;
  SweepResult out;
  out.spec = resolved_spec(spec);
  const auto pols = s.policy_list();
  agent::EvalOptions o;
  o.realizations = s.realizations;
  o.seed = stream_seed(s.seed, "eval");
  o.workers = s.workers;
  o.gamma = s.training.gamma;
  out.eval_seed = o.seed;
  const std::uint64_t random_seed = stream_seed(s.seed, "random-actions");

  for (int c : s.cases) {
    const auto season = detail::case_season(s, c);
    const auto factory = detail::factory_for(season, s.base_dir);
    auto det_season = season;
    det_season.emission.sample = false;
    const auto det_factory = detail::factory_for(det_season, s.base_dir);
    const std::string name = "case" + std::to_string(c);
    std::optional<agent::PolicyHandle> trained;
    if (std::find(pols.begin(), pols.end(), PolicyKind::Fixed) != pols.end()) {
      PolicyRecord rec;
      rec.name = name;
      rec.checkpoint = (std::filesystem::path(detail::policy_dir(s)) / (name + ".ckpt")).string();
      if (!s.train) {
        if (!std::filesystem::exists(rec.checkpoint))
          throw ConfigError("policy checkpoint " + rec.checkpoint + " not found and training is disabled");
        rec.source = "loaded";
        trained = agent::load_policy(rec.checkpoint);
      } else {
        rec.source = "trained";
        rec.train_seed = stream_seed(s.seed, "train/" + name);
        rec.episodes = s.training.episodes;
        if (log) log("training " + name + " (" + std::to_string(s.training.episodes) + " episodes)");
        auto r = agent::train_policy(factory, s.training, rec.train_seed, std::nullopt, agent::PolicyLabel::fixed());
        trained = r.policy;
        rec.curve = std::move(r.curve);
        detail::ensure_dir(std::filesystem::path(rec.checkpoint).parent_path());
        agent::save_policy(r.policy, rec.checkpoint);
      }
      out.policies.push_back(std::move(rec));
    }
    const std::size_t l = trained ? trained->history_length() : s.training.history_length;
    for (PolicyKind pk : pols) {
      // Noise-free realization on the same world stream for every case.
      auto env = det_factory();
      RngStream world(stream_seed(s.seed, "deterministic"), 1), noise(stream_seed(s.seed, "deterministic"), 2);
      RngStream pick(random_seed, 0);
      const std::size_t n_actions = env->action_count();
      auto choose = [&](const nn::Tensor2& h) {
        return pk == PolicyKind::Random ? pick.index(n_actions) : trained->act(h);
      };
      const auto rec = agent::run_episode(*env, l, choose, world, noise, o.gamma);
      CaseRow row{c, pk, rec.total, rec.metrics, ""};
      if (auto* crop = dynamic_cast<cropenv::CropEnv*>(env.get()))
        row.weather_digest = detail::weather_digest(crop->weather());
      if (log) log(name + " / " + to_string(pk) + " weather " + row.weather_digest);
      out.case_rows.push_back(std::move(row));

      Cell cell{name, name, static_cast<double>(c), pk, {}};
      if (log) log("evaluating " + name + " / " + to_string(pk));
      cell.summary = pk == PolicyKind::Random ? detail::evaluate_random(factory, o, random_seed, l)
                                              : agent::evaluate_policy(*trained, factory, o);
      out.cells.push_back(std::move(cell));
    }
  }
  return out;
}

inline SweepResult run_experiment(const ExperimentSpec& spec, const Logger& log = {}) {
  return spec.kind == ExperimentKind::CaseStudy ? run_case_study(spec, log) : run_sweep(spec, log);
}

}  // namespace cropdrqn::harness
