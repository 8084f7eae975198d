// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "cropdrqn/agent/config.hpp"
#include "cropdrqn/core/checksum.hpp"
#include "cropdrqn/core/json.hpp"
#include "cropdrqn/cropenv/config.hpp"

namespace cropdrqn::harness {

enum class ExperimentKind { CaseStudy, TempSweep, PrecipSweep };
enum class PolicyKind { Fixed, Optimal, Random };

inline const char* to_string(ExperimentKind k) {
  switch (k) {
    case ExperimentKind::CaseStudy: return "case_study";
    case ExperimentKind::TempSweep: return "temp_sweep";
    case ExperimentKind::PrecipSweep: return "precip_sweep";
  }
  return "?";
}

inline const char* to_string(PolicyKind k) {
  switch (k) {
    case PolicyKind::Fixed: return "fixed";
    case PolicyKind::Optimal: return "optimal";
    case PolicyKind::Random: return "random";
  }
  return "?";
}

inline ExperimentKind parse_experiment_kind(const std::string& s) {
  if (s == "case_study") return ExperimentKind::CaseStudy;
  if (s == "temp_sweep") return ExperimentKind::TempSweep;
  if (s == "precip_sweep") return ExperimentKind::PrecipSweep;
  throw ConfigError("unknown experiment kind '" + s + "'");
}

inline PolicyKind parse_policy_kind(const std::string& s) {
  if (s == "fixed") return PolicyKind::Fixed;
  if (s == "optimal") return PolicyKind::Optimal;
  if (s == "random") return PolicyKind::Random;
  throw ConfigError("unknown policy '" + s + "'");
}

inline const std::vector<double>& default_temp_offsets() {
  static const std::vector<double> v{0.0, 0.5, 1.0, 1.5, 2.0, 2.5, 3.0};
  return v;
}

inline const std::vector<double>& default_rain_factors() {
  static const std::vector<double> v{1.0, 0.8, 0.6, 0.4, 0.2};
  return v;
}

struct ExperimentSpec {
  ExperimentKind kind = ExperimentKind::TempSweep;
  std::vector<int> cases{1, 2, 3};  // case study only
  std::vector<double> points;       // offsets or rain factors; empty = default grid
  bool custom_points = false;       // allow points outside the default grid
  std::vector<PolicyKind> policies;  // empty = kind default
  std::size_t realizations = 300;
  std::uint64_t seed = 0;
  std::size_t workers = 1;
  std::string output_dir = "out";
  cropenv::SeasonConfig season;     // baseline; sweeps replace the weather source
  agent::TrainConfig training;      // from-scratch training
  agent::TrainConfig fine_tune;     // warm-started per-scenario training
  std::size_t validation_episodes = 200;  // fine-tune acceptance check
  bool train = true;                // false = load-only
  std::string fixed_policy;         // sweeps: checkpoint of the fixed policy
  std::string policy_dir;           // case study: checkpoints case<k>.ckpt; default <output_dir>/policies
  std::filesystem::path base_dir;   // for relative paths; not serialized

  std::vector<double> grid() const {
    if (!points.empty()) return points;
    return kind == ExperimentKind::PrecipSweep ? default_rain_factors() : default_temp_offsets();
  }

  std::vector<PolicyKind> policy_list() const {
    if (!policies.empty()) return policies;
    if (kind == ExperimentKind::CaseStudy) return {PolicyKind::Fixed, PolicyKind::Random};
    return {PolicyKind::Fixed, PolicyKind::Optimal};
  }

  std::string resolve(const std::string& p) const {
    if (p.empty()) return p;
    std::filesystem::path q(p);
    return q.is_absolute() || base_dir.empty() ? q.string() : (base_dir / q).lexically_normal().string();
  }

  void validate() const {
    if (realizations == 0) throw ConfigError("realizations must be at least 1");
    if (workers == 0) throw ConfigError("workers must be at least 1");
    if (output_dir.empty()) throw ConfigError("output_dir must be set");
    if (kind == ExperimentKind::CaseStudy) {
      if (cases.empty()) throw ConfigError("case study needs at least one case");
      for (int c : cases)
        if (c < 1 || c > 3) throw ConfigError("cases must be 1, 2 or 3");
      for (auto p : policy_list())
        if (p == PolicyKind::Optimal) throw ConfigError("case study policies are fixed and random");
    } else {
      const auto g = grid();
      if (g.empty()) throw ConfigError("sweep grid is empty");
      const auto& allowed = kind == ExperimentKind::TempSweep ? default_temp_offsets() : default_rain_factors();
      for (double x : g) {
        if (!custom_points && std::find(allowed.begin(), allowed.end(), x) == allowed.end())
          throw ConfigError("sweep point " + text::exact(x) + " is outside the standard grid (set custom_points)");
        if (kind == ExperimentKind::TempSweep && !(x >= 0.0)) throw ConfigError("temperature offsets must be >= 0");
        if (kind == ExperimentKind::PrecipSweep && !(x > 0.0 && x <= 1.0))
          throw ConfigError("rain factors must lie in (0, 1]");
      }
      for (std::size_t i = 0; i < g.size(); ++i)
        for (std::size_t j = i + 1; j < g.size(); ++j)
          if (g[i] == g[j]) throw ConfigError("duplicate sweep point " + text::exact(g[i]));
    }
    const auto pl = policy_list();
    for (std::size_t i = 0; i < pl.size(); ++i)
      for (std::size_t j = i + 1; j < pl.size(); ++j)
        if (pl[i] == pl[j]) throw ConfigError(std::string("duplicate policy ") + to_string(pl[i]));
    if (validation_episodes == 0) throw ConfigError("validation_episodes must be at least 1");
    training.validate();
    fine_tune.validate();
  }
};

/// Fine-tuning defaults: no restart of exploration, a shorter budget.
inline agent::TrainConfig default_fine_tune(const agent::TrainConfig& base) {
  agent::TrainConfig f = base;
  f.episodes = std::max<std::size_t>(1, base.episodes / 4);
  f.epsilon_start = base.epsilon_end;
  return f;
}

inline ExperimentSpec experiment_from_json(const nlohmann::json& root, const std::filesystem::path& base_dir = {}) {
  using jsonio::read_opt;
  // A run manifest embeds the spec it was produced from.
  const nlohmann::json& j = root.contains("manifest_version") && root.contains("spec") ? root.at("spec") : root;
  const std::string w = "experiment";
  jsonio::check_keys(j, {"kind", "cases", "points", "custom_points", "policies", "realizations", "seed", "workers",
                         "output_dir", "season", "training", "fine_tune", "validation_episodes", "train",
                         "fixed_policy", "policy_dir"},
                     w);
  ExperimentSpec s;
  s.base_dir = base_dir;
  if (!j.contains("kind")) throw ConfigError("experiment.kind is required");
  s.kind = parse_experiment_kind(j.at("kind").is_string() ? j.at("kind").get<std::string>() : "");
  read_opt(j, "cases", s.cases, w);
  read_opt(j, "points", s.points, w);
  read_opt(j, "custom_points", s.custom_points, w);
  if (j.contains("policies")) {
    std::vector<std::string> names;
    read_opt(j, "policies", names, w);
    s.policies.clear();
    for (const auto& n : names) s.policies.push_back(parse_policy_kind(n));
  }
  read_opt(j, "realizations", s.realizations, w);
  read_opt(j, "seed", s.seed, w);
  read_opt(j, "workers", s.workers, w);
  read_opt(j, "output_dir", s.output_dir, w);
  read_opt(j, "validation_episodes", s.validation_episodes, w);
  read_opt(j, "train", s.train, w);
  read_opt(j, "fixed_policy", s.fixed_policy, w);
  read_opt(j, "policy_dir", s.policy_dir, w);
  if (j.contains("season")) s.season = cropenv::season_from_json(j.at("season"));
  if (j.contains("training")) s.training = agent::train_config_from_json(j.at("training"));
  s.fine_tune =
      j.contains("fine_tune") ? agent::train_config_from_json(j.at("fine_tune")) : default_fine_tune(s.training);
  s.validate();
  return s;
}

/// Canonical JSON; base_dir is not part of it.
inline nlohmann::json experiment_to_json(const ExperimentSpec& s) {
  nlohmann::json j;
  j["kind"] = to_string(s.kind);
  if (s.kind == ExperimentKind::CaseStudy) j["cases"] = s.cases;
  else j["points"] = s.grid();
  j["custom_points"] = s.custom_points;
  std::vector<std::string> pol;
  for (auto p : s.policy_list()) pol.emplace_back(to_string(p));
  j["policies"] = pol;
  j["realizations"] = s.realizations;
  j["seed"] = s.seed;
  j["workers"] = s.workers;
  j["output_dir"] = s.output_dir;
  j["season"] = cropenv::season_to_json(s.season);
  j["training"] = agent::train_config_to_json(s.training);
  j["fine_tune"] = agent::train_config_to_json(s.fine_tune);
  j["validation_episodes"] = s.validation_episodes;
  j["train"] = s.train;
  if (!s.fixed_policy.empty()) j["fixed_policy"] = s.fixed_policy;
  if (!s.policy_dir.empty()) j["policy_dir"] = s.policy_dir;
  return j;
}

/// FNV-1a of the canonical JSON, excluding workers (which never change results).
inline std::string config_hash(const ExperimentSpec& s) {
  auto j = experiment_to_json(s);
  j.erase("workers");
  return to_hex(fnv1a64(j.dump()));
}

inline nlohmann::json read_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file " + path);
  try {
    return nlohmann::json::parse(in);
  } catch (const nlohmann::json::parse_error& e) {
    throw ConfigError("malformed JSON in " + path + ": " + e.what());
  }
}

inline ExperimentSpec load_experiment(const std::string& path) {
  return experiment_from_json(read_json_file(path), std::filesystem::path(path).parent_path());
}

}  // namespace cropdrqn::harness
