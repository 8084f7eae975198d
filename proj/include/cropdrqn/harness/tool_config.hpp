// SPDX-License-Identifier: Apache-2.0
#pragma once

// Configs of the single-step CLI subcommands. Relative paths inside a config
// resolve against the config file's directory.

#include <filesystem>
#include <nlohmann/json.hpp>
#include <string>

#include "cropdrqn/agent/config.hpp"
#include "cropdrqn/core/date.hpp"
#include "cropdrqn/core/json.hpp"
#include "cropdrqn/cropenv/config.hpp"
#include "cropdrqn/emission/model.hpp"
#include "cropdrqn/weather/types.hpp"

namespace cropdrqn::harness {

namespace detail {
inline std::string resolve_against(const std::string& p, const std::filesystem::path& base) {
  if (p.empty()) return p;
  std::filesystem::path q(p);
  return q.is_absolute() || base.empty() ? q.string() : (base / q).lexically_normal().string();
}

// Input files named in a config must exist; a missing one is a config error.
inline std::string existing_file(const std::string& p, const std::filesystem::path& base, const std::string& what) {
  auto r = resolve_against(p, base);
  if (!r.empty() && !std::filesystem::is_regular_file(r)) throw ConfigError(what + ": no such file " + r);
  return r;
}

inline Date read_date(const nlohmann::json& j, const char* key, Date fallback, const std::string& where) {
  if (!j.contains(key)) return fallback;
  try {
    return parse_date(j.at(key).get<std::string>());
  } catch (const std::exception& e) {
    throw ConfigError(where + "." + key + ": " + e.what());
  }
}

inline weather::ClimateScenario read_scenario(const nlohmann::json& j, const std::string& where) {
  weather::ClimateScenario s;
  jsonio::check_keys(j, {"temp_offset", "rain_factor", "preserve_monthly_totals"}, where);
  jsonio::read_opt(j, "temp_offset", s.temp_offset, where);
  jsonio::read_opt(j, "rain_factor", s.rain_factor, where);
  jsonio::read_opt(j, "preserve_monthly_totals", s.preserve_monthly_totals, where);
  try {
    s.validate();
  } catch (const ValidationError& e) {
    throw ConfigError(where + ": " + e.what());
  }
  return s;
}
}  // namespace detail

/// fit-weather: daily history in, WGEN parameters out.
struct FitWeatherConfig {
  std::string weather_file;  // empty = bundled reference year
};

inline FitWeatherConfig fit_weather_from_json(const nlohmann::json& j, const std::filesystem::path& base = {}) {
  jsonio::check_keys(j, {"weather_file"}, "fit-weather");
  FitWeatherConfig c;
  jsonio::read_opt(j, "weather_file", c.weather_file, "fit-weather");
  c.weather_file = detail::existing_file(c.weather_file, base, "fit-weather.weather_file");
  return c;
}

/// gen-weather: parameters and a climate scenario in, daily series out.
struct GenWeatherConfig {
  std::string params_file;  // empty = bundled reference parameters
  std::string totals_file;  // reference for preserve_monthly_totals; empty = bundled year
  Date start = make_date(2012, 1, 1);
  Date end = make_date(2012, 12, 31);
  weather::ClimateScenario scenario;
};

inline GenWeatherConfig gen_weather_from_json(const nlohmann::json& j, const std::filesystem::path& base = {}) {
  const std::string w = "gen-weather";
  jsonio::check_keys(j, {"params_file", "totals_file", "start", "end", "scenario"}, w);
  GenWeatherConfig c;
  jsonio::read_opt(j, "params_file", c.params_file, w);
  jsonio::read_opt(j, "totals_file", c.totals_file, w);
  c.params_file = detail::existing_file(c.params_file, base, w + ".params_file");
  c.totals_file = detail::existing_file(c.totals_file, base, w + ".totals_file");
  c.start = detail::read_date(j, "start", c.start, w);
  c.end = detail::read_date(j, "end", c.end, w);
  if (days_between(c.start, c.end) < 0) throw ConfigError("gen-weather.end precedes start");
  if (j.contains("scenario")) c.scenario = detail::read_scenario(j.at("scenario"), w + ".scenario");
  return c;
}

/// fit-emission: a dataset file, or a synthetic one, and the model settings.
struct FitEmissionConfig {
  std::string dataset;  // CSV; empty = synthetic
  std::size_t synthetic_n = 919;
  double synthetic_noise = 0.5;
  emission::EmissionModelConfig model;
};

inline emission::EmissionModelConfig emission_model_from_json(const nlohmann::json& j) {
  using jsonio::read_opt;
  const std::string w = "model";
  jsonio::check_keys(j,
                     {"kind", "hidden", "epochs", "batch_size", "learning_rate", "cv_folds", "test_fraction",
                      "validation_fraction", "patience", "weight_decay"},
                     w);
  std::string kind = "probabilistic";
  read_opt(j, "kind", kind, w);
  emission::EmissionModelConfig c;
  try {
    c = emission::parse_model_kind(kind) == emission::ModelKind::Deterministic
            ? emission::EmissionModelConfig::deterministic()
            : emission::EmissionModelConfig::probabilistic();
  } catch (const std::exception& e) {
    throw ConfigError(std::string("model.kind: ") + e.what());
  }
  read_opt(j, "hidden", c.hidden, w);
  read_opt(j, "epochs", c.epochs, w);
  read_opt(j, "batch_size", c.batch_size, w);
  read_opt(j, "learning_rate", c.learning_rate, w);
  read_opt(j, "cv_folds", c.cv_folds, w);
  read_opt(j, "test_fraction", c.test_fraction, w);
  read_opt(j, "validation_fraction", c.validation_fraction, w);
  read_opt(j, "patience", c.patience, w);
  read_opt(j, "weight_decay", c.weight_decay, w);
  c.validate();
  return c;
}

inline FitEmissionConfig fit_emission_from_json(const nlohmann::json& j, const std::filesystem::path& base = {}) {
  const std::string w = "fit-emission";
  jsonio::check_keys(j, {"dataset", "synthetic", "model"}, w);
  FitEmissionConfig c;
  jsonio::read_opt(j, "dataset", c.dataset, w);
  c.dataset = detail::existing_file(c.dataset, base, w + ".dataset");
  if (j.contains("synthetic")) {
    if (!c.dataset.empty()) throw ConfigError("fit-emission: give either dataset or synthetic, not both");
    const auto& s = j.at("synthetic");
    jsonio::check_keys(s, {"n", "noise"}, w + ".synthetic");
    jsonio::read_opt(s, "n", c.synthetic_n, w + ".synthetic");
    jsonio::read_opt(s, "noise", c.synthetic_noise, w + ".synthetic");
    if (c.synthetic_n == 0) throw ConfigError("fit-emission.synthetic.n must be positive");
    if (!(c.synthetic_noise >= 0.0)) throw ConfigError("fit-emission.synthetic.noise must be nonnegative");
  }
  if (j.contains("model")) c.model = emission_model_from_json(j.at("model"));
  return c;
}

/// train: one policy on one season configuration.
struct TrainRunConfig {
  cropenv::SeasonConfig season;
  agent::TrainConfig training;
  std::filesystem::path base_dir;
};

inline TrainRunConfig train_run_from_json(const nlohmann::json& j, const std::filesystem::path& base = {}) {
  jsonio::check_keys(j, {"season", "training"}, "train");
  TrainRunConfig c;
  c.base_dir = base;
  if (j.contains("season")) c.season = cropenv::season_from_json(j.at("season"));
  if (j.contains("training")) c.training = agent::train_config_from_json(j.at("training"));
  c.training.warm_start = detail::existing_file(c.training.warm_start, base, "training.warm_start");
  return c;
}

/// evaluate: a saved policy on a season configuration.
struct EvaluateConfig {
  cropenv::SeasonConfig season;
  std::string policy;
  std::size_t realizations = 300;
  bool resample_weather = true;
  bool resample_noise = true;
  double gamma = 0.99;
  std::filesystem::path base_dir;
};

inline EvaluateConfig evaluate_from_json(const nlohmann::json& j, const std::filesystem::path& base = {}) {
  const std::string w = "evaluate";
  jsonio::check_keys(j, {"season", "policy", "realizations", "resample_weather", "resample_noise", "gamma"}, w);
  EvaluateConfig c;
  c.base_dir = base;
  if (j.contains("season")) c.season = cropenv::season_from_json(j.at("season"));
  jsonio::read_opt(j, "policy", c.policy, w);
  jsonio::read_opt(j, "realizations", c.realizations, w);
  jsonio::read_opt(j, "resample_weather", c.resample_weather, w);
  jsonio::read_opt(j, "resample_noise", c.resample_noise, w);
  jsonio::read_opt(j, "gamma", c.gamma, w);
  if (c.policy.empty()) throw ConfigError("evaluate.policy is required");
  if (c.realizations == 0) throw ConfigError("evaluate.realizations must be at least 1");
  if (!(c.gamma >= 0.0 && c.gamma <= 1.0)) throw ConfigError("evaluate.gamma must lie in [0, 1]");
  c.policy = detail::existing_file(c.policy, base, w + ".policy");
  return c;
}

}  // namespace cropdrqn::harness
