// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <filesystem>
#include <memory>

#include "cropdrqn/cropenv/crop_env.hpp"
#include "cropdrqn/emission/model.hpp"
#include "cropdrqn/weather/io.hpp"
#include "cropdrqn/weather/reference.hpp"

namespace cropdrqn::cropenv {

/// Relative paths in configs are resolved against the config file's directory.
inline std::string resolve_path(const std::string& path, const std::filesystem::path& base) {
  if (path.empty()) return path;
  std::filesystem::path p(path);
  return p.is_absolute() || base.empty() ? p.string() : (base / p).lexically_normal().string();
}

inline std::shared_ptr<const WeatherSource> make_weather_source(const WeatherSpec& spec,
                                                                const std::filesystem::path& base = {}) {
  switch (spec.kind) {
    case WeatherSpec::Kind::Reference:
      return std::make_shared<FixedWeather>(weather::reference_year(), "reference-2012");
    case WeatherSpec::Kind::File:
      return std::make_shared<FixedWeather>(weather::read_weather_file(resolve_path(spec.file, base)), spec.file);
    case WeatherSpec::Kind::Generated: {
      auto params = spec.params_file.empty() ? weather::reference_params()
                                             : weather::read_params_file(resolve_path(spec.params_file, base));
      std::shared_ptr<const weather::WeatherSeries> totals;
      if (spec.scenario.preserve_monthly_totals)
        totals = spec.totals_file.empty()
                     ? std::make_shared<const weather::WeatherSeries>(weather::reference_year())
                     : std::make_shared<const weather::WeatherSeries>(
                           weather::read_weather_file(resolve_path(spec.totals_file, base)));
      return std::make_shared<GeneratedWeather>(std::move(params), spec.scenario, std::move(totals));
    }
  }
  throw ConfigError("unknown weather source");
}

inline std::shared_ptr<const emission::EmissionSource> make_emission_source(const EmissionSpec& spec,
                                                                           const std::filesystem::path& base = {}) {
  if (spec.kind == EmissionSpec::Kind::Reference) return std::make_shared<emission::ReferenceEmission>(spec.noise);
  return std::make_shared<emission::ModelEmission>(
      emission::load_emission_model(resolve_path(spec.checkpoint, base)));
}

inline std::unique_ptr<CropEnv> make_crop_env(const SeasonConfig& cfg, const std::filesystem::path& base = {}) {
  return std::make_unique<CropEnv>(cfg, make_weather_source(cfg.weather, base),
                                   make_emission_source(cfg.emission, base));
}

}  // namespace cropdrqn::cropenv
