// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <array>
#include <string>

#include <nlohmann/json.hpp>

#include "cropdrqn/core/json.hpp"
#include "cropdrqn/cropenv/types.hpp"
#include "cropdrqn/weather/types.hpp"

namespace cropdrqn::cropenv {

struct SoilParams {
  double wilting_point = 0.12;   // cm3/cm3
  double field_capacity = 0.30;
  double saturation = 0.42;
  double depth_mm = 600.0;       // root zone
  double initial_sw = 0.25;
  double drainage_coef = 0.4;    // fraction of water above field capacity drained per day
  double initial_n = 60.0;       // kg/ha mineral N at planting
  double leach_coef = 1.0;       // scales the drained-water share of soil N lost

  void validate() const {
    if (!(wilting_point > 0 && wilting_point < field_capacity && field_capacity < saturation && saturation < 1))
      throw ConfigError("soil needs 0 < wilting_point < field_capacity < saturation < 1");
    if (!(depth_mm > 0)) throw ConfigError("soil depth_mm must be positive");
    if (!(initial_sw >= wilting_point && initial_sw <= saturation))
      throw ConfigError("initial_sw must lie between wilting point and saturation");
    if (!(drainage_coef >= 0 && drainage_coef <= 1)) throw ConfigError("drainage_coef must be in [0, 1]");
    if (!(initial_n >= 0)) throw ConfigError("initial_n must be nonnegative");
    if (!(leach_coef >= 0)) throw ConfigError("leach_coef must be nonnegative");
  }
};

struct CropParams {
  double base_temp = 8.0;         // C
  double gdd_maturity = 1500.0;   // C d
  // Cumulative GDD (as fractions of maturity) at which istage advances to 2..9.
  // The first entry is emergence, the fourth silking, the last maturity.
  std::array<double, 8> stage_fractions{0.04, 0.2, 0.35, 0.53, 0.62, 0.72, 0.85, 1.0};
  double leaf_gdd = 40.0;         // C d per leaf
  double max_leaves = 20.0;
  double lai_max = 5.5;
  double senescence = 0.7;        // share of peak LAI lost between silking and maturity
  double extinction = 0.65;
  double rue = 2.6;               // g biomass / MJ intercepted PAR
  double harvest_index = 0.5;
  double n_crit = 0.010;          // kg N per kg biomass
  double uptake_frac = 0.15;      // largest share of soil N taken up per day
  double pltpop = 7.5;            // plants/m2
  double kc_min = 0.3;
  double kc_max = 1.15;
  double t_opt_low = 20.0;
  double t_opt_high = 30.0;
  double t_ceiling = 40.0;

  double gdd_at_stage(std::size_t k) const { return stage_fractions[k] * gdd_maturity; }
  double gdd_emergence() const { return gdd_at_stage(0); }
  double gdd_silking() const { return gdd_at_stage(3); }

  void validate() const {
    if (!(gdd_maturity > 0)) throw ConfigError("gdd_maturity must be positive");
    for (std::size_t k = 0; k < stage_fractions.size(); ++k)
      if (!(stage_fractions[k] > (k ? stage_fractions[k - 1] : 0.0)))
        throw ConfigError("stage_fractions must be strictly increasing and positive");
    if (stage_fractions.back() != 1.0) throw ConfigError("last stage fraction must be 1 (maturity)");
    if (!(leaf_gdd > 0 && max_leaves > 0 && lai_max > 0 && extinction > 0 && rue > 0))
      throw ConfigError("crop growth constants must be positive");
    if (!(harvest_index > 0 && harvest_index <= 1)) throw ConfigError("harvest_index must be in (0, 1]");
    if (!(senescence >= 0 && senescence <= 1)) throw ConfigError("senescence must be in [0, 1]");
    if (!(n_crit > 0 && uptake_frac > 0 && uptake_frac <= 1)) throw ConfigError("invalid crop N constants");
    if (!(pltpop > 0)) throw ConfigError("pltpop must be positive");
    if (!(kc_min >= 0 && kc_max >= kc_min)) throw ConfigError("need 0 <= kc_min <= kc_max");
    if (!(base_temp < t_opt_low && t_opt_low <= t_opt_high && t_opt_high < t_ceiling))
      throw ConfigError("need base_temp < t_opt_low <= t_opt_high < t_ceiling");
  }
};

struct WeatherSpec {
  enum class Kind { Reference, File, Generated };
  Kind kind = Kind::Reference;
  std::string file;         // File: weather CSV
  std::string params_file;  // Generated: parameter file, empty for the built-in reference fit
  std::string totals_file;  // Generated: series whose monthly rain totals are matched; empty = reference year
  weather::ClimateScenario scenario;
};

struct EmissionSpec {
  enum class Kind { Reference, Model };
  Kind kind = Kind::Reference;
  double noise = 0.5;       // log-space SD of the reference source
  std::string checkpoint;   // Model
  // Cumulative N (kg/ha) beyond which the N-input scaling stops growing. The
  // exponential response is empirical and explodes for heavy input schedules.
  double hoben_cap = 400.0;
  bool sample = true;       // false uses the noise-free flux
};

struct SeasonConfig {
  Date planting = make_date(2012, 5, 1);
  int season_days = 180;
  SoilParams soil;
  CropParams crop;
  RewardWeights weights = RewardWeights::case_preset(3);
  WeatherSpec weather;
  EmissionSpec emission;

  void validate() const {
    if (season_days < 1 || season_days > 300) throw ConfigError("season_days must be in [1, 300]");
    soil.validate();
    crop.validate();
    weights.validate();
    weather.scenario.validate();
    if (!(emission.noise >= 0)) throw ConfigError("emission noise must be nonnegative");
    if (!(emission.hoben_cap >= 0)) throw ConfigError("emission hoben_cap must be nonnegative");
  }
};

namespace detail {
using jsonio::check_keys;
using jsonio::read_opt;
}  // namespace detail

inline SeasonConfig season_from_json(const nlohmann::json& j) {
  using detail::read_opt;
  SeasonConfig c;
  detail::check_keys(j, {"planting_date", "season_days", "soil", "crop", "reward", "weather", "emission"}, "season");
  if (j.contains("planting_date")) {
    try {
      c.planting = parse_date(j.at("planting_date").get<std::string>());
    } catch (const std::exception& e) {
      throw ConfigError(std::string("season.planting_date: ") + e.what());
    }
  }
  read_opt(j, "season_days", c.season_days, "season");
  if (j.contains("soil")) {
    const auto& s = j["soil"];
    detail::check_keys(s, {"wilting_point", "field_capacity", "saturation", "depth_mm", "initial_sw", "drainage_coef",
                           "initial_n", "leach_coef"}, "soil");
    read_opt(s, "wilting_point", c.soil.wilting_point, "soil");
    read_opt(s, "field_capacity", c.soil.field_capacity, "soil");
    read_opt(s, "saturation", c.soil.saturation, "soil");
    read_opt(s, "depth_mm", c.soil.depth_mm, "soil");
    read_opt(s, "initial_sw", c.soil.initial_sw, "soil");
    read_opt(s, "drainage_coef", c.soil.drainage_coef, "soil");
    read_opt(s, "initial_n", c.soil.initial_n, "soil");
    read_opt(s, "leach_coef", c.soil.leach_coef, "soil");
  }
  if (j.contains("crop")) {
    const auto& s = j["crop"];
    detail::check_keys(s, {"base_temp", "gdd_maturity", "stage_fractions", "leaf_gdd", "max_leaves", "lai_max",
                           "senescence", "extinction", "rue", "harvest_index", "n_crit", "uptake_frac", "pltpop",
                           "kc_min", "kc_max", "t_opt_low", "t_opt_high", "t_ceiling"}, "crop");
    read_opt(s, "base_temp", c.crop.base_temp, "crop");
    read_opt(s, "gdd_maturity", c.crop.gdd_maturity, "crop");
    read_opt(s, "stage_fractions", c.crop.stage_fractions, "crop");
    read_opt(s, "leaf_gdd", c.crop.leaf_gdd, "crop");
    read_opt(s, "max_leaves", c.crop.max_leaves, "crop");
    read_opt(s, "lai_max", c.crop.lai_max, "crop");
    read_opt(s, "senescence", c.crop.senescence, "crop");
    read_opt(s, "extinction", c.crop.extinction, "crop");
    read_opt(s, "rue", c.crop.rue, "crop");
    read_opt(s, "harvest_index", c.crop.harvest_index, "crop");
    read_opt(s, "n_crit", c.crop.n_crit, "crop");
    read_opt(s, "uptake_frac", c.crop.uptake_frac, "crop");
    read_opt(s, "pltpop", c.crop.pltpop, "crop");
    read_opt(s, "kc_min", c.crop.kc_min, "crop");
    read_opt(s, "kc_max", c.crop.kc_max, "crop");
    read_opt(s, "t_opt_low", c.crop.t_opt_low, "crop");
    read_opt(s, "t_opt_high", c.crop.t_opt_high, "crop");
    read_opt(s, "t_ceiling", c.crop.t_ceiling, "crop");
  }
  if (j.contains("reward")) {
    const auto& r = j["reward"];
    detail::check_keys(r, {"case", "weights"}, "reward");
    if (r.contains("case") && r.contains("weights")) throw ConfigError("reward takes either case or weights");
    if (r.contains("case")) {
      int k = 0;
      read_opt(r, "case", k, "reward");
      c.weights = RewardWeights::case_preset(k);
    }
    if (r.contains("weights")) {
      const auto& w = r["weights"];
      detail::check_keys(w, {"yield", "nitrogen", "water", "leaching", "n2o"}, "reward.weights");
      read_opt(w, "yield", c.weights.yield, "reward.weights");
      read_opt(w, "nitrogen", c.weights.nitrogen, "reward.weights");
      read_opt(w, "water", c.weights.water, "reward.weights");
      read_opt(w, "leaching", c.weights.leaching, "reward.weights");
      read_opt(w, "n2o", c.weights.n2o, "reward.weights");
    }
  }
  if (j.contains("weather")) {
    const auto& w = j["weather"];
    detail::check_keys(w, {"source", "file", "params_file", "totals_file", "temp_offset", "rain_factor",
                           "preserve_monthly_totals"}, "weather");
    std::string src = "reference";
    read_opt(w, "source", src, "weather");
    if (src == "reference")
      c.weather.kind = WeatherSpec::Kind::Reference;
    else if (src == "file")
      c.weather.kind = WeatherSpec::Kind::File;
    else if (src == "wgen")
      c.weather.kind = WeatherSpec::Kind::Generated;
    else
      throw ConfigError("weather.source must be reference, file or wgen");
    read_opt(w, "file", c.weather.file, "weather");
    read_opt(w, "params_file", c.weather.params_file, "weather");
    read_opt(w, "totals_file", c.weather.totals_file, "weather");
    read_opt(w, "temp_offset", c.weather.scenario.temp_offset, "weather");
    read_opt(w, "rain_factor", c.weather.scenario.rain_factor, "weather");
    read_opt(w, "preserve_monthly_totals", c.weather.scenario.preserve_monthly_totals, "weather");
    if (c.weather.kind == WeatherSpec::Kind::File && c.weather.file.empty())
      throw ConfigError("weather.source = file needs weather.file");
  }
  if (j.contains("emission")) {
    const auto& e = j["emission"];
    detail::check_keys(e, {"source", "noise", "checkpoint", "hoben_cap", "sample"}, "emission");
    std::string src = "reference";
    read_opt(e, "source", src, "emission");
    if (src == "reference")
      c.emission.kind = EmissionSpec::Kind::Reference;
    else if (src == "model")
      c.emission.kind = EmissionSpec::Kind::Model;
    else
      throw ConfigError("emission.source must be reference or model");
    read_opt(e, "noise", c.emission.noise, "emission");
    read_opt(e, "checkpoint", c.emission.checkpoint, "emission");
    read_opt(e, "hoben_cap", c.emission.hoben_cap, "emission");
    read_opt(e, "sample", c.emission.sample, "emission");
    if (c.emission.kind == EmissionSpec::Kind::Model && c.emission.checkpoint.empty())
      throw ConfigError("emission.source = model needs emission.checkpoint");
  }
  try {
    c.validate();
  } catch (const ValidationError& e) {
    throw ConfigError(e.what());
  }
  return c;
}

inline nlohmann::json season_to_json(const SeasonConfig& c) {
  nlohmann::json j;
  j["planting_date"] = format_date(c.planting);
  j["season_days"] = c.season_days;
  const auto& s = c.soil;
  j["soil"] = {{"wilting_point", s.wilting_point}, {"field_capacity", s.field_capacity},
               {"saturation", s.saturation},       {"depth_mm", s.depth_mm},
               {"initial_sw", s.initial_sw},       {"drainage_coef", s.drainage_coef},
               {"initial_n", s.initial_n},         {"leach_coef", s.leach_coef}};
  const auto& p = c.crop;
  j["crop"] = {{"base_temp", p.base_temp},   {"gdd_maturity", p.gdd_maturity}, {"stage_fractions", p.stage_fractions},
               {"leaf_gdd", p.leaf_gdd},     {"max_leaves", p.max_leaves},     {"lai_max", p.lai_max},
               {"senescence", p.senescence}, {"extinction", p.extinction},     {"rue", p.rue},
               {"harvest_index", p.harvest_index}, {"n_crit", p.n_crit},       {"uptake_frac", p.uptake_frac},
               {"pltpop", p.pltpop},         {"kc_min", p.kc_min},             {"kc_max", p.kc_max},
               {"t_opt_low", p.t_opt_low},   {"t_opt_high", p.t_opt_high},     {"t_ceiling", p.t_ceiling}};
  const auto& w = c.weights;
  j["reward"]["weights"] = {{"yield", w.yield}, {"nitrogen", w.nitrogen}, {"water", w.water},
                            {"leaching", w.leaching}, {"n2o", w.n2o}};
  const char* src = c.weather.kind == WeatherSpec::Kind::Reference ? "reference"
                    : c.weather.kind == WeatherSpec::Kind::File    ? "file"
                                                                     : "wgen";
  j["weather"] = {{"source", src},
                  {"temp_offset", c.weather.scenario.temp_offset},
                  {"rain_factor", c.weather.scenario.rain_factor},
                  {"preserve_monthly_totals", c.weather.scenario.preserve_monthly_totals}};
  if (!c.weather.file.empty()) j["weather"]["file"] = c.weather.file;
  if (!c.weather.params_file.empty()) j["weather"]["params_file"] = c.weather.params_file;
  if (!c.weather.totals_file.empty()) j["weather"]["totals_file"] = c.weather.totals_file;
  j["emission"] = {{"source", c.emission.kind == EmissionSpec::Kind::Reference ? "reference" : "model"},
                   {"noise", c.emission.noise},
                   {"hoben_cap", c.emission.hoben_cap},
                   {"sample", c.emission.sample}};
  if (!c.emission.checkpoint.empty()) j["emission"]["checkpoint"] = c.emission.checkpoint;
  return j;
}

}  // namespace cropdrqn::cropenv
