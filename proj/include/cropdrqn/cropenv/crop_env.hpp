// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <algorithm>
#include <cmath>
#include <memory>
#include <ostream>
#include <vector>

#include "cropdrqn/cropenv/config.hpp"
#include "cropdrqn/cropenv/environment.hpp"
#include "cropdrqn/cropenv/reward.hpp"
#include "cropdrqn/cropenv/weather_source.hpp"
#include "cropdrqn/emission/features.hpp"
#include "cropdrqn/emission/source.hpp"

namespace cropdrqn::cropenv {

/// Days of weather kept before planting so that pp7 is defined on day 0.
inline constexpr int kLeadDays = 7;

/// One simulated day, for logs and balance checks.
struct EpisodeRow {
  int dap = 0;
  Date date;
  std::size_t action = 0;
  DayDiagnostics diag;
  double rain = 0.0;
  double sw = 0.0;  // end of day
  double et = 0.0;
  double drainage = 0.0;
  double uptake = 0.0;
  double soil_n = 0.0;  // end of day
  double xlai = 0.0;
  double biomass = 0.0;
  double reward = 0.0;
};

/// Season outcome totals (undiscounted).
struct SeasonSummary {
  double yield = 0.0;
  double n_input = 0.0;
  double water_input = 0.0;
  double leaching = 0.0;
  double n2o = 0.0;
  double reward = 0.0;
  int days = 0;
};

/// Daily-step surrogate of a rainfed/irrigated maize season: GDD phenology,
/// a single-layer water bucket, a mineral-N pool and radiation-use-efficiency
/// growth with water and N stress.
class CropEnv final : public Environment {
 public:
  CropEnv(SeasonConfig cfg, std::shared_ptr<const WeatherSource> weather,
          std::shared_ptr<const emission::EmissionSource> emission)
      : cfg_(std::move(cfg)), weather_source_(std::move(weather)), emission_(std::move(emission)) {
    cfg_.validate();
    if (!weather_source_ || !emission_) throw ConfigError("crop environment needs weather and emission sources");
  }

  std::size_t observation_size() const override { return kObservationSize; }
  std::size_t action_count() const override { return kActionCount; }

  using Environment::reset;
  nn::Vector reset(RngStream& world, RngStream& noise) override { return reset_episode(world, noise).as_vector(); }

  StepResult step(std::size_t action) override {
    const auto out = step_action(ActionChoice::decode(action));
    return {out.observation.as_vector(), out.reward, out.terminal};
  }

  Observation reset_episode(RngStream& rng) {
    RngStream world = rng.derive(1), noise = rng.derive(2);
    return reset_episode(world, noise);
  }

  Observation reset_episode(RngStream& weather_rng, RngStream& noise_rng) {
    emission_rng_ = noise_rng.derive(0);
    const Date first = add_days(cfg_.planting, -kLeadDays);
    weather_ = weather_source_->materialize(first, add_days(cfg_.planting, cfg_.season_days), weather_rng);
    irrigation_.clear();
    fertilization_.clear();
    rows_.clear();
    days_.clear();

    s_ = EnvState{};
    s_.date = cfg_.planting;
    s_.pltpop = cfg_.crop.pltpop;
    s_.sw = cfg_.soil.initial_sw;
    s_.soil_n = cfg_.soil.initial_n;
    load_weather();
    started_ = true;
    return observe(s_);
  }

  StepOutcome step_action(const ActionChoice& a) {
    if (!started_) throw StateError("step before reset");
    if (s_.terminal) throw StateError("step after the terminal day");
    const auto& soil = cfg_.soil;
    const auto& crop = cfg_.crop;

    EpisodeRow row;
    row.dap = s_.dap;
    row.date = s_.date;
    row.action = a.encode();
    row.rain = s_.rain;
    DayDiagnostics& d = row.diag;
    d.n_applied = a.n_amount();
    d.water_applied = a.water_amount();
    if (d.water_applied > 0) irrigation_.push_back({s_.date, d.water_applied});
    if (d.n_applied > 0) fertilization_.push_back({s_.date, d.n_applied});
    s_.cumsumfert += d.n_applied;
    s_.soil_n += d.n_applied;

    // Water: inputs, saturation overflow, drainage above field capacity, then ET.
    const double wp = soil.wilting_point * soil.depth_mm;
    const double fc = soil.field_capacity * soil.depth_mm;
    const double sat = soil.saturation * soil.depth_mm;
    double storage = s_.sw * soil.depth_mm + s_.rain + d.water_applied;
    double drain = 0.0;
    if (storage > sat) {
      drain += storage - sat;
      storage = sat;
    }
    if (storage > fc) {
      const double extra = soil.drainage_coef * (storage - fc);
      drain += extra;
      storage -= extra;
    }
    const double tmean = 0.5 * (s_.tmax + s_.tmin);
    const double available = std::clamp((storage - wp) / (fc - wp), 0.0, 1.0);
    const double fw = std::min(1.0, available / 0.5);
    const double pet = std::max(0.0, 0.0135 * (tmean + 17.8) * s_.srad * 0.408);
    const double cover = 1.0 - std::exp(-crop.extinction * s_.xlai);
    const double kc = crop.kc_min + (crop.kc_max - crop.kc_min) * cover;
    const double et = std::min(pet * kc * fw, std::max(0.0, storage - wp));
    storage -= et;
    row.et = et;
    row.drainage = drain;

    // Leaching takes the drained share of the mineral pool.
    if (drain > 0.0 && s_.soil_n > 0.0) {
      const double frac = std::min(1.0, soil.leach_coef * drain / (storage + et + drain));
      d.leaching = s_.soil_n * frac;
      s_.soil_n -= d.leaching;
    }

    // Phenology and growth.
    const double gdd_today = std::max(0.0, tmean - crop.base_temp);
    const bool emerged = s_.gdd >= crop.gdd_emergence();
    s_.gdd += gdd_today;
    if (emerged) {
      const double ft = temperature_factor(tmean);
      const double par = 0.5 * s_.srad;
      const double potential = crop.rue * par * cover * 10.0 * ft * fw;  // g/m2 -> kg/ha
      const double need = std::max(0.0, crop.n_crit * (s_.biomass + potential) - s_.plant_n);
      const double uptake = std::min(need, crop.uptake_frac * s_.soil_n);
      s_.plant_n += uptake;
      s_.soil_n -= uptake;
      row.uptake = uptake;
      const double demand_total = crop.n_crit * (s_.biomass + potential);
      const double fn = demand_total > 0.0 ? std::min(1.0, s_.plant_n / demand_total) : 1.0;
      s_.biomass += potential * fn;

      const double stress = std::min(fw, fn);
      if (s_.gdd < crop.gdd_silking()) {
        const double span = crop.gdd_silking() - crop.gdd_emergence();
        s_.xlai = std::min(crop.lai_max, s_.xlai + crop.lai_max * gdd_today / span * stress);
        s_.peak_lai = std::max(s_.peak_lai, s_.xlai);
      } else {
        const double span = crop.gdd_maturity - crop.gdd_silking();
        s_.xlai = std::max(0.0, s_.xlai - crop.senescence * s_.peak_lai * gdd_today / span);
      }
    }
    s_.vstage = std::clamp((s_.gdd - crop.gdd_emergence()) / crop.leaf_gdd, 0.0, crop.max_leaves);
    s_.istage = 1;
    for (std::size_t k = 0; k < crop.stage_fractions.size(); ++k)
      if (s_.gdd >= crop.gdd_at_stage(k)) s_.istage = static_cast<int>(k) + 2;
    s_.sw = storage / soil.depth_mm;

    // Emission from today's moisture history, temperature and cumulative N.
    const auto features =
        emission::extract_features(weather_, irrigation_, fertilization_, s_.date, cfg_.planting);
    const double n_for_scaling = std::min(s_.cumsumfert, cfg_.emission.hoben_cap);
    d.n2o = emission_->daily_flux(features, n_for_scaling, cfg_.emission.sample ? &emission_rng_ : nullptr) / 1000.0;

    s_.dap += 1;
    s_.date = add_days(s_.date, 1);
    if (s_.gdd >= crop.gdd_maturity || s_.dap >= cfg_.season_days) {
      s_.terminal = true;
      d.harvest = true;
      d.yield = crop.harvest_index * s_.biomass;
    }
    load_weather();

    row.sw = s_.sw;
    row.soil_n = s_.soil_n;
    row.xlai = s_.xlai;
    row.biomass = s_.biomass;
    row.reward = step_reward(d, cfg_.weights);
    rows_.push_back(row);
    days_.push_back(d);
    return {row.reward, observe(s_), s_.terminal, d};
  }

  const SeasonConfig& config() const noexcept { return cfg_; }
  const EnvState& state() const noexcept { return s_; }
  const weather::WeatherSeries& weather() const noexcept { return weather_; }
  const std::vector<EpisodeRow>& rows() const noexcept { return rows_; }
  const std::vector<DayDiagnostics>& diagnostics() const noexcept { return days_; }

  EpisodeMetrics episode_metrics() const override {
    const auto s = summary();
    return {{"yield", s.yield}, {"n_input", s.n_input}, {"water_input", s.water_input},
            {"leaching", s.leaching}, {"n2o", s.n2o}};
  }

  SeasonSummary summary() const {
    SeasonSummary s;
    for (const auto& r : rows_) {
      s.yield += r.diag.yield;
      s.n_input += r.diag.n_applied;
      s.water_input += r.diag.water_applied;
      s.leaching += r.diag.leaching;
      s.n2o += r.diag.n2o;
    }
    s.reward = season_reward_total(days_, cfg_.weights);
    s.days = static_cast<int>(rows_.size());
    return s;
  }

 private:
  double temperature_factor(double t) const {
    const auto& c = cfg_.crop;
    if (t <= c.base_temp || t >= c.t_ceiling) return 0.0;
    if (t < c.t_opt_low) return (t - c.base_temp) / (c.t_opt_low - c.base_temp);
    if (t <= c.t_opt_high) return 1.0;
    return (c.t_ceiling - t) / (c.t_ceiling - c.t_opt_high);
  }

  void load_weather() {
    const auto& w = weather_[static_cast<std::size_t>(s_.dap + kLeadDays)];
    s_.rain = w.rain;
    s_.tmax = w.tmax;
    s_.tmin = w.tmin;
    s_.srad = w.srad;
  }

  SeasonConfig cfg_;
  std::shared_ptr<const WeatherSource> weather_source_;
  std::shared_ptr<const emission::EmissionSource> emission_;
  RngStream emission_rng_{0, 0};
  weather::WeatherSeries weather_;
  std::vector<emission::DatedAmount> irrigation_, fertilization_;
  std::vector<EpisodeRow> rows_;
  std::vector<DayDiagnostics> days_;
  EnvState s_;
  bool started_ = false;
};

inline constexpr const char* kEpisodeHeader =
    "day,date,action,n_applied,water_applied,rain,sw,et,drainage,uptake,soil_n,xlai,biomass,leaching,n2o,yield,"
    "reward";

inline void write_episode_csv(std::ostream& os, const std::vector<EpisodeRow>& rows) {
  os << kEpisodeHeader << '\n';
  for (const auto& r : rows) {
    os << r.dap << ',' << format_date(r.date) << ',' << r.action << ',' << text::fixed(r.diag.n_applied, 1) << ','
       << text::fixed(r.diag.water_applied, 1) << ',' << text::fixed(r.rain, 3) << ',' << text::fixed(r.sw, 5) << ','
       << text::fixed(r.et, 4) << ',' << text::fixed(r.drainage, 4) << ',' << text::fixed(r.uptake, 4) << ','
       << text::fixed(r.soil_n, 4) << ',' << text::fixed(r.xlai, 4) << ',' << text::fixed(r.biomass, 2) << ','
       << text::fixed(r.diag.leaching, 6) << ',' << text::fixed(r.diag.n2o, 6) << ',' << text::fixed(r.diag.yield, 2)
       << ',' << text::fixed(r.reward, 6) << '\n';
  }
}

}  // namespace cropdrqn::cropenv
