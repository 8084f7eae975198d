// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <algorithm>
#include <map>
#include <utility>

#include <Eigen/Core>

#include "cropdrqn/core/rng.hpp"
#include "cropdrqn/weather/types.hpp"

namespace cropdrqn::weather {

/// Day-to-day generator state: previous wetness and residual vector.
struct WgenState {
  bool has_prev = false;
  bool prev_wet = false;
  Eigen::Vector3d residual = Eigen::Vector3d::Zero();
};

/// Draws one day.
///
/// Random draws per day, in order: one uniform for occurrence, one gamma
/// amount when wet, three standard normals for the residual innovation.
inline WeatherDay generate_day(const WgenParams& params, WgenState& state, Date date, RngStream& rng,
                               const ClimateScenario& scenario = {}) {
  const MonthParams& mp = params.month(month_of(date));
  const double p_wet =
      state.has_prev ? (state.prev_wet ? mp.p_ww : mp.p_wd) : mp.stationary_wet();
  const bool wet = rng.uniform() < p_wet;

  WeatherDay day;
  day.date = date;
  if (wet) day.rain = rng.gamma(mp.gamma_shape, mp.gamma_scale * scenario.rain_factor);

  Eigen::Vector3d eps(rng.normal(), rng.normal(), rng.normal());
  state.residual = params.A * state.residual + params.B * eps;
  state.has_prev = true;
  state.prev_wet = wet;

  auto value = [&](Variable v) {
    const auto& m = mp.vars[v];
    return m.mean(wet) + m.sd(wet) * state.residual[v];
  };
  day.tmax = value(kTmax) + scenario.temp_offset;
  day.tmin = value(kTmin) + scenario.temp_offset;
  day.srad = std::max(0.0, value(kSrad));
  if (day.tmax < day.tmin) std::swap(day.tmax, day.tmin);
  day.rain = std::max(0.0, day.rain);
  return day;
}

/// Rescales rainfall so that every calendar month of `series` carries exactly
/// `factor` times the reference total over the same days. A month that came
/// out completely dry while its target is positive gets the whole target on
/// its middle day.
inline void match_monthly_totals(WeatherSeries& series, const WeatherSeries& reference,
                                 double factor = 1.0) {
  // Reference days are matched on (month, day), so any reference year works.
  std::map<std::pair<unsigned, unsigned>, double> ref_by_day;
  for (const auto& d : reference) ref_by_day[{month_of(d.date), day_of(d.date)}] = d.rain;
  std::map<unsigned, std::vector<std::size_t>> by_month;
  for (std::size_t i = 0; i < series.size(); ++i) by_month[month_of(series[i].date)].push_back(i);
  for (auto& [m, idx] : by_month) {
    double target = 0.0, generated = 0.0;
    for (auto i : idx) {
      auto it = ref_by_day.find({m, day_of(series[i].date)});
      if (it == ref_by_day.end())
        throw ConfigError("reference weather lacks month " + std::to_string(m) + " day " +
                          std::to_string(day_of(series[i].date)));
      target += it->second;
      generated += series[i].rain;
    }
    target *= factor;
    if (generated > 0.0) {
      const double s = target / generated;
      for (auto i : idx) series[i].rain *= s;
    } else {
      for (auto i : idx) series[i].rain = 0.0;
      if (target > 0.0) series[idx[idx.size() / 2]].rain = target;
    }
  }
}

/// Generates the inclusive date span [start, end], which must lie in one year.
///
/// The temperature offset shifts the monthly means before sampling and the
/// rain factor scales the gamma scale parameter. With
/// `preserve_monthly_totals`, monthly rainfall is rescaled to the reference
/// series' totals (times the rain factor); `reference` is then required.
inline WeatherSeries generate_season(const WgenParams& params, const ClimateScenario& scenario,
                                     Date start, Date end, RngStream& rng,
                                     const WeatherSeries* reference = nullptr) {
  scenario.validate();
  WeatherSeries out;
  if (days_between(start, end) < 0) return out;
  if (year_of(start) != year_of(end)) throw ConfigError("season span must lie within one calendar year");
  if (scenario.preserve_monthly_totals && !reference)
    throw ConfigError("preserve_monthly_totals needs a reference series");
  WgenState state;
  const long n = days_between(start, end) + 1;
  out.reserve(static_cast<std::size_t>(n));
  for (long i = 0; i < n; ++i) out.push_back(generate_day(params, state, add_days(start, i), rng, scenario));
  if (scenario.preserve_monthly_totals) match_monthly_totals(out, *reference, scenario.rain_factor);
  return out;
}

}  // namespace cropdrqn::weather
