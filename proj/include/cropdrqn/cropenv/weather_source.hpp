// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <memory>
#include <string>

#include "cropdrqn/core/rng.hpp"
#include "cropdrqn/core/text.hpp"
#include "cropdrqn/weather/wgen.hpp"

namespace cropdrqn::cropenv {

/// Supplies daily weather for an episode window.
class WeatherSource {
 public:
  virtual ~WeatherSource() = default;
  /// Weather for every day in [first, last].
  virtual weather::WeatherSeries materialize(Date first, Date last, RngStream& rng) const = 0;
  virtual std::string describe() const = 0;
};

/// A recorded series, identical in every episode.
class FixedWeather final : public WeatherSource {
 public:
  explicit FixedWeather(weather::WeatherSeries series, std::string label = "fixed")
      : series_(std::move(series)), label_(std::move(label)) {
    if (series_.empty()) throw ConfigError("fixed weather series is empty");
    for (std::size_t i = 1; i < series_.size(); ++i)
      if (days_between(series_[i - 1].date, series_[i].date) != 1)
        throw ConfigError("fixed weather series must be consecutive days");
  }

  weather::WeatherSeries materialize(Date first, Date last, RngStream&) const override {
    const long a = days_between(series_.front().date, first), b = days_between(series_.front().date, last);
    if (a < 0 || b >= static_cast<long>(series_.size()) || b < a)
      throw ConfigError("weather series " + label_ + " does not cover " + format_date(first) + ".." +
                        format_date(last));
    return {series_.begin() + a, series_.begin() + b + 1};
  }
  std::string describe() const override { return label_; }
  const weather::WeatherSeries& series() const noexcept { return series_; }

 private:
  weather::WeatherSeries series_;
  std::string label_;
};

/// Fresh stochastic weather per episode. Whole calendar years are generated so that
/// monthly-total matching sees complete months.
class GeneratedWeather final : public WeatherSource {
 public:
  GeneratedWeather(weather::WgenParams params, weather::ClimateScenario scenario,
                   std::shared_ptr<const weather::WeatherSeries> reference = nullptr)
      : params_(std::move(params)), scenario_(scenario), reference_(std::move(reference)) {
    weather::validate(params_);
    scenario_.validate();
    if (scenario_.preserve_monthly_totals && !reference_)
      throw ConfigError("preserving monthly totals needs a reference series");
  }

  weather::WeatherSeries materialize(Date first, Date last, RngStream& rng) const override {
    weather::WeatherSeries all;
    for (int y = year_of(first); y <= year_of(last); ++y) {
      auto part = weather::generate_season(params_, scenario_, make_date(y, 1, 1), make_date(y, 12, 31), rng,
                                           reference_.get());
      all.insert(all.end(), part.begin(), part.end());
    }
    const long a = days_between(all.front().date, first), b = days_between(all.front().date, last);
    return {all.begin() + a, all.begin() + b + 1};
  }
  std::string describe() const override {
    return "wgen(offset=" + text::exact(scenario_.temp_offset) + ",rain=" + text::exact(scenario_.rain_factor) +
           (scenario_.preserve_monthly_totals ? ",preserve" : "") + ")";
  }
  const weather::ClimateScenario& scenario() const noexcept { return scenario_; }

 private:
  weather::WgenParams params_;
  weather::ClimateScenario scenario_;
  std::shared_ptr<const weather::WeatherSeries> reference_;
};

}  // namespace cropdrqn::cropenv
