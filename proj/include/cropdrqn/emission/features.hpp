// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <array>
#include <vector>

#include "cropdrqn/core/date.hpp"
#include "cropdrqn/core/error.hpp"
#include "cropdrqn/weather/types.hpp"

namespace cropdrqn::emission {

/// Days-after-fertilization value used before the first top dressing.
inline constexpr double kNoFertilizationDays = 365.0;

struct EmissionFeatures {
  double pp2 = 0.0;     // mm over the two days before sampling
  double pp7 = 0.0;     // mm over the seven days before sampling
  double air_t = 0.0;   // daily mean air temperature, C
  double days_af = kNoFertilizationDays;

  std::array<double, 4> as_array() const { return {pp2, pp7, air_t, days_af}; }
  bool operator==(const EmissionFeatures&) const = default;
};

/// A dated quantity: irrigation in mm (1 L/m2 == 1 mm) or fertilizer in kg N/ha.
struct DatedAmount {
  Date date;
  double amount = 0.0;
};

inline void validate(const EmissionFeatures& f, std::size_t line = 0) {
  if (!(f.pp2 >= 0.0)) throw ValidationError("pp2", "must be nonnegative", line);
  if (!(f.pp7 >= f.pp2)) throw ValidationError("pp7", "must be at least pp2", line);
  if (!(f.days_af >= 0.0)) throw ValidationError("daysAF", "must be nonnegative", line);
}

/// Features for `day`. Days preceding the first entry of `weather` count as dry.
/// `season_start` bounds the search for fertilizer events.
inline EmissionFeatures extract_features(const weather::WeatherSeries& weather,
                                         const std::vector<DatedAmount>& irrigation,
                                         const std::vector<DatedAmount>& fertilization, Date day,
                                         Date season_start) {
  if (weather.empty()) throw DomainError("no weather to extract features from");
  if (days_between(season_start, day) < 0) throw DomainError("sampling day precedes the season start");
  const long idx = days_between(weather.front().date, day);
  if (idx < 0 || idx >= static_cast<long>(weather.size()))
    throw DomainError("sampling day " + format_date(day) + " is outside the weather series");

  auto water_on = [&](long i) {
    double w = i >= 0 ? weather[static_cast<std::size_t>(i)].rain : 0.0;
    const Date d = add_days(weather.front().date, i);
    for (const auto& e : irrigation)
      if (e.date == d) w += e.amount;
    return w;
  };

  EmissionFeatures f;
  for (long k = 1; k <= 7; ++k) {
    const double w = water_on(idx - k);
    f.pp7 += w;
    if (k <= 2) f.pp2 += w;
  }
  const auto& today = weather[static_cast<std::size_t>(idx)];
  f.air_t = 0.5 * (today.tmax + today.tmin);
  for (const auto& e : fertilization) {
    if (e.amount <= 0.0) continue;
    const long age = days_between(e.date, day);
    if (age >= 0 && days_between(season_start, e.date) >= 0)
      f.days_af = std::min(f.days_af, static_cast<double>(age));
  }
  return f;
}

}  // namespace cropdrqn::emission
