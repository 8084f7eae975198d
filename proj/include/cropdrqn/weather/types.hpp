// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <array>
#include <cmath>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "cropdrqn/core/date.hpp"
#include "cropdrqn/core/error.hpp"

namespace cropdrqn::weather {

struct WeatherDay {
  Date date{};
  double srad = 0.0;  // MJ/m2/d
  double tmax = 0.0;  // degC
  double tmin = 0.0;  // degC
  double rain = 0.0;  // mm/d

  friend bool operator==(const WeatherDay&, const WeatherDay&) = default;
};

using WeatherSeries = std::vector<WeatherDay>;

/// Checks the physical invariants of one day; throws ValidationError naming the field.
inline void validate_day(const WeatherDay& d, std::size_t line = 0) {
  if (!std::isfinite(d.rain) || d.rain < 0.0) throw ValidationError("rain", "must be >= 0 mm", line);
  if (!std::isfinite(d.srad) || d.srad < 0.0) throw ValidationError("srad", "must be >= 0", line);
  if (!std::isfinite(d.tmax) || !std::isfinite(d.tmin))
    throw ValidationError("tmax/tmin", "must be finite", line);
  if (d.tmax < d.tmin) throw ValidationError("tmax", "tmax < tmin", line);
}

/// Generated variables carried by the residual process, in this order.
enum Variable : std::size_t { kTmax = 0, kTmin = 1, kSrad = 2 };

/// Mean and standard deviation of one variable, conditioned on wet or dry days.
struct ConditionalMoments {
  double mean_dry = 0.0;
  double mean_wet = 0.0;
  double sd_dry = 0.0;
  double sd_wet = 0.0;

  double mean(bool wet) const { return wet ? mean_wet : mean_dry; }
  double sd(bool wet) const { return wet ? sd_wet : sd_dry; }
};

struct MonthParams {
  double p_wd = 0.0;  // P(wet | previous day dry)
  double p_ww = 0.0;  // P(wet | previous day wet)
  double gamma_shape = 1.0;
  double gamma_scale = 1.0;  // mm
  std::array<ConditionalMoments, 3> vars{};

  /// Long-run wet-day frequency of the two-state chain.
  double stationary_wet() const {
    const double den = 1.0 - p_ww + p_wd;
    return den > 0.0 ? p_wd / den : 0.0;
  }
};

/// Richardson-type weather generator parameters.
///
/// Monthly Markov-chain occurrence, gamma wet-day amounts and conditional
/// moments; one lag-1 residual process z_t = A z_{t-1} + B e_t for
/// (tmax, tmin, srad) shared by all months.
struct WgenParams {
  std::array<MonthParams, 12> months{};
  Eigen::Matrix3d A = Eigen::Matrix3d::Zero();
  Eigen::Matrix3d B = Eigen::Matrix3d::Identity();

  const MonthParams& month(unsigned m) const { return months.at(m - 1); }
  MonthParams& month(unsigned m) { return months.at(m - 1); }
};

inline void validate(const WgenParams& p) {
  for (unsigned m = 1; m <= 12; ++m) {
    const auto& mp = p.month(m);
    const std::string tag = "month " + std::to_string(m) + " ";
    if (!(mp.p_wd >= 0.0 && mp.p_wd <= 1.0)) throw ValidationError(tag + "p_wd", "outside [0, 1]");
    if (!(mp.p_ww >= 0.0 && mp.p_ww <= 1.0)) throw ValidationError(tag + "p_ww", "outside [0, 1]");
    if (!(mp.gamma_shape > 0.0)) throw ValidationError(tag + "gamma_shape", "must be > 0");
    if (!(mp.gamma_scale > 0.0)) throw ValidationError(tag + "gamma_scale", "must be > 0");
    for (const auto& v : mp.vars)
      if (!(v.sd_dry >= 0.0 && v.sd_wet >= 0.0) || !std::isfinite(v.mean_dry) || !std::isfinite(v.mean_wet))
        throw ValidationError(tag + "moments", "standard deviations must be >= 0 and means finite");
  }
  if (!p.A.allFinite() || !p.B.allFinite()) throw ValidationError("A/B", "must be finite");
}

/// Perturbation applied on top of baseline parameters.
struct ClimateScenario {
  double temp_offset = 0.0;  // degC added to monthly tmax and tmin means
  double rain_factor = 1.0;  // multiplier on wet-day amounts (gamma scale)
  bool preserve_monthly_totals = false;

  void validate() const {
    if (!(temp_offset >= 0.0)) throw ValidationError("temp_offset", "must be >= 0");
    if (!(rain_factor > 0.0 && rain_factor <= 1.0)) throw ValidationError("rain_factor", "must be in (0, 1]");
  }
};

}  // namespace cropdrqn::weather
