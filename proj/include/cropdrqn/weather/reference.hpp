// SPDX-License-Identifier: Apache-2.0
#pragma once

// Bundled baseline climate: a synthetic "2012-like" year for a rain-fed maize
// site in the US Midwest (warm spring, hot and dry July-September), generated
// from documented parameters with a fixed stream, and the generator
// parameters refitted from that single year.

#include "cropdrqn/weather/fit.hpp"
#include "cropdrqn/weather/wgen.hpp"

namespace cropdrqn::weather {

inline constexpr int kReferenceYear = 2012;
inline constexpr std::uint64_t kReferenceSeed = 2012;

/// Hand-set parameters the reference year is drawn from.
///
/// Per month: mean tmax/tmin (degC), mean srad (MJ/m2/d), p_wd, p_ww, mean
/// wet-day depth (mm) and gamma shape. Wet days run 2.5 degC cooler in tmax,
/// 1 degC warmer in tmin and at 65% radiation. Residual matrices A, B are
/// Richardson's published values for (tmax, tmin, srad).
inline WgenParams documented_params() {
  struct Row {
    double tmax, tmin, srad, p_wd, p_ww, wet_mean, shape;
  };
  static constexpr Row kRows[12] = {
      {0.5, -7.5, 6.5, 0.30, 0.50, 4.5, 0.80},   {2.5, -6.5, 9.5, 0.28, 0.48, 4.5, 0.80},
      {14.0, 1.5, 13.0, 0.28, 0.45, 7.0, 0.80},  {15.0, 2.5, 17.0, 0.28, 0.45, 8.0, 0.80},
      {23.0, 9.5, 21.0, 0.26, 0.45, 9.0, 0.75},  {28.0, 13.5, 23.5, 0.20, 0.40, 9.0, 0.75},
      {31.5, 17.0, 23.0, 0.16, 0.35, 9.5, 0.75}, {28.0, 14.5, 19.5, 0.18, 0.38, 9.0, 0.75},
      {23.0, 9.5, 15.0, 0.20, 0.40, 8.5, 0.75},  {15.0, 5.0, 10.0, 0.28, 0.48, 8.0, 0.80},
      {7.0, -1.0, 6.0, 0.28, 0.48, 6.0, 0.80},   {2.0, -4.5, 4.5, 0.30, 0.50, 5.0, 0.80},
  };
  WgenParams p;
  for (unsigned m = 0; m < 12; ++m) {
    const Row& r = kRows[m];
    MonthParams& mp = p.months[m];
    mp.p_wd = r.p_wd;
    mp.p_ww = r.p_ww;
    mp.gamma_shape = r.shape;
    mp.gamma_scale = r.wet_mean / r.shape;
    mp.vars[kTmax] = {r.tmax + 0.7, r.tmax - 2.5, 4.0, 3.5};
    mp.vars[kTmin] = {r.tmin - 0.3, r.tmin + 1.0, 3.8, 3.4};
    mp.vars[kSrad] = {1.1 * r.srad, 0.65 * r.srad, 0.22 * r.srad, 0.35 * r.srad};
  }
  p.A << 0.567, 0.086, -0.002,  //
      0.253, 0.504, -0.050,     //
      -0.006, 0.039, 0.244;
  p.B << 0.781, 0.0, 0.0,  //
      0.328, 0.637, 0.0,   //
      0.238, -0.341, 0.873;
  return p;
}

/// The bundled reference year, Jan 1 to Dec 31.
inline const WeatherSeries& reference_year() {
  static const WeatherSeries series = [] {
    RngStream rng(kReferenceSeed, 0);
    return generate_season(documented_params(), {}, make_date(kReferenceYear, 1, 1),
                           make_date(kReferenceYear, 12, 31), rng);
  }();
  return series;
}

/// Generator parameters fitted from the reference year.
inline const WgenParams& reference_params() {
  static const WgenParams params = fit_params(reference_year()).params;
  return params;
}

}  // namespace cropdrqn::weather
