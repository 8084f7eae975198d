// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <array>
#include <cmath>
#include <string>
#include <vector>

#include <Eigen/Cholesky>
#include <Eigen/Eigenvalues>
#include <Eigen/LU>

#include "cropdrqn/weather/types.hpp"

namespace cropdrqn::weather {

/// Rainfall above this depth (mm) makes a day wet.
inline constexpr double kWetThreshold = 0.0;

/// Gamma parameters used for months with too few wet days to fit.
inline constexpr double kFallbackGammaShape = 0.8;
inline constexpr double kFallbackGammaScale = 8.0;

struct FitReport {
  WgenParams params;
  std::array<bool, 12> gamma_fallback{};
  std::vector<std::string> warnings;
};

namespace detail {
struct Accum {
  double n = 0, sum = 0, sumsq = 0;
  void add(double x) {
    n += 1;
    sum += x;
    sumsq += x * x;
  }
  double mean() const { return n > 0 ? sum / n : 0.0; }
  /// Population standard deviation.
  double sd() const {
    if (n <= 0) return 0.0;
    const double m = mean();
    return std::sqrt(std::max(0.0, sumsq / n - m * m));
  }
  double var() const { return sd() * sd(); }
};

inline bool is_wet(const WeatherDay& d) { return d.rain > kWetThreshold; }

/// Symmetric square root factor of a covariance, repaired to PSD if needed.
inline Eigen::Matrix3d factor_covariance(const Eigen::Matrix3d& c, bool& repaired) {
  Eigen::LLT<Eigen::Matrix3d> llt(c);
  if (llt.info() == Eigen::Success) {
    repaired = false;
    return llt.matrixL();
  }
  repaired = true;
  Eigen::SelfAdjointEigenSolver<Eigen::Matrix3d> es(c);
  Eigen::Vector3d ev = es.eigenvalues().cwiseMax(0.0).cwiseSqrt();
  return es.eigenvectors() * ev.asDiagonal();
}
}  // namespace detail

/// Estimates generator parameters from daily history (at least 365 days).
///
/// Transition probabilities from wet/dry run counts, gamma parameters by the
/// method of moments on wet-day amounts, conditional means and population
/// standard deviations per month, and A, B from lag-0 and lag-1 correlations of
/// the standardized residuals: A = M1 M0^-1, B B^T = M0 - A M1^T.
inline FitReport fit_params(const WeatherSeries& history) {
  if (history.size() < 365) throw DomainError("fit_params needs at least one full year of daily records");
  for (std::size_t i = 1; i < history.size(); ++i)
    if (days_between(history[i - 1].date, history[i].date) != 1)
      throw DomainError("fit_params needs consecutive daily records; gap after " +
                        format_date(history[i - 1].date));

  FitReport rep;
  std::array<double, 12> n_dry{}, n_dw{}, n_wet{}, n_ww{};
  std::array<detail::Accum, 12> amounts;
  std::array<std::array<std::array<detail::Accum, 2>, 3>, 12> moments;  // [month][var][wet]
  for (std::size_t i = 0; i < history.size(); ++i) {
    const auto& d = history[i];
    const unsigned m = month_of(d.date) - 1;
    const bool wet = detail::is_wet(d);
    if (i > 0) {
      if (detail::is_wet(history[i - 1])) {
        n_wet[m] += 1;
        n_ww[m] += wet;
      } else {
        n_dry[m] += 1;
        n_dw[m] += wet;
      }
    }
    if (wet) amounts[m].add(d.rain);
    moments[m][kTmax][wet].add(d.tmax);
    moments[m][kTmin][wet].add(d.tmin);
    moments[m][kSrad][wet].add(d.srad);
  }

  for (unsigned m = 0; m < 12; ++m) {
    MonthParams& mp = rep.params.months[m];
    mp.p_wd = n_dry[m] > 0 ? n_dw[m] / n_dry[m] : 0.0;
    mp.p_ww = n_wet[m] > 0 ? n_ww[m] / n_wet[m] : 0.0;
    const double mean = amounts[m].mean(), var = amounts[m].var();
    if (amounts[m].n >= 2 && var > 0.0) {
      mp.gamma_shape = mean * mean / var;
      mp.gamma_scale = var / mean;
    } else {
      mp.gamma_shape = kFallbackGammaShape;
      mp.gamma_scale = kFallbackGammaScale;
      rep.gamma_fallback[m] = true;
      rep.warnings.push_back("month " + std::to_string(m + 1) + ": " +
                             std::to_string(static_cast<int>(amounts[m].n)) +
                             " wet days, gamma parameters set to defaults");
    }
    for (std::size_t v = 0; v < 3; ++v) {
      auto& dry = moments[m][v][0];
      auto& wet = moments[m][v][1];
      auto& cm = mp.vars[v];
      // A month without wet (or dry) days borrows the other condition's moments.
      const auto& d = dry.n > 0 ? dry : wet;
      const auto& w = wet.n > 0 ? wet : dry;
      cm.mean_dry = d.mean();
      cm.sd_dry = d.sd();
      cm.mean_wet = w.mean();
      cm.sd_wet = w.sd();
    }
    if (moments[m][0][1].n == 0 && moments[m][0][0].n > 0)
      rep.warnings.push_back("month " + std::to_string(m + 1) + ": no wet days, wet moments copied from dry");
  }

  // Standardized residuals.
  std::vector<Eigen::Vector3d> z(history.size());
  for (std::size_t i = 0; i < history.size(); ++i) {
    const auto& d = history[i];
    const auto& mp = rep.params.month(month_of(d.date));
    const bool wet = detail::is_wet(d);
    const double x[3] = {d.tmax, d.tmin, d.srad};
    for (std::size_t v = 0; v < 3; ++v) {
      const double sd = mp.vars[v].sd(wet);
      z[i][v] = sd > 0.0 ? (x[v] - mp.vars[v].mean(wet)) / sd : 0.0;
    }
  }
  Eigen::Matrix3d c0 = Eigen::Matrix3d::Zero(), c1 = Eigen::Matrix3d::Zero();
  for (std::size_t i = 0; i < z.size(); ++i) c0 += z[i] * z[i].transpose();
  for (std::size_t i = 1; i < z.size(); ++i) c1 += z[i] * z[i - 1].transpose();
  c0 /= static_cast<double>(z.size());
  c1 /= static_cast<double>(z.size() - 1);
  Eigen::Vector3d s = c0.diagonal().cwiseSqrt();
  Eigen::Matrix3d m0 = Eigen::Matrix3d::Identity(), m1 = Eigen::Matrix3d::Zero();
  for (int j = 0; j < 3; ++j)
    for (int k = 0; k < 3; ++k) {
      if (s[j] > 0 && s[k] > 0) {
        if (j != k) m0(j, k) = c0(j, k) / (s[j] * s[k]);
        m1(j, k) = c1(j, k) / (s[j] * s[k]);
      }
    }
  Eigen::FullPivLU<Eigen::Matrix3d> lu(m0);
  if (!lu.isInvertible()) {
    rep.warnings.push_back("singular lag-0 correlation; residuals treated as independent");
    rep.params.A.setZero();
    rep.params.B.setIdentity();
  } else {
    rep.params.A = m1 * lu.inverse();
    bool repaired = false;
    rep.params.B = detail::factor_covariance(m0 - rep.params.A * m1.transpose(), repaired);
    if (repaired) rep.warnings.push_back("innovation covariance was not positive definite; clipped");
  }
  return rep;
}

}  // namespace cropdrqn::weather
