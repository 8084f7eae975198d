// SPDX-License-Identifier: Apache-2.0
#include <gtest/gtest.h>

#include <cmath>
#include <map>
#include <sstream>

#include "cropdrqn/weather/fit.hpp"
#include "cropdrqn/weather/io.hpp"
#include "cropdrqn/weather/reference.hpp"
#include "cropdrqn/weather/wgen.hpp"

using namespace cropdrqn;
using namespace cropdrqn::weather;

namespace {

WgenParams flat_params(double p_wd, double p_ww, double shape, double scale) {
  WgenParams p;
  for (auto& m : p.months) {
    m.p_wd = p_wd;
    m.p_ww = p_ww;
    m.gamma_shape = shape;
    m.gamma_scale = scale;
    m.vars[kTmax] = {25.0, 22.0, 3.0, 3.0};
    m.vars[kTmin] = {12.0, 13.0, 2.5, 2.5};
    m.vars[kSrad] = {20.0, 12.0, 4.0, 5.0};
  }
  p.A = documented_params().A;
  p.B = documented_params().B;
  return p;
}

WeatherSeries long_run(const WgenParams& p, int years, RngStream& rng, ClimateScenario sc = {}) {
  WeatherSeries out;
  WgenState st;
  Date d = make_date(2001, 1, 1);
  const long n = days_between(d, make_date(2001 + years, 1, 1));
  out.reserve(static_cast<std::size_t>(n));
  for (long i = 0; i < n; ++i) out.push_back(generate_day(p, st, add_days(d, i), rng, sc));
  return out;
}

double correlation(const std::vector<double>& a, const std::vector<double>& b) {
  double ma = 0, mb = 0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    ma += a[i];
    mb += b[i];
  }
  ma /= a.size();
  mb /= b.size();
  double sab = 0, saa = 0, sbb = 0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    sab += (a[i] - ma) * (b[i] - mb);
    saa += (a[i] - ma) * (a[i] - ma);
    sbb += (b[i] - mb) * (b[i] - mb);
  }
  return sab / std::sqrt(saa * sbb);
}

}  // namespace

TEST(Generate, AbsorbingWetChain) {
  auto p = flat_params(0.2, 1.0, 1.0, 5.0);
  RngStream rng(1, 0);
  WgenState st;
  st.has_prev = true;
  st.prev_wet = true;
  for (int i = 0; i < 1000; ++i) EXPECT_GT(generate_day(p, st, make_date(2010, 6, 1), rng).rain, 0.0);
}

TEST(Generate, ExponentialAmountsWhenShapeIsOne) {
  auto p = flat_params(0.5, 0.5, 1.0, 7.0);
  RngStream rng(2, 0);
  auto s = long_run(p, 600, rng);
  double sum = 0;
  std::size_t n = 0;
  for (const auto& d : s)
    if (d.rain > 0) {
      sum += d.rain;
      ++n;
    }
  ASSERT_GE(n, 100000u);
  EXPECT_NEAR(sum / n, 7.0, 0.02 * 7.0);
}

TEST(Generate, WetFrequencyMatchesStationaryDistribution) {
  auto p = flat_params(0.3, 0.6, 1.0, 5.0);
  RngStream rng(3, 0);
  auto s = long_run(p, 300, rng);
  ASSERT_GE(s.size(), 100000u);
  double wet = 0;
  for (const auto& d : s) wet += d.rain > 0;
  EXPECT_NEAR(wet / s.size(), 0.3 / (1 - 0.6 + 0.3), 0.01);
}

TEST(Generate, GammaMomentsOfWetDays) {
  const double shape = 1.5, scale = 6.0;
  auto p = flat_params(0.4, 0.7, shape, scale);
  RngStream rng(4, 0);
  auto s = long_run(p, 600, rng);
  double n = 0, m = 0, m2 = 0;
  for (const auto& d : s)
    if (d.rain > 0) {
      n += 1;
      m += d.rain;
      m2 += d.rain * d.rain;
    }
  ASSERT_GE(n, 1e5);
  const double mean = m / n, var = m2 / n - mean * mean;
  EXPECT_NEAR(mean / (shape * scale), 1.0, 0.03);
  EXPECT_NEAR(var / (shape * scale * scale), 1.0, 0.03);
}

TEST(Generate, PhysicalInvariantsHold) {
  RngStream rng(5, 0);
  auto s = long_run(documented_params(), 50, rng, {2.0, 0.6, false});
  for (const auto& d : s) {
    EXPECT_GE(d.rain, 0.0);
    EXPECT_GE(d.tmax, d.tmin);
    EXPECT_GE(d.srad, 0.0);
  }
}

TEST(Generate, TmaxResidualAutocorrelationTracksA) {
  auto p = flat_params(0.3, 0.5, 1.0, 5.0);
  RngStream rng(6, 0);
  auto s = long_run(p, 300, rng);
  std::vector<double> z;
  for (const auto& d : s) {
    const auto& v = p.month(month_of(d.date)).vars[kTmax];
    const bool wet = d.rain > 0;
    z.push_back((d.tmax - v.mean(wet)) / v.sd(wet));
  }
  std::vector<double> a(z.begin() + 1, z.end()), b(z.begin(), z.end() - 1);
  const double rho = correlation(a, b);
  EXPECT_GT(rho * p.A(0, 0), 0.0);
  EXPECT_NEAR(rho, p.A(0, 0), 0.1);
}

TEST(Generate, StreamsAreReproducibleAndIndependent) {
  auto p = documented_params();
  RngStream a(9, 1), b(9, 1), c(9, 2);
  auto sa = long_run(p, 20, a), sb = long_run(p, 20, b), sc = long_run(p, 20, c);
  EXPECT_EQ(sa, sb);
  std::vector<double> ra, rc, ta, tc;
  for (std::size_t i = 0; i < sa.size(); ++i) {
    ra.push_back(sa[i].rain);
    rc.push_back(sc[i].rain);
    // Remove the seasonal cycle before correlating temperatures.
    const auto& mp = p.month(month_of(sa[i].date)).vars[kTmax];
    ta.push_back(sa[i].tmax - mp.mean_dry);
    tc.push_back(sc[i].tmax - mp.mean_dry);
  }
  EXPECT_LT(std::abs(correlation(ra, rc)), 0.05);
  EXPECT_LT(std::abs(correlation(ta, tc)), 0.05);
}

TEST(Season, IdentityScenarioEqualsDayChaining) {
  auto p = documented_params();
  RngStream a(10, 3), b(10, 3);
  auto season = generate_season(p, {}, make_date(2012, 5, 1), make_date(2012, 10, 31), a);
  WgenState st;
  for (std::size_t i = 0; i < season.size(); ++i)
    EXPECT_EQ(season[i], generate_day(p, st, add_days(make_date(2012, 5, 1), static_cast<long>(i)), b));
}

TEST(Season, EmptySpanGivesEmptySeries) {
  RngStream rng(1, 1);
  EXPECT_TRUE(generate_season(documented_params(), {}, make_date(2012, 5, 2), make_date(2012, 5, 1), rng).empty());
}

TEST(Season, TemperatureOffsetShiftsMean) {
  auto p = documented_params();
  double base = 0, warm = 0;
  std::size_t n = 0;
  for (std::uint64_t k = 0; k < 1000; ++k) {
    RngStream r0(20, k), r1(21, k);
    auto s0 = generate_season(p, {}, make_date(2012, 5, 1), make_date(2012, 9, 30), r0);
    auto s1 = generate_season(p, {3.0, 1.0, false}, make_date(2012, 5, 1), make_date(2012, 9, 30), r1);
    for (std::size_t i = 0; i < s0.size(); ++i) {
      base += s0[i].tmax;
      warm += s1[i].tmax;
      ++n;
    }
  }
  EXPECT_NEAR(warm / n - base / n, 3.0, 0.1);
}

TEST(Season, RainFactorScalesSeasonalRain) {
  auto p = documented_params();
  double base = 0, dry = 0;
  for (std::uint64_t k = 0; k < 1000; ++k) {
    RngStream r0(30, k), r1(31, k);
    for (const auto& d : generate_season(p, {}, make_date(2012, 5, 1), make_date(2012, 9, 30), r0)) base += d.rain;
    for (const auto& d : generate_season(p, {0.0, 0.2, false}, make_date(2012, 5, 1), make_date(2012, 9, 30), r1))
      dry += d.rain;
  }
  EXPECT_NEAR(dry / base, 0.2, 0.2 * 0.05);
}

TEST(Season, PreservedMonthlyTotalsMatchReferenceExactly) {
  const auto& ref = reference_year();
  for (std::uint64_t k = 0; k < 50; ++k) {
    RngStream rng(40, k);
    const double factor = k % 2 ? 1.0 : 0.4;
    auto s = generate_season(reference_params(), {1.5, factor, true}, make_date(2012, 4, 15),
                             make_date(2012, 10, 20), rng, &ref);
    std::map<unsigned, double> got, want;
    for (const auto& d : s) got[month_of(d.date)] += d.rain;
    for (const auto& d : ref)
      if (days_between(make_date(2012, 4, 15), d.date) >= 0 && days_between(d.date, make_date(2012, 10, 20)) >= 0)
        want[month_of(d.date)] += d.rain;
    for (auto& [m, t] : want) EXPECT_NEAR(got[m], factor * t, 1e-9) << "month " << m;
  }
}

TEST(Season, PreserveWithoutReferenceIsConfigError) {
  RngStream rng(1, 1);
  EXPECT_THROW(generate_season(documented_params(), {0, 1, true}, make_date(2012, 5, 1), make_date(2012, 6, 1), rng),
               ConfigError);
}

TEST(Fit, RecoversKnownParameters) {
  WgenParams truth = flat_params(0.4, 0.7, 3.0, 4.0);
  RngStream rng(50, 0);
  auto history = long_run(truth, 200, rng);
  auto rep = fit_params(history);
  for (unsigned m = 1; m <= 12; ++m) {
    const auto& f = rep.params.month(m);
    EXPECT_NEAR(f.p_ww, 0.7, 0.02) << "month " << m;
    EXPECT_NEAR(f.gamma_shape * f.gamma_scale / 12.0, 1.0, 0.03) << "month " << m;
    EXPECT_FALSE(rep.gamma_fallback[m - 1]);
  }
  EXPECT_NEAR(rep.params.A(0, 0), truth.A(0, 0), 0.05);
}

TEST(Fit, AllDryHistoryFallsBack) {
  WeatherSeries h;
  for (int i = 0; i < 365; ++i)
    h.push_back({add_days(make_date(2011, 1, 1), i), 15.0, 20.0 + (i % 7), 5.0 + (i % 5), 0.0});
  auto rep = fit_params(h);
  for (unsigned m = 1; m <= 12; ++m) {
    EXPECT_EQ(rep.params.month(m).p_wd, 0.0);
    EXPECT_EQ(rep.params.month(m).p_ww, 0.0);
    EXPECT_TRUE(rep.gamma_fallback[m - 1]);
    EXPECT_EQ(rep.params.month(m).gamma_shape, kFallbackGammaShape);
  }
  EXPECT_FALSE(rep.warnings.empty());
}

TEST(Fit, ConstantTemperatureHasZeroSd) {
  RngStream rng(51, 0);
  auto h = long_run(documented_params(), 2, rng);
  for (auto& d : h) {
    d.tmax = 25.0;
    d.tmin = std::min(d.tmin, 24.0);
  }
  auto rep = fit_params(h);
  for (unsigned m = 1; m <= 12; ++m) {
    EXPECT_DOUBLE_EQ(rep.params.month(m).vars[kTmax].mean_dry, 25.0);
    EXPECT_DOUBLE_EQ(rep.params.month(m).vars[kTmax].sd_dry, 0.0);
  }
}

TEST(Fit, RejectsShortHistory) {
  WeatherSeries h(100);
  EXPECT_THROW(fit_params(h), DomainError);
}

TEST(Reference, YearIsCompleteAndFitIsValid) {
  const auto& ref = reference_year();
  ASSERT_EQ(ref.size(), 366u);
  EXPECT_NO_THROW(validate(reference_params()));
  double season = 0;
  for (const auto& d : ref)
    if (month_of(d.date) >= 5 && month_of(d.date) <= 9) season += d.rain;
  EXPECT_GT(season, 150.0);
  EXPECT_LT(season, 600.0);
}

TEST(WeatherCsv, RoundTrip) {
  RngStream rng(60, 0);
  auto s = long_run(documented_params(), 1, rng);
  s.resize(365);
  std::stringstream ss;
  write_weather_csv(ss, s);
  EXPECT_EQ(read_weather_csv(ss), s);
}

TEST(WeatherCsv, NegativeRainNamesField) {
  std::stringstream ss("date,srad,tmax,tmin,rain\n2012-05-01,20,25,10,-1\n");
  try {
    read_weather_csv(ss);
    FAIL();
  } catch (const ValidationError& e) {
    EXPECT_EQ(e.field(), "rain");
  }
}

TEST(WeatherCsv, MissingHeaderIsParseError) {
  std::stringstream ss("2012-05-01,20,25,10,1\n");
  EXPECT_THROW(read_weather_csv(ss), ParseError);
}

TEST(WeatherCsv, MalformedRowReportsLine) {
  std::stringstream ss("date,srad,tmax,tmin,rain\n2012-05-01,20,25,10,1\n2012-05-02,abc,25,10,1\n");
  try {
    read_weather_csv(ss);
    FAIL();
  } catch (const ParseError& e) {
    EXPECT_EQ(e.line(), 3u);
  }
}

TEST(WeatherCsv, TmaxBelowTminIsValidationError) {
  std::stringstream ss("date,srad,tmax,tmin,rain\n2012-05-01,20,5,10,0\n");
  EXPECT_THROW(read_weather_csv(ss), ValidationError);
}

TEST(ParamsFile, RoundTripIsExact) {
  const auto& p = reference_params();
  std::stringstream ss;
  write_params(ss, p);
  auto q = read_params(ss);
  for (unsigned m = 1; m <= 12; ++m) {
    EXPECT_EQ(q.month(m).p_wd, p.month(m).p_wd);
    EXPECT_EQ(q.month(m).gamma_scale, p.month(m).gamma_scale);
    EXPECT_EQ(q.month(m).vars[kSrad].sd_wet, p.month(m).vars[kSrad].sd_wet);
  }
  EXPECT_EQ(q.A, p.A);
  EXPECT_EQ(q.B, p.B);
}

TEST(ParamsFile, MissingKeyIsParseError) {
  std::stringstream ss("[month 1]\np_wd = 0.2\n");
  EXPECT_THROW(read_params(ss), ParseError);
}
