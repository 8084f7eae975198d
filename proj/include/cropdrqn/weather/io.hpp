// SPDX-License-Identifier: Apache-2.0
#pragma once

// Daily weather CSV
//   header (required):  date,srad,tmax,tmin,rain
//   one row per day:    YYYY-MM-DD, MJ/m2/d, degC, degC, mm/d
//
// Generator parameter file (structured text, '#' starts a comment):
//   [month N]             N = 1..12, each followed by `key = value` lines:
//     p_wd, p_ww, gamma_shape, gamma_scale,
//     {tmax,tmin,srad}_{mean,sd}_{dry,wet}
//   [residual]
//     A = 9 values (row-major), B = 9 values (row-major)

#include <fstream>
#include <map>
#include <sstream>
#include <string>

#include "cropdrqn/core/text.hpp"
#include "cropdrqn/weather/types.hpp"

namespace cropdrqn::weather {

inline constexpr const char* kWeatherHeader = "date,srad,tmax,tmin,rain";

inline void write_weather_csv(std::ostream& os, const WeatherSeries& series) {
  os << kWeatherHeader << '\n';
  for (const auto& d : series)
    os << format_date(d.date) << ',' << text::exact(d.srad) << ',' << text::exact(d.tmax) << ','
       << text::exact(d.tmin) << ',' << text::exact(d.rain) << '\n';
}

inline WeatherSeries read_weather_csv(std::istream& is) {
  std::string line;
  std::size_t lineno = 0;
  if (!std::getline(is, line)) throw ParseError("empty weather file");
  ++lineno;
  auto header = text::split(line, ',');
  const std::vector<std::string_view> want{"date", "srad", "tmax", "tmin", "rain"};
  if (header != want) throw ParseError("missing or wrong header, expected '" + std::string(kWeatherHeader) + "'", 1);
  WeatherSeries out;
  while (std::getline(is, line)) {
    ++lineno;
    if (text::trim(line).empty()) continue;
    auto f = text::split(line, ',');
    if (f.size() != 5) throw ParseError("expected 5 fields", lineno);
    WeatherDay d;
    try {
      d.date = parse_date(f[0]);
    } catch (const ParseError& e) {
      throw ParseError(e.what(), lineno);
    }
    d.srad = text::to_double(f[1], "srad", lineno);
    d.tmax = text::to_double(f[2], "tmax", lineno);
    d.tmin = text::to_double(f[3], "tmin", lineno);
    d.rain = text::to_double(f[4], "rain", lineno);
    validate_day(d, lineno);
    out.push_back(d);
  }
  return out;
}

inline void write_weather_file(const WeatherSeries& series, const std::string& path) {
  std::ofstream os(path);
  if (!os) throw IoError("cannot open '" + path + "' for writing");
  write_weather_csv(os, series);
}

inline WeatherSeries read_weather_file(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw IoError("cannot open '" + path + "'");
  return read_weather_csv(is);
}

namespace detail {
inline const char* kVarNames[3] = {"tmax", "tmin", "srad"};
}

inline void write_params(std::ostream& os, const WgenParams& p) {
  os << "# cropdrqn weather generator parameters v1\n";
  for (unsigned m = 1; m <= 12; ++m) {
    const auto& mp = p.month(m);
    os << "[month " << m << "]\n";
    os << "p_wd = " << text::exact(mp.p_wd) << "\n";
    os << "p_ww = " << text::exact(mp.p_ww) << "\n";
    os << "gamma_shape = " << text::exact(mp.gamma_shape) << "\n";
    os << "gamma_scale = " << text::exact(mp.gamma_scale) << "\n";
    for (std::size_t v = 0; v < 3; ++v) {
      const auto& cm = mp.vars[v];
      const std::string n = detail::kVarNames[v];
      os << n << "_mean_dry = " << text::exact(cm.mean_dry) << "\n";
      os << n << "_mean_wet = " << text::exact(cm.mean_wet) << "\n";
      os << n << "_sd_dry = " << text::exact(cm.sd_dry) << "\n";
      os << n << "_sd_wet = " << text::exact(cm.sd_wet) << "\n";
    }
  }
  os << "[residual]\n";
  for (const auto& [name, mat] : {std::pair{"A", &p.A}, std::pair{"B", &p.B}}) {
    os << name << " =";
    for (int r = 0; r < 3; ++r)
      for (int c = 0; c < 3; ++c) os << ' ' << text::exact((*mat)(r, c));
    os << "\n";
  }
}

inline WgenParams read_params(std::istream& is) {
  WgenParams p;
  std::string line, section;
  std::size_t lineno = 0;
  std::array<std::map<std::string, double>, 12> seen;
  bool have_a = false, have_b = false;
  while (std::getline(is, line)) {
    ++lineno;
    auto s = text::trim(line);
    if (s.empty() || s.front() == '#') continue;
    if (s.front() == '[') {
      if (s.back() != ']') throw ParseError("unterminated section header", lineno);
      section = std::string(text::trim(s.substr(1, s.size() - 2)));
      continue;
    }
    const auto eq = s.find('=');
    if (eq == std::string_view::npos) throw ParseError("expected 'key = value'", lineno);
    const std::string key(text::trim(s.substr(0, eq)));
    const auto value = text::trim(s.substr(eq + 1));
    if (section.rfind("month ", 0) == 0) {
      const long m = text::to_long(std::string_view(section).substr(6), "month", lineno);
      if (m < 1 || m > 12) throw ParseError("month out of range", lineno);
      seen[m - 1][key] = text::to_double(value, key, lineno);
    } else if (section == "residual") {
      auto tok = text::tokens(value);
      if (tok.size() != 9) throw ParseError(key + " needs 9 values", lineno);
      Eigen::Matrix3d mat;
      for (int i = 0; i < 9; ++i) mat(i / 3, i % 3) = text::to_double(tok[i], key, lineno);
      if (key == "A") {
        p.A = mat;
        have_a = true;
      } else if (key == "B") {
        p.B = mat;
        have_b = true;
      } else {
        throw ParseError("unknown residual key '" + key + "'", lineno);
      }
    } else {
      throw ParseError("key outside a known section", lineno);
    }
  }
  for (unsigned m = 1; m <= 12; ++m) {
    auto& kv = seen[m - 1];
    auto get = [&](const std::string& k) {
      auto it = kv.find(k);
      if (it == kv.end()) throw ParseError("month " + std::to_string(m) + " is missing '" + k + "'");
      return it->second;
    };
    auto& mp = p.month(m);
    mp.p_wd = get("p_wd");
    mp.p_ww = get("p_ww");
    mp.gamma_shape = get("gamma_shape");
    mp.gamma_scale = get("gamma_scale");
    for (std::size_t v = 0; v < 3; ++v) {
      const std::string n = detail::kVarNames[v];
      mp.vars[v] = {get(n + "_mean_dry"), get(n + "_mean_wet"), get(n + "_sd_dry"), get(n + "_sd_wet")};
    }
  }
  if (!have_a || !have_b) throw ParseError("parameter file is missing the [residual] A and B matrices");
  validate(p);
  return p;
}

inline void write_params_file(const WgenParams& p, const std::string& path) {
  std::ofstream os(path);
  if (!os) throw IoError("cannot open '" + path + "' for writing");
  write_params(os, p);
}

inline WgenParams read_params_file(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw IoError("cannot open '" + path + "'");
  return read_params(is);
}

}  // namespace cropdrqn::weather
