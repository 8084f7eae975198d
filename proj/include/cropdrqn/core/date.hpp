// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <chrono>
#include <cstdio>
#include <string>
#include <string_view>

#include "cropdrqn/core/error.hpp"

namespace cropdrqn {

using Date = std::chrono::year_month_day;

inline Date make_date(int y, unsigned m, unsigned d) {
  return Date{std::chrono::year{y}, std::chrono::month{m}, std::chrono::day{d}};
}

inline Date add_days(Date d, long n) {
  return Date{std::chrono::sys_days{d} + std::chrono::days{n}};
}

/// Signed day difference b - a.
inline long days_between(Date a, Date b) {
  return static_cast<long>((std::chrono::sys_days{b} - std::chrono::sys_days{a}).count());
}

inline int year_of(Date d) { return static_cast<int>(d.year()); }
inline unsigned month_of(Date d) { return static_cast<unsigned>(d.month()); }
inline unsigned day_of(Date d) { return static_cast<unsigned>(d.day()); }

/// 1-based day of year.
inline int day_of_year(Date d) {
  return static_cast<int>(days_between(make_date(year_of(d), 1, 1), d)) + 1;
}

/// ISO `YYYY-MM-DD`.
inline std::string format_date(Date d) {
  char buf[16];
  std::snprintf(buf, sizeof buf, "%04d-%02u-%02u", year_of(d), month_of(d), day_of(d));
  return buf;
}

inline Date parse_date(std::string_view s) {
  int y = 0;
  unsigned m = 0, d = 0;
  const std::string tmp(s);
  char tail = 0;
  if (std::sscanf(tmp.c_str(), "%d-%u-%u%c", &y, &m, &d, &tail) != 3)
    throw ParseError("bad date '" + tmp + "', expected YYYY-MM-DD");
  Date out = make_date(y, m, d);
  if (!out.ok()) throw ParseError("invalid calendar date '" + tmp + "'");
  return out;
}

}  // namespace cropdrqn
