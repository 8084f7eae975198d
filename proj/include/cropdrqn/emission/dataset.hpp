// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cmath>
#include <fstream>
#include <istream>
#include <ostream>
#include <string>
#include <vector>

#include "cropdrqn/core/error.hpp"
#include "cropdrqn/core/text.hpp"
#include "cropdrqn/emission/features.hpp"

namespace cropdrqn::emission {

struct Sample {
  EmissionFeatures features;
  double flux = 0.0;  // g N2O-N/ha/d
};

struct Dataset {
  std::vector<Sample> samples;

  std::size_t size() const noexcept { return samples.size(); }
  bool empty() const noexcept { return samples.empty(); }
};

/// Per-feature z-score statistics (population SD). A constant feature keeps SD 1.
struct Normalization {
  std::array<double, 4> mean{0, 0, 0, 0};
  std::array<double, 4> sd{1, 1, 1, 1};

  std::array<double, 4> apply(const EmissionFeatures& f) const {
    auto x = f.as_array();
    for (std::size_t j = 0; j < 4; ++j) x[j] = (x[j] - mean[j]) / sd[j];
    return x;
  }
};

inline Normalization fit_normalization(const std::vector<Sample>& samples) {
  if (samples.empty()) throw ConfigError("cannot normalize an empty sample set");
  Normalization n;
  const double count = static_cast<double>(samples.size());
  for (std::size_t j = 0; j < 4; ++j) {
    double m = 0.0;
    for (const auto& s : samples) m += s.features.as_array()[j];
    m /= count;
    double v = 0.0;
    for (const auto& s : samples) {
      const double d = s.features.as_array()[j] - m;
      v += d * d;
    }
    const double sd = std::sqrt(v / count);
    n.mean[j] = m;
    n.sd[j] = sd > 0.0 ? sd : 1.0;
  }
  return n;
}

inline constexpr const char* kDatasetHeader = "pp2,pp7,airT,daysAF,flux";

inline void write_dataset_csv(std::ostream& os, const Dataset& d) {
  os << kDatasetHeader << '\n';
  for (const auto& s : d.samples) {
    const auto& f = s.features;
    os << text::exact(f.pp2) << ',' << text::exact(f.pp7) << ',' << text::exact(f.air_t) << ','
       << text::exact(f.days_af) << ',' << text::exact(s.flux) << '\n';
  }
}

inline Dataset read_dataset_csv(std::istream& is) {
  std::string line;
  if (!std::getline(is, line) || text::trim(line) != kDatasetHeader)
    throw ParseError(std::string("expected header '") + kDatasetHeader + "'", 1);
  Dataset d;
  std::size_t lineno = 1;
  while (std::getline(is, line)) {
    ++lineno;
    if (text::trim(line).empty()) continue;
    auto cells = text::split(line, ',');
    if (cells.size() != 5) throw ParseError("expected 5 fields", lineno);
    Sample s;
    s.features.pp2 = text::to_double(cells[0], "pp2", lineno);
    s.features.pp7 = text::to_double(cells[1], "pp7", lineno);
    s.features.air_t = text::to_double(cells[2], "airT", lineno);
    s.features.days_af = text::to_double(cells[3], "daysAF", lineno);
    s.flux = text::to_double(cells[4], "flux", lineno);
    validate(s.features, lineno);
    if (!(s.flux >= 0.0)) throw ValidationError("flux", "must be nonnegative", lineno);
    d.samples.push_back(s);
  }
  return d;
}

inline void write_dataset_file(const Dataset& d, const std::string& path) {
  std::ofstream os(path);
  if (!os) throw IoError("cannot open '" + path + "' for writing");
  write_dataset_csv(os, d);
}

inline Dataset read_dataset_file(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw IoError("cannot open '" + path + "'");
  return read_dataset_csv(is);
}

}  // namespace cropdrqn::emission
