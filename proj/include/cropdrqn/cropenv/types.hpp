// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <array>
#include <cstddef>
#include <string>

#include "cropdrqn/core/date.hpp"
#include "cropdrqn/core/error.hpp"
#include "cropdrqn/nn/tensor.hpp"

namespace cropdrqn::cropenv {

inline constexpr std::size_t kObservationSize = 10;
inline constexpr std::size_t kActionCount = 25;

inline constexpr std::array<const char*, kObservationSize> kObservationNames{
    "cumsumfert", "dap", "istage", "pltpop", "rain", "sw", "tmax", "tmin", "vstage", "xlai"};

/// What the agent sees each day.
struct Observation {
  double cumsumfert = 0.0;  // kg N/ha applied so far
  double dap = 0.0;         // days after planting
  double istage = 1.0;      // growth stage 1..9
  double pltpop = 0.0;      // plants/m2
  double rain = 0.0;        // mm, today
  double sw = 0.0;          // root-zone volumetric water, cm3/cm3
  double tmax = 0.0;
  double tmin = 0.0;
  double vstage = 0.0;  // leaf count
  double xlai = 0.0;    // leaf area index

  nn::Vector as_vector() const { return {cumsumfert, dap, istage, pltpop, rain, sw, tmax, tmin, vstage, xlai}; }
  bool operator==(const Observation&) const = default;
};

/// Discrete action k in [0, 25): N = 20 * (k / 5) kg/ha, water = 10 * (k % 5) mm.
struct ActionChoice {
  int n_level = 0;
  int water_level = 0;

  static ActionChoice decode(std::size_t k) {
    if (k >= kActionCount) throw DomainError("action index " + std::to_string(k) + " outside [0, 25)");
    return {static_cast<int>(k / 5), static_cast<int>(k % 5)};
  }
  std::size_t encode() const {
    if (n_level < 0 || n_level > 4 || water_level < 0 || water_level > 4)
      throw DomainError("action levels must be in [0, 4]");
    return static_cast<std::size_t>(n_level * 5 + water_level);
  }
  double n_amount() const { return 20.0 * n_level; }
  double water_amount() const { return 10.0 * water_level; }  // L/m2 == mm
  bool operator==(const ActionChoice&) const = default;
};

/// Weights of yield, N input, irrigation, leaching and N2O.
struct RewardWeights {
  double yield = 0.2;
  double nitrogen = 2.0;
  double water = 2.0;
  double leaching = 30.0;
  double n2o = 100.0;

  static RewardWeights case_preset(int k) {
    switch (k) {
      case 1: return {0.2, 2.0, 2.0, 30.0, 0.0};
      case 2: return {0.2, 2.0, 2.0, 0.0, 100.0};
      case 3: return {0.2, 2.0, 2.0, 30.0, 100.0};
      default: throw ConfigError("reward case must be 1, 2 or 3");
    }
  }
  void validate() const {
    if (!(yield >= 0 && nitrogen >= 0 && water >= 0 && leaching >= 0 && n2o >= 0))
      throw ConfigError("reward weights must be nonnegative");
  }
  bool operator==(const RewardWeights&) const = default;
};

/// Per-day bookkeeping used for rewards and reports. All quantities per hectare.
struct DayDiagnostics {
  double n_applied = 0.0;      // kg N
  double water_applied = 0.0;  // mm
  double leaching = 0.0;       // kg N
  double n2o = 0.0;            // kg N2O-N
  double yield = 0.0;          // kg, nonzero only on the harvest step
  bool harvest = false;
};

struct StepOutcome {
  double reward = 0.0;
  Observation observation;
  bool terminal = false;
  DayDiagnostics diagnostics;
};

/// Full simulator state.
struct EnvState {
  Date date;
  int dap = 0;
  int istage = 1;
  double vstage = 0.0;
  double xlai = 0.0;
  double pltpop = 0.0;
  double sw = 0.0;
  double soil_n = 0.0;
  double cumsumfert = 0.0;
  double biomass = 0.0;  // kg/ha
  double plant_n = 0.0;  // kg/ha
  double gdd = 0.0;
  double peak_lai = 0.0;
  double rain = 0.0;
  double tmax = 0.0;
  double tmin = 0.0;
  double srad = 0.0;
  bool terminal = false;
};

/// Observation as a projection of the state.
inline Observation observe(const EnvState& s) {
  return {s.cumsumfert, static_cast<double>(s.dap), static_cast<double>(s.istage), s.pltpop, s.rain,
          s.sw,         s.tmax,                     s.tmin,                        s.vstage, s.xlai};
}

}  // namespace cropdrqn::cropenv
