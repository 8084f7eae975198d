// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cmath>

#include "cropdrqn/core/rng.hpp"
#include "cropdrqn/emission/dataset.hpp"

namespace cropdrqn::emission {

/// Ground-truth daily flux (g N2O-N/ha/d) at the 170 kg/ha reference N rate.
/// Rises with temperature, spikes after fertilization and saturates with moisture.
inline double reference_flux(const EmissionFeatures& f) {
  const double temperature = std::exp(0.05 * (f.air_t - 15.0));
  const double fertilizer = 1.0 + 6.0 * std::exp(-f.days_af / 15.0);
  const double moisture = 0.3 + 0.7 * (1.0 - std::exp(-(f.pp2 + 0.5 * f.pp7) / 40.0));
  return 1.2 * temperature * fertilizer * moisture;
}

inline EmissionFeatures sample_features(RngStream& rng) {
  EmissionFeatures f;
  f.pp2 = rng.uniform(0.0, 80.0);
  f.pp7 = rng.uniform(f.pp2, 160.0);
  f.air_t = rng.uniform(-5.0, 35.0);
  f.days_af = static_cast<double>(rng.index(366));
  return f;
}

/// n samples with flux = reference_flux(features) * exp(noise * eps).
inline Dataset make_synthetic_dataset(std::size_t n, double noise, RngStream& rng) {
  if (n == 0) throw ConfigError("synthetic dataset needs at least one sample");
  if (!(noise >= 0.0)) throw ConfigError("noise must be nonnegative");
  Dataset d;
  d.samples.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    const auto f = sample_features(rng);
    const double eps = rng.normal();
    const double g = reference_flux(f);
    d.samples.push_back({f, noise == 0.0 ? g : g * std::exp(noise * eps)});
  }
  return d;
}

}  // namespace cropdrqn::emission
