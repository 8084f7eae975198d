// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <memory>

#include "cropdrqn/emission/model.hpp"
#include "cropdrqn/emission/synthetic.hpp"

namespace cropdrqn::emission {

/// Daily N2O flux provider used by the crop environment. Implementations are
/// immutable; randomness only enters through the stream argument.
class EmissionSource {
 public:
  virtual ~EmissionSource() = default;
  /// g N2O-N/ha/d at cumulative seasonal N input `n_input_total` (kg/ha).
  /// A null stream requests the noise-free value.
  virtual double daily_flux(const EmissionFeatures& f, double n_input_total, RngStream* rng) const = 0;
};

/// Analytic ground truth with multiplicative log-normal noise.
class ReferenceEmission final : public EmissionSource {
 public:
  explicit ReferenceEmission(double noise = 0.5) : noise_(noise) {
    if (!(noise >= 0.0)) throw ConfigError("emission noise must be nonnegative");
  }
  double noise() const noexcept { return noise_; }

  double daily_flux(const EmissionFeatures& f, double n_input_total, RngStream* rng) const override {
    double g = reference_flux(f) * hoben_factor(n_input_total);
    if (rng && noise_ > 0.0) g *= std::exp(noise_ * rng->normal());
    return g;
  }

 private:
  double noise_;
};

/// Wraps a trained regressor.
class ModelEmission final : public EmissionSource {
 public:
  explicit ModelEmission(EmissionModel model) : model_(std::move(model)) {}

  double daily_flux(const EmissionFeatures& f, double n_input_total, RngStream* rng) const override {
    return predict_daily_flux(model_, f, n_input_total, rng);
  }

 private:
  EmissionModel model_;
};

}  // namespace cropdrqn::emission
