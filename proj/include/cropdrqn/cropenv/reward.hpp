// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <span>

#include "cropdrqn/cropenv/types.hpp"

namespace cropdrqn::cropenv {

/// Harvest days earn w1 * yield; every day pays for inputs and losses.
inline double step_reward(const DayDiagnostics& d, const RewardWeights& w) {
  const double costs = w.nitrogen * d.n_applied + w.water * d.water_applied + w.leaching * d.leaching + w.n2o * d.n2o;
  return (d.harvest ? w.yield * d.yield : 0.0) - costs;
}

/// Undiscounted season total. The record must end with the harvest day.
inline double season_reward_total(std::span<const DayDiagnostics> days, const RewardWeights& w) {
  if (days.empty()) return 0.0;
  if (!days.back().harvest) throw StateError("season record is incomplete (no harvest day)");
  double total = 0.0;
  for (const auto& d : days) total += step_reward(d, w);
  return total;
}

}  // namespace cropdrqn::cropenv
