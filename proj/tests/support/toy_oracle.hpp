// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <algorithm>
#include <cstdint>
#include <map>
#include <utility>
#include <vector>

#include "cropdrqn/agent/history.hpp"
#include "cropdrqn/agent/toy.hpp"

namespace cropdrqn::oracle {

// Exhaustive oracle: the best expected final reward over every deterministic
// map from (distinct) history matrices to actions. Observations do not depend
// on actions, so the reachable histories are indexed by (cue, t).
inline double toy_optimal_return(std::size_t l) {
  std::map<std::vector<double>, int> ids;
  std::vector<std::pair<int, int>> key_of;  // (cue, id at the rewarded step)
  for (int cue : {-1, 1}) {
    agent::DelayedCueEnv env;
    RngStream pick(cue > 0 ? 0 : 1, 0);
    // Find a stream that draws this cue.
    for (std::uint64_t s = 0;; ++s) {
      RngStream w(s, 0), n(s, 1);
      agent::DelayedCueEnv probe;
      probe.reset(w, n);
      if (probe.cue() == cue) {
        pick = RngStream(s, 0);
        break;
      }
    }
    RngStream noise(0, 1);
    agent::HistoryBuffer hist(l);
    hist.push(env.reset(pick, noise));
    for (std::size_t t = 0; t < agent::DelayedCueEnv::kSteps; ++t) {
      const auto m = hist.matrix();
      auto [it, fresh] = ids.emplace(m.data, static_cast<int>(ids.size()));
      if (t + 1 == agent::DelayedCueEnv::kSteps) key_of.emplace_back(cue, it->second);
      hist.push(env.step(0).observation);
    }
  }
  const std::size_t n = ids.size();
  double best = 0.0;
  for (std::size_t mask = 0; mask < (std::size_t{1} << n); ++mask) {
    double ret = 0.0;
    for (auto [cue, id] : key_of) {
      const bool a1 = (mask >> id) & 1;
      ret += 0.5 * ((a1 == (cue > 0)) ? 1.0 : 0.0);
    }
    best = std::max(best, ret);
  }
  return best;
}

}  // namespace cropdrqn::oracle
