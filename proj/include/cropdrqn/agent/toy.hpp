// SPDX-License-Identifier: Apache-2.0
#pragma once

#include "cropdrqn/core/error.hpp"
#include "cropdrqn/cropenv/environment.hpp"

namespace cropdrqn::agent {

/// Four-step memory task. A cue of +1 or -1 is shown only on the first
/// observation; the last action earns 1 if it matches the cue (action 1 for +1,
/// action 0 for -1). Observations are (cue or 0, t / 3).
class DelayedCueEnv final : public cropenv::Environment {
 public:
  static constexpr std::size_t kSteps = 4;

  std::size_t observation_size() const override { return 2; }
  std::size_t action_count() const override { return 2; }

  nn::Vector reset(RngStream& world, RngStream& /*noise*/) override {
    cue_ = world.bernoulli(0.5) ? 1 : -1;
    t_ = 0;
    done_ = false;
    return observation();
  }

  cropenv::StepResult step(std::size_t action) override {
    if (done_) throw StateError("step after the terminal step");
    if (action >= 2) throw DomainError("action out of range");
    cropenv::StepResult r;
    ++t_;
    if (t_ == kSteps) {
      done_ = true;
      r.terminal = true;
      r.reward = (action == 1) == (cue_ > 0) ? 1.0 : 0.0;
    }
    r.observation = observation();
    return r;
  }

  int cue() const noexcept { return cue_; }

 private:
  nn::Vector observation() const {
    return {t_ == 0 ? static_cast<double>(cue_) : 0.0, static_cast<double>(t_) / 3.0};
  }

  int cue_ = 1;
  std::size_t t_ = 0;
  bool done_ = true;
};

}  // namespace cropdrqn::agent
