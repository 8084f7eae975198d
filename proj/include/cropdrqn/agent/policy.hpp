// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <memory>
#include <sstream>
#include <string>

#include "cropdrqn/agent/dqn.hpp"
#include "cropdrqn/agent/normalizer.hpp"
#include "cropdrqn/agent/qnetwork.hpp"
#include "cropdrqn/core/text.hpp"
#include "cropdrqn/nn/checkpoint.hpp"

namespace cropdrqn::agent {

struct PolicyLabel {
  enum class Kind { Fixed, Optimal };
  Kind kind = Kind::Fixed;
  std::string scenario;  // Optimal only

  static PolicyLabel fixed() { return {}; }
  static PolicyLabel optimal(std::string scenario) { return {Kind::Optimal, std::move(scenario)}; }

  std::string to_string() const { return kind == Kind::Fixed ? "fixed" : "optimal:" + scenario; }

  static PolicyLabel parse(const std::string& s) {
    if (s == "fixed") return fixed();
    if (s.rfind("optimal:", 0) == 0) return optimal(s.substr(8));
    throw ParseError("unknown policy label '" + s + "'");
  }

  friend bool operator==(const PolicyLabel&, const PolicyLabel&) = default;
};

/// Frozen greedy policy: network plus the observation statistics it was trained
/// with. Cheap to copy; copies share the network.
class PolicyHandle {
 public:
  PolicyHandle(const QNetwork& net, const RunningNormalizer& norm, std::size_t history_length, PolicyLabel label)
      : net_(std::make_shared<const QNetwork>(net)),
        norm_(norm.frozen_copy()),
        l_(history_length),
        label_(std::move(label)) {
    if (l_ == 0) throw ConfigError("history length must be at least 1");
    if (norm_.size() != net.shape().observation_size) throw ConfigError("normalizer width differs from network input");
  }

  const QNetwork& network() const noexcept { return *net_; }
  const RunningNormalizer& normalizer() const noexcept { return norm_; }
  std::size_t history_length() const noexcept { return l_; }
  const PolicyLabel& label() const noexcept { return label_; }

  PolicyHandle relabeled(PolicyLabel label) const {
    PolicyHandle p = *this;
    p.label_ = std::move(label);
    return p;
  }

  /// Q-values for a raw l x obs history.
  nn::Vector q_values(const nn::Tensor2& raw_history) const { return net_->q_values(norm_.apply(raw_history)); }
  std::size_t act(const nn::Tensor2& raw_history) const { return greedy_action(q_values(raw_history)); }

 private:
  std::shared_ptr<const QNetwork> net_;
  RunningNormalizer norm_;
  std::size_t l_;
  PolicyLabel label_;
};

namespace detail {
inline std::string join_exact(const nn::Vector& v) {
  std::string s;
  for (std::size_t i = 0; i < v.size(); ++i) s += (i ? "," : "") + text::exact(v[i]);
  return s;
}

inline nn::Vector split_doubles(const std::string& s, const char* field) {
  nn::Vector out;
  if (s.empty()) return out;
  for (auto tok : text::split(s, ',')) out.push_back(text::to_double(tok, field));
  return out;
}

inline std::size_t meta_size(const nn::Checkpoint& ck, const char* key) {
  const long v = text::to_long(ck.get(key), key);
  if (v < 0) throw ParseError(std::string("negative ") + key + " in policy checkpoint");
  return static_cast<std::size_t>(v);
}
}  // namespace detail

inline nn::Checkpoint policy_to_checkpoint(const PolicyHandle& p) {
  nn::Checkpoint ck;
  const auto& s = p.network().shape();
  ck.meta["model"] = "policy";
  ck.meta["label"] = p.label().to_string();
  ck.meta["history_length"] = std::to_string(p.history_length());
  ck.meta["observation_size"] = std::to_string(s.observation_size);
  ck.meta["gru_hidden"] = std::to_string(s.gru_hidden);
  ck.meta["head_hidden"] = std::to_string(s.head_hidden);
  ck.meta["actions"] = std::to_string(s.actions);
  ck.meta["norm_count"] = text::exact(p.normalizer().count());
  ck.meta["norm_mean"] = detail::join_exact(p.normalizer().means());
  ck.meta["norm_m2"] = detail::join_exact(p.normalizer().sum_squares());
  QNetwork copy = p.network();
  nn::store_params(ck, copy.parameters());
  return ck;
}

inline PolicyHandle policy_from_checkpoint(const nn::Checkpoint& ck) {
  if (ck.get("model") != "policy") throw ParseError("checkpoint does not hold a policy");
  QNetworkShape s;
  s.observation_size = detail::meta_size(ck, "observation_size");
  s.gru_hidden = detail::meta_size(ck, "gru_hidden");
  s.head_hidden = detail::meta_size(ck, "head_hidden");
  s.actions = detail::meta_size(ck, "actions");
  QNetwork net(s);
  nn::load_params(ck, net.parameters());
  auto norm = RunningNormalizer::from_state(text::to_double(ck.get("norm_count"), "norm_count"),
                                            detail::split_doubles(ck.get("norm_mean"), "norm_mean"),
                                            detail::split_doubles(ck.get("norm_m2"), "norm_m2"));
  return PolicyHandle(net, norm, detail::meta_size(ck, "history_length"), PolicyLabel::parse(ck.get("label")));
}

inline void save_policy(const PolicyHandle& p, const std::string& path) {
  nn::write_checkpoint(policy_to_checkpoint(p), path);
}

inline PolicyHandle load_policy(const std::string& path) { return policy_from_checkpoint(nn::read_checkpoint(path)); }

}  // namespace cropdrqn::agent
