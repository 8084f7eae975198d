// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <algorithm>
#include <cmath>
#include <vector>

#include "cropdrqn/core/rng.hpp"
#include "cropdrqn/nn/tensor.hpp"

namespace cropdrqn::nn {

enum class Activation { ReLU, Identity };

/// Values a dense layer keeps from forward for its backward pass.
struct DenseTrace {
  Vector input;
  Vector pre;  // W x + b, before the activation
};

/// Fully connected layer y = act(W x + b), W stored out x in.
class DenseLayer {
 public:
  DenseLayer() = default;
  DenseLayer(std::size_t in, std::size_t out, Activation act)
      : weights_(out, in), bias_(out, 1), grad_w_(out, in), grad_b_(out, 1), act_(act) {
    if (in == 0 || out == 0) throw ConfigError("dense layer sizes must be positive");
  }

  /// Glorot-uniform weights in +-sqrt(6 / (fan_in + fan_out)), zero bias.
  void init(RngStream& rng) {
    const double limit = std::sqrt(6.0 / static_cast<double>(in_size() + out_size()));
    for (double& w : weights_.data) w = rng.uniform(-limit, limit);
    bias_.zero();
  }

  std::size_t in_size() const noexcept { return weights_.cols; }
  std::size_t out_size() const noexcept { return weights_.rows; }
  Activation activation() const noexcept { return act_; }

  Tensor2& weights() noexcept { return weights_; }
  const Tensor2& weights() const noexcept { return weights_; }
  Tensor2& bias() noexcept { return bias_; }
  const Tensor2& bias() const noexcept { return bias_; }

  Vector forward(std::span<const double> x) const {
    Vector pre = affine(x);
    apply_activation(pre);
    return pre;
  }

  Vector forward(std::span<const double> x, DenseTrace& trace) const {
    trace.input.assign(x.begin(), x.end());
    trace.pre = affine(x);
    Vector y = trace.pre;
    apply_activation(y);
    return y;
  }

  /// Accumulates parameter gradients and returns dL/dx.
  Vector backward(const DenseTrace& trace, std::span<const double> grad_out) {
    require_size(grad_out.size(), out_size(), "dense backward");
    Vector g(grad_out.begin(), grad_out.end());
    if (act_ == Activation::ReLU)
      for (std::size_t i = 0; i < g.size(); ++i)
        if (trace.pre[i] <= 0.0) g[i] = 0.0;
    outer_acc(g, trace.input, grad_w_);
    for (std::size_t i = 0; i < g.size(); ++i) grad_b_.data[i] += g[i];
    Vector grad_in(in_size(), 0.0);
    gemv_t_acc(weights_, g, grad_in);
    return grad_in;
  }

  void append_params(std::vector<ParamRef>& out, const std::string& prefix) {
    out.push_back({prefix + ".weight", &weights_, &grad_w_});
    out.push_back({prefix + ".bias", &bias_, &grad_b_});
  }

 private:
  Vector affine(std::span<const double> x) const {
    require_size(x.size(), in_size(), "dense input");
    Vector y(bias_.data.begin(), bias_.data.end());
    gemv_acc(weights_, x, y);
    return y;
  }

  void apply_activation(Vector& v) const {
    if (act_ == Activation::ReLU)
      for (double& e : v) e = std::max(e, 0.0);
  }

  Tensor2 weights_, bias_, grad_w_, grad_b_;
  Activation act_ = Activation::Identity;
};

/// Stack of dense layers.
class Mlp {
 public:
  struct Trace {
    std::vector<DenseTrace> layers;
  };

  Mlp() = default;

  /// Hidden layers use ReLU; the output layer is linear.
  Mlp(std::size_t in, const std::vector<std::size_t>& hidden, std::size_t out) {
    std::size_t prev = in;
    for (std::size_t h : hidden) {
      layers_.emplace_back(prev, h, Activation::ReLU);
      prev = h;
    }
    layers_.emplace_back(prev, out, Activation::Identity);
  }

  void init(RngStream& rng) {
    for (auto& l : layers_) l.init(rng);
  }

  std::size_t in_size() const { return layers_.front().in_size(); }
  std::size_t out_size() const { return layers_.back().out_size(); }
  std::vector<DenseLayer>& layers() noexcept { return layers_; }
  const std::vector<DenseLayer>& layers() const noexcept { return layers_; }

  Vector forward(std::span<const double> x) const {
    Vector h(x.begin(), x.end());
    for (const auto& l : layers_) h = l.forward(h);
    return h;
  }

  Vector forward(std::span<const double> x, Trace& trace) const {
    trace.layers.resize(layers_.size());
    Vector h(x.begin(), x.end());
    for (std::size_t i = 0; i < layers_.size(); ++i) h = layers_[i].forward(h, trace.layers[i]);
    return h;
  }

  Vector backward(const Trace& trace, std::span<const double> grad_out) {
    Vector g(grad_out.begin(), grad_out.end());
    for (std::size_t i = layers_.size(); i-- > 0;) g = layers_[i].backward(trace.layers[i], g);
    return g;
  }

  std::vector<ParamRef> parameters(const std::string& prefix = "mlp") {
    std::vector<ParamRef> out;
    for (std::size_t i = 0; i < layers_.size(); ++i)
      layers_[i].append_params(out, prefix + "." + std::to_string(i));
    return out;
  }

 private:
  std::vector<DenseLayer> layers_;
};

}  // namespace cropdrqn::nn
