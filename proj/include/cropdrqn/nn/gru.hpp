// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cmath>
#include <vector>

#include "cropdrqn/core/rng.hpp"
#include "cropdrqn/nn/tensor.hpp"

namespace cropdrqn::nn {

/// Intermediate values of one GRU step, kept for backpropagation.
struct GruTrace {
  Vector x, h_prev, z, r, rh, c;
};

/// Gated recurrent unit.
///
/// Gate convention:
///   z  = sigmoid(W_z x + U_z h + b_z)          update gate
///   r  = sigmoid(W_r x + U_r h + b_r)          reset gate
///   c  = tanh(W_c x + U_c (r * h) + b_c)       candidate
///   h' = (1 - z) * h + z * c
/// so z -> 0 carries the previous state through unchanged.
class GruCell {
 public:
  GruCell() = default;
  GruCell(std::size_t input_size, std::size_t hidden_size)
      : in_(input_size), hid_(hidden_size) {
    if (in_ == 0 || hid_ == 0) throw ConfigError("GRU sizes must be positive");
    for (auto* t : {&w_z_, &w_r_, &w_c_, &gw_z_, &gw_r_, &gw_c_}) *t = Tensor2(hid_, in_);
    for (auto* t : {&u_z_, &u_r_, &u_c_, &gu_z_, &gu_r_, &gu_c_}) *t = Tensor2(hid_, hid_);
    for (auto* t : {&b_z_, &b_r_, &b_c_, &gb_z_, &gb_r_, &gb_c_}) *t = Tensor2(hid_, 1);
  }

  /// Uniform(-scale, scale) on every weight and bias.
  void init(RngStream& rng, double scale = 0.08) {
    for (auto* t : {&w_z_, &w_r_, &w_c_, &u_z_, &u_r_, &u_c_, &b_z_, &b_r_, &b_c_})
      for (double& v : t->data) v = rng.uniform(-scale, scale);
  }

  std::size_t input_size() const noexcept { return in_; }
  std::size_t hidden_size() const noexcept { return hid_; }

  Vector step(std::span<const double> x, std::span<const double> h) const {
    GruTrace t;
    return step(x, h, t);
  }

  Vector step(std::span<const double> x, std::span<const double> h, GruTrace& t) const {
    require_size(x.size(), in_, "GRU input");
    require_size(h.size(), hid_, "GRU hidden");
    t.x.assign(x.begin(), x.end());
    t.h_prev.assign(h.begin(), h.end());
    t.z = gate(w_z_, u_z_, b_z_, x, h);
    t.r = gate(w_r_, u_r_, b_r_, x, h);
    for (double& v : t.z) v = sigmoid(v);
    for (double& v : t.r) v = sigmoid(v);
    t.rh.resize(hid_);
    for (std::size_t i = 0; i < hid_; ++i) t.rh[i] = t.r[i] * h[i];
    t.c = gate(w_c_, u_c_, b_c_, x, t.rh);
    for (double& v : t.c) v = std::tanh(v);
    Vector out(hid_);
    for (std::size_t i = 0; i < hid_; ++i) out[i] = (1.0 - t.z[i]) * h[i] + t.z[i] * t.c[i];
    return out;
  }

  struct StepGrads {
    Vector x, h_prev;
  };

  /// Accumulates parameter gradients for one step given dL/dh'.
  StepGrads backward(const GruTrace& t, std::span<const double> grad_h) {
    require_size(grad_h.size(), hid_, "GRU backward");
    Vector da_z(hid_), da_r(hid_), da_c(hid_);
    StepGrads g{Vector(in_, 0.0), Vector(hid_, 0.0)};
    for (std::size_t i = 0; i < hid_; ++i) {
      const double gh = grad_h[i];
      g.h_prev[i] = gh * (1.0 - t.z[i]);
      da_z[i] = gh * (t.c[i] - t.h_prev[i]) * t.z[i] * (1.0 - t.z[i]);
      da_c[i] = gh * t.z[i] * (1.0 - t.c[i] * t.c[i]);
    }
    // Candidate path through r * h.
    Vector d_rh(hid_, 0.0);
    gemv_t_acc(u_c_, da_c, d_rh);
    for (std::size_t i = 0; i < hid_; ++i) {
      g.h_prev[i] += d_rh[i] * t.r[i];
      da_r[i] = d_rh[i] * t.h_prev[i] * t.r[i] * (1.0 - t.r[i]);
    }
    outer_acc(da_c, t.x, gw_c_);
    outer_acc(da_c, t.rh, gu_c_);
    outer_acc(da_z, t.x, gw_z_);
    outer_acc(da_z, t.h_prev, gu_z_);
    outer_acc(da_r, t.x, gw_r_);
    outer_acc(da_r, t.h_prev, gu_r_);
    for (std::size_t i = 0; i < hid_; ++i) {
      gb_z_.data[i] += da_z[i];
      gb_r_.data[i] += da_r[i];
      gb_c_.data[i] += da_c[i];
    }
    gemv_t_acc(u_z_, da_z, g.h_prev);
    gemv_t_acc(u_r_, da_r, g.h_prev);
    gemv_t_acc(w_z_, da_z, g.x);
    gemv_t_acc(w_r_, da_r, g.x);
    gemv_t_acc(w_c_, da_c, g.x);
    return g;
  }

  void append_params(std::vector<ParamRef>& out, const std::string& prefix) {
    out.push_back({prefix + ".w_z", &w_z_, &gw_z_});
    out.push_back({prefix + ".u_z", &u_z_, &gu_z_});
    out.push_back({prefix + ".b_z", &b_z_, &gb_z_});
    out.push_back({prefix + ".w_r", &w_r_, &gw_r_});
    out.push_back({prefix + ".u_r", &u_r_, &gu_r_});
    out.push_back({prefix + ".b_r", &b_r_, &gb_r_});
    out.push_back({prefix + ".w_c", &w_c_, &gw_c_});
    out.push_back({prefix + ".u_c", &u_c_, &gu_c_});
    out.push_back({prefix + ".b_c", &b_c_, &gb_c_});
  }

  // Gate parameter access for tests and checkpoint loading.
  Tensor2& w_z() { return w_z_; }
  Tensor2& u_z() { return u_z_; }
  Tensor2& b_z() { return b_z_; }
  Tensor2& w_r() { return w_r_; }
  Tensor2& u_r() { return u_r_; }
  Tensor2& b_r() { return b_r_; }
  Tensor2& w_c() { return w_c_; }
  Tensor2& u_c() { return u_c_; }
  Tensor2& b_c() { return b_c_; }

 private:
  static Vector gate(const Tensor2& w, const Tensor2& u, const Tensor2& b, std::span<const double> x,
                     std::span<const double> h) {
    Vector a(b.data.begin(), b.data.end());
    gemv_acc(w, x, a);
    gemv_acc(u, h, a);
    return a;
  }

  std::size_t in_ = 0, hid_ = 0;
  Tensor2 w_z_, u_z_, b_z_, w_r_, u_r_, b_r_, w_c_, u_c_, b_c_;
  Tensor2 gw_z_, gu_z_, gb_z_, gw_r_, gu_r_, gb_r_, gw_c_, gu_c_, gb_c_;
};

/// Runs a GRU over the rows of `sequence` from a zero state; returns the final state.
inline Vector gru_sequence(const GruCell& cell, const Tensor2& sequence,
                           std::vector<GruTrace>* traces = nullptr) {
  Vector h(cell.hidden_size(), 0.0);
  if (traces) traces->resize(sequence.rows);
  for (std::size_t t = 0; t < sequence.rows; ++t)
    h = traces ? cell.step(sequence.row(t), h, (*traces)[t]) : cell.step(sequence.row(t), h);
  return h;
}

/// Full backpropagation through time from dL/dh_T; returns dL/dx_t per row.
inline Tensor2 gru_sequence_backward(GruCell& cell, const std::vector<GruTrace>& traces,
                                     std::span<const double> grad_final) {
  Tensor2 grad_x(traces.size(), cell.input_size());
  Vector g(grad_final.begin(), grad_final.end());
  for (std::size_t t = traces.size(); t-- > 0;) {
    auto step = cell.backward(traces[t], g);
    std::copy(step.x.begin(), step.x.end(), grad_x.row(t).begin());
    g = std::move(step.h_prev);
  }
  return grad_x;
}

}  // namespace cropdrqn::nn
