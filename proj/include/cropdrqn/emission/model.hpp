// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <sstream>
#include <string>
#include <vector>

#include "cropdrqn/core/rng.hpp"
#include "cropdrqn/core/stats.hpp"
#include "cropdrqn/emission/dataset.hpp"
#include "cropdrqn/nn/adam.hpp"
#include "cropdrqn/nn/checkpoint.hpp"
#include "cropdrqn/nn/dense.hpp"
#include "cropdrqn/nn/loss.hpp"

namespace cropdrqn::emission {

enum class ModelKind { Deterministic, Probabilistic };

inline std::string to_string(ModelKind k) {
  return k == ModelKind::Deterministic ? "deterministic" : "probabilistic";
}

inline ModelKind parse_model_kind(const std::string& s) {
  if (s == "deterministic") return ModelKind::Deterministic;
  if (s == "probabilistic") return ModelKind::Probabilistic;
  throw ConfigError("unknown emission model kind '" + s + "'");
}

struct EmissionModelConfig {
  ModelKind kind = ModelKind::Probabilistic;
  std::vector<std::size_t> hidden{16, 32, 64, 16};
  std::size_t epochs = 5000;
  std::size_t batch_size = 16;
  double learning_rate = 1e-3;
  std::size_t cv_folds = 5;      // 0 skips cross-validation
  double test_fraction = 0.2;
  // Early stopping: a slice of every training set is withheld, the weights with the
  // lowest validation loss are kept and training stops after `patience` epochs
  // without improvement. validation_fraction = 0 trains for all epochs.
  double validation_fraction = 0.15;
  std::size_t patience = 500;
  // L2 penalty on weight matrices (biases excluded), added to the batch gradient.
  // Without it the log-normal head shrinks sigma onto the training noise within
  // a few dozen epochs.
  double weight_decay = 0.05;

  static EmissionModelConfig deterministic() {
    EmissionModelConfig c;
    c.kind = ModelKind::Deterministic;
    c.hidden = {512, 512, 512, 512};
    c.epochs = 6000;
    c.batch_size = 128;
    c.learning_rate = 1e-4;
    c.weight_decay = 0.0;
    return c;
  }
  static EmissionModelConfig probabilistic() { return {}; }

  std::size_t output_size() const { return kind == ModelKind::Deterministic ? 1 : 2; }

  void validate() const {
    if (hidden.empty()) throw ConfigError("emission model needs at least one hidden layer");
    for (auto h : hidden)
      if (h == 0) throw ConfigError("hidden layer sizes must be positive");
    if (epochs == 0 || batch_size == 0) throw ConfigError("epochs and batch_size must be positive");
    if (!(learning_rate > 0.0)) throw ConfigError("learning_rate must be positive");
    if (!(test_fraction >= 0.0 && test_fraction < 1.0)) throw ConfigError("test_fraction must be in [0, 1)");
    if (cv_folds == 1) throw ConfigError("cv_folds must be 0 or at least 2");
    if (!(validation_fraction >= 0.0 && validation_fraction < 1.0))
      throw ConfigError("validation_fraction must be in [0, 1)");
    if (patience == 0) throw ConfigError("patience must be positive");
    if (!(weight_decay >= 0.0)) throw ConfigError("weight_decay must be nonnegative");
  }
};

struct EmissionPrediction {
  enum class Kind { Point, LogNormal };
  Kind kind = Kind::Point;
  double point = 0.0;  // g/ha/d
  double mu = 0.0;
  double sigma = 1.0;
};

/// Two-sided 95% normal quantile.
inline constexpr double kZ95 = 1.959963984540054;

class EmissionModel {
 public:
  EmissionModel() = default;
  explicit EmissionModel(const EmissionModelConfig& cfg)
      : kind_(cfg.kind), hidden_(cfg.hidden), net_(4, cfg.hidden, cfg.output_size()) {}

  ModelKind kind() const noexcept { return kind_; }
  const std::vector<std::size_t>& hidden() const noexcept { return hidden_; }
  nn::Mlp& net() noexcept { return net_; }
  const nn::Mlp& net() const noexcept { return net_; }
  Normalization& normalization() noexcept { return norm_; }
  const Normalization& normalization() const noexcept { return norm_; }

  // Deterministic targets are trained in standardized units.
  double target_mean = 0.0;
  double target_sd = 1.0;

  EmissionPrediction predict(const EmissionFeatures& f) const {
    const auto x = norm_.apply(f);
    const auto out = net_.forward(x);
    EmissionPrediction p;
    if (kind_ == ModelKind::Deterministic) {
      p.kind = EmissionPrediction::Kind::Point;
      p.point = std::max(0.0, out[0] * target_sd + target_mean);
    } else {
      p.kind = EmissionPrediction::Kind::LogNormal;
      p.mu = out[0];
      p.sigma = std::exp(out[1]);
    }
    return p;
  }

  nn::Checkpoint to_checkpoint() {
    nn::Checkpoint ck;
    ck.meta["model"] = "emission";
    ck.meta["kind"] = to_string(kind_);
    std::string h;
    for (auto s : hidden_) h += (h.empty() ? "" : ",") + std::to_string(s);
    ck.meta["hidden"] = h;
    ck.meta["feature_mean"] = join(norm_.mean);
    ck.meta["feature_sd"] = join(norm_.sd);
    ck.meta["target_mean"] = text::exact(target_mean);
    ck.meta["target_sd"] = text::exact(target_sd);
    nn::store_params(ck, net_.parameters());
    return ck;
  }

  static EmissionModel from_checkpoint(const nn::Checkpoint& ck) {
    if (ck.get("model") != "emission") throw ConfigError("checkpoint does not hold an emission model");
    EmissionModelConfig cfg;
    cfg.kind = parse_model_kind(ck.get("kind"));
    cfg.hidden.clear();
    for (auto tok : text::split(ck.get("hidden"), ','))
      cfg.hidden.push_back(static_cast<std::size_t>(text::to_long(tok, "hidden")));
    EmissionModel m(cfg);
    m.norm_.mean = split4(ck.get("feature_mean"), "feature_mean");
    m.norm_.sd = split4(ck.get("feature_sd"), "feature_sd");
    m.target_mean = text::to_double(ck.get("target_mean"), "target_mean");
    m.target_sd = text::to_double(ck.get("target_sd"), "target_sd");
    nn::load_params(ck, m.net_.parameters());
    return m;
  }

 private:
  static std::string join(const std::array<double, 4>& a) {
    return text::exact(a[0]) + " " + text::exact(a[1]) + " " + text::exact(a[2]) + " " + text::exact(a[3]);
  }
  static std::array<double, 4> split4(const std::string& s, const std::string& field) {
    auto tok = text::tokens(s);
    if (tok.size() != 4) throw ParseError(field + " needs 4 values");
    return {text::to_double(tok[0], field), text::to_double(tok[1], field), text::to_double(tok[2], field),
            text::to_double(tok[3], field)};
  }

  ModelKind kind_ = ModelKind::Probabilistic;
  std::vector<std::size_t> hidden_;
  nn::Mlp net_;
  Normalization norm_;
};

struct EvalMetrics {
  std::size_t n = 0;
  double r2 = std::numeric_limits<double>::quiet_NaN();
  double rmse = std::numeric_limits<double>::quiet_NaN();
  double nll = std::numeric_limits<double>::quiet_NaN();         // mean per sample
  double coverage95 = std::numeric_limits<double>::quiet_NaN();  // fraction inside the 95% PI
};

inline EvalMetrics evaluate_model(const EmissionModel& model, const std::vector<Sample>& samples) {
  if (samples.empty()) throw ConfigError("cannot evaluate on an empty sample set");
  EvalMetrics m;
  m.n = samples.size();
  std::vector<double> obs, pred;
  double sse = 0.0, nll = 0.0, inside = 0.0;
  for (const auto& s : samples) {
    const auto p = model.predict(s.features);
    double point = p.point;
    if (p.kind == EmissionPrediction::Kind::LogNormal) {
      point = std::exp(p.mu + 0.5 * p.sigma * p.sigma);
      if (s.flux > 0.0) {
        nll += nn::lognormal_nll(s.flux, p.mu, std::log(p.sigma));
        const double lo = std::exp(p.mu - kZ95 * p.sigma), hi = std::exp(p.mu + kZ95 * p.sigma);
        inside += (s.flux >= lo && s.flux <= hi);
      }
    }
    obs.push_back(s.flux);
    pred.push_back(point);
    sse += (s.flux - point) * (s.flux - point);
  }
  m.rmse = std::sqrt(sse / static_cast<double>(m.n));
  if (samples.size() > 1) {
    try {
      m.r2 = r_squared(obs, pred);
    } catch (const DomainError&) {
    }
  }
  if (model.kind() == ModelKind::Probabilistic) {
    m.nll = nll / static_cast<double>(m.n);
    m.coverage95 = inside / static_cast<double>(m.n);
  }
  return m;
}

/// Trains one model on `samples`. Normalization statistics come from the samples
/// actually used for gradient steps. `loss_curve`, when given, receives the mean
/// training loss of every epoch.
inline EmissionModel fit_emission_model(const EmissionModelConfig& cfg, const std::vector<Sample>& samples,
                                        RngStream& rng, std::vector<double>* loss_curve = nullptr) {
  cfg.validate();
  if (samples.size() < 2) throw ConfigError("emission model training needs at least two samples");
  const bool prob = cfg.kind == ModelKind::Probabilistic;
  if (prob)
    for (const auto& s : samples)
      if (!(s.flux > 0.0)) throw DomainError("probabilistic training needs positive flux targets");

  std::vector<Sample> train = samples, valid;
  for (std::size_t i = train.size(); i > 1; --i) std::swap(train[i - 1], train[rng.index(i)]);
  const auto n_valid =
      static_cast<std::size_t>(std::floor(cfg.validation_fraction * static_cast<double>(train.size())));
  if (n_valid > 0 && train.size() - n_valid >= 2) {
    valid.assign(train.end() - static_cast<long>(n_valid), train.end());
    train.resize(train.size() - n_valid);
  }

  EmissionModel model(cfg);
  model.normalization() = fit_normalization(train);
  model.net().init(rng);

  auto target_of = [&](const Sample& s) { return prob ? std::log(s.flux) : s.flux; };
  double tm = 0.0, tv = 0.0;
  for (const auto& s : train) tm += target_of(s);
  tm /= static_cast<double>(train.size());
  for (const auto& s : train) tv += (target_of(s) - tm) * (target_of(s) - tm);
  const double tsd = std::sqrt(tv / static_cast<double>(train.size()));
  auto& out_bias = model.net().layers().back().bias();
  if (prob) {
    // Start at the marginal log-normal fit.
    out_bias(0, 0) = tm;
    out_bias(1, 0) = std::log(tsd > 1e-6 ? tsd : 1.0);
  } else {
    model.target_mean = tm;
    model.target_sd = tsd > 0.0 ? tsd : 1.0;
  }

  const nn::LossKind loss_kind = prob ? nn::LossKind::LogNormalNLL : nn::LossKind::MeanSquaredError;
  auto encode = [&](const std::vector<Sample>& set, std::vector<std::array<double, 4>>& x, std::vector<double>& y) {
    for (const auto& s : set) {
      x.push_back(model.normalization().apply(s.features));
      y.push_back(prob ? s.flux : (s.flux - model.target_mean) / model.target_sd);
    }
  };
  std::vector<std::array<double, 4>> xt, xv;
  std::vector<double> yt, yv;
  encode(train, xt, yt);
  encode(valid, xv, yv);

  auto params = model.net().parameters();
  nn::AdamState adam(cfg.learning_rate);
  std::vector<std::size_t> order(train.size());
  std::iota(order.begin(), order.end(), 0);
  nn::Mlp::Trace trace;

  std::vector<nn::Tensor2> best;
  double best_loss = std::numeric_limits<double>::infinity();
  std::size_t since_best = 0;

  for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
    for (std::size_t i = order.size(); i > 1; --i) std::swap(order[i - 1], order[rng.index(i)]);
    double epoch_loss = 0.0;
    for (std::size_t start = 0; start < order.size(); start += cfg.batch_size) {
      const std::size_t end = std::min(order.size(), start + cfg.batch_size);
      const double inv = 1.0 / static_cast<double>(end - start);
      nn::zero_grads(params);
      for (std::size_t k = start; k < end; ++k) {
        const std::size_t i = order[k];
        const auto out = model.net().forward(xt[i], trace);
        auto [loss, grad] = nn::loss_and_grad(loss_kind, out, std::span<const double>(&yt[i], 1));
        if (!std::isfinite(loss))
          throw TrainingError("emission training loss became non-finite at epoch " + std::to_string(epoch + 1));
        epoch_loss += loss;
        for (auto& g : grad) g *= inv;
        model.net().backward(trace, grad);
      }
      if (cfg.weight_decay > 0.0)
        for (const auto& p : params)
          if (p.name.ends_with(".weight"))
            nn::detail::axpy(cfg.weight_decay, p.value->data.data(), p.grad->data.data(), p.value->size());
      nn::adam_step(adam, params);
    }
    if (loss_curve) loss_curve->push_back(epoch_loss / static_cast<double>(order.size()));

    if (valid.empty()) continue;
    double vloss = 0.0;
    for (std::size_t i = 0; i < xv.size(); ++i)
      vloss += nn::loss_and_grad(loss_kind, model.net().forward(xv[i]), std::span<const double>(&yv[i], 1)).first;
    if (!std::isfinite(vloss))
      throw TrainingError("emission validation loss became non-finite at epoch " + std::to_string(epoch + 1));
    if (vloss < best_loss) {
      best_loss = vloss;
      since_best = 0;
      best.clear();
      for (const auto& p : params) best.push_back(*p.value);
    } else if (++since_best >= cfg.patience) {
      break;
    }
  }
  if (!best.empty())
    for (std::size_t k = 0; k < params.size(); ++k) *params[k].value = best[k];
  return model;
}

struct EmissionTrainResult {
  EmissionModel model;
  std::vector<EvalMetrics> folds;
  EvalMetrics held_out;
  std::vector<double> loss_curve;
};

/// Shuffles, holds out `test_fraction`, cross-validates on the rest and fits a final
/// model on the whole training portion.
inline EmissionTrainResult train_emission_model(const EmissionModelConfig& cfg, const Dataset& data,
                                                RngStream& rng) {
  cfg.validate();
  if (data.empty()) throw ConfigError("emission dataset is empty");
  std::vector<std::size_t> idx(data.size());
  std::iota(idx.begin(), idx.end(), 0);
  for (std::size_t i = idx.size(); i > 1; --i) std::swap(idx[i - 1], idx[rng.index(i)]);
  const auto n_test = static_cast<std::size_t>(std::floor(cfg.test_fraction * static_cast<double>(data.size())));
  std::vector<Sample> test, train;
  for (std::size_t k = 0; k < idx.size(); ++k) (k < n_test ? test : train).push_back(data.samples[idx[k]]);

  if (cfg.cv_folds > 0 && train.size() < 2 * cfg.cv_folds)
    throw ConfigError("dataset too small for " + std::to_string(cfg.cv_folds) + "-fold cross-validation (" +
                      std::to_string(train.size()) + " training samples)");
  if (train.size() < 2) throw ConfigError("emission model training needs at least two samples");

  EmissionTrainResult result;
  for (std::size_t fold = 0; fold < cfg.cv_folds; ++fold) {
    std::vector<Sample> fit, val;
    for (std::size_t k = 0; k < train.size(); ++k) (k % cfg.cv_folds == fold ? val : fit).push_back(train[k]);
    RngStream fold_rng = rng.derive(fold + 1);
    auto m = fit_emission_model(cfg, fit, fold_rng);
    result.folds.push_back(evaluate_model(m, val));
  }
  RngStream final_rng = rng.derive(0);
  result.model = fit_emission_model(cfg, train, final_rng, &result.loss_curve);
  if (!test.empty()) result.held_out = evaluate_model(result.model, test);
  return result;
}

inline constexpr double kHobenRate = 0.0073;
inline constexpr double kHobenReference = 170.0;

/// Multiplier taking a flux predicted at 170 kg N/ha to cumulative input x kg N/ha.
inline double hoben_factor(double n_input_total) {
  if (!(n_input_total >= 0.0)) throw DomainError("N input must be nonnegative");
  return std::exp(kHobenRate * (n_input_total - kHobenReference));
}

/// Log-normal prediction moved to input x: mu + 0.0073 (x - 170), same sigma.
inline EmissionPrediction scaled_distribution(EmissionPrediction p, double n_input_total) {
  const double f = hoben_factor(n_input_total);
  if (p.kind == EmissionPrediction::Kind::Point)
    p.point *= f;
  else
    p.mu += kHobenRate * (n_input_total - kHobenReference);
  return p;
}

/// Flux at cumulative input x. With `rng`, log-normal predictions are sampled;
/// without it the distribution mean is returned.
inline double predict_daily_flux(const EmissionModel& model, const EmissionFeatures& f, double n_input_total,
                                 RngStream* rng = nullptr) {
  const double factor = hoben_factor(n_input_total);
  const auto p = model.predict(f);
  if (p.kind == EmissionPrediction::Kind::Point) return p.point * factor;
  const double base = rng ? std::exp(p.mu + p.sigma * rng->normal()) : std::exp(p.mu + 0.5 * p.sigma * p.sigma);
  return base * factor;
}

inline void save_emission_model(EmissionModel& m, const std::string& path) {
  nn::write_checkpoint(m.to_checkpoint(), path);
}

inline EmissionModel load_emission_model(const std::string& path) {
  return EmissionModel::from_checkpoint(nn::read_checkpoint(path));
}

}  // namespace cropdrqn::emission
