// Copyright 2026 The fishgrad Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

// Masked fine-tuning. The full gradient is computed densely and the optimizer
// only ever touches the indices in the mask, so every other coordinate keeps
// its exact bit pattern.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <limits>
#include <numeric>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "fishgrad/dataset.hpp"
#include "fishgrad/error.hpp"
#include "fishgrad/fisher.hpp"
#include "fishgrad/metrics.hpp"
#include "fishgrad/model.hpp"
#include "fishgrad/random.hpp"

namespace fishgrad {

enum class OptimizerKind { sgd, adam };
enum class LossKind { nll, mse };

inline std::string_view to_string(OptimizerKind o) { return o == OptimizerKind::sgd ? "sgd" : "adam"; }
inline OptimizerKind parse_optimizer(std::string_view s) {
  if (s == "sgd") return OptimizerKind::sgd;
  if (s == "adam") return OptimizerKind::adam;
  fail(ErrorKind::validation, "unknown optimizer '" + std::string(s) + "'");
}

inline std::string_view to_string(LossKind l) { return l == LossKind::nll ? "nll" : "mse"; }
inline LossKind parse_loss(std::string_view s) {
  if (s == "nll") return LossKind::nll;
  if (s == "mse") return LossKind::mse;
  fail(ErrorKind::validation, "unknown loss '" + std::string(s) + "'");
}

struct TrainConfig {
  OptimizerKind optimizer = OptimizerKind::adam;
  double learning_rate = 5e-5;
  std::size_t batch_size = 32;
  std::size_t max_epochs = 20;
  std::size_t patience = 10;
  double stop_threshold = 0.3;
  std::uint64_t seed = 0;
  std::optional<LossKind> loss;      // nll for classifiers, mse otherwise
  std::optional<MetricKind> metric;  // task default when unset
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;

  void validate() const {
    require(learning_rate > 0.0 && std::isfinite(learning_rate), "learning_rate must be > 0");
    require(batch_size >= 1, "batch_size must be >= 1");
    require(patience >= 1, "patience must be >= 1");
    require(max_epochs >= 1, "max_epochs must be >= 1");
    require(beta1 >= 0.0 && beta1 < 1.0 && beta2 >= 0.0 && beta2 < 1.0, "Adam betas must be in [0, 1)");
    require(epsilon > 0.0, "Adam epsilon must be > 0");
  }
};

struct TrainReport {
  std::size_t epochs_run = 0;
  std::vector<double> train_loss;
  std::vector<double> valid_metric;
  bool stopped_early = false;
  double best_metric = -std::numeric_limits<double>::infinity();
  std::size_t best_epoch = 0;  // 1-based
  std::uint64_t final_params_hash = 0;
};

// -- optimizer steps ----------------------------------------------------------

struct AdamState {
  std::vector<double> m;
  std::vector<double> v;
};

struct AdamCoefficients {
  double lr, beta1, beta2, eps, bias1, bias2;

  static AdamCoefficients make(double lr, double beta1, double beta2, double eps, std::size_t t) {
    require(t >= 1, "adam_step: t must be >= 1");
    const double td = static_cast<double>(t);
    return {lr, beta1, beta2, eps, 1.0 - std::pow(beta1, td), 1.0 - std::pow(beta2, td)};
  }
};

inline void adam_update(double& p, double g, double& m, double& v, const AdamCoefficients& c) {
  m = c.beta1 * m + (1.0 - c.beta1) * g;
  v = c.beta2 * v + (1.0 - c.beta2) * g * g;
  const double m_hat = m / c.bias1;
  const double v_hat = v / c.bias2;
  p -= c.lr * m_hat / (std::sqrt(v_hat) + c.eps);
}

/// Bias-corrected Adam on `indices` only. State slot i belongs to indices[i].
inline void adam_step(std::span<double> params, std::span<const double> grads,
                      std::span<const std::size_t> indices, AdamState& state, double lr,
                      std::size_t t, double beta1 = 0.9, double beta2 = 0.999, double eps = 1e-8) {
  const auto c = AdamCoefficients::make(lr, beta1, beta2, eps, t);
  if (state.m.empty()) {
    state.m.assign(indices.size(), 0.0);
    state.v.assign(indices.size(), 0.0);
  }
  require(state.m.size() == indices.size() && state.v.size() == indices.size(),
          "adam_step: optimizer state does not match the masked index set");
  for (std::size_t i = 0; i < indices.size(); ++i) {
    const std::size_t j = indices[i];
    adam_update(params[j], grads[j], state.m[i], state.v[i], c);
  }
}

/// Adam over every coordinate, without an index set.
inline void adam_step_dense(std::span<double> params, std::span<const double> grads, AdamState& state,
                            double lr, std::size_t t, double beta1 = 0.9, double beta2 = 0.999,
                            double eps = 1e-8) {
  const auto c = AdamCoefficients::make(lr, beta1, beta2, eps, t);
  if (state.m.empty()) {
    state.m.assign(params.size(), 0.0);
    state.v.assign(params.size(), 0.0);
  }
  for (std::size_t j = 0; j < params.size(); ++j) adam_update(params[j], grads[j], state.m[j], state.v[j], c);
}

inline void sgd_step(std::span<double> params, std::span<const double> grads,
                     std::span<const std::size_t> indices, double lr) {
  for (std::size_t j : indices) params[j] -= lr * grads[j];
}

inline void sgd_step_dense(std::span<double> params, std::span<const double> grads, double lr) {
  for (std::size_t j = 0; j < params.size(); ++j) params[j] -= lr * grads[j];
}

// -- early stopping -----------------------------------------------------------

/// True once the best metric exceeds `threshold` and `patience` epochs have
/// passed without a strictly greater value.
inline bool early_stop_check(std::span<const double> history, std::size_t patience, double threshold) {
  require(!history.empty(), "early_stop_check: empty history");
  std::size_t best = 0;
  for (std::size_t i = 1; i < history.size(); ++i) {
    if (history[i] > history[best]) best = i;
  }
  const std::size_t stale = history.size() - 1 - best;
  return stale >= patience && history[best] > threshold;
}

// -- training loop ------------------------------------------------------------

namespace detail {

inline LossKind resolve_loss(const Model& model, const TrainConfig& cfg) {
  const LossKind loss = cfg.loss.value_or(model.is_classifier() ? LossKind::nll : LossKind::mse);
  require(loss == LossKind::nll ? model.is_classifier() : !model.is_classifier(),
          "loss '" + std::string(to_string(loss)) + "' does not match the model head");
  return loss;
}

inline Var record_loss(Tape& tape, const Model& model, const Tensor& batch,
                       std::span<const double> labels, LossKind loss) {
  Var out = model.forward(tape, batch);
  if (loss == LossKind::nll) {
    std::vector<std::size_t> ys(labels.size());
    for (std::size_t i = 0; i < labels.size(); ++i) ys[i] = class_label(model, labels[i]);
    return tape.nll(tape.log_softmax(out), ys);
  }
  Tensor target = Tensor::zeros(labels.size(), 1);
  for (std::size_t i = 0; i < labels.size(); ++i) target(i, 0) = labels[i];
  return tape.mse(out, target);
}

/// Validation metric; a correlation that is undefined because the model
/// predicts a constant scores 0.
inline double validation_metric(MetricKind metric, const Model& model, const Dataset& valid) {
  if (!is_regression_metric(metric)) return score(metric, model, valid);
  const auto preds = predict_values(model, valid);
  if (std::adjacent_find(preds.begin(), preds.end(), std::not_equal_to<>()) == preds.end()) return 0.0;
  return score(metric, model, valid);
}

template <typename Step>
TrainReport run_training(Model& model, const Dataset& train, const Dataset& valid,
                         const TrainConfig& cfg, Step&& step) {
  cfg.validate();
  require(train.size() >= 1, "training split is empty");
  require(valid.size() >= 1, "validation split is empty");
  require(train.feature_dim == model.input_dim() && valid.feature_dim == model.input_dim(),
          "dataset feature width does not match model input");
  const LossKind loss = resolve_loss(model, cfg);
  const MetricKind metric = cfg.metric.value_or(default_metric(train.task));

  TrainReport report;
  std::vector<std::size_t> order(train.size());
  std::size_t t = 0;
  for (std::size_t epoch = 1; epoch <= cfg.max_epochs; ++epoch) {
    std::iota(order.begin(), order.end(), std::size_t{0});
    Rng rng(derive_seed({cfg.seed, epoch}));
    rng.shuffle(order);

    double loss_sum = 0.0;
    for (std::size_t start = 0; start < order.size(); start += cfg.batch_size) {
      const auto ids = std::span(order).subspan(start, std::min(cfg.batch_size, order.size() - start));
      const Tensor batch = train.batch(ids);
      const auto labels = train.labels(ids);
      Tape tape;
      Var l = record_loss(tape, model, batch, labels, loss);
      const double value = tape.value(l).item();
      if (!std::isfinite(value)) {
        fail(ErrorKind::runtime, "non-finite training loss at epoch " + std::to_string(epoch) +
                                     ", step " + std::to_string(t + 1));
      }
      const auto grads = tape.backward(l);
      step(model.params().data(), std::span<const double>(grads), ++t);
      loss_sum += value * static_cast<double>(ids.size());
    }
    report.train_loss.push_back(loss_sum / static_cast<double>(train.size()));
    const double m = validation_metric(metric, model, valid);
    report.valid_metric.push_back(m);
    report.epochs_run = epoch;
    if (m > report.best_metric) {
      report.best_metric = m;
      report.best_epoch = epoch;
    }
    if (early_stop_check(report.valid_metric, cfg.patience, cfg.stop_threshold)) {
      report.stopped_early = true;
      break;
    }
  }
  report.final_params_hash = model.params().hash();
  return report;
}

}  // namespace detail

/// Fine-tunes `model` in place, updating only the parameters in `mask`.
/// A mask carrying a nonzero model hash must have been built for this exact
/// model state.
inline TrainReport train_masked(Model& model, const Mask& mask, const Dataset& train,
                                const Dataset& valid, const TrainConfig& cfg) {
  require(mask.num_params == model.num_params(), "mask size does not match model parameter count");
  require(mask.model_hash == 0 || mask.model_hash == model.hash(),
          "mask was built for a different model state");
  mask.validate();
  require(!mask.selected.empty(), "mask selects no parameters");
  const std::span<const std::size_t> idx(mask.selected);
  if (cfg.optimizer == OptimizerKind::sgd) {
    return detail::run_training(model, train, valid, cfg, [&](std::span<double> p, std::span<const double> g, std::size_t) {
      sgd_step(p, g, idx, cfg.learning_rate);
    });
  }
  AdamState state;
  return detail::run_training(model, train, valid, cfg, [&](std::span<double> p, std::span<const double> g, std::size_t t) {
    adam_step(p, g, idx, state, cfg.learning_rate, t, cfg.beta1, cfg.beta2, cfg.epsilon);
  });
}

/// Ordinary dense fine-tuning of every parameter.
inline TrainReport train_dense(Model& model, const Dataset& train, const Dataset& valid,
                               const TrainConfig& cfg) {
  if (cfg.optimizer == OptimizerKind::sgd) {
    return detail::run_training(model, train, valid, cfg, [&](std::span<double> p, std::span<const double> g, std::size_t) {
      sgd_step_dense(p, g, cfg.learning_rate);
    });
  }
  AdamState state;
  return detail::run_training(model, train, valid, cfg, [&](std::span<double> p, std::span<const double> g, std::size_t t) {
    adam_step_dense(p, g, state, cfg.learning_rate, t, cfg.beta1, cfg.beta2, cfg.epsilon);
  });
}

}  // namespace fishgrad
