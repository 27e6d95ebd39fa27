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

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <numeric>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "fishgrad/dataset.hpp"
#include "fishgrad/error.hpp"
#include "fishgrad/model.hpp"

namespace fishgrad {

enum class MetricKind { accuracy, mcc, pearson, spearman, f1, combined, pearson_spearman_mean };

inline std::string_view to_string(MetricKind m) {
  switch (m) {
    case MetricKind::accuracy: return "accuracy";
    case MetricKind::mcc: return "mcc";
    case MetricKind::pearson: return "pearson";
    case MetricKind::spearman: return "spearman";
    case MetricKind::f1: return "f1";
    case MetricKind::combined: return "combined";
    case MetricKind::pearson_spearman_mean: return "pearson_spearman_mean";
  }
  return "?";
}

inline MetricKind parse_metric(std::string_view s) {
  for (auto m : {MetricKind::accuracy, MetricKind::mcc, MetricKind::pearson, MetricKind::spearman,
                 MetricKind::f1, MetricKind::combined, MetricKind::pearson_spearman_mean}) {
    if (to_string(m) == s) return m;
  }
  fail(ErrorKind::validation, "unknown metric '" + std::string(s) + "'");
}

inline bool is_regression_metric(MetricKind m) {
  return m == MetricKind::pearson || m == MetricKind::spearman ||
         m == MetricKind::pearson_spearman_mean;
}

inline bool is_binary_metric(MetricKind m) {
  return m == MetricKind::mcc || m == MetricKind::f1 || m == MetricKind::combined;
}

inline MetricKind default_metric(TaskKind task) {
  return task == TaskKind::regression ? MetricKind::pearson_spearman_mean : MetricKind::accuracy;
}

namespace detail {
inline void check_lengths(std::size_t a, std::size_t b, const char* what) {
  require(a == b, std::string(what) + ": length mismatch");
  require(a >= 1, std::string(what) + ": empty input");
}
}  // namespace detail

inline double accuracy(std::span<const std::size_t> preds, std::span<const std::size_t> labels) {
  detail::check_lengths(preds.size(), labels.size(), "accuracy");
  std::size_t correct = 0;
  for (std::size_t i = 0; i < preds.size(); ++i) correct += preds[i] == labels[i];
  return static_cast<double>(correct) / static_cast<double>(preds.size());
}

/// Binary confusion counts with label 1 as the positive class.
struct Confusion {
  std::size_t tp = 0, tn = 0, fp = 0, fn = 0;

  [[nodiscard]] std::size_t total() const noexcept { return tp + tn + fp + fn; }
};

inline Confusion confusion(std::span<const std::size_t> preds, std::span<const std::size_t> labels) {
  detail::check_lengths(preds.size(), labels.size(), "confusion");
  Confusion c;
  for (std::size_t i = 0; i < preds.size(); ++i) {
    require(preds[i] <= 1 && labels[i] <= 1, "binary metric given a non-binary value");
    if (preds[i] == 1) {
      (labels[i] == 1 ? c.tp : c.fp)++;
    } else {
      (labels[i] == 1 ? c.fn : c.tn)++;
    }
  }
  return c;
}

/// Matthews correlation; 0 when any marginal is empty.
inline double mcc(const Confusion& c) {
  const double tp = static_cast<double>(c.tp), tn = static_cast<double>(c.tn);
  const double fp = static_cast<double>(c.fp), fn = static_cast<double>(c.fn);
  const double denom = (tp + fp) * (tp + fn) * (tn + fp) * (tn + fn);
  if (denom == 0.0) return 0.0;
  return (tp * tn - fp * fn) / std::sqrt(denom);
}

inline double mcc(std::span<const std::size_t> preds, std::span<const std::size_t> labels) {
  return mcc(confusion(preds, labels));
}

/// F1 of the positive class; 0 when precision and recall are both 0/0 or 0.
inline double f1(const Confusion& c) {
  const std::size_t denom = 2 * c.tp + c.fp + c.fn;
  if (denom == 0 || c.tp == 0) return 0.0;
  return 2.0 * static_cast<double>(c.tp) / static_cast<double>(denom);
}

inline double f1(std::span<const std::size_t> preds, std::span<const std::size_t> labels) {
  return f1(confusion(preds, labels));
}

inline double combined_score(const Confusion& c) {
  require(c.total() > 0, "combined_score: empty input");
  const double acc = static_cast<double>(c.tp + c.tn) / static_cast<double>(c.total());
  return 0.5 * (f1(c) + acc);
}

inline double combined_score(std::span<const std::size_t> preds, std::span<const std::size_t> labels) {
  return combined_score(confusion(preds, labels));
}

inline double pearson(std::span<const double> x, std::span<const double> y) {
  require(x.size() == y.size(), "pearson: length mismatch");
  require(x.size() >= 2, "pearson: need at least two points");
  const double n = static_cast<double>(x.size());
  const double mx = std::accumulate(x.begin(), x.end(), 0.0) / n;
  const double my = std::accumulate(y.begin(), y.end(), 0.0) / n;
  double sxy = 0.0, sxx = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double dx = x[i] - mx, dy = y[i] - my;
    sxy += dx * dy;
    sxx += dx * dx;
    syy += dy * dy;
  }
  require(sxx > 0.0 && syy > 0.0, "pearson: correlation undefined for a constant vector");
  return sxy / std::sqrt(sxx * syy);
}

/// 1-based ranks; tied values share their mean rank.
inline std::vector<double> average_ranks(std::span<const double> v) {
  std::vector<std::size_t> order(v.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](auto a, auto b) { return v[a] < v[b]; });
  std::vector<double> ranks(v.size());
  for (std::size_t i = 0; i < order.size();) {
    std::size_t j = i;
    while (j + 1 < order.size() && v[order[j + 1]] == v[order[i]]) ++j;
    const double r = 0.5 * static_cast<double>(i + j) + 1.0;
    for (std::size_t k = i; k <= j; ++k) ranks[order[k]] = r;
    i = j + 1;
  }
  return ranks;
}

inline double spearman(std::span<const double> x, std::span<const double> y) {
  require(x.size() == y.size(), "spearman: length mismatch");
  require(x.size() >= 2, "spearman: need at least two points");
  const auto rx = average_ranks(x);
  const auto ry = average_ranks(y);
  return pearson(rx, ry);
}

// -- model evaluation ---------------------------------------------------------

/// Argmax class per row; ties go to the lowest class index.
inline std::vector<std::size_t> predict_classes(const Model& model, const Dataset& data) {
  require(model.is_classifier(), "predict_classes requires a classifier");
  const Tensor logits = model.outputs(data.all_features());
  std::vector<std::size_t> preds(logits.rows());
  for (std::size_t i = 0; i < logits.rows(); ++i) {
    std::size_t best = 0;
    for (std::size_t c = 1; c < logits.cols(); ++c) {
      if (logits(i, c) > logits(i, best)) best = c;
    }
    preds[i] = best;
  }
  return preds;
}

inline std::vector<double> predict_values(const Model& model, const Dataset& data) {
  require(!model.is_classifier(), "predict_values requires a scalar-output model");
  return model.outputs(data.all_features()).values();
}

inline std::vector<std::size_t> class_labels(const Dataset& data) {
  std::vector<std::size_t> out(data.size());
  for (std::size_t i = 0; i < data.size(); ++i) out[i] = static_cast<std::size_t>(data.rows[i].label);
  return out;
}

/// Evaluates `model` on `data` under `metric`.
inline double score(MetricKind metric, const Model& model, const Dataset& data) {
  require(data.size() >= 1, "score: empty evaluation split");
  if (is_regression_metric(metric)) {
    require(!model.is_classifier(), std::string(to_string(metric)) + " needs a regression model");
    const auto preds = predict_values(model, data);
    const auto labels = data.all_labels();
    switch (metric) {
      case MetricKind::pearson: return pearson(preds, labels);
      case MetricKind::spearman: return spearman(preds, labels);
      default: return 0.5 * (pearson(preds, labels) + spearman(preds, labels));
    }
  }
  require(model.is_classifier(), std::string(to_string(metric)) + " needs a classifier");
  if (is_binary_metric(metric)) {
    require(model.num_classes() == 2, std::string(to_string(metric)) + " is defined for binary tasks");
  }
  const auto preds = predict_classes(model, data);
  const auto labels = class_labels(data);
  switch (metric) {
    case MetricKind::accuracy: return accuracy(preds, labels);
    case MetricKind::mcc: return mcc(preds, labels);
    case MetricKind::f1: return f1(preds, labels);
    case MetricKind::combined: return combined_score(preds, labels);
    default: break;
  }
  fail(ErrorKind::runtime, "unhandled metric");
}

}  // namespace fishgrad
