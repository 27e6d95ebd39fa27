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

// Diagonal Fisher information, per-sample Fisher scalars and top-k parameter
// masks.
//
// The empirical diagonal is the mean of squared per-sample gradients of
// log p(y_i|x_i) at the ground-truth labels; the expectation form replaces
// the label by an exact sum over the model's own predictive distribution.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <numeric>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "fishgrad/dataset.hpp"
#include "fishgrad/error.hpp"
#include "fishgrad/model.hpp"
#include "fishgrad/random.hpp"

namespace fishgrad {

/// Ordered dataset row ids, optionally with one Fisher scalar per id.
struct SampleSubset {
  std::vector<std::size_t> ids;
  std::vector<double> scores;

  void validate(std::size_t dataset_size) const {
    require(scores.empty() || scores.size() == ids.size(), "sample subset: scores misaligned with ids");
    std::vector<std::size_t> sorted = ids;
    std::sort(sorted.begin(), sorted.end());
    require(std::adjacent_find(sorted.begin(), sorted.end()) == sorted.end(),
            "sample subset: duplicate ids");
    require(sorted.empty() || sorted.back() < dataset_size, "sample subset: id out of range");
  }

  [[nodiscard]] std::size_t size() const noexcept { return ids.size(); }

  friend bool operator==(const SampleSubset&, const SampleSubset&) = default;
};

inline SampleSubset all_samples(const Dataset& ds) {
  SampleSubset s;
  s.ids.resize(ds.size());
  std::iota(s.ids.begin(), s.ids.end(), std::size_t{0});
  return s;
}

/// `n` distinct row ids drawn uniformly, returned in draw order.
inline SampleSubset random_samples(std::size_t dataset_size, std::size_t n, std::uint64_t seed) {
  require(n >= 1 && n <= dataset_size, "random_samples: n must be in [1, dataset size]");
  std::vector<std::size_t> pool(dataset_size);
  std::iota(pool.begin(), pool.end(), std::size_t{0});
  Rng rng(seed);
  for (std::size_t i = 0; i < n; ++i) std::swap(pool[i], pool[i + rng.below(dataset_size - i)]);
  pool.resize(n);
  return {std::move(pool), {}};
}

enum class FisherSource { empirical, expectation };

inline std::string_view to_string(FisherSource s) {
  return s == FisherSource::empirical ? "empirical" : "expectation";
}

inline FisherSource parse_fisher_source(std::string_view s) {
  if (s == "empirical") return FisherSource::empirical;
  if (s == "expectation") return FisherSource::expectation;
  fail(ErrorKind::validation, "unknown Fisher source '" + std::string(s) + "'");
}

struct FisherDiagonal {
  std::vector<double> values;
  FisherSource source = FisherSource::empirical;
  std::vector<std::size_t> sample_ids;
  std::uint64_t model_hash = 0;

  [[nodiscard]] std::size_t size() const noexcept { return values.size(); }
};

struct Mask {
  std::vector<std::size_t> selected;  // strictly increasing
  double sparsity = 1.0;
  std::size_t num_params = 0;
  std::uint64_t model_hash = 0;

  [[nodiscard]] std::size_t size() const noexcept { return selected.size(); }
  [[nodiscard]] bool contains(std::size_t index) const {
    return std::binary_search(selected.begin(), selected.end(), index);
  }

  void validate() const {
    for (std::size_t i = 0; i < selected.size(); ++i) {
      require(selected[i] < num_params, "mask index out of range");
      require(i == 0 || selected[i - 1] < selected[i], "mask indices must be strictly increasing");
    }
  }

  friend bool operator==(const Mask&, const Mask&) = default;
};

/// Number of selected parameters: max(1, round_half_up(sparsity * n)).
inline std::size_t mask_size(double sparsity, std::size_t num_params) {
  require(sparsity > 0.0 && sparsity <= 1.0, "sparsity must be in (0, 1]");
  require(num_params >= 1, "mask over an empty parameter vector");
  const auto k = static_cast<std::size_t>(std::floor(sparsity * static_cast<double>(num_params) + 0.5));
  return std::clamp<std::size_t>(k, 1, num_params);
}

/// Ids reordered by descending score, ties to the lower id.
inline std::vector<std::size_t> order_by_score_desc(std::span<const std::size_t> ids,
                                                    std::span<const double> scores) {
  require(ids.size() == scores.size(), "order_by_score_desc: length mismatch");
  std::vector<std::size_t> pos(ids.size());
  std::iota(pos.begin(), pos.end(), std::size_t{0});
  std::sort(pos.begin(), pos.end(), [&](std::size_t a, std::size_t b) {
    if (scores[a] != scores[b]) return scores[a] > scores[b];
    return ids[a] < ids[b];
  });
  std::vector<std::size_t> out(ids.size());
  for (std::size_t i = 0; i < pos.size(); ++i) out[i] = ids[pos[i]];
  return out;
}

// -- Fisher estimates ---------------------------------------------------------

namespace detail {
inline void check_subset(const Model& model, const Dataset& data, const SampleSubset& subset) {
  require(!subset.ids.empty(), "Fisher estimate over an empty sample subset");
  subset.validate(data.size());
  require(data.feature_dim == model.input_dim(), "dataset feature width does not match model input");
}
}  // namespace detail

inline FisherDiagonal empirical_fisher(const Model& model, const Dataset& data,
                                       const SampleSubset& subset) {
  detail::check_subset(model, data, subset);
  FisherDiagonal f;
  f.values.assign(model.num_params(), 0.0);
  f.source = FisherSource::empirical;
  f.sample_ids = subset.ids;
  f.model_hash = model.hash();
  for (std::size_t id : subset.ids) {
    const auto& row = data.rows[id];
    const auto g = log_prob_gradient(model, row.features, row.label);
    for (std::size_t j = 0; j < g.size(); ++j) f.values[j] += g[j] * g[j];
  }
  const double inv_n = 1.0 / static_cast<double>(subset.ids.size());
  for (double& v : f.values) v *= inv_n;
  return f;
}

inline FisherDiagonal expectation_fisher(const Model& model, const Dataset& data,
                                         const SampleSubset& subset) {
  require(model.is_classifier(),
          "expectation Fisher needs a classifier; use the empirical form for regression");
  detail::check_subset(model, data, subset);
  FisherDiagonal f;
  f.values.assign(model.num_params(), 0.0);
  f.source = FisherSource::expectation;
  f.sample_ids = subset.ids;
  f.model_hash = model.hash();
  for (std::size_t id : subset.ids) {
    const auto& x = data.rows[id].features;
    Tape tape;
    Var lp = tape.log_softmax(model.forward(tape, Tensor::row(x)));
    const Tensor& logp = tape.value(lp);
    for (std::size_t y = 0; y < model.num_classes(); ++y) {
      const double p = std::exp(logp(0, y));
      Tensor seed = Tensor::zeros(1, model.num_classes());
      seed(0, y) = 1.0;
      const auto g = tape.backward(lp, seed);
      for (std::size_t j = 0; j < g.size(); ++j) f.values[j] += p * g[j] * g[j];
    }
  }
  const double inv_n = 1.0 / static_cast<double>(subset.ids.size());
  for (double& v : f.values) v *= inv_n;
  return f;
}

inline FisherDiagonal estimate_fisher(FisherSource source, const Model& model, const Dataset& data,
                                      const SampleSubset& subset) {
  return source == FisherSource::empirical ? empirical_fisher(model, data, subset)
                                           : expectation_fisher(model, data, subset);
}

struct SampleScore {
  std::size_t sample_id = 0;
  double score = 0.0;
};

/// Squared gradient norm of log p(y_i|x_i) per sample, optionally summed only
/// over the parameters in `restrict_to`.
inline std::vector<SampleScore> sample_scores(const Model& model, const Dataset& data,
                                              const SampleSubset& subset,
                                              const Mask* restrict_to = nullptr) {
  detail::check_subset(model, data, subset);
  if (restrict_to) {
    require(restrict_to->num_params == model.num_params(), "restriction mask does not match model");
  }
  std::vector<SampleScore> out;
  out.reserve(subset.ids.size());
  for (std::size_t id : subset.ids) {
    const auto& row = data.rows[id];
    const auto g = log_prob_gradient(model, row.features, row.label);
    double s = 0.0;
    if (restrict_to) {
      for (std::size_t j : restrict_to->selected) s += g[j] * g[j];
    } else {
      for (double v : g) s += v * v;
    }
    out.push_back({id, s});
  }
  return out;
}

// -- masks --------------------------------------------------------------------

/// The k = mask_size(sparsity, n) largest scores; ties go to the lower index.
inline Mask top_k_mask(std::span<const double> values, double sparsity, std::uint64_t model_hash = 0) {
  const std::size_t k = mask_size(sparsity, values.size());
  std::vector<std::size_t> idx(values.size());
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  auto better = [&](std::size_t a, std::size_t b) {
    if (values[a] != values[b]) return values[a] > values[b];
    return a < b;
  };
  std::nth_element(idx.begin(), idx.begin() + static_cast<std::ptrdiff_t>(k - 1), idx.end(), better);
  idx.resize(k);
  std::sort(idx.begin(), idx.end());
  return {std::move(idx), sparsity, values.size(), model_hash};
}

inline Mask top_k_mask(const FisherDiagonal& fisher, double sparsity) {
  return top_k_mask(fisher.values, sparsity, fisher.model_hash);
}

/// Uniform selection without replacement, deterministic per seed.
inline Mask random_mask(std::size_t num_params, double sparsity, std::uint64_t seed,
                        std::uint64_t model_hash = 0) {
  const std::size_t k = mask_size(sparsity, num_params);
  auto drawn = random_samples(num_params, k, seed).ids;
  std::sort(drawn.begin(), drawn.end());
  return {std::move(drawn), sparsity, num_params, model_hash};
}

inline Mask full_mask(std::size_t num_params, std::uint64_t model_hash = 0) {
  Mask m;
  m.selected.resize(num_params);
  std::iota(m.selected.begin(), m.selected.end(), std::size_t{0});
  m.sparsity = 1.0;
  m.num_params = num_params;
  m.model_hash = model_hash;
  return m;
}

}  // namespace fishgrad
