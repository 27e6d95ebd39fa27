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

// Iterative sample-parameter range decreasing.
//
// Starting from a top-k Fisher mask over an initial sample set, each
// iteration first shrinks the sample set to the samples with the largest
// per-sample Fisher scalar and scores the current mask, then shrinks the
// mask to its highest-Fisher members (Fisher re-estimated on the shrunken
// sample set) and scores again. The inverse search keeps the complementary,
// low-Fisher halves instead.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <limits>
#include <numeric>
#include <string>
#include <string_view>
#include <vector>

#include "fishgrad/dataset.hpp"
#include "fishgrad/error.hpp"
#include "fishgrad/fisher.hpp"
#include "fishgrad/model.hpp"
#include "fishgrad/trainer.hpp"

namespace fishgrad {

enum class SearchDirection { forward, inverse };
enum class TracePhase { after_sample_halving, after_param_halving };

inline std::string_view to_string(SearchDirection d) {
  return d == SearchDirection::forward ? "ird" : "ird_inverse";
}
inline std::string_view to_string(TracePhase p) {
  return p == TracePhase::after_sample_halving ? "after_sample_halving" : "after_param_halving";
}
inline TracePhase parse_trace_phase(std::string_view s) {
  if (s == "after_sample_halving") return TracePhase::after_sample_halving;
  if (s == "after_param_halving") return TracePhase::after_param_halving;
  fail(ErrorKind::validation, "unknown trace phase '" + std::string(s) + "'");
}

inline constexpr std::string_view kStatusOk = "ok";
inline constexpr std::string_view kStatusDiverged = "diverged";

struct TraceRecord {
  std::size_t iteration = 0;
  TracePhase phase = TracePhase::after_sample_halving;
  double score = 0.0;  // NaN when the scoring run diverged
  std::string status{kStatusOk};
  Mask mask;
  SampleSubset subset;
};

struct IRDTrace {
  SearchDirection direction = SearchDirection::forward;
  std::size_t num_params = 0;
  double initial_sparsity = 0.0;
  Mask initial_mask;
  SampleSubset initial_subset;
  double initial_score = std::numeric_limits<double>::quiet_NaN();
  std::string initial_status{kStatusOk};
  std::vector<TraceRecord> records;

  [[nodiscard]] std::size_t iterations() const noexcept { return records.size() / 2; }
};

/// Explicit shrink targets. Entry 0 describes the starting point; entry l+1
/// is the size after iteration l. Empty vectors mean "halve each time".
struct SearchSchedule {
  std::vector<std::size_t> sample_counts;
  std::vector<double> sparsities;

  [[nodiscard]] bool halving() const noexcept { return sample_counts.empty(); }
};

struct IrdConfig {
  TrainConfig train;
  FisherSource fisher_source = FisherSource::empirical;
  /// Rank samples by their squared gradient over the current mask only.
  bool restrict_sample_scores = false;
  /// Fine-tune on the current sample subset instead of the full training split.
  bool train_on_subset = false;
  /// Also score the starting (X0, mask0) pair.
  bool score_initial = true;
  SearchSchedule schedule;
};

/// Scores one (mask, sample subset) configuration. May throw a runtime Error
/// on divergence; the search records a NaN sentinel and carries on.
using Scorer = std::function<double(const Mask&, const SampleSubset&)>;

/// Fine-tunes a fresh copy of `initial` with only `mask` trainable and
/// returns the best validation metric.
inline Scorer make_finetune_scorer(const Model& initial, const Dataset& train, const Dataset& valid,
                                   const TrainConfig& cfg, bool train_on_subset = false) {
  return [&initial, &train, &valid, cfg, train_on_subset](const Mask& mask, const SampleSubset& subset) {
    Model model = initial;
    const TrainReport report = train_on_subset
                                   ? train_masked(model, mask, train.subset(subset.ids), valid, cfg)
                                   : train_masked(model, mask, train, valid, cfg);
    return report.best_metric;
  };
}

namespace detail {

struct Scored {
  double score;
  std::string status;
};

inline Scored safe_score(const Scorer& scorer, const Mask& mask, const SampleSubset& subset) {
  try {
    const double s = scorer(mask, subset);
    if (!std::isfinite(s)) return {std::numeric_limits<double>::quiet_NaN(), std::string(kStatusDiverged)};
    return {s, std::string(kStatusOk)};
  } catch (const Error& e) {
    if (e.kind() != ErrorKind::runtime) throw;
    return {std::numeric_limits<double>::quiet_NaN(), std::string(kStatusDiverged)};
  }
}

/// Splits `ordered` (best first) and keeps `keep` entries from the front for
/// the forward search or from the back for the inverse search.
inline std::vector<std::size_t> keep_part(const std::vector<std::size_t>& ordered, std::size_t keep,
                                          SearchDirection dir) {
  require(keep <= ordered.size(), "keep_part: keep exceeds size");
  const std::size_t start = dir == SearchDirection::forward ? 0 : ordered.size() - keep;
  std::vector<std::size_t> out;
  out.reserve(keep);
  for (std::size_t i = start; i < start + keep; ++i) out.push_back(ordered[i]);
  return out;
}

inline std::size_t halved(std::size_t n, SearchDirection dir) {
  return dir == SearchDirection::forward ? (n + 1) / 2 : n / 2;
}

}  // namespace detail

/// One sample-halving step: keeps ceil(n/2) (forward) or floor(n/2)
/// (inverse) of `current`, or `target` samples when given. Ties at the
/// boundary send the lower sample id to the forward side. Kept ids retain
/// their order in `current` and carry their scores.
inline SampleSubset shrink_samples(const SampleSubset& current, const std::vector<SampleScore>& scores,
                                   SearchDirection dir, std::size_t target = 0) {
  require(scores.size() == current.ids.size(), "shrink_samples: score count mismatch");
  std::vector<double> vals(scores.size());
  for (std::size_t i = 0; i < scores.size(); ++i) {
    require(scores[i].sample_id == current.ids[i], "shrink_samples: scores out of order");
    vals[i] = scores[i].score;
  }
  const std::size_t keep = target ? target : detail::halved(current.size(), dir);
  require(keep >= 1 && keep <= current.size(), "shrink_samples: invalid target size");
  std::vector<std::size_t> pos(current.size());
  std::iota(pos.begin(), pos.end(), std::size_t{0});
  std::sort(pos.begin(), pos.end(), [&](std::size_t a, std::size_t b) {
    if (vals[a] != vals[b]) return vals[a] > vals[b];
    return current.ids[a] < current.ids[b];
  });
  auto kept = detail::keep_part(pos, keep, dir);
  std::sort(kept.begin(), kept.end());
  SampleSubset out;
  for (std::size_t p : kept) {
    out.ids.push_back(current.ids[p]);
    out.scores.push_back(vals[p]);
  }
  return out;
}

/// One parameter-halving step within `current`, ranked by `fisher`.
inline Mask shrink_mask(const Mask& current, const FisherDiagonal& fisher, SearchDirection dir,
                        std::size_t target = 0, double sparsity_label = 0.0) {
  require(fisher.size() == current.num_params, "shrink_mask: Fisher does not match mask");
  std::vector<double> vals(current.size());
  for (std::size_t i = 0; i < current.size(); ++i) vals[i] = fisher.values[current.selected[i]];
  const std::size_t keep = target ? std::min(target, current.size()) : detail::halved(current.size(), dir);
  require(keep >= 1, "shrink_mask: cannot shrink below one parameter");
  auto kept = detail::keep_part(order_by_score_desc(current.selected, vals), keep, dir);
  std::sort(kept.begin(), kept.end());
  Mask out;
  out.selected = std::move(kept);
  out.num_params = current.num_params;
  out.model_hash = current.model_hash;
  out.sparsity = sparsity_label > 0.0 ? sparsity_label
                                      : static_cast<double>(out.selected.size()) / static_cast<double>(out.num_params);
  return out;
}

/// Runs the search over `data` (the split samples are drawn from) starting at
/// `x0` with a top-k mask at `sparsity`.
inline IRDTrace range_decreasing_search(const Model& model, const Dataset& data, const SampleSubset& x0,
                                        double sparsity, const IrdConfig& cfg, const Scorer& scorer,
                                        SearchDirection dir) {
  require(x0.size() >= 2, "IRD needs at least two initial samples");
  x0.validate(data.size());
  const std::size_t k0 = mask_size(sparsity, model.num_params());
  require(k0 >= 2, "IRD needs an initial mask of at least two parameters");
  const auto& sched = cfg.schedule;
  if (!sched.halving()) {
    require(!sched.sparsities.empty(), "IRD schedule needs sparsity levels");
    require(sched.sample_counts.front() == x0.size(), "IRD schedule must start at |X0|");
  }

  IRDTrace trace;
  trace.direction = dir;
  trace.num_params = model.num_params();
  trace.initial_sparsity = sparsity;
  trace.initial_subset = x0;
  trace.initial_subset.scores.clear();

  const FisherDiagonal f0 = estimate_fisher(cfg.fisher_source, model, data, x0);
  Mask theta = top_k_mask(f0, sparsity);
  trace.initial_mask = theta;
  if (cfg.score_initial) {
    auto s = detail::safe_score(scorer, theta, trace.initial_subset);
    trace.initial_score = s.score;
    trace.initial_status = s.status;
  } else {
    trace.initial_status = "skipped";
  }

  SampleSubset x = trace.initial_subset;
  for (std::size_t l = 0; x.size() > 1 && theta.size() > 1; ++l) {
    std::size_t sample_target = 0, param_target = 0;
    double sparsity_label = 0.0;
    if (!sched.halving()) {
      if (l + 1 >= sched.sample_counts.size() || l + 1 >= sched.sparsities.size()) break;
      sample_target = std::min(sched.sample_counts[l + 1], x.size());
      sparsity_label = sched.sparsities[l + 1];
      param_target = mask_size(sparsity_label, model.num_params());
    }

    const auto scores = sample_scores(model, data, x, cfg.restrict_sample_scores ? &theta : nullptr);
    x = shrink_samples(x, scores, dir, sample_target);
    SampleSubset x_plain{x.ids, {}};
    {
      auto s = detail::safe_score(scorer, theta, x_plain);
      trace.records.push_back({l, TracePhase::after_sample_halving, s.score, s.status, theta, x});
    }

    const FisherDiagonal f = estimate_fisher(cfg.fisher_source, model, data, x_plain);
    theta = shrink_mask(theta, f, dir, param_target, sparsity_label);
    {
      auto s = detail::safe_score(scorer, theta, x_plain);
      trace.records.push_back({l, TracePhase::after_param_halving, s.score, s.status, theta, x});
    }
  }
  return trace;
}

inline IRDTrace ird(const Model& model, const Dataset& data, const SampleSubset& x0, double sparsity,
                    const IrdConfig& cfg, const Scorer& scorer) {
  return range_decreasing_search(model, data, x0, sparsity, cfg, scorer, SearchDirection::forward);
}

inline IRDTrace ird_inverse(const Model& model, const Dataset& data, const SampleSubset& x0, double sparsity,
                            const IrdConfig& cfg, const Scorer& scorer) {
  return range_decreasing_search(model, data, x0, sparsity, cfg, scorer, SearchDirection::inverse);
}

/// Convenience overloads scoring by masked fine-tuning on `train` and
/// validating on `valid`; samples are drawn from `train`.
inline IRDTrace ird(const Model& model, const Dataset& train, const Dataset& valid, const SampleSubset& x0,
                    double sparsity, const IrdConfig& cfg) {
  return ird(model, train, x0, sparsity, cfg,
             make_finetune_scorer(model, train, valid, cfg.train, cfg.train_on_subset));
}

inline IRDTrace ird_inverse(const Model& model, const Dataset& train, const Dataset& valid,
                            const SampleSubset& x0, double sparsity, const IrdConfig& cfg) {
  return ird_inverse(model, train, x0, sparsity, cfg,
                     make_finetune_scorer(model, train, valid, cfg.train, cfg.train_on_subset));
}

}  // namespace fishgrad
