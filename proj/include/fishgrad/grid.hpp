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

// Sparsity x sample-count experiment grids and cell-by-cell comparison.
//
// Axes are stored in descending order: index 0 is the largest sparsity and
// the largest sample count, the starting point of a search. A staircase grid
// evaluates the diagonal plus the cell one sample level further along, which
// is exactly the set of configurations a range-decreasing search visits.

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <cstdlib>
#include <functional>
#include <limits>
#include <map>
#include <mutex>
#include <optional>
#include <string>
#include <string_view>
#include <thread>
#include <utility>
#include <vector>

#include "fishgrad/dataset.hpp"
#include "fishgrad/error.hpp"
#include "fishgrad/fisher.hpp"
#include "fishgrad/ird.hpp"
#include "fishgrad/model.hpp"
#include "fishgrad/random.hpp"
#include "fishgrad/trainer.hpp"

namespace fishgrad {

enum class GridMode { fish_random, ird, ird_inverse };

inline std::string_view to_string(GridMode m) {
  switch (m) {
    case GridMode::fish_random: return "fish_random";
    case GridMode::ird: return "ird";
    case GridMode::ird_inverse: return "ird_inverse";
  }
  return "?";
}

inline GridMode parse_grid_mode(std::string_view s) {
  if (s == "fish_random" || s == "fish") return GridMode::fish_random;
  if (s == "ird") return GridMode::ird;
  if (s == "ird_inverse" || s == "ird-inverse") return GridMode::ird_inverse;
  fail(ErrorKind::usage, "unknown grid mode '" + std::string(s) + "'");
}

enum class ScheduleKind { axes, halving };

inline std::string_view to_string(ScheduleKind s) { return s == ScheduleKind::axes ? "axes" : "halving"; }
inline ScheduleKind parse_schedule(std::string_view s) {
  if (s == "axes") return ScheduleKind::axes;
  if (s == "halving") return ScheduleKind::halving;
  fail(ErrorKind::validation, "unknown schedule '" + std::string(s) + "'");
}

struct GridSpec {
  /// Fractions of |theta|, strictly decreasing.
  std::vector<double> sparsities{0.025, 0.005, 0.001, 0.0002};
  /// Fisher sample counts, strictly decreasing.
  std::vector<std::size_t> sample_counts{128, 32, 16, 1};
  GridMode mode = GridMode::fish_random;
  std::vector<std::uint64_t> seeds{0};
  std::uint64_t master_seed = 0;
  /// Shrink schedule for the search modes; `axes` steps along the grid
  /// levels, `halving` halves each time and maps cells to whatever sizes
  /// that produces.
  ScheduleKind schedule = ScheduleKind::axes;

  void validate() const {
    require(!sparsities.empty() && !sample_counts.empty(), "grid axes must be nonempty");
    require(!seeds.empty(), "grid needs at least one seed");
    for (std::size_t i = 0; i < sparsities.size(); ++i) {
      require(sparsities[i] > 0.0 && sparsities[i] <= 1.0, "grid sparsities must be in (0, 1]");
      require(i == 0 || sparsities[i] < sparsities[i - 1], "grid sparsities must be strictly decreasing");
    }
    for (std::size_t i = 0; i < sample_counts.size(); ++i) {
      require(sample_counts[i] >= 1, "grid sample counts must be >= 1");
      require(i == 0 || sample_counts[i] < sample_counts[i - 1],
              "grid sample counts must be strictly decreasing");
    }
  }
};

inline constexpr std::string_view kStatusFailed = "failed";

struct GridCell {
  double sparsity = 0.0;
  std::size_t n_samples = 0;
  std::uint64_t seed = 0;
  double score = std::numeric_limits<double>::quiet_NaN();
  std::string status{kStatusOk};
};

struct GridResult {
  GridSpec spec;
  /// Axes the cells live on. Equal to the spec's axes except for halving
  /// searches, where they are the sizes the search actually visited.
  std::vector<double> sparsity_axis;
  std::vector<std::size_t> sample_axis;
  std::vector<GridCell> cells;
  std::vector<IRDTrace> traces;
};

/// (sparsity index, sample index) pairs of the staircase on descending axes.
inline std::vector<std::pair<std::size_t, std::size_t>> staircase_cells(std::size_t n_sparsity,
                                                                        std::size_t n_samples) {
  std::vector<std::pair<std::size_t, std::size_t>> out;
  for (std::size_t i = 0; i < n_sparsity; ++i) {
    for (std::size_t j = i; j <= i + 1 && j < n_samples; ++j) out.emplace_back(i, j);
  }
  return out;
}

/// Seeds for the independent streams of one grid seed.
struct SeedStreams {
  std::uint64_t model;
  std::uint64_t training;

  [[nodiscard]] std::uint64_t samples(std::size_t n, std::uint64_t master, std::uint64_t seed) const {
    return derive_seed({master, seed, 0x5a, n});
  }
};

inline SeedStreams seed_streams(std::uint64_t master, std::uint64_t seed, std::uint64_t model_seed) {
  return {derive_seed({master, seed, 0x11, model_seed}), derive_seed({master, seed, 0x22})};
}

/// Worker count: FISHGRAD_THREADS when set, else the hardware concurrency.
inline std::size_t default_thread_count() {
  if (const char* env = std::getenv("FISHGRAD_THREADS")) {
    const long v = std::strtol(env, nullptr, 10);
    if (v >= 1) return static_cast<std::size_t>(v);
  }
  return std::max(1u, std::thread::hardware_concurrency());
}

/// Runs independent jobs on up to `threads` workers. Results are written by
/// index, so the output does not depend on scheduling.
inline void run_parallel(std::size_t jobs, std::size_t threads, const std::function<void(std::size_t)>& job) {
  threads = std::max<std::size_t>(1, std::min(threads, jobs));
  if (threads == 1) {
    for (std::size_t i = 0; i < jobs; ++i) job(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr error;
  std::mutex error_mutex;
  std::vector<std::thread> pool;
  for (std::size_t t = 0; t < threads; ++t) {
    pool.emplace_back([&] {
      for (std::size_t i = next++; i < jobs; i = next++) {
        try {
          job(i);
        } catch (...) {
          std::lock_guard lock(error_mutex);
          if (!error) error = std::current_exception();
        }
      }
    });
  }
  for (auto& th : pool) th.join();
  if (error) std::rethrow_exception(error);
}

namespace detail {

inline GridCell fish_cell(const Model& model, const Dataset& train, const Dataset& valid, const IrdConfig& cfg,
                          double sparsity, std::size_t n, std::uint64_t seed, std::uint64_t sample_seed) {
  GridCell cell{sparsity, n, seed};
  try {
    const SampleSubset subset = random_samples(train.size(), n, sample_seed);
    const Mask mask = top_k_mask(estimate_fisher(cfg.fisher_source, model, train, subset), sparsity);
    auto scorer = make_finetune_scorer(model, train, valid, cfg.train, cfg.train_on_subset);
    auto s = safe_score(scorer, mask, subset);
    cell.score = s.score;
    cell.status = s.status;
  } catch (const Error& e) {
    if (e.kind() != ErrorKind::runtime) throw;
    cell.status = std::string(kStatusFailed);
  }
  return cell;
}

inline std::size_t axis_index(const std::vector<double>& axis, double v) {
  for (std::size_t i = 0; i < axis.size(); ++i) {
    if (std::abs(axis[i] - v) <= 1e-12 * std::max(1.0, std::abs(v))) return i;
  }
  return axis.size();
}

}  // namespace detail

/// Evaluates a grid. Samples are drawn from `train`; every score fine-tunes
/// a fresh model built from `model_spec` (with a per-seed init seed) and
/// validates on `valid`.
inline GridResult run_grid(const GridSpec& spec, const Dataset& train, const Dataset& valid,
                           const ModelSpec& model_spec, const IrdConfig& cfg, std::size_t threads = 0) {
  spec.validate();
  require(spec.sample_counts.front() <= train.size(), "grid sample count exceeds training split size");
  if (threads == 0) threads = default_thread_count();

  GridResult result;
  result.spec = spec;
  result.sparsity_axis = spec.sparsities;
  result.sample_axis = spec.sample_counts;

  auto make_model = [&](std::uint64_t seed) {
    ModelSpec ms = model_spec;
    ms.seed = seed_streams(spec.master_seed, seed, model_spec.seed).model;
    return Model::build(ms);
  };
  auto cfg_for = [&](std::uint64_t seed) {
    IrdConfig c = cfg;
    c.train.seed = seed_streams(spec.master_seed, seed, model_spec.seed).training;
    return c;
  };

  if (spec.mode == GridMode::fish_random) {
    const auto stairs = staircase_cells(spec.sparsities.size(), spec.sample_counts.size());
    const std::size_t per_seed = stairs.size();
    result.cells.resize(per_seed * spec.seeds.size());
    std::vector<Model> models;
    for (auto seed : spec.seeds) models.push_back(make_model(seed));
    run_parallel(result.cells.size(), threads, [&](std::size_t job) {
      const std::size_t si = job / per_seed;
      const auto [i, j] = stairs[job % per_seed];
      const std::uint64_t seed = spec.seeds[si];
      const auto streams = seed_streams(spec.master_seed, seed, model_spec.seed);
      const std::size_t n = spec.sample_counts[j];
      result.cells[job] = detail::fish_cell(models[si], train, valid, cfg_for(seed), spec.sparsities[i], n, seed,
                                            streams.samples(n, spec.master_seed, seed));
    });
    return result;
  }

  const SearchDirection dir = spec.mode == GridMode::ird ? SearchDirection::forward : SearchDirection::inverse;
  result.traces.resize(spec.seeds.size());
  run_parallel(spec.seeds.size(), threads, [&](std::size_t si) {
    const std::uint64_t seed = spec.seeds[si];
    const Model model = make_model(seed);
    IrdConfig c = cfg_for(seed);
    if (spec.schedule == ScheduleKind::axes) {
      c.schedule.sample_counts = spec.sample_counts;
      c.schedule.sparsities = spec.sparsities;
    } else {
      c.schedule = {};
    }
    const std::size_t n0 = spec.sample_counts.front();
    const auto streams = seed_streams(spec.master_seed, seed, model_spec.seed);
    const SampleSubset x0 = random_samples(train.size(), n0, streams.samples(n0, spec.master_seed, seed));
    auto scorer = make_finetune_scorer(model, train, valid, c.train, c.train_on_subset);
    result.traces[si] = range_decreasing_search(model, train, x0, spec.sparsities.front(), c, scorer, dir);
  });

  // Trace records become cells at (mask sparsity, |X|).
  for (std::size_t si = 0; si < spec.seeds.size(); ++si) {
    const auto& tr = result.traces[si];
    const std::uint64_t seed = spec.seeds[si];
    if (tr.initial_status != "skipped") {
      result.cells.push_back({tr.initial_sparsity, tr.initial_subset.size(), seed, tr.initial_score, tr.initial_status});
    }
    for (const auto& rec : tr.records) {
      result.cells.push_back({rec.mask.sparsity, rec.subset.size(), seed, rec.score, rec.status});
    }
  }
  if (spec.schedule == ScheduleKind::halving) {
    std::vector<double> sp;
    std::vector<std::size_t> ns;
    for (const auto& c : result.cells) {
      if (detail::axis_index(sp, c.sparsity) == sp.size()) sp.push_back(c.sparsity);
      if (std::find(ns.begin(), ns.end(), c.n_samples) == ns.end()) ns.push_back(c.n_samples);
    }
    std::sort(sp.rbegin(), sp.rend());
    std::sort(ns.rbegin(), ns.rend());
    result.sparsity_axis = sp;
    result.sample_axis = ns;
  }
  return result;
}

// -- aggregation and comparison -----------------------------------------------

/// Mean finite score per explored (sparsity index, sample index); NaN when a
/// cell was explored but every run failed.
inline std::map<std::pair<std::size_t, std::size_t>, double> cell_means(const GridResult& grid) {
  std::map<std::pair<std::size_t, std::size_t>, std::pair<double, std::size_t>> acc;
  for (const auto& c : grid.cells) {
    const std::size_t i = detail::axis_index(grid.sparsity_axis, c.sparsity);
    const auto jt = std::find(grid.sample_axis.begin(), grid.sample_axis.end(), c.n_samples);
    require(i < grid.sparsity_axis.size() && jt != grid.sample_axis.end(), "grid cell lies off the grid axes");
    auto& slot = acc[{i, static_cast<std::size_t>(jt - grid.sample_axis.begin())}];
    if (std::isfinite(c.score)) {
      slot.first += c.score;
      slot.second += 1;
    }
  }
  std::map<std::pair<std::size_t, std::size_t>, double> out;
  for (const auto& [key, v] : acc) {
    out[key] = v.second ? v.first / static_cast<double>(v.second) : std::numeric_limits<double>::quiet_NaN();
  }
  return out;
}

/// Best mean cell score of a grid (NaN cells ignored).
inline double best_cell_score(const GridResult& grid) {
  double best = -std::numeric_limits<double>::infinity();
  for (const auto& [key, v] : cell_means(grid)) {
    if (std::isfinite(v)) best = std::max(best, v);
  }
  return best;
}

enum class Verdict { up, down, tie };

inline std::string_view to_string(Verdict v) {
  switch (v) {
    case Verdict::up: return "up";
    case Verdict::down: return "down";
    case Verdict::tie: return "tie";
  }
  return "?";
}

inline Verdict parse_verdict(std::string_view s) {
  if (s == "up") return Verdict::up;
  if (s == "down") return Verdict::down;
  if (s == "tie") return Verdict::tie;
  fail(ErrorKind::validation, "unknown verdict '" + std::string(s) + "'");
}

struct CellVerdict {
  double sparsity = 0.0;
  std::size_t n_samples = 0;
  double baseline = 0.0;
  double candidate = 0.0;
  Verdict verdict = Verdict::tie;
};

struct CellComparison {
  std::vector<double> sparsity_axis;
  std::vector<std::size_t> sample_axis;
  std::vector<CellVerdict> cells;
  std::size_t ups = 0;
  std::size_t downs = 0;
  std::size_t ties = 0;
};

/// Scores are compared after rounding to four decimals.
inline long long round4(double v) { return std::llround(v * 1e4); }

/// Compares `candidate` against `baseline` on every cell both grids explored
/// with a finite score.
inline CellComparison compare_grids(const GridResult& baseline, const GridResult& candidate) {
  auto same_axis = [](const std::vector<double>& a, const std::vector<double>& b) {
    if (a.size() != b.size()) return false;
    for (std::size_t i = 0; i < a.size(); ++i) {
      if (std::abs(a[i] - b[i]) > 1e-12 * std::max(1.0, std::abs(a[i]))) return false;
    }
    return true;
  };
  require(same_axis(baseline.sparsity_axis, candidate.sparsity_axis) &&
              baseline.sample_axis == candidate.sample_axis,
          "compare_grids: grids have different axes");
  CellComparison out;
  out.sparsity_axis = baseline.sparsity_axis;
  out.sample_axis = baseline.sample_axis;
  const auto a = cell_means(baseline);
  const auto b = cell_means(candidate);
  for (const auto& [key, av] : a) {
    const auto it = b.find(key);
    if (it == b.end() || !std::isfinite(av) || !std::isfinite(it->second)) continue;
    CellVerdict cv{out.sparsity_axis[key.first], out.sample_axis[key.second], av, it->second, Verdict::tie};
    const long long ra = round4(av), rb = round4(it->second);
    if (rb > ra) {
      cv.verdict = Verdict::up;
      ++out.ups;
    } else if (rb < ra) {
      cv.verdict = Verdict::down;
      ++out.downs;
    } else {
      ++out.ties;
    }
    out.cells.push_back(cv);
  }
  return out;
}

}  // namespace fishgrad
