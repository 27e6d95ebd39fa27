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

// Independent oracles and small builders shared by the test suites. Nothing
// here calls the library routine it is meant to check.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <filesystem>
#include <numeric>
#include <random>
#include <string>
#include <vector>

#include "fishgrad.hpp"

namespace fishgrad::testing {

inline std::vector<double> random_vector(std::mt19937_64& gen, std::size_t n, double lo = -1.0, double hi = 1.0) {
  std::uniform_real_distribution<double> d(lo, hi);
  std::vector<double> v(n);
  for (double& x : v) x = d(gen);
  return v;
}

inline Dataset make_dataset(const std::vector<std::vector<double>>& features, const std::vector<double>& labels,
                            std::size_t classes) {
  Dataset ds;
  ds.task = classes == 0 ? TaskKind::regression : (classes == 2 ? TaskKind::binary : TaskKind::multiclass);
  ds.num_classes = classes;
  ds.feature_dim = features.empty() ? 0 : features[0].size();
  for (std::size_t i = 0; i < features.size(); ++i) ds.rows.push_back({features[i], "", "", labels[i]});
  return ds;
}

/// Straight-line dense network: layer l reads an (in x out) row-major weight
/// followed by an out-wide bias from the flat vector.
inline std::vector<double> dense_forward_oracle(const std::vector<std::size_t>& widths,
                                                const std::vector<double>& flat, const std::vector<double>& x,
                                                bool use_tanh = false) {
  std::vector<double> h = x;
  std::size_t off = 0;
  for (std::size_t l = 0; l + 1 < widths.size(); ++l) {
    const std::size_t in = widths[l], out = widths[l + 1];
    std::vector<double> next(out, 0.0);
    for (std::size_t o = 0; o < out; ++o) {
      double acc = 0.0;
      for (std::size_t i = 0; i < in; ++i) acc += h[i] * flat[off + i * out + o];
      next[o] = acc + flat[off + in * out + o];
    }
    off += in * out + out;
    if (l + 2 < widths.size()) {
      for (double& v : next) v = use_tanh ? std::tanh(v) : std::max(0.0, v);
    }
    h = std::move(next);
  }
  return h;
}

inline std::vector<double> log_softmax_oracle(const std::vector<double>& z) {
  const double m = *std::max_element(z.begin(), z.end());
  double s = 0.0;
  for (double v : z) s += std::exp(v - m);
  std::vector<double> out(z.size());
  for (std::size_t i = 0; i < z.size(); ++i) out[i] = z[i] - m - std::log(s);
  return out;
}

/// Mean of squared per-sample gradients, accumulated in sample order.
inline std::vector<double> empirical_fisher_oracle(const Model& model, const Dataset& data,
                                                   const std::vector<std::size_t>& ids) {
  std::vector<double> acc(model.num_params(), 0.0);
  for (std::size_t id : ids) {
    const Tensor x = Tensor::row(data.rows[id].features);
    const double y[1] = {data.rows[id].label};
    const auto g = per_sample_gradients(model, x, y).at(0);
    for (std::size_t j = 0; j < g.size(); ++j) acc[j] += g[j] * g[j];
  }
  for (double& v : acc) v /= static_cast<double>(ids.size());
  return acc;
}

/// Top-k by a full stable sort on (value desc, index asc).
inline std::vector<std::size_t> top_k_oracle(const std::vector<double>& values, std::size_t k) {
  std::vector<std::size_t> idx(values.size());
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  std::stable_sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) { return values[a] > values[b]; });
  idx.resize(k);
  std::sort(idx.begin(), idx.end());
  return idx;
}

inline bool is_subset(const std::vector<std::size_t>& a, const std::vector<std::size_t>& b) {
  std::vector<std::size_t> x = a, y = b;
  std::sort(x.begin(), x.end());
  std::sort(y.begin(), y.end());
  return std::includes(y.begin(), y.end(), x.begin(), x.end());
}

inline bool is_strict_subset(const std::vector<std::size_t>& a, const std::vector<std::size_t>& b) {
  return a.size() < b.size() && is_subset(a, b);
}

/// Fresh scratch directory under the build tree's temp area.
inline std::filesystem::path scratch_dir(const std::string& name) {
  const auto p = std::filesystem::temp_directory_path() / ("fishgrad_test_" + name);
  std::filesystem::remove_all(p);
  std::filesystem::create_directories(p);
  return p;
}

}  // namespace fishgrad::testing
