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
#include <functional>
#include <span>
#include <vector>

#include "fishgrad/model.hpp"

namespace fishgrad {

/// Central differences of a scalar function of the parameter vector.
inline std::vector<double> central_differences(
    const std::function<double(const ParamVector&)>& f, ParamVector params, double h = 1e-4) {
  std::vector<double> grad(params.size());
  for (std::size_t i = 0; i < params.size(); ++i) {
    const double saved = params[i];
    params[i] = saved + h;
    const double up = f(params);
    params[i] = saved - h;
    const double down = f(params);
    params[i] = saved;
    grad[i] = (up - down) / (2.0 * h);
  }
  return grad;
}

struct GradCheckResult {
  double max_error = 0.0;     // max |a - fd| / max(1, |fd|)
  std::size_t worst_index = 0;
  std::size_t checked = 0;
};

inline GradCheckResult compare_gradients(std::span<const double> analytic,
                                         std::span<const double> numeric) {
  require(analytic.size() == numeric.size(), "gradient length mismatch");
  GradCheckResult r;
  r.checked = analytic.size();
  for (std::size_t i = 0; i < analytic.size(); ++i) {
    const double err = std::abs(analytic[i] - numeric[i]) / std::max(1.0, std::abs(numeric[i]));
    if (err > r.max_error) {
      r.max_error = err;
      r.worst_index = i;
    }
  }
  return r;
}

/// Checks the gradient of the batch-mean log-likelihood of `model` against
/// central differences on every parameter.
inline GradCheckResult check_log_prob_gradient(const Model& model, const Tensor& batch,
                                               std::span<const double> labels, double h = 1e-4) {
  const auto analytic = mean_log_prob_gradient(model, batch, labels);
  Model probe = model;
  auto f = [&](const ParamVector& p) {
    probe.params() = p;
    Tape tape;
    return tape.value(record_mean_log_prob(tape, probe, batch, labels)).item();
  };
  const auto numeric = central_differences(f, model.params(), h);
  return compare_gradients(analytic, numeric);
}

}  // namespace fishgrad
