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

// Compares a Fisher mask with a random mask on a synthetic task, then runs
// the forward search from the same start.

#include <cstdio>

#include "fishgrad.hpp"

int main() {
  namespace fg = fishgrad;
  fg::SyntheticSpec s;
  s.n = 600;
  s.dims = 8;
  s.classes = 3;
  s.noise = 0.5;
  s.seed = 1;
  const auto tv = fg::train_valid_split(fg::generate(s), 0.8, 1);
  const auto model = fg::Model::build(fg::mlp_spec(8, {32}, 3, 1));

  fg::TrainConfig cfg;
  cfg.learning_rate = 1e-2;
  cfg.max_epochs = 5;

  const auto x0 = fg::random_samples(tv.train.size(), 128, 7);
  const auto fisher = fg::empirical_fisher(model, tv.train, x0);
  for (double sparsity : {0.25, 0.05}) {
    fg::Model a = model, b = model;
    const double fa = fg::train_masked(a, fg::top_k_mask(fisher, sparsity), tv.train, tv.valid, cfg).best_metric;
    const double rb = fg::train_masked(b, fg::random_mask(model.num_params(), sparsity, 7), tv.train, tv.valid, cfg)
                          .best_metric;
    std::printf("sparsity %-6g fisher %.4f  random %.4f\n", sparsity, fa, rb);
  }

  fg::IrdConfig icfg;
  icfg.train = cfg;
  const auto trace = fg::ird(model, tv.train, tv.valid, x0, 0.25, icfg);
  std::printf("start  |X| %3zu  |theta| %4zu  %.4f\n", trace.initial_subset.size(), trace.initial_mask.size(),
              trace.initial_score);
  for (const auto& r : trace.records) {
    std::printf("%-22s |X| %3zu  |theta| %4zu  %.4f\n", std::string(fg::to_string(r.phase)).c_str(), r.subset.size(),
                r.mask.size(), r.score);
  }
  return 0;
}
