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

#include <gtest/gtest.h>

#include <cmath>
#include <vector>

#include "fishgrad.hpp"
#include "support.hpp"

namespace fg = fishgrad;

namespace {

fg::TrainValid blob_task(std::size_t n, std::uint64_t seed, double noise = 0.3) {
  fg::SyntheticSpec s;
  s.n = n;
  s.dims = 4;
  s.classes = 3;
  s.noise = noise;
  s.seed = seed;
  return fg::train_valid_split(fg::generate(s), 0.8, seed);
}

fg::TrainConfig fast_cfg(std::size_t epochs = 3) {
  fg::TrainConfig c;
  c.learning_rate = 1e-2;
  c.max_epochs = epochs;
  c.batch_size = 16;
  c.seed = 5;
  return c;
}

}  // namespace

TEST(EarlyStop, ImprovingNeverStops) {
  std::vector<double> h;
  for (int i = 0; i < 30; ++i) {
    h.push_back(0.4 + 0.01 * i);
    EXPECT_FALSE(fg::early_stop_check(h, 10, 0.3));
  }
}

TEST(EarlyStop, FlatAboveThresholdStopsAtEleven) {
  std::vector<double> h;
  std::size_t stopped_at = 0;
  for (std::size_t epoch = 1; epoch <= 20 && !stopped_at; ++epoch) {
    h.push_back(0.5);
    if (fg::early_stop_check(h, 10, 0.3)) stopped_at = epoch;
  }
  EXPECT_EQ(stopped_at, 11u);
}

TEST(EarlyStop, FlatBelowThresholdNeverStops) {
  std::vector<double> h(100, 0.2);
  for (std::size_t n = 1; n <= h.size(); ++n) {
    EXPECT_FALSE(fg::early_stop_check(std::span(h).first(n), 10, 0.3));
  }
}

TEST(EarlyStop, OnlyStrictImprovementResetsPatience) {
  std::vector<double> h{0.5, 0.6, 0.6, 0.6};
  EXPECT_FALSE(fg::early_stop_check(h, 3, 0.3));
  h.push_back(0.6);
  EXPECT_TRUE(fg::early_stop_check(h, 3, 0.3));
  EXPECT_THROW((void)fg::early_stop_check(std::vector<double>{}, 3, 0.3), fg::Error);
}

TEST(Adam, ZeroGradientLeavesParams) {
  std::vector<double> p{1.0, -2.0}, g{0.0, 0.0};
  const std::vector<std::size_t> idx{0, 1};
  fg::AdamState st;
  fg::adam_step(p, g, idx, st, 1e-3, 1);
  EXPECT_EQ(p, (std::vector<double>{1.0, -2.0}));
}

TEST(Adam, FirstStepHandEvaluation) {
  // m = 0.1, v = 0.001, m_hat = 1, v_hat = 1: step = lr / (1 + eps)
  std::vector<double> p{0.0}, g{1.0};
  const std::vector<std::size_t> idx{0};
  fg::AdamState st;
  fg::adam_step(p, g, idx, st, 1e-3, 1);
  EXPECT_NEAR(p[0], -1e-3 / (1.0 + 1e-8), 1e-18);
  EXPECT_NEAR(st.m[0], 0.1, 1e-16);
  EXPECT_NEAR(st.v[0], 0.001, 1e-18);
}

TEST(Adam, SecondStepHandEvaluation) {
  std::vector<double> p{0.0}, g{1.0};
  const std::vector<std::size_t> idx{0};
  fg::AdamState st;
  fg::adam_step(p, g, idx, st, 0.1, 1);
  g[0] = -0.5;
  fg::adam_step(p, g, idx, st, 0.1, 2);
  const double m = 0.9 * 0.1 + 0.1 * -0.5, v = 0.999 * 0.001 + 0.001 * 0.25;
  const double mh = m / (1 - 0.81), vh = v / (1 - 0.999 * 0.999);
  EXPECT_NEAR(p[0], -0.1 / (1 + 1e-8) - 0.1 * mh / (std::sqrt(vh) + 1e-8), 1e-15);
}

TEST(Adam, SymmetricParamsMoveIdentically) {
  std::vector<double> p{0.3, 0.3, 5.0}, g{0.7, 0.7, 1.0};
  const std::vector<std::size_t> idx{0, 1};
  fg::AdamState st;
  for (std::size_t t = 1; t <= 5; ++t) fg::adam_step(p, g, idx, st, 1e-2, t);
  EXPECT_EQ(p[0], p[1]);
  EXPECT_EQ(p[2], 5.0);
  EXPECT_EQ(st.m.size(), 2u);
}

TEST(Adam, InvalidStepCountAndState) {
  std::vector<double> p{0.0}, g{1.0};
  const std::vector<std::size_t> idx{0};
  fg::AdamState st;
  EXPECT_THROW(fg::adam_step(p, g, idx, st, 1e-3, 0), fg::Error);
  fg::AdamState wrong{{0.0, 0.0}, {0.0, 0.0}};
  EXPECT_THROW(fg::adam_step(p, g, idx, wrong, 1e-3, 1), fg::Error);
}

TEST(Sgd, SingleQuadraticStep) {
  // loss = theta^2, theta0 = 1, lr = 0.1 -> 1 - 0.1 * 2 = 0.8
  std::vector<double> p{1.0, 7.0};
  const std::vector<double> g{2.0 * p[0], 3.0};
  const std::vector<std::size_t> idx{0};
  fg::sgd_step(p, g, idx, 0.1);
  EXPECT_DOUBLE_EQ(p[0], 0.8);
  EXPECT_EQ(p[1], 7.0);
}

TEST(TrainMasked, SingleIndexQuadraticThroughTrainer) {
  // A 1x1 linear regressor with zero bias learning y = 0 from x = 1 has
  // mse gradient 2 * theta on the weight; one SGD step at lr 0.1 gives 0.8.
  auto model = fg::Model::build(fg::linear_regressor_spec(1));
  model.params()[0] = 1.0;
  model.params()[1] = 0.0;
  const auto ds = fg::testing::make_dataset({{1.0}}, {0.0}, 0);
  auto cfg = fast_cfg(1);
  cfg.optimizer = fg::OptimizerKind::sgd;
  cfg.learning_rate = 0.1;
  cfg.batch_size = 1;
  const fg::Mask m{{0}, 0.5, 2, 0};
  (void)fg::train_masked(model, m, ds, ds, cfg);
  EXPECT_DOUBLE_EQ(model.params()[0], 0.8);
  EXPECT_EQ(model.params()[1], 0.0);
}

TEST(TrainMasked, UnmaskedCoordinatesBitIdentical) {
  const auto task = blob_task(200, 1);
  for (auto opt : {fg::OptimizerKind::adam, fg::OptimizerKind::sgd}) {
    auto model = fg::Model::build(fg::mlp_spec(4, {8}, 3, 2));
    const auto before = model.params().values();
    const auto mask = fg::random_mask(model.num_params(), 0.5, 7, model.hash());
    auto cfg = fast_cfg(3);
    cfg.optimizer = opt;
    const auto report = fg::train_masked(model, mask, task.train, task.valid, cfg);
    EXPECT_EQ(report.epochs_run, 3u);
    std::size_t moved = 0;
    for (std::size_t i = 0; i < before.size(); ++i) {
      if (mask.contains(i)) {
        moved += model.params()[i] != before[i];
      } else {
        EXPECT_EQ(model.params()[i], before[i]) << i;
      }
    }
    EXPECT_GT(moved, 0u);
  }
}

TEST(TrainMasked, FullMaskEqualsDense) {
  const auto task = blob_task(150, 3);
  for (auto opt : {fg::OptimizerKind::adam, fg::OptimizerKind::sgd}) {
    auto a = fg::Model::build(fg::mlp_spec(4, {6}, 3, 4));
    auto b = a;
    auto cfg = fast_cfg(4);
    cfg.optimizer = opt;
    const auto ra = fg::train_masked(a, fg::full_mask(a.num_params(), a.hash()), task.train, task.valid, cfg);
    const auto rb = fg::train_dense(b, task.train, task.valid, cfg);
    EXPECT_EQ(a.params(), b.params());
    EXPECT_EQ(ra.train_loss, rb.train_loss);
    EXPECT_EQ(ra.valid_metric, rb.valid_metric);
    EXPECT_EQ(ra.final_params_hash, rb.final_params_hash);
  }
}

TEST(TrainMasked, SeedDeterminism) {
  const auto task = blob_task(150, 8);
  auto run = [&] {
    auto m = fg::Model::build(fg::mlp_spec(4, {6}, 3, 1));
    return fg::train_masked(m, fg::random_mask(m.num_params(), 0.3, 2), task.train, task.valid, fast_cfg(4));
  };
  const auto a = run();
  const auto b = run();
  EXPECT_EQ(a.train_loss, b.train_loss);
  EXPECT_EQ(a.valid_metric, b.valid_metric);
  EXPECT_EQ(a.final_params_hash, b.final_params_hash);
}

TEST(TrainMasked, HalfMaskHalvesTrainingLoss) {
  fg::SyntheticSpec s;
  s.n = 400;
  s.dims = 4;
  s.classes = 2;
  s.noise = 0.2;
  s.seed = 12;
  const auto task = fg::train_valid_split(fg::generate(s), 0.8, 1);
  auto model = fg::Model::build(fg::mlp_spec(4, {8}, 2, 3));
  auto cfg = fast_cfg(20);
  cfg.learning_rate = 0.05;
  cfg.patience = 20;
  const auto report = fg::train_masked(model, fg::random_mask(model.num_params(), 0.5, 1), task.train, task.valid, cfg);
  ASSERT_FALSE(report.train_loss.empty());
  EXPECT_LE(report.train_loss.back(), 0.5 * report.train_loss.front());
}

TEST(TrainMasked, MismatchedMaskRejected) {
  const auto task = blob_task(60, 2);
  auto model = fg::Model::build(fg::mlp_spec(4, {6}, 3, 1));
  EXPECT_THROW((void)fg::train_masked(model, fg::full_mask(5), task.train, task.valid, fast_cfg()), fg::Error);
  auto stale = fg::full_mask(model.num_params(), model.hash() ^ 1);
  EXPECT_THROW((void)fg::train_masked(model, stale, task.train, task.valid, fast_cfg()), fg::Error);
}

TEST(TrainMasked, NonFiniteLossAborts) {
  const auto ds = fg::testing::make_dataset({{1.0}, {2.0}}, {1e300, -1e300}, 0);
  auto model = fg::Model::build(fg::linear_regressor_spec(1));
  auto cfg = fast_cfg(2);
  cfg.optimizer = fg::OptimizerKind::sgd;
  try {
    (void)fg::train_masked(model, fg::full_mask(2), ds, ds, cfg);
    FAIL() << "expected a runtime error";
  } catch (const fg::Error& e) {
    EXPECT_EQ(e.kind(), fg::ErrorKind::runtime);
    EXPECT_NE(std::string(e.what()).find("non-finite"), std::string::npos);
  }
}

TEST(TrainMasked, EarlyStoppingInsideTrainer) {
  // lr so small the metric never changes: flat above threshold stops at
  // patience + 1 epochs.
  const auto task = blob_task(90, 4, 0.05);
  auto model = fg::Model::build(fg::mlp_spec(4, {6}, 3, 6));
  auto cfg = fast_cfg(30);
  cfg.learning_rate = 1e-12;
  cfg.patience = 4;
  cfg.stop_threshold = -1.0;
  const auto r = fg::train_masked(model, fg::full_mask(model.num_params()), task.train, task.valid, cfg);
  EXPECT_TRUE(r.stopped_early);
  EXPECT_EQ(r.epochs_run, 5u);
  EXPECT_LE(r.epochs_run, cfg.max_epochs);
}

TEST(TrainConfig, Validation) {
  fg::TrainConfig c;
  EXPECT_EQ(c.learning_rate, 5e-5);
  EXPECT_EQ(c.batch_size, 32u);
  EXPECT_EQ(c.patience, 10u);
  EXPECT_EQ(c.stop_threshold, 0.3);
  EXPECT_EQ(c.optimizer, fg::OptimizerKind::adam);
  c.learning_rate = 0.0;
  EXPECT_THROW(c.validate(), fg::Error);
  c = {};
  c.batch_size = 0;
  EXPECT_THROW(c.validate(), fg::Error);
  c = {};
  c.patience = 0;
  EXPECT_THROW(c.validate(), fg::Error);
}
