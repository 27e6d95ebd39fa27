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

#include <algorithm>
#include <cmath>
#include <random>
#include <vector>

#include "fishgrad.hpp"
#include "support.hpp"

namespace fg = fishgrad;
using fg::testing::make_dataset;

namespace {

fg::Model zero_logreg(std::size_t dim, std::size_t classes) {
  auto m = fg::Model::build(fg::logreg_spec(dim, classes));
  for (std::size_t i = 0; i < m.num_params(); ++i) m.params()[i] = 0.0;
  return m;
}

fg::Dataset blobs(std::size_t n, std::size_t dims, std::size_t classes, std::uint64_t seed) {
  fg::SyntheticSpec s;
  s.n = n;
  s.dims = dims;
  s.classes = classes;
  s.noise = 0.5;
  s.seed = seed;
  return fg::generate(s);
}

}  // namespace

TEST(EmpiricalFisher, SingleSampleSquaresGradient) {
  // A 1-feature linear regressor with zero weights and x = 1: the gradient
  // of -(f - y)^2 / 2 is (y - f) * [x, 1] = [y, y].
  auto model = fg::Model::build(fg::linear_regressor_spec(1));
  model.params()[0] = 0.0;
  model.params()[1] = 0.0;
  const auto ds = make_dataset({{2.0}}, {-1.5}, 0);
  const auto f = fg::empirical_fisher(model, ds, fg::all_samples(ds));
  // grad = (y - f) * [x, 1] = [-3, -1.5]
  EXPECT_DOUBLE_EQ(f.values[0], 9.0);
  EXPECT_DOUBLE_EQ(f.values[1], 2.25);
}

TEST(EmpiricalFisher, ZeroWeightLogregQuarterOnActiveFeatures) {
  const auto model = zero_logreg(3, 2);
  const auto ds = make_dataset({{1.0, 1.0, 0.0}}, {0}, 2);
  const auto f = fg::empirical_fisher(model, ds, fg::all_samples(ds));
  // weight segment is 3x2 row-major: feature i, class c at 2i + c
  for (std::size_t c = 0; c < 2; ++c) {
    EXPECT_DOUBLE_EQ(f.values[0 * 2 + c], 0.25);
    EXPECT_DOUBLE_EQ(f.values[1 * 2 + c], 0.25);
    EXPECT_DOUBLE_EQ(f.values[2 * 2 + c], 0.0);
  }
  EXPECT_DOUBLE_EQ(f.values[6], 0.25);
  EXPECT_DOUBLE_EQ(f.values[7], 0.25);
}

TEST(EmpiricalFisher, DuplicatedSampleEqualsSingle) {
  const auto model = fg::Model::build(fg::mlp_spec(3, {4}, 3, 2));
  const auto ds = make_dataset({{0.2, 0.3, -0.1}, {0.2, 0.3, -0.1}}, {2, 2}, 3);
  const auto one = fg::empirical_fisher(model, ds, {{0}, {}});
  const auto two = fg::empirical_fisher(model, ds, {{0, 1}, {}});
  EXPECT_EQ(one.values, two.values);
}

TEST(EmpiricalFisher, MatchesOracleAndDuplicationInvariance) {
  const auto ds = blobs(60, 4, 3, 1);
  std::mt19937_64 gen(4);
  for (std::uint64_t seed = 0; seed < 4; ++seed) {
    const auto model = fg::Model::build(fg::mlp_spec(4, {6}, 3, seed));
    const auto subset = fg::random_samples(ds.size(), 12, seed);
    const auto f = fg::empirical_fisher(model, ds, subset);
    const auto oracle = fg::testing::empirical_fisher_oracle(model, ds, subset.ids);
    for (std::size_t j = 0; j < oracle.size(); ++j) {
      EXPECT_NEAR(f.values[j], oracle[j], 1e-12);
      EXPECT_GE(f.values[j], 0.0);
    }
    // Every sample twice: same mean.
    auto doubled = ds;
    std::vector<std::size_t> ids;
    for (std::size_t id : subset.ids) {
      ids.push_back(id);
      ids.push_back(doubled.size());
      doubled.rows.push_back(ds.rows[id]);
    }
    const auto f2 = fg::empirical_fisher(model, doubled, {ids, {}});
    for (std::size_t j = 0; j < oracle.size(); ++j) EXPECT_NEAR(f2.values[j], f.values[j], 1e-12);
  }
}

TEST(EmpiricalFisher, MetadataAndErrors) {
  const auto model = fg::Model::build(fg::logreg_spec(2, 2, 3));
  const auto ds = make_dataset({{1, 2}, {3, 4}}, {0, 1}, 2);
  const auto f = fg::empirical_fisher(model, ds, {{1, 0}, {}});
  EXPECT_EQ(f.size(), model.num_params());
  EXPECT_EQ(f.model_hash, model.hash());
  EXPECT_EQ(f.sample_ids, (std::vector<std::size_t>{1, 0}));
  EXPECT_EQ(f.source, fg::FisherSource::empirical);
  EXPECT_THROW((void)fg::empirical_fisher(model, ds, {}), fg::Error);
  EXPECT_THROW((void)fg::empirical_fisher(model, ds, {{0, 0}, {}}), fg::Error);
  EXPECT_THROW((void)fg::empirical_fisher(model, ds, {{2}, {}}), fg::Error);
}

TEST(ExpectationFisher, DeterministicModelMatchesEmpirical) {
  auto model = zero_logreg(2, 3);
  model.params()[model.params().segment("bias").offset + 1] = 40.0;  // p(class 1) ~ 1 - 2e-17
  const auto ds = make_dataset({{0.5, -1.0}, {2.0, 0.3}}, {1, 1}, 3);
  const auto e = fg::expectation_fisher(model, ds, fg::all_samples(ds));
  const auto m = fg::empirical_fisher(model, ds, fg::all_samples(ds));
  for (std::size_t j = 0; j < e.size(); ++j) EXPECT_NEAR(e.values[j], m.values[j], 1e-9);
  EXPECT_EQ(e.source, fg::FisherSource::expectation);
}

TEST(ExpectationFisher, UniformModelAveragesBothClasses) {
  const auto model = zero_logreg(2, 2);
  const auto ds = make_dataset({{1.0, -2.0}}, {0}, 2);
  const auto e = fg::expectation_fisher(model, ds, fg::all_samples(ds));
  const auto g0 = fg::class_log_prob_gradient(model, ds.rows[0].features, 0);
  const auto g1 = fg::class_log_prob_gradient(model, ds.rows[0].features, 1);
  for (std::size_t j = 0; j < e.size(); ++j) {
    EXPECT_NEAR(e.values[j], 0.5 * g0[j] * g0[j] + 0.5 * g1[j] * g1[j], 1e-15);
    EXPECT_GE(e.values[j], 0.0);
  }
}

TEST(ExpectationFisher, RegressionRejected) {
  const auto model = fg::Model::build(fg::linear_regressor_spec(1));
  const auto ds = make_dataset({{1.0}}, {0.5}, 0);
  EXPECT_THROW((void)fg::expectation_fisher(model, ds, fg::all_samples(ds)), fg::Error);
}

TEST(SampleScores, SquaredNormAndRestriction) {
  auto model = fg::Model::build(fg::linear_regressor_spec(1));
  model.params()[0] = 0.0;
  model.params()[1] = 0.0;
  // x = 2/3, y = -3: grad = y * [x, 1] = [-2, -3]
  const auto ds = make_dataset({{2.0 / 3.0}}, {-3.0}, 0);
  const auto s = fg::sample_scores(model, ds, fg::all_samples(ds));
  ASSERT_EQ(s.size(), 1u);
  EXPECT_NEAR(s[0].score, 13.0, 1e-12);
  const fg::Mask only0{{0}, 0.5, 2, 0};
  EXPECT_NEAR(fg::sample_scores(model, ds, fg::all_samples(ds), &only0)[0].score, 4.0, 1e-12);
}

TEST(SampleScores, AgreeWithPerSampleGradientOracle) {
  const auto ds = blobs(40, 3, 2, 9);
  const auto model = fg::Model::build(fg::mlp_spec(3, {5}, 2, 9));
  const auto subset = fg::random_samples(ds.size(), 15, 3);
  const auto scores = fg::sample_scores(model, ds, subset);
  for (std::size_t i = 0; i < subset.size(); ++i) {
    const auto id = subset.ids[i];
    const double y[1] = {ds.rows[id].label};
    const auto g = fg::per_sample_gradients(model, fg::Tensor::row(ds.rows[id].features), y)[0];
    double norm = 0.0;
    for (double v : g) norm += v * v;
    EXPECT_EQ(scores[i].sample_id, id);
    EXPECT_NEAR(scores[i].score, norm, 1e-12);
  }
}

TEST(TopK, Examples) {
  const std::vector<double> v{0.5, 0.1, 0.9, 0.3};
  EXPECT_EQ(fg::top_k_mask(v, 0.5).selected, (std::vector<std::size_t>{0, 2}));
  const std::vector<double> zeros(4, 0.0);
  EXPECT_EQ(fg::top_k_mask(zeros, 0.5).selected, (std::vector<std::size_t>{0, 1}));
}

TEST(TopK, MatchesSortOracle) {
  std::mt19937_64 gen(99);
  for (int trial = 0; trial < 50; ++trial) {
    auto v = fg::testing::random_vector(gen, 1000, 0.0, 1.0);
    if (trial % 5 == 0) {
      for (double& x : v) x = std::round(x * 4.0) / 4.0;  // heavy ties
    }
    const auto m = fg::top_k_mask(v, 0.1);
    EXPECT_EQ(m.selected, fg::testing::top_k_oracle(v, 100));
    EXPECT_NO_THROW(m.validate());
  }
}

TEST(TopK, NestedAcrossSparsities) {
  std::mt19937_64 gen(5);
  auto v = fg::testing::random_vector(gen, 500, 0.0, 1.0);
  for (std::size_t i = 0; i < v.size(); i += 3) v[i] = 0.5;
  const std::vector<double> levels{0.0002, 0.001, 0.005, 0.025, 0.1, 0.5, 1.0};
  for (std::size_t a = 0; a + 1 < levels.size(); ++a) {
    const auto small = fg::top_k_mask(v, levels[a]).selected;
    const auto big = fg::top_k_mask(v, levels[a + 1]).selected;
    EXPECT_TRUE(fg::testing::is_subset(small, big)) << levels[a];
  }
}

TEST(TopK, CardinalityFormula) {
  for (double s : {0.0002, 0.001, 0.005, 0.025, 0.1, 1.0}) {
    for (std::size_t n : {10u, 67u, 10000u}) {
      const auto expect = std::max<std::size_t>(1, static_cast<std::size_t>(std::floor(s * n + 0.5)));
      EXPECT_EQ(fg::mask_size(s, n), expect) << s << " " << n;
      EXPECT_EQ(fg::top_k_mask(std::vector<double>(n, 1.0), s).size(), expect);
    }
  }
  EXPECT_EQ(fg::mask_size(0.005, 10000), 50u);
  EXPECT_EQ(fg::mask_size(0.025, 67), 2u);  // 1.675 rounds to 2
  EXPECT_EQ(fg::mask_size(0.0002, 67), 1u);
}

TEST(TopK, SparsityOutOfRange) {
  const std::vector<double> v{1, 2, 3};
  EXPECT_THROW((void)fg::top_k_mask(v, 0.0), fg::Error);
  EXPECT_THROW((void)fg::top_k_mask(v, 1.5), fg::Error);
  EXPECT_THROW((void)fg::top_k_mask(v, -0.1), fg::Error);
}

TEST(RandomMask, FullAndDeterministic) {
  EXPECT_EQ(fg::random_mask(7, 1.0, 3).selected, fg::full_mask(7).selected);
  EXPECT_EQ(fg::random_mask(100, 0.1, 3), fg::random_mask(100, 0.1, 3));
  EXPECT_NE(fg::random_mask(100, 0.1, 3).selected, fg::random_mask(100, 0.1, 4).selected);
  EXPECT_THROW((void)fg::random_mask(10, 0.0, 1), fg::Error);
}

TEST(RandomMask, SelectionFrequencyNearSparsity) {
  const std::size_t n = 50, draws = 10000;
  std::vector<std::size_t> hits(n, 0);
  for (std::size_t d = 0; d < draws; ++d) {
    const auto m = fg::random_mask(n, 0.1, d);
    EXPECT_EQ(m.size(), 5u);
    for (auto i : m.selected) ++hits[i];
  }
  for (auto h : hits) EXPECT_NEAR(static_cast<double>(h) / draws, 0.1, 0.02);
}
