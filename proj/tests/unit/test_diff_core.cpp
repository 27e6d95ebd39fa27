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
#include <random>
#include <vector>

#include "fishgrad.hpp"
#include "support.hpp"

namespace fg = fishgrad;
using fg::Tape;
using fg::Tensor;
using fg::Var;

TEST(Tensor, ShapeMustMatchData) {
  EXPECT_THROW(Tensor({2, 3}, std::vector<double>(5)), fg::ShapeError);
  const Tensor t({2, 3}, std::vector<double>(6, 1.0));
  EXPECT_EQ(t.size(), 6u);
  EXPECT_EQ(t.rows(), 2u);
  EXPECT_EQ(t.cols(), 3u);
}

TEST(Tape, ZeroWeightsGiveUniformLogSoftmax) {
  fg::ParamVector p;
  const auto w = p.add_segment("w", 2, 2);
  Tape tape;
  Var x = tape.constant(Tensor::matrix(1, 2, {1, 1}));
  Var out = tape.log_softmax(tape.matmul(x, tape.parameter(p, p.segments()[w])));
  EXPECT_DOUBLE_EQ(tape.value(out)(0, 0), std::log(0.5));
  EXPECT_DOUBLE_EQ(tape.value(out)(0, 1), std::log(0.5));
}

TEST(Tape, IdentityLinearLayer) {
  fg::ParamVector p;
  p.add_segment("w", 2, 2);
  p.add_segment("b", 1, 2);
  p[0] = 1.0;
  p[3] = 1.0;
  Tape tape;
  Var x = tape.constant(Tensor::matrix(1, 2, {3, -1}));
  Var y = tape.bias_add(tape.matmul(x, tape.parameter(p, p.segment("w"))), tape.parameter(p, p.segment("b")));
  EXPECT_EQ(tape.value(y).values(), (std::vector<double>{3, -1}));
}

TEST(Tape, MlpForwardMatchesStraightLineOracle) {
  const auto model = fg::Model::build(fg::mlp_spec(2, {3}, 2, 0));
  const std::vector<double> x{1, 0};
  const auto expect = fg::testing::dense_forward_oracle({2, 3, 2}, model.params().values(), x);
  const auto got = model.outputs(x);
  ASSERT_EQ(got.size(), expect.size());
  for (std::size_t i = 0; i < got.size(); ++i) EXPECT_NEAR(got[i], expect[i], 1e-15);
}

TEST(Tape, TanhMlpForwardMatchesOracle) {
  auto spec = fg::mlp_spec(3, {4, 2}, 3, 5);
  spec.activation = fg::Activation::tanh;
  const auto model = fg::Model::build(spec);
  const std::vector<double> x{0.3, -0.7, 1.1};
  const auto expect = fg::testing::dense_forward_oracle({3, 4, 2, 3}, model.params().values(), x, true);
  const auto got = model.outputs(x);
  for (std::size_t i = 0; i < got.size(); ++i) EXPECT_NEAR(got[i], expect[i], 1e-14);
}

TEST(Tape, ShapeErrorNamesOpAndDims) {
  Tape tape;
  Var a = tape.constant(Tensor::zeros(2, 3));
  Var b = tape.constant(Tensor::zeros(2, 3));
  try {
    (void)tape.matmul(a, b);
    FAIL() << "expected ShapeError";
  } catch (const fg::ShapeError& e) {
    EXPECT_EQ(e.op(), "matmul");
    EXPECT_EQ(e.lhs(), (std::vector<std::size_t>{2, 3}));
    EXPECT_EQ(e.rhs(), (std::vector<std::size_t>{2, 3}));
    EXPECT_NE(std::string(e.what()).find("matmul"), std::string::npos);
    EXPECT_EQ(e.kind(), fg::ErrorKind::validation);
  }
}

TEST(Tape, BiasAddRejectsWrongWidth) {
  Tape tape;
  Var a = tape.constant(Tensor::zeros(2, 3));
  Var b = tape.constant(Tensor::zeros(1, 2));
  EXPECT_THROW((void)tape.bias_add(a, b), fg::ShapeError);
}

TEST(Tape, InputsPrecedeConsumers) {
  const auto model = fg::Model::build(fg::mlp_spec(3, {4}, 2, 1));
  Tape tape;
  (void)model.forward(tape, Tensor::matrix(1, 3, {1, 2, 3}));
  const auto& nodes = tape.nodes();
  for (std::size_t i = 0; i < nodes.size(); ++i) {
    for (auto in : nodes[i].inputs) EXPECT_LT(in, i);
  }
}

TEST(Backward, SquareHasGradientSix) {
  fg::ParamVector p;
  p.add_segment("w", 1, 1);
  p[0] = 3.0;
  Tape tape;
  Var w = tape.parameter(p, p.segment("w"));
  Var f = tape.matmul(w, w);
  EXPECT_DOUBLE_EQ(tape.value(f).item(), 9.0);
  EXPECT_DOUBLE_EQ(tape.backward(f).at(0), 6.0);
}

TEST(Backward, NllAtUniformLogitsIsSoftmaxMinusOnehot) {
  // Logits are the bias of a zero-input linear layer, so d/dbias = d/dlogits.
  fg::ParamVector p;
  p.add_segment("w", 1, 2);
  p.add_segment("b", 1, 2);
  Tape tape;
  Var x = tape.constant(Tensor::zeros(1, 1));
  Var z = tape.bias_add(tape.matmul(x, tape.parameter(p, p.segment("w"))), tape.parameter(p, p.segment("b")));
  const std::size_t y[1] = {0};
  Var loss = tape.nll(tape.log_softmax(z), y);
  const auto g = tape.backward(loss);
  EXPECT_DOUBLE_EQ(g[2], -0.5);
  EXPECT_DOUBLE_EQ(g[3], 0.5);
}

TEST(Backward, BeforeForwardIsAnError) {
  Tape tape;
  EXPECT_THROW((void)tape.backward(Var{0}), fg::Error);
}

TEST(Backward, SeedShapeMustMatchOutput) {
  const auto model = fg::Model::build(fg::logreg_spec(2, 2, 0));
  Tape tape;
  Var z = model.forward(tape, Tensor::matrix(1, 2, {1, 2}));
  EXPECT_THROW((void)tape.backward(z, Tensor::zeros(2, 2)), fg::ShapeError);
}

TEST(Backward, TapeIsReusableAcrossSeeds) {
  const auto model = fg::Model::build(fg::mlp_spec(2, {3}, 2, 4));
  Tape tape;
  Var z = model.forward(tape, Tensor::matrix(1, 2, {0.5, -0.2}));
  const auto a = tape.backward(z, Tensor::matrix(1, 2, {1, 0}));
  const auto b = tape.backward(z, Tensor::matrix(1, 2, {0, 1}));
  const auto ab = tape.backward(z, Tensor::matrix(1, 2, {1, 1}));
  EXPECT_EQ(a, tape.backward(z, Tensor::matrix(1, 2, {1, 0})));
  for (std::size_t i = 0; i < ab.size(); ++i) EXPECT_NEAR(ab[i], a[i] + b[i], 1e-15);
}

TEST(Backward, LinearInSeed) {
  const auto model = fg::Model::build(fg::mlp_spec(3, {5}, 3, 9));
  Tape tape;
  Var lp = tape.log_softmax(model.forward(tape, Tensor::matrix(2, 3, {0.1, 0.2, -0.3, 1.0, -1.0, 0.5})));
  std::mt19937_64 gen(3);
  const auto seed_vals = fg::testing::random_vector(gen, 6);
  const Tensor seed({2, 3}, seed_vals);
  const auto base = tape.backward(lp, seed);
  for (double a : {2.0, -0.5, 0.25, 8.0}) {
    Tensor scaled = seed;
    scaled *= a;
    const auto g = tape.backward(lp, scaled);
    for (std::size_t i = 0; i < g.size(); ++i) EXPECT_EQ(g[i], a * base[i]) << "a=" << a << " i=" << i;
  }
}

TEST(Backward, DeterministicAcrossRuns) {
  const auto model = fg::Model::build(fg::tiny_attention_spec(4, 8, 8, 2, 3, 32));
  const Tensor x = Tensor::matrix(2, 4, {1, 2, 3, 4, 5, 0, 7, 9});
  const std::vector<double> y{0, 1};
  EXPECT_EQ(fg::mean_log_prob_gradient(model, x, y), fg::mean_log_prob_gradient(model, x, y));
}

TEST(Backward, MseGradientMatchesClosedForm) {
  const auto model = fg::Model::build(fg::linear_regressor_spec(2, 1));
  Tape tape;
  const Tensor x = Tensor::matrix(2, 2, {1, 2, -1, 0.5});
  Var pred = model.forward(tape, x);
  Var loss = tape.mse(pred, Tensor::matrix(2, 1, {0.5, -0.5}));
  const auto g = tape.backward(loss);
  const auto& w = model.params().values();
  double gw0 = 0, gw1 = 0, gb = 0;
  const double ys[2] = {0.5, -0.5};
  for (int i = 0; i < 2; ++i) {
    const double f = x(i, 0) * w[0] + x(i, 1) * w[1] + w[2];
    const double r = f - ys[i];
    gw0 += r * x(i, 0);
    gw1 += r * x(i, 1);
    gb += r;
  }
  EXPECT_NEAR(g[0], gw0, 1e-15);
  EXPECT_NEAR(g[1], gw1, 1e-15);
  EXPECT_NEAR(g[2], gb, 1e-15);
}

TEST(GradCheck, ArbitraryGraphMatchesFiniteDifferences) {
  // A graph using every primitive, checked against central differences.
  std::mt19937_64 gen(11);
  fg::ParamVector p;
  p.add_segment("table", 5, 3);
  p.add_segment("w", 3, 3);
  p.add_segment("b", 1, 3);
  for (std::size_t i = 0; i < p.size(); ++i) p[i] = std::uniform_real_distribution<double>(-1, 1)(gen);
  auto build = [](Tape& tape, const fg::ParamVector& q) {
    const std::size_t ids[3] = {4, 1, 1};
    Var e = tape.embedding(tape.parameter(q, q.segment("table")), ids);
    Var h = tape.tanh(tape.bias_add(tape.matmul(e, tape.parameter(q, q.segment("w"))), tape.parameter(q, q.segment("b"))));
    Var a = tape.softmax(tape.scale(tape.matmul(h, tape.transpose(e)), 0.7));
    Var r = tape.relu(tape.add(tape.matmul(a, h), e));
    Var parts[2] = {tape.mean_rows(r), tape.mean_rows(h)};
    Var c = tape.concat_rows(parts);
    const std::size_t y[2] = {2, 0};
    Var l1 = tape.nll(tape.log_softmax(c), y);
    Var l2 = tape.mse(tape.mean_rows(c), fg::Tensor::matrix(1, 3, {0.1, 0.2, 0.3}));
    return tape.add(l1, l2);
  };
  Tape tape;
  const auto analytic = tape.backward(build(tape, p));
  const auto numeric = fg::central_differences(
      [&](const fg::ParamVector& q) {
        Tape t2;
        return t2.value(build(t2, q)).item();
      },
      p, 1e-4);
  EXPECT_LE(fg::compare_gradients(analytic, numeric).max_error, 1e-5);
}

TEST(PerSample, SingleRowEqualsBackward) {
  const auto model = fg::Model::build(fg::mlp_spec(3, {4}, 2, 2));
  const Tensor x = Tensor::matrix(1, 3, {0.2, -0.4, 1.0});
  const std::vector<double> y{1};
  const auto per = fg::per_sample_gradients(model, x, y);
  ASSERT_EQ(per.size(), 1u);
  Tape tape;
  const std::size_t ys[1] = {1};
  Var lp = tape.scale(tape.nll(tape.log_softmax(model.forward(tape, x)), ys), -1.0);
  EXPECT_EQ(per[0], tape.backward(lp));
}

TEST(PerSample, DuplicatedRowsGiveIdenticalGradients) {
  const auto model = fg::Model::build(fg::mlp_spec(2, {3}, 3, 6));
  const Tensor x = Tensor::matrix(2, 2, {0.3, 0.9, 0.3, 0.9});
  const std::vector<double> y{2, 2};
  const auto per = fg::per_sample_gradients(model, x, y);
  EXPECT_EQ(per[0], per[1]);
}

TEST(PerSample, MeanEqualsBatchGradient) {
  std::mt19937_64 gen(21);
  for (int trial = 0; trial < 5; ++trial) {
    const auto model = fg::Model::build(fg::mlp_spec(4, {6}, 3, static_cast<std::uint64_t>(trial)));
    const Tensor x({3, 4}, fg::testing::random_vector(gen, 12));
    const std::vector<double> y{0, 2, 1};
    const auto per = fg::per_sample_gradients(model, x, y);
    ASSERT_EQ(per.size(), 3u);
    const auto batch = fg::mean_log_prob_gradient(model, x, y);
    for (std::size_t j = 0; j < batch.size(); ++j) {
      const double mean = (per[0][j] + per[1][j] + per[2][j]) / 3.0;
      EXPECT_NEAR(mean, batch[j], 1e-12);
    }
  }
}

TEST(PerSample, LabelOutOfRangeIsAnError) {
  const auto model = fg::Model::build(fg::logreg_spec(2, 2, 0));
  const std::vector<double> y{2};
  EXPECT_THROW((void)fg::per_sample_gradients(model, Tensor::matrix(1, 2, {1, 1}), y), fg::Error);
}

TEST(PerSample, EmptyBatchIsAnError) {
  const auto model = fg::Model::build(fg::logreg_spec(2, 2, 0));
  EXPECT_THROW((void)fg::per_sample_gradients(model, Tensor::zeros(0, 2), std::vector<double>{}), fg::Error);
}
