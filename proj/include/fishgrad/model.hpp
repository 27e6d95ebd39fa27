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

// Small differentiable models exposing log p(y|x) over a flat ParamVector.

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "fishgrad/error.hpp"
#include "fishgrad/param_vector.hpp"
#include "fishgrad/random.hpp"
#include "fishgrad/tape.hpp"
#include "fishgrad/tensor.hpp"

namespace fishgrad {

enum class ModelKind { logreg, mlp, tiny_attention, linear_regressor };
enum class Activation { relu, tanh };

inline std::string_view to_string(ModelKind k) {
  switch (k) {
    case ModelKind::logreg: return "logreg";
    case ModelKind::mlp: return "mlp";
    case ModelKind::tiny_attention: return "tiny_attention";
    case ModelKind::linear_regressor: return "linear_regressor";
  }
  return "?";
}

inline ModelKind parse_model_kind(std::string_view s) {
  if (s == "logreg") return ModelKind::logreg;
  if (s == "mlp") return ModelKind::mlp;
  if (s == "tiny_attention") return ModelKind::tiny_attention;
  if (s == "linear_regressor") return ModelKind::linear_regressor;
  fail(ErrorKind::validation, "unknown model kind '" + std::string(s) + "'");
}

inline std::string_view to_string(Activation a) {
  return a == Activation::relu ? "relu" : "tanh";
}

inline Activation parse_activation(std::string_view s) {
  if (s == "relu") return Activation::relu;
  if (s == "tanh") return Activation::tanh;
  fail(ErrorKind::validation, "unknown activation '" + std::string(s) + "'");
}

struct ModelSpec {
  ModelKind kind = ModelKind::logreg;
  /// Feature count; token sequence length for tiny_attention.
  std::size_t input_dim = 0;
  /// Hidden widths for mlp; the first entry is the FFN width for
  /// tiny_attention.
  std::vector<std::size_t> hidden;
  std::size_t num_classes = 2;
  bool scalar_output = false;
  Activation activation = Activation::relu;
  std::size_t vocab_size = 2048;
  std::size_t embed_dim = 16;
  std::uint64_t seed = 0;

  [[nodiscard]] bool is_classifier() const noexcept { return !scalar_output; }
  [[nodiscard]] std::size_t output_dim() const noexcept {
    return scalar_output ? 1 : num_classes;
  }

  void validate() const {
    require(input_dim > 0, "model input_dim must be positive");
    for (auto h : hidden) require(h > 0, "hidden widths must be positive");
    switch (kind) {
      case ModelKind::logreg:
        require(!scalar_output, "logreg is a classifier");
        break;
      case ModelKind::linear_regressor:
        require(scalar_output, "linear_regressor has a scalar output");
        break;
      case ModelKind::mlp:
        require(!hidden.empty(), "mlp needs at least one hidden layer");
        break;
      case ModelKind::tiny_attention:
        require(hidden.size() == 1, "tiny_attention takes exactly one FFN width");
        require(vocab_size >= 2, "tiny_attention vocab_size must be >= 2");
        require(embed_dim > 0 && embed_dim <= 32, "tiny_attention embed_dim must be in [1, 32]");
        break;
    }
    if (!scalar_output) require(num_classes >= 2, "classifiers need num_classes >= 2");
  }

  [[nodiscard]] std::uint64_t hash() const {
    std::uint64_t h = fnv1a(to_string(kind));
    const std::uint64_t fields[] = {input_dim,   num_classes,
                                    scalar_output ? 1u : 0u,
                                    activation == Activation::relu ? 0u : 1u,
                                    vocab_size,  embed_dim, seed, hidden.size()};
    h = fnv1a(fields, sizeof fields, h);
    for (std::uint64_t w : hidden) h = fnv1a(&w, sizeof w, h);
    return h;
  }

  friend bool operator==(const ModelSpec&, const ModelSpec&) = default;
};

/// Builds a spec for the common cases without spelling out every field.
inline ModelSpec logreg_spec(std::size_t input_dim, std::size_t classes, std::uint64_t seed = 0) {
  ModelSpec s;
  s.kind = ModelKind::logreg;
  s.input_dim = input_dim;
  s.num_classes = classes;
  s.seed = seed;
  return s;
}

inline ModelSpec mlp_spec(std::size_t input_dim, std::vector<std::size_t> hidden,
                          std::size_t classes, std::uint64_t seed = 0) {
  ModelSpec s;
  s.kind = ModelKind::mlp;
  s.input_dim = input_dim;
  s.hidden = std::move(hidden);
  s.num_classes = classes;
  s.seed = seed;
  return s;
}

inline ModelSpec linear_regressor_spec(std::size_t input_dim, std::uint64_t seed = 0) {
  ModelSpec s;
  s.kind = ModelKind::linear_regressor;
  s.input_dim = input_dim;
  s.scalar_output = true;
  s.seed = seed;
  return s;
}

inline ModelSpec tiny_attention_spec(std::size_t seq_len, std::size_t embed_dim,
                                     std::size_t ffn, std::size_t classes,
                                     std::uint64_t seed = 0, std::size_t vocab = 2048) {
  ModelSpec s;
  s.kind = ModelKind::tiny_attention;
  s.input_dim = seq_len;
  s.hidden = {ffn};
  s.num_classes = classes;
  s.embed_dim = embed_dim;
  s.vocab_size = vocab;
  s.seed = seed;
  return s;
}

class Model {
 public:
  /// Lays out the segment table and draws every parameter uniformly from
  /// [-1/sqrt(fan_in), 1/sqrt(fan_in)] using the spec's seed.
  static Model build(const ModelSpec& spec) {
    spec.validate();
    Model m;
    m.spec_ = spec;
    m.layout();
    Rng rng(spec.seed);
    for (const auto& seg : m.params_.segments()) {
      const double bound = 1.0 / std::sqrt(static_cast<double>(m.fan_in(seg)));
      for (double& v : m.params_.view(seg)) v = rng.uniform(-bound, bound);
    }
    return m;
  }

  /// Rebinds previously saved parameters to a spec; the segment tables must
  /// agree exactly.
  static Model from_params(const ModelSpec& spec, ParamVector params) {
    spec.validate();
    Model m;
    m.spec_ = spec;
    m.layout();
    require(m.params_.segments() == params.segments(),
            "parameter segment table does not match model spec");
    m.params_ = std::move(params);
    return m;
  }

  [[nodiscard]] const ModelSpec& spec() const noexcept { return spec_; }
  [[nodiscard]] const ParamVector& params() const noexcept { return params_; }
  [[nodiscard]] ParamVector& params() noexcept { return params_; }
  [[nodiscard]] std::size_t num_params() const noexcept { return params_.size(); }
  [[nodiscard]] bool is_classifier() const noexcept { return spec_.is_classifier(); }
  [[nodiscard]] std::size_t num_classes() const noexcept { return spec_.num_classes; }
  [[nodiscard]] std::size_t input_dim() const noexcept { return spec_.input_dim; }

  /// Hash of the spec and the current parameter values.
  [[nodiscard]] std::uint64_t hash() const { return params_.hash() ^ mix64(spec_.hash()); }

  /// Records the forward pass for a (B x input_dim) batch and returns the
  /// (B x output_dim) logits, or predictions for scalar-output models.
  Var forward(Tape& tape, const Tensor& batch) const {
    if (batch.rank() != 2 || batch.cols() != spec_.input_dim) {
      throw ShapeError("forward", batch.shape(), {spec_.input_dim});
    }
    if (!batch.all_finite()) fail(ErrorKind::validation, "forward: non-finite input");
    switch (spec_.kind) {
      case ModelKind::logreg:
      case ModelKind::linear_regressor:
      case ModelKind::mlp:
        return forward_dense(tape, batch);
      case ModelKind::tiny_attention:
        return forward_attention(tape, batch);
    }
    fail(ErrorKind::runtime, "unreachable model kind");
  }

  /// Logits (or the scalar prediction) for one input, without keeping a tape.
  [[nodiscard]] std::vector<double> outputs(std::span<const double> x) const {
    Tape tape;
    Var out = forward(tape, Tensor::row(x));
    return tape.value(out).values();
  }

  /// Outputs for every row in a batch.
  [[nodiscard]] Tensor outputs(const Tensor& batch) const {
    Tape tape;
    Var out = forward(tape, batch);
    return tape.value(out);
  }

 private:
  Model() = default;

  void layout() {
    const auto& s = spec_;
    switch (s.kind) {
      case ModelKind::logreg:
        params_.add_segment("weight", s.input_dim, s.num_classes);
        params_.add_segment("bias", 1, s.num_classes);
        break;
      case ModelKind::linear_regressor:
        params_.add_segment("weight", s.input_dim, 1);
        params_.add_segment("bias", 1, 1);
        break;
      case ModelKind::mlp: {
        std::size_t in = s.input_dim;
        for (std::size_t l = 0; l < s.hidden.size(); ++l) {
          const std::string p = "layer" + std::to_string(l);
          params_.add_segment(p + ".weight", in, s.hidden[l]);
          params_.add_segment(p + ".bias", 1, s.hidden[l]);
          in = s.hidden[l];
        }
        const std::string p = "layer" + std::to_string(s.hidden.size());
        params_.add_segment(p + ".weight", in, s.output_dim());
        params_.add_segment(p + ".bias", 1, s.output_dim());
        break;
      }
      case ModelKind::tiny_attention: {
        const std::size_t d = s.embed_dim, h = s.hidden[0];
        params_.add_segment("embed", s.vocab_size, d);
        params_.add_segment("pos", s.input_dim, d);
        params_.add_segment("attn.wq", d, d);
        params_.add_segment("attn.wk", d, d);
        params_.add_segment("attn.wv", d, d);
        params_.add_segment("ffn1.weight", d, h);
        params_.add_segment("ffn1.bias", 1, h);
        params_.add_segment("ffn2.weight", h, d);
        params_.add_segment("ffn2.bias", 1, d);
        params_.add_segment("head.weight", d, s.output_dim());
        params_.add_segment("head.bias", 1, s.output_dim());
        break;
      }
    }
  }

  /// Bias segments share the fan-in of the weight they follow; embedding
  /// tables use the embedding width.
  [[nodiscard]] std::size_t fan_in(const Segment& seg) const {
    if (seg.name == "embed" || seg.name == "pos") return spec_.embed_dim;
    if (seg.rows > 1) return seg.rows;
    const auto& segs = params_.segments();
    for (std::size_t i = 1; i < segs.size(); ++i) {
      if (segs[i].name == seg.name) return segs[i - 1].rows;
    }
    return 1;
  }

  Var activate(Tape& tape, Var v) const {
    return spec_.activation == Activation::relu ? tape.relu(v) : tape.tanh(v);
  }

  Var forward_dense(Tape& tape, const Tensor& batch) const {
    Var h = tape.constant(batch);
    const auto& segs = params_.segments();
    const std::size_t layers = segs.size() / 2;
    for (std::size_t l = 0; l < layers; ++l) {
      Var w = tape.parameter(params_, segs[2 * l]);
      Var b = tape.parameter(params_, segs[2 * l + 1]);
      h = tape.bias_add(tape.matmul(h, w), b);
      if (l + 1 < layers) h = activate(tape, h);
    }
    return h;
  }

  Var forward_attention(Tape& tape, const Tensor& batch) const {
    const auto& s = spec_;
    Var embed = tape.parameter(params_, params_.segment("embed"));
    Var pos = tape.parameter(params_, params_.segment("pos"));
    Var wq = tape.parameter(params_, params_.segment("attn.wq"));
    Var wk = tape.parameter(params_, params_.segment("attn.wk"));
    Var wv = tape.parameter(params_, params_.segment("attn.wv"));
    Var w1 = tape.parameter(params_, params_.segment("ffn1.weight"));
    Var b1 = tape.parameter(params_, params_.segment("ffn1.bias"));
    Var w2 = tape.parameter(params_, params_.segment("ffn2.weight"));
    Var b2 = tape.parameter(params_, params_.segment("ffn2.bias"));
    Var wh = tape.parameter(params_, params_.segment("head.weight"));
    Var bh = tape.parameter(params_, params_.segment("head.bias"));
    const double inv_sqrt_d = 1.0 / std::sqrt(static_cast<double>(s.embed_dim));

    std::vector<Var> rows;
    rows.reserve(batch.rows());
    std::vector<std::size_t> ids(s.input_dim);
    for (std::size_t r = 0; r < batch.rows(); ++r) {
      for (std::size_t t = 0; t < s.input_dim; ++t) {
        const double v = batch(r, t);
        if (v < 0.0 || v != std::floor(v) || v >= static_cast<double>(s.vocab_size)) {
          fail(ErrorKind::validation, "tiny_attention: token id out of vocabulary range");
        }
        ids[t] = static_cast<std::size_t>(v);
      }
      Var x = tape.add(tape.embedding(embed, ids), pos);
      Var q = tape.matmul(x, wq);
      Var k = tape.matmul(x, wk);
      Var v = tape.matmul(x, wv);
      Var attn = tape.softmax(tape.scale(tape.matmul(q, tape.transpose(k)), inv_sqrt_d));
      Var h = tape.add(tape.matmul(attn, v), x);
      Var f = tape.bias_add(tape.matmul(tape.relu(tape.bias_add(tape.matmul(h, w1), b1)), w2), b2);
      Var pooled = tape.mean_rows(tape.add(f, h));
      rows.push_back(tape.bias_add(tape.matmul(pooled, wh), bh));
    }
    return tape.concat_rows(rows);
  }

  ModelSpec spec_;
  ParamVector params_;
};

// -- likelihoods --------------------------------------------------------------

/// Validates a real-valued label as a class id for `model`.
inline std::size_t class_label(const Model& model, double label) {
  require(model.is_classifier(), "class label requested for a regression model");
  if (!(label >= 0.0) || label != std::floor(label) ||
      label >= static_cast<double>(model.num_classes())) {
    fail(ErrorKind::validation, "label " + std::to_string(label) + " out of class range [0, " +
                                    std::to_string(model.num_classes()) + ")");
  }
  return static_cast<std::size_t>(label);
}

inline void require_finite(std::span<const double> x) {
  for (double v : x) {
    if (!std::isfinite(v)) fail(ErrorKind::validation, "non-finite input value");
  }
}

/// log p(y|x) for a classifier.
inline double log_prob(const Model& model, std::span<const double> x, std::size_t y) {
  require(model.is_classifier(), "log_prob requires a classifier");
  require_finite(x);
  require(y < model.num_classes(), "class " + std::to_string(y) + " out of range");
  Tape tape;
  Var lp = tape.log_softmax(model.forward(tape, Tensor::row(x)));
  return tape.value(lp)(0, y);
}

/// Unit-variance Gaussian log-likelihood with the constant dropped:
/// -0.5 * (f(x) - y)^2.
inline double gaussian_log_prob(const Model& model, std::span<const double> x, double y) {
  require(!model.is_classifier(), "gaussian_log_prob requires a scalar-output model");
  require_finite(x);
  const double r = model.outputs(x)[0] - y;
  return -0.5 * r * r;
}

/// Records log p(labels | batch), averaged over the batch, for either head.
inline Var record_mean_log_prob(Tape& tape, const Model& model, const Tensor& batch,
                                std::span<const double> labels) {
  if (labels.size() != batch.rows()) {
    throw ShapeError("log_prob", batch.shape(), {labels.size()});
  }
  Var out = model.forward(tape, batch);
  if (model.is_classifier()) {
    std::vector<std::size_t> ys(labels.size());
    for (std::size_t i = 0; i < labels.size(); ++i) ys[i] = class_label(model, labels[i]);
    return tape.scale(tape.nll(tape.log_softmax(out), ys), -1.0);
  }
  Tensor target = Tensor::zeros(labels.size(), 1);
  for (std::size_t i = 0; i < labels.size(); ++i) target(i, 0) = labels[i];
  return tape.scale(tape.mse(out, target), -0.5);
}

/// Gradient of the batch-mean log-likelihood, one backward pass.
inline std::vector<double> mean_log_prob_gradient(const Model& model, const Tensor& batch,
                                                  std::span<const double> labels) {
  Tape tape;
  Var lp = record_mean_log_prob(tape, model, batch, labels);
  return tape.backward(lp);
}

/// Gradient of log p(y|x) for a single example.
inline std::vector<double> log_prob_gradient(const Model& model, std::span<const double> x,
                                             double label) {
  const double labels[1] = {label};
  return mean_log_prob_gradient(model, Tensor::row(x), labels);
}

/// Gradient of log p(y|x) for a classifier with an explicit class, used by
/// the expectation form of the Fisher diagonal.
inline std::vector<double> class_log_prob_gradient(const Model& model,
                                                   std::span<const double> x, std::size_t y) {
  return log_prob_gradient(model, x, static_cast<double>(y));
}

/// One gradient of log p(y_i|x_i) per batch row, each from its own tape.
inline std::vector<std::vector<double>> per_sample_gradients(const Model& model,
                                                             const Tensor& batch,
                                                             std::span<const double> labels) {
  require(batch.rank() == 2 && batch.rows() >= 1, "per_sample_gradients: empty batch");
  if (labels.size() != batch.rows()) {
    throw ShapeError("per_sample_gradients", batch.shape(), {labels.size()});
  }
  std::vector<std::vector<double>> grads;
  grads.reserve(batch.rows());
  const std::size_t d = batch.cols();
  for (std::size_t i = 0; i < batch.rows(); ++i) {
    grads.push_back(log_prob_gradient(model, batch.data().subspan(i * d, d), labels[i]));
  }
  return grads;
}

}  // namespace fishgrad
