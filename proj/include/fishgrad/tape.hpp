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

// Reverse-mode differentiation over a fixed set of dense rank-2 primitives.
//
// A Tape records every op as it is evaluated. Node ids are assigned in
// evaluation order, so inputs always precede their consumers and the reverse
// sweep is a single descending pass over ids. backward() does not modify the
// tape: it may be called any number of times with different seeds.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <span>
#include <string>
#include <vector>

#include "fishgrad/error.hpp"
#include "fishgrad/param_vector.hpp"
#include "fishgrad/tensor.hpp"

namespace fishgrad {

enum class OpKind : std::uint8_t {
  constant,
  parameter,
  matmul,
  bias_add,
  add,
  scale,
  transpose,
  relu,
  tanh,
  log_softmax,
  softmax,
  nll,
  mse,
  embedding,
  mean_rows,
  concat_rows,
};

inline const char* op_name(OpKind op) {
  switch (op) {
    case OpKind::constant: return "constant";
    case OpKind::parameter: return "parameter";
    case OpKind::matmul: return "matmul";
    case OpKind::bias_add: return "bias_add";
    case OpKind::add: return "add";
    case OpKind::scale: return "scale";
    case OpKind::transpose: return "transpose";
    case OpKind::relu: return "relu";
    case OpKind::tanh: return "tanh";
    case OpKind::log_softmax: return "log_softmax";
    case OpKind::softmax: return "softmax";
    case OpKind::nll: return "nll";
    case OpKind::mse: return "mse";
    case OpKind::embedding: return "embedding";
    case OpKind::mean_rows: return "mean_rows";
    case OpKind::concat_rows: return "concat_rows";
  }
  return "?";
}

/// Handle to a recorded node.
struct Var {
  std::size_t id = std::numeric_limits<std::size_t>::max();
};

class Tape {
 public:
  struct Node {
    OpKind op = OpKind::constant;
    std::vector<std::size_t> inputs;
    Tensor value;
    std::size_t param_offset = 0;
    double factor = 0.0;
    std::vector<std::size_t> indices;  // nll labels or embedding ids
    Tensor aux;                        // mse target
  };

  Tape() = default;

  // -- leaves ---------------------------------------------------------------

  Var constant(Tensor t) {
    check_rank2("constant", t);
    Node n;
    n.op = OpKind::constant;
    n.value = std::move(t);
    return push(std::move(n));
  }

  /// Records a parameter leaf reading `seg` out of `params`. Every parameter
  /// on one tape must come from vectors of the same size.
  Var parameter(const ParamVector& params, const Segment& seg) {
    if (num_params_ == 0) num_params_ = params.size();
    if (params.size() != num_params_) {
      throw ShapeError("parameter", {params.size()}, {num_params_});
    }
    const auto v = params.view(seg);
    Node n;
    n.op = OpKind::parameter;
    n.value = Tensor({seg.rows, seg.cols}, std::vector<double>(v.begin(), v.end()));
    n.param_offset = seg.offset;
    return push(std::move(n));
  }

  // -- primitives -----------------------------------------------------------

  Var matmul(Var a, Var b) {
    const Tensor& x = value(a);
    const Tensor& y = value(b);
    if (x.cols() != y.rows()) throw ShapeError("matmul", x.shape(), y.shape());
    const std::size_t m = x.rows(), k = x.cols(), n = y.cols();
    Tensor out = Tensor::zeros(m, n);
    for (std::size_t i = 0; i < m; ++i) {
      for (std::size_t p = 0; p < k; ++p) {
        const double xv = x(i, p);
        if (xv == 0.0) continue;
        const double* yrow = &y.data()[p * n];
        double* orow = &out.data()[i * n];
        for (std::size_t j = 0; j < n; ++j) orow[j] += xv * yrow[j];
      }
    }
    return push_op(OpKind::matmul, {a.id, b.id}, std::move(out));
  }

  /// a (m x n) + b (1 x n) broadcast down the rows.
  Var bias_add(Var a, Var b) {
    const Tensor& x = value(a);
    const Tensor& bias = value(b);
    if (bias.rows() != 1 || bias.cols() != x.cols()) {
      throw ShapeError("bias_add", x.shape(), bias.shape());
    }
    Tensor out = x;
    for (std::size_t i = 0; i < x.rows(); ++i) {
      for (std::size_t j = 0; j < x.cols(); ++j) out(i, j) += bias(0, j);
    }
    return push_op(OpKind::bias_add, {a.id, b.id}, std::move(out));
  }

  Var add(Var a, Var b) {
    const Tensor& x = value(a);
    const Tensor& y = value(b);
    if (x.shape() != y.shape()) throw ShapeError("add", x.shape(), y.shape());
    Tensor out = x;
    for (std::size_t i = 0; i < out.size(); ++i) out[i] += y[i];
    return push_op(OpKind::add, {a.id, b.id}, std::move(out));
  }

  Var scale(Var a, double factor) {
    Tensor out = value(a);
    out *= factor;
    Var v = push_op(OpKind::scale, {a.id}, std::move(out));
    nodes_[v.id].factor = factor;
    return v;
  }

  Var transpose(Var a) {
    const Tensor& x = value(a);
    Tensor out = Tensor::zeros(x.cols(), x.rows());
    for (std::size_t i = 0; i < x.rows(); ++i) {
      for (std::size_t j = 0; j < x.cols(); ++j) out(j, i) = x(i, j);
    }
    return push_op(OpKind::transpose, {a.id}, std::move(out));
  }

  Var relu(Var a) {
    Tensor out = value(a);
    for (double& v : out.data()) v = v > 0.0 ? v : 0.0;
    return push_op(OpKind::relu, {a.id}, std::move(out));
  }

  Var tanh(Var a) {
    Tensor out = value(a);
    for (double& v : out.data()) v = std::tanh(v);
    return push_op(OpKind::tanh, {a.id}, std::move(out));
  }

  /// Row-wise log-softmax.
  Var log_softmax(Var a) {
    Tensor out = value(a);
    const std::size_t n = out.cols();
    for (std::size_t i = 0; i < out.rows(); ++i) {
      double* row = &out.data()[i * n];
      const double mx = *std::max_element(row, row + n);
      double sum = 0.0;
      for (std::size_t j = 0; j < n; ++j) sum += std::exp(row[j] - mx);
      const double lse = mx + std::log(sum);
      for (std::size_t j = 0; j < n; ++j) row[j] -= lse;
    }
    return push_op(OpKind::log_softmax, {a.id}, std::move(out));
  }

  /// Row-wise softmax.
  Var softmax(Var a) {
    Tensor out = value(a);
    const std::size_t n = out.cols();
    for (std::size_t i = 0; i < out.rows(); ++i) {
      double* row = &out.data()[i * n];
      const double mx = *std::max_element(row, row + n);
      double sum = 0.0;
      for (std::size_t j = 0; j < n; ++j) {
        row[j] = std::exp(row[j] - mx);
        sum += row[j];
      }
      for (std::size_t j = 0; j < n; ++j) row[j] /= sum;
    }
    return push_op(OpKind::softmax, {a.id}, std::move(out));
  }

  /// Mean negative log-likelihood of `labels` under row log-probabilities.
  Var nll(Var log_probs, std::span<const std::size_t> labels) {
    const Tensor& lp = value(log_probs);
    if (labels.size() != lp.rows()) {
      throw ShapeError("nll", lp.shape(), {labels.size()});
    }
    double sum = 0.0;
    for (std::size_t i = 0; i < labels.size(); ++i) {
      if (labels[i] >= lp.cols()) {
        fail(ErrorKind::validation, "nll: label " + std::to_string(labels[i]) +
                                        " out of range for " +
                                        std::to_string(lp.cols()) + " classes");
      }
      sum -= lp(i, labels[i]);
    }
    Var v = push_op(OpKind::nll, {log_probs.id},
                    Tensor::scalar(sum / static_cast<double>(labels.size())));
    nodes_[v.id].indices.assign(labels.begin(), labels.end());
    return v;
  }

  /// Mean squared error against a constant target of the same shape.
  Var mse(Var pred, const Tensor& target) {
    const Tensor& p = value(pred);
    if (p.shape() != target.shape()) throw ShapeError("mse", p.shape(), target.shape());
    double sum = 0.0;
    for (std::size_t i = 0; i < p.size(); ++i) {
      const double d = p[i] - target[i];
      sum += d * d;
    }
    Var v = push_op(OpKind::mse, {pred.id},
                    Tensor::scalar(sum / static_cast<double>(p.size())));
    nodes_[v.id].aux = target;
    return v;
  }

  /// Gathers rows `ids` of `table` into an (ids.size() x cols) tensor.
  Var embedding(Var table, std::span<const std::size_t> ids) {
    const Tensor& t = value(table);
    const std::size_t d = t.cols();
    Tensor out = Tensor::zeros(ids.size(), d);
    for (std::size_t i = 0; i < ids.size(); ++i) {
      if (ids[i] >= t.rows()) throw ShapeError("embedding", t.shape(), {ids[i]});
      for (std::size_t j = 0; j < d; ++j) out(i, j) = t(ids[i], j);
    }
    Var v = push_op(OpKind::embedding, {table.id}, std::move(out));
    nodes_[v.id].indices.assign(ids.begin(), ids.end());
    return v;
  }

  /// Column means: (m x n) -> (1 x n).
  Var mean_rows(Var a) {
    const Tensor& x = value(a);
    Tensor out = Tensor::zeros(1, x.cols());
    for (std::size_t i = 0; i < x.rows(); ++i) {
      for (std::size_t j = 0; j < x.cols(); ++j) out(0, j) += x(i, j);
    }
    out *= 1.0 / static_cast<double>(x.rows());
    return push_op(OpKind::mean_rows, {a.id}, std::move(out));
  }

  /// Stacks equal-width tensors vertically.
  Var concat_rows(std::span<const Var> parts) {
    require(!parts.empty(), "concat_rows: no inputs");
    const std::size_t n = value(parts[0]).cols();
    std::size_t m = 0;
    std::vector<std::size_t> ids;
    for (Var p : parts) {
      const Tensor& t = value(p);
      if (t.cols() != n) throw ShapeError("concat_rows", value(parts[0]).shape(), t.shape());
      m += t.rows();
      ids.push_back(p.id);
    }
    std::vector<double> data;
    data.reserve(m * n);
    for (Var p : parts) {
      const auto& vals = value(p).values();
      data.insert(data.end(), vals.begin(), vals.end());
    }
    return push_op(OpKind::concat_rows, std::move(ids), Tensor({m, n}, std::move(data)));
  }

  // -- access ---------------------------------------------------------------

  [[nodiscard]] const Tensor& value(Var v) const {
    require(v.id < nodes_.size(), "tape: unknown node id");
    return nodes_[v.id].value;
  }

  [[nodiscard]] std::size_t size() const noexcept { return nodes_.size(); }
  [[nodiscard]] const std::vector<Node>& nodes() const noexcept { return nodes_; }
  [[nodiscard]] std::size_t num_params() const noexcept { return num_params_; }

  void clear() {
    nodes_.clear();
    num_params_ = 0;
  }

  /// Gradient of sum(seed * output) with respect to every parameter index.
  /// Entries for parameters the output does not depend on are zero.
  [[nodiscard]] std::vector<double> backward(Var output, const Tensor& seed) const {
    if (nodes_.empty()) fail(ErrorKind::runtime, "backward called before forward");
    require(output.id < nodes_.size(), "backward: output is not on this tape",
            ErrorKind::runtime);
    if (seed.shape() != nodes_[output.id].value.shape()) {
      throw ShapeError("backward", nodes_[output.id].value.shape(), seed.shape());
    }

    std::vector<double> param_grad(num_params_, 0.0);
    std::vector<Tensor> grads(output.id + 1);
    grads[output.id] = seed;

    auto accumulate = [&](std::size_t id, const Tensor& g) {
      Tensor& dst = grads[id];
      if (dst.empty()) {
        dst = g;
      } else {
        for (std::size_t i = 0; i < g.size(); ++i) dst[i] += g[i];
      }
    };

    for (std::size_t id = output.id + 1; id-- > 0;) {
      if (grads[id].empty()) continue;
      const Node& node = nodes_[id];
      const Tensor& g = grads[id];
      switch (node.op) {
        case OpKind::constant:
          break;
        case OpKind::parameter:
          for (std::size_t i = 0; i < g.size(); ++i) {
            param_grad[node.param_offset + i] += g[i];
          }
          break;
        case OpKind::matmul: {
          const Tensor& x = nodes_[node.inputs[0]].value;
          const Tensor& y = nodes_[node.inputs[1]].value;
          const std::size_t m = x.rows(), k = x.cols(), n = y.cols();
          Tensor dx = Tensor::zeros(m, k);
          Tensor dy = Tensor::zeros(k, n);
          for (std::size_t i = 0; i < m; ++i) {
            for (std::size_t p = 0; p < k; ++p) {
              double acc = 0.0;
              const double xv = x(i, p);
              for (std::size_t j = 0; j < n; ++j) {
                const double gv = g(i, j);
                acc += gv * y(p, j);
                dy(p, j) += xv * gv;
              }
              dx(i, p) = acc;
            }
          }
          accumulate(node.inputs[0], dx);
          accumulate(node.inputs[1], dy);
          break;
        }
        case OpKind::bias_add: {
          Tensor db = Tensor::zeros(1, g.cols());
          for (std::size_t i = 0; i < g.rows(); ++i) {
            for (std::size_t j = 0; j < g.cols(); ++j) db(0, j) += g(i, j);
          }
          accumulate(node.inputs[0], g);
          accumulate(node.inputs[1], db);
          break;
        }
        case OpKind::add:
          accumulate(node.inputs[0], g);
          accumulate(node.inputs[1], g);
          break;
        case OpKind::scale: {
          Tensor d = g;
          d *= node.factor;
          accumulate(node.inputs[0], d);
          break;
        }
        case OpKind::transpose: {
          Tensor d = Tensor::zeros(g.cols(), g.rows());
          for (std::size_t i = 0; i < g.rows(); ++i) {
            for (std::size_t j = 0; j < g.cols(); ++j) d(j, i) = g(i, j);
          }
          accumulate(node.inputs[0], d);
          break;
        }
        case OpKind::relu: {
          const Tensor& x = nodes_[node.inputs[0]].value;
          Tensor d = g;
          for (std::size_t i = 0; i < d.size(); ++i) {
            if (!(x[i] > 0.0)) d[i] = 0.0;
          }
          accumulate(node.inputs[0], d);
          break;
        }
        case OpKind::tanh: {
          Tensor d = g;
          for (std::size_t i = 0; i < d.size(); ++i) {
            const double t = node.value[i];
            d[i] *= 1.0 - t * t;
          }
          accumulate(node.inputs[0], d);
          break;
        }
        case OpKind::log_softmax: {
          // dx = g - softmax * rowsum(g)
          Tensor d = g;
          const std::size_t n = g.cols();
          for (std::size_t i = 0; i < g.rows(); ++i) {
            double gsum = 0.0;
            for (std::size_t j = 0; j < n; ++j) gsum += g(i, j);
            for (std::size_t j = 0; j < n; ++j) {
              d(i, j) -= std::exp(node.value(i, j)) * gsum;
            }
          }
          accumulate(node.inputs[0], d);
          break;
        }
        case OpKind::softmax: {
          // dx = y * (g - rowsum(g * y))
          Tensor d = g;
          const std::size_t n = g.cols();
          for (std::size_t i = 0; i < g.rows(); ++i) {
            double dot = 0.0;
            for (std::size_t j = 0; j < n; ++j) dot += g(i, j) * node.value(i, j);
            for (std::size_t j = 0; j < n; ++j) {
              d(i, j) = node.value(i, j) * (g(i, j) - dot);
            }
          }
          accumulate(node.inputs[0], d);
          break;
        }
        case OpKind::nll: {
          const Tensor& lp = nodes_[node.inputs[0]].value;
          Tensor d = Tensor::zeros(lp.rows(), lp.cols());
          const double w = -g[0] / static_cast<double>(node.indices.size());
          for (std::size_t i = 0; i < node.indices.size(); ++i) d(i, node.indices[i]) = w;
          accumulate(node.inputs[0], d);
          break;
        }
        case OpKind::mse: {
          const Tensor& p = nodes_[node.inputs[0]].value;
          Tensor d = p;
          const double w = 2.0 * g[0] / static_cast<double>(p.size());
          for (std::size_t i = 0; i < d.size(); ++i) d[i] = w * (p[i] - node.aux[i]);
          accumulate(node.inputs[0], d);
          break;
        }
        case OpKind::embedding: {
          const Tensor& t = nodes_[node.inputs[0]].value;
          Tensor d = Tensor::zeros(t.rows(), t.cols());
          for (std::size_t i = 0; i < node.indices.size(); ++i) {
            for (std::size_t j = 0; j < t.cols(); ++j) d(node.indices[i], j) += g(i, j);
          }
          accumulate(node.inputs[0], d);
          break;
        }
        case OpKind::mean_rows: {
          const Tensor& x = nodes_[node.inputs[0]].value;
          Tensor d = Tensor::zeros(x.rows(), x.cols());
          const double w = 1.0 / static_cast<double>(x.rows());
          for (std::size_t i = 0; i < x.rows(); ++i) {
            for (std::size_t j = 0; j < x.cols(); ++j) d(i, j) = g(0, j) * w;
          }
          accumulate(node.inputs[0], d);
          break;
        }
        case OpKind::concat_rows: {
          std::size_t row = 0;
          const std::size_t n = g.cols();
          for (std::size_t in : node.inputs) {
            const std::size_t m = nodes_[in].value.rows();
            std::vector<double> part(g.values().begin() + static_cast<std::ptrdiff_t>(row * n),
                                     g.values().begin() + static_cast<std::ptrdiff_t>((row + m) * n));
            accumulate(in, Tensor({m, n}, std::move(part)));
            row += m;
          }
          break;
        }
      }
    }
    return param_grad;
  }

  /// backward() with a seed of ones.
  [[nodiscard]] std::vector<double> backward(Var output) const {
    require(output.id < nodes_.size() || nodes_.empty(),
            "backward: output is not on this tape", ErrorKind::runtime);
    if (nodes_.empty()) fail(ErrorKind::runtime, "backward called before forward");
    const Tensor& out = nodes_[output.id].value;
    return backward(output, Tensor(out.shape(), std::vector<double>(out.size(), 1.0)));
  }

 private:
  static void check_rank2(const char* op, const Tensor& t) {
    if (t.rank() != 2) throw ShapeError(op, t.shape(), {});
  }

  Var push(Node n) {
    nodes_.push_back(std::move(n));
    return Var{nodes_.size() - 1};
  }

  Var push_op(OpKind op, std::vector<std::size_t> inputs, Tensor value) {
    Node n;
    n.op = op;
    n.inputs = std::move(inputs);
    n.value = std::move(value);
    return push(std::move(n));
  }

  std::vector<Node> nodes_;
  std::size_t num_params_ = 0;
};

}  // namespace fishgrad
