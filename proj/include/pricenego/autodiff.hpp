// Copyright 2026 The pricenego Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#ifndef PRICENEGO_AUTODIFF_HPP_
#define PRICENEGO_AUTODIFF_HPP_

// Tape-based reverse-mode differentiation over dense double matrices.
//
// A Graph records every operation applied to its Vars in creation order, so
// the reverse sweep in Graph::Backward is a plain reverse iteration. Column
// vectors are n x 1 matrices throughout. Graphs constructed with
// recording disabled evaluate values only and are used for inference.

#include <deque>
#include <functional>
#include <random>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include <Eigen/Dense>

namespace pricenego {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

// A named trainable tensor with its accumulated gradient.
struct Parameter {
  std::string name;
  Matrix value;
  Matrix grad;

  Parameter() = default;
  Parameter(std::string n, Matrix v)
      : name(std::move(n)), value(std::move(v)),
        grad(Matrix::Zero(value.rows(), value.cols())) {}
};

namespace ad {

class Graph;

class Var {
 public:
  Var() = default;
  Var(Graph* graph, int id) : graph_(graph), id_(id) {}

  Graph& graph() const { return *graph_; }
  int id() const { return id_; }
  bool valid() const { return graph_ != nullptr; }
  const Matrix& value() const;
  double scalar() const;
  Eigen::Index rows() const { return value().rows(); }
  Eigen::Index cols() const { return value().cols(); }

 private:
  Graph* graph_ = nullptr;
  int id_ = -1;
};

class Graph {
 public:
  using BackwardFn = std::function<void(const Matrix& upstream)>;

  explicit Graph(bool record = true) : record_(record) {}
  Graph(const Graph&) = delete;
  Graph& operator=(const Graph&) = delete;

  bool recording() const { return record_; }

  Var Constant(Matrix value);
  // One node per parameter per graph; gradients flow into Parameter::grad
  // when Backward runs.
  Var Param(Parameter& parameter);

  // Seeds d(loss)/d(loss) = 1 and sweeps in reverse creation order. The
  // loss must be a 1 x 1 node of this graph that depends on at least one
  // parameter.
  void Backward(Var loss);

  const Matrix& value(int id) const { return nodes_[id].value; }
  bool requires_grad(int id) const { return nodes_[id].requires_grad; }
  size_t size() const { return nodes_.size(); }

  // Used by op implementations.
  Var Push(Matrix value, bool requires_grad, BackwardFn backward);
  void Accumulate(int id, const Matrix& g);
  template <typename Expr>
  void AccumulateExpr(int id, const Expr& g) {
    Node& node = nodes_[id];
    if (!node.requires_grad) return;
    if (node.grad.size() == 0) {
      node.grad = g;
    } else {
      node.grad += g;
    }
  }
  // Direct access to a node's gradient buffer, allocated on demand; lets
  // sparse ops (embedding lookups) scatter without a dense temporary.
  Matrix& GradBuffer(int id);

 private:
  struct Node {
    Matrix value;
    Matrix grad;
    bool requires_grad = false;
    Parameter* param = nullptr;
    BackwardFn backward;
  };

  bool record_;
  bool backward_done_ = false;
  std::deque<Node> nodes_;
  std::unordered_map<Parameter*, int> param_nodes_;
};

// Elementwise and linear-algebra ops. Shapes must agree exactly unless the
// op says otherwise.
Var Add(Var a, Var b);
Var Sub(Var a, Var b);
Var Hadamard(Var a, Var b);
Var Scale(Var a, double s);
// a (1 x 1) times every entry of b.
Var ScalarMul(Var a, Var b);
Var MatMul(Var a, Var b);
Var Transpose(Var a);
Var Relu(Var a);
Var Sigmoid(Var a);
Var Tanh(Var a);
Var Abs(Var a);
Var Sum(Var a);
// Entry i of a column vector, as 1 x 1.
Var Pick(Var a, Eigen::Index i);
// Rows [start, start + count) of a column vector.
Var Slice(Var a, Eigen::Index start, Eigen::Index count);
// Vertical stacking of matrices with equal column counts.
Var Concat(std::span<const Var> parts);
// Horizontal stacking of column vectors into a matrix.
Var Columns(std::span<const Var> parts);

// Column-vector softmax / log-softmax with max subtraction. `additive_mask`
// (same shape, 0 or -infinity) removes entries from the normalization.
Var Softmax(Var logits);
Var LogSoftmax(Var logits);
Var LogSoftmax(Var logits, const Vector& additive_mask);

// Column `index` of a d x |V| embedding table.
Var Embedding(Var table, int index);
// Sum of columns `indices` (repeats count); zero vector when empty.
Var EmbeddingSum(Var table, std::span<const int> indices);

// Fused LSTM step. Gate layout of the 4H rows: input, forget, cell, output.
// Returns [h'; c'] as a 2H x 1 vector.
Var LstmCell(Var x, Var h, Var c, Var w_input, Var w_hidden, Var bias);

// Inverted dropout with a constant Bernoulli mask drawn from `rng`.
Var Dropout(Var a, double rate, std::mt19937_64& rng);

inline Var operator+(Var a, Var b) { return Add(a, b); }
inline Var operator-(Var a, Var b) { return Sub(a, b); }

}  // namespace ad
}  // namespace pricenego

#endif  // PRICENEGO_AUTODIFF_HPP_
