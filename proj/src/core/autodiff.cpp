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

#include "pricenego/autodiff.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "pricenego/error.hpp"

namespace pricenego::ad {

const Matrix& Var::value() const { return graph_->value(id_); }

double Var::scalar() const {
  const Matrix& v = value();
  if (v.size() != 1) Fail(ErrorKind::kInvalidArgument, "scalar() on a non-scalar node");
  return v(0, 0);
}

Var Graph::Constant(Matrix value) { return Push(std::move(value), false, nullptr); }

Var Graph::Param(Parameter& parameter) {
  auto it = param_nodes_.find(&parameter);
  if (it != param_nodes_.end()) return Var(this, it->second);
  Var v = Push(parameter.value, record_, nullptr);
  nodes_[v.id()].param = &parameter;
  param_nodes_.emplace(&parameter, v.id());
  return v;
}

Var Graph::Push(Matrix value, bool requires_grad, BackwardFn backward) {
  Node node;
  node.value = std::move(value);
  node.requires_grad = record_ && requires_grad;
  if (node.requires_grad) node.backward = std::move(backward);
  nodes_.push_back(std::move(node));
  return Var(this, static_cast<int>(nodes_.size()) - 1);
}

void Graph::Accumulate(int id, const Matrix& g) { AccumulateExpr(id, g); }

Matrix& Graph::GradBuffer(int id) {
  Node& node = nodes_[id];
  if (node.grad.size() == 0) node.grad = Matrix::Zero(node.value.rows(), node.value.cols());
  return node.grad;
}

void Graph::Backward(Var loss) {
  if (&loss.graph() != this) Fail(ErrorKind::kInvalidArgument, "loss belongs to another graph");
  if (!record_) Fail(ErrorKind::kState, "backward on a non-recording graph");
  if (backward_done_) Fail(ErrorKind::kState, "backward already ran on this graph");
  Node& root = nodes_[loss.id()];
  if (root.value.size() != 1) Fail(ErrorKind::kInvalidArgument, "loss must be 1 x 1");
  if (!root.requires_grad) Fail(ErrorKind::kState, "loss is disconnected from every parameter");
  backward_done_ = true;
  root.grad = Matrix::Ones(1, 1);
  for (int id = loss.id(); id >= 0; --id) {
    Node& node = nodes_[id];
    if (!node.requires_grad || node.grad.size() == 0) continue;
    if (node.param != nullptr) {
      node.param->grad += node.grad;
    } else if (node.backward) {
      node.backward(node.grad);
    }
  }
}

namespace {

void CheckSameShape(Var a, Var b, const char* op) {
  if (a.rows() != b.rows() || a.cols() != b.cols()) {
    Fail(ErrorKind::kInvalidArgument,
         std::string(op) + ": shape mismatch " + std::to_string(a.rows()) + "x" +
             std::to_string(a.cols()) + " vs " + std::to_string(b.rows()) + "x" +
             std::to_string(b.cols()));
  }
}

void CheckColumn(Var a, const char* op) {
  if (a.cols() != 1) Fail(ErrorKind::kInvalidArgument, std::string(op) + ": expects a column vector");
}

bool AnyGrad(std::initializer_list<Var> vars) {
  for (const Var& v : vars) {
    if (v.graph().requires_grad(v.id())) return true;
  }
  return false;
}

}  // namespace

Var Add(Var a, Var b) {
  CheckSameShape(a, b, "Add");
  Graph& g = a.graph();
  int ia = a.id(), ib = b.id();
  return g.Push(a.value() + b.value(), AnyGrad({a, b}), [&g, ia, ib](const Matrix& up) {
    g.AccumulateExpr(ia, up);
    g.AccumulateExpr(ib, up);
  });
}

Var Sub(Var a, Var b) {
  CheckSameShape(a, b, "Sub");
  Graph& g = a.graph();
  int ia = a.id(), ib = b.id();
  return g.Push(a.value() - b.value(), AnyGrad({a, b}), [&g, ia, ib](const Matrix& up) {
    g.AccumulateExpr(ia, up);
    g.AccumulateExpr(ib, -up);
  });
}

Var Hadamard(Var a, Var b) {
  CheckSameShape(a, b, "Hadamard");
  Graph& g = a.graph();
  int ia = a.id(), ib = b.id();
  return g.Push(a.value().cwiseProduct(b.value()), AnyGrad({a, b}),
                [&g, ia, ib](const Matrix& up) {
                  g.AccumulateExpr(ia, up.cwiseProduct(g.value(ib)));
                  g.AccumulateExpr(ib, up.cwiseProduct(g.value(ia)));
                });
}

Var Scale(Var a, double s) {
  Graph& g = a.graph();
  int ia = a.id();
  return g.Push(a.value() * s, AnyGrad({a}),
                [&g, ia, s](const Matrix& up) { g.AccumulateExpr(ia, up * s); });
}

Var ScalarMul(Var a, Var b) {
  if (a.value().size() != 1) Fail(ErrorKind::kInvalidArgument, "ScalarMul: first operand must be 1 x 1");
  Graph& g = a.graph();
  int ia = a.id(), ib = b.id();
  return g.Push(b.value() * a.scalar(), AnyGrad({a, b}), [&g, ia, ib](const Matrix& up) {
    g.AccumulateExpr(ia, Matrix::Constant(1, 1, up.cwiseProduct(g.value(ib)).sum()));
    g.AccumulateExpr(ib, up * g.value(ia)(0, 0));
  });
}

Var MatMul(Var a, Var b) {
  if (a.cols() != b.rows()) {
    Fail(ErrorKind::kInvalidArgument, "MatMul: inner dimensions " + std::to_string(a.cols()) +
                                          " and " + std::to_string(b.rows()) + " differ");
  }
  Graph& g = a.graph();
  int ia = a.id(), ib = b.id();
  return g.Push(a.value() * b.value(), AnyGrad({a, b}), [&g, ia, ib](const Matrix& up) {
    if (g.requires_grad(ia)) g.AccumulateExpr(ia, up * g.value(ib).transpose());
    if (g.requires_grad(ib)) g.AccumulateExpr(ib, g.value(ia).transpose() * up);
  });
}

Var Transpose(Var a) {
  Graph& g = a.graph();
  int ia = a.id();
  return g.Push(a.value().transpose(), AnyGrad({a}),
                [&g, ia](const Matrix& up) { g.AccumulateExpr(ia, up.transpose()); });
}

Var Relu(Var a) {
  Graph& g = a.graph();
  int ia = a.id();
  return g.Push(a.value().cwiseMax(0.0), AnyGrad({a}), [&g, ia](const Matrix& up) {
    const Matrix& x = g.value(ia);
    g.AccumulateExpr(ia, (x.array() > 0.0).select(up, 0.0));
  });
}

Var Sigmoid(Var a) {
  Graph& g = a.graph();
  int ia = a.id();
  Matrix y = (1.0 + (-a.value().array()).exp()).inverse().matrix();
  Matrix dy = (y.array() * (1.0 - y.array())).matrix();
  return g.Push(std::move(y), AnyGrad({a}), [&g, ia, dy = std::move(dy)](const Matrix& up) {
    g.AccumulateExpr(ia, up.cwiseProduct(dy));
  });
}

Var Tanh(Var a) {
  Graph& g = a.graph();
  int ia = a.id();
  Matrix y = a.value().array().tanh().matrix();
  Matrix dy = (1.0 - y.array().square()).matrix();
  return g.Push(std::move(y), AnyGrad({a}), [&g, ia, dy = std::move(dy)](const Matrix& up) {
    g.AccumulateExpr(ia, up.cwiseProduct(dy));
  });
}

Var Abs(Var a) {
  Graph& g = a.graph();
  int ia = a.id();
  return g.Push(a.value().cwiseAbs(), AnyGrad({a}), [&g, ia](const Matrix& up) {
    const Matrix& x = g.value(ia);
    Matrix sign = x.unaryExpr([](double v) { return v > 0.0 ? 1.0 : (v < 0.0 ? -1.0 : 0.0); });
    g.AccumulateExpr(ia, up.cwiseProduct(sign));
  });
}

Var Sum(Var a) {
  Graph& g = a.graph();
  int ia = a.id();
  Eigen::Index r = a.rows(), c = a.cols();
  return g.Push(Matrix::Constant(1, 1, a.value().sum()), AnyGrad({a}),
                [&g, ia, r, c](const Matrix& up) {
                  g.AccumulateExpr(ia, Matrix::Constant(r, c, up(0, 0)));
                });
}

Var Pick(Var a, Eigen::Index i) {
  CheckColumn(a, "Pick");
  if (i < 0 || i >= a.rows()) Fail(ErrorKind::kInvalidArgument, "Pick: index out of range");
  Graph& g = a.graph();
  int ia = a.id();
  return g.Push(Matrix::Constant(1, 1, a.value()(i, 0)), AnyGrad({a}),
                [&g, ia, i](const Matrix& up) { g.GradBuffer(ia)(i, 0) += up(0, 0); });
}

Var Slice(Var a, Eigen::Index start, Eigen::Index count) {
  CheckColumn(a, "Slice");
  if (start < 0 || count < 0 || start + count > a.rows()) {
    Fail(ErrorKind::kInvalidArgument, "Slice: range out of bounds");
  }
  Graph& g = a.graph();
  int ia = a.id();
  return g.Push(a.value().middleRows(start, count), AnyGrad({a}),
                [&g, ia, start, count](const Matrix& up) {
                  g.GradBuffer(ia).middleRows(start, count) += up;
                });
}

Var Concat(std::span<const Var> parts) {
  if (parts.empty()) Fail(ErrorKind::kInvalidArgument, "Concat: no parts");
  Graph& g = parts.front().graph();
  Eigen::Index cols = parts.front().cols(), rows = 0;
  bool grad = false;
  std::vector<std::pair<int, Eigen::Index>> layout;
  for (const Var& p : parts) {
    if (p.cols() != cols) Fail(ErrorKind::kInvalidArgument, "Concat: column counts differ");
    layout.emplace_back(p.id(), p.rows());
    rows += p.rows();
    grad = grad || g.requires_grad(p.id());
  }
  Matrix out(rows, cols);
  Eigen::Index offset = 0;
  for (const Var& p : parts) {
    out.middleRows(offset, p.rows()) = p.value();
    offset += p.rows();
  }
  return g.Push(std::move(out), grad, [&g, layout = std::move(layout)](const Matrix& up) {
    Eigen::Index off = 0;
    for (const auto& [id, n] : layout) {
      if (g.requires_grad(id)) g.GradBuffer(id) += up.middleRows(off, n);
      off += n;
    }
  });
}

Var Columns(std::span<const Var> parts) {
  if (parts.empty()) Fail(ErrorKind::kInvalidArgument, "Columns: no parts");
  Graph& g = parts.front().graph();
  Eigen::Index rows = parts.front().rows();
  Matrix out(rows, static_cast<Eigen::Index>(parts.size()));
  std::vector<int> ids;
  bool grad = false;
  for (size_t k = 0; k < parts.size(); ++k) {
    CheckColumn(parts[k], "Columns");
    if (parts[k].rows() != rows) Fail(ErrorKind::kInvalidArgument, "Columns: row counts differ");
    out.col(static_cast<Eigen::Index>(k)) = parts[k].value();
    ids.push_back(parts[k].id());
    grad = grad || g.requires_grad(parts[k].id());
  }
  return g.Push(std::move(out), grad, [&g, ids = std::move(ids)](const Matrix& up) {
    for (size_t k = 0; k < ids.size(); ++k) {
      if (g.requires_grad(ids[k])) g.GradBuffer(ids[k]) += up.col(static_cast<Eigen::Index>(k));
    }
  });
}

namespace {

Vector SoftmaxValues(const Vector& logits) {
  double mx = -std::numeric_limits<double>::infinity();
  for (Eigen::Index i = 0; i < logits.size(); ++i) mx = std::max(mx, logits[i]);
  if (!std::isfinite(mx)) Fail(ErrorKind::kNumeric, "softmax over no finite logits");
  Vector e = (logits.array() - mx).exp().matrix();
  return e / e.sum();
}

}  // namespace

Var Softmax(Var logits) {
  CheckColumn(logits, "Softmax");
  Graph& g = logits.graph();
  int ia = logits.id();
  Vector p = SoftmaxValues(logits.value().col(0));
  Matrix y = p;
  return g.Push(std::move(y), AnyGrad({logits}), [&g, ia, p = std::move(p)](const Matrix& up) {
    double inner = up.col(0).dot(p);
    g.AccumulateExpr(ia, Matrix((p.array() * (up.col(0).array() - inner)).matrix()));
  });
}

Var LogSoftmax(Var logits, const Vector& additive_mask) {
  CheckColumn(logits, "LogSoftmax");
  if (additive_mask.size() != logits.rows()) Fail(ErrorKind::kInvalidArgument, "LogSoftmax: mask size");
  Graph& g = logits.graph();
  int ia = logits.id();
  Vector z = logits.value().col(0) + additive_mask;
  double mx = z.maxCoeff();
  if (!std::isfinite(mx)) Fail(ErrorKind::kNumeric, "log-softmax over no finite logits");
  // Scalar exp: Eigen's packet exp clamps -inf to a denormal instead of 0.
  double total = 0.0;
  for (Eigen::Index i = 0; i < z.size(); ++i) total += std::exp(z[i] - mx);
  const double lse = mx + std::log(total);
  Vector out = z.array() - lse;
  Vector probs(z.size());
  for (Eigen::Index i = 0; i < z.size(); ++i) probs[i] = std::exp(out[i]);
  return g.Push(Matrix(out), AnyGrad({logits}), [&g, ia, probs = std::move(probs)](const Matrix& up) {
    // Masked entries have probability 0 and receive no upstream gradient.
    Vector u = up.col(0);
    for (Eigen::Index i = 0; i < u.size(); ++i) {
      if (probs[i] == 0.0 && !std::isfinite(u[i])) u[i] = 0.0;
    }
    g.AccumulateExpr(ia, Matrix(u - probs * u.sum()));
  });
}

Var LogSoftmax(Var logits) { return LogSoftmax(logits, Vector::Zero(logits.rows())); }

Var Embedding(Var table, int index) {
  if (index < 0 || index >= table.cols()) Fail(ErrorKind::kInvalidArgument, "Embedding: index out of range");
  Graph& g = table.graph();
  int it = table.id();
  return g.Push(table.value().col(index), AnyGrad({table}),
                [&g, it, index](const Matrix& up) { g.GradBuffer(it).col(index) += up; });
}

Var EmbeddingSum(Var table, std::span<const int> indices) {
  Graph& g = table.graph();
  Matrix out = Matrix::Zero(table.rows(), 1);
  for (int idx : indices) {
    if (idx < 0 || idx >= table.cols()) Fail(ErrorKind::kInvalidArgument, "EmbeddingSum: index out of range");
    out += table.value().col(idx);
  }
  int it = table.id();
  const bool grad = AnyGrad({table}) && !indices.empty();
  std::vector<int> ids(indices.begin(), indices.end());
  return g.Push(std::move(out), grad,
                [&g, it, ids = std::move(ids)](const Matrix& up) {
                  Matrix& buf = g.GradBuffer(it);
                  for (int idx : ids) buf.col(idx) += up;
                });
}

Var LstmCell(Var x, Var h, Var c, Var w_input, Var w_hidden, Var bias) {
  CheckColumn(x, "LstmCell");
  CheckColumn(h, "LstmCell");
  CheckColumn(c, "LstmCell");
  const Eigen::Index H = h.rows();
  if (c.rows() != H || w_input.rows() != 4 * H || w_hidden.rows() != 4 * H ||
      w_hidden.cols() != H || w_input.cols() != x.rows() || bias.rows() != 4 * H || bias.cols() != 1) {
    Fail(ErrorKind::kInvalidArgument, "LstmCell: inconsistent shapes");
  }
  Graph& g = x.graph();
  Vector z = w_input.value() * x.value().col(0) + w_hidden.value() * h.value().col(0) + bias.value().col(0);
  auto sig = [](auto v) { return (1.0 + (-v).exp()).inverse(); };
  Vector gi = sig(z.segment(0, H).array());
  Vector gf = sig(z.segment(H, H).array());
  Vector gg = z.segment(2 * H, H).array().tanh();
  Vector go = sig(z.segment(3 * H, H).array());
  Vector c_next = gf.cwiseProduct(c.value().col(0)) + gi.cwiseProduct(gg);
  Vector tc = c_next.array().tanh();
  Vector h_next = go.cwiseProduct(tc);
  Matrix out(2 * H, 1);
  out.col(0) << h_next, c_next;
  int ix = x.id(), ih = h.id(), ic = c.id(), iw = w_input.id(), iu = w_hidden.id(), ib = bias.id();
  bool grad = AnyGrad({x, h, c, w_input, w_hidden, bias});
  return g.Push(std::move(out), grad,
                [&g, H, ix, ih, ic, iw, iu, ib, gi = std::move(gi), gf = std::move(gf),
                 gg = std::move(gg), go = std::move(go), tc = std::move(tc)](const Matrix& up) {
                  Vector dh = up.col(0).segment(0, H);
                  Vector dc = up.col(0).segment(H, H);
                  Vector dc_total = dc + (dh.array() * go.array() * (1.0 - tc.array().square())).matrix();
                  Vector dz(4 * H);
                  dz.segment(0, H) = (dc_total.array() * gg.array() * gi.array() * (1.0 - gi.array())).matrix();
                  dz.segment(H, H) =
                      (dc_total.array() * g.value(ic).col(0).array() * gf.array() * (1.0 - gf.array())).matrix();
                  dz.segment(2 * H, H) = (dc_total.array() * gi.array() * (1.0 - gg.array().square())).matrix();
                  dz.segment(3 * H, H) = (dh.array() * tc.array() * go.array() * (1.0 - go.array())).matrix();
                  if (g.requires_grad(ic)) g.AccumulateExpr(ic, Matrix(dc_total.cwiseProduct(gf)));
                  if (g.requires_grad(iw)) g.AccumulateExpr(iw, dz * g.value(ix).transpose());
                  if (g.requires_grad(iu)) g.AccumulateExpr(iu, dz * g.value(ih).transpose());
                  if (g.requires_grad(ib)) g.AccumulateExpr(ib, Matrix(dz));
                  if (g.requires_grad(ix)) g.AccumulateExpr(ix, g.value(iw).transpose() * dz);
                  if (g.requires_grad(ih)) g.AccumulateExpr(ih, g.value(iu).transpose() * dz);
                });
}

Var Dropout(Var a, double rate, std::mt19937_64& rng) {
  if (rate <= 0.0) return a;
  if (rate >= 1.0) Fail(ErrorKind::kInvalidArgument, "Dropout: rate must be < 1");
  std::bernoulli_distribution keep(1.0 - rate);
  Matrix mask(a.rows(), a.cols());
  for (Eigen::Index i = 0; i < mask.size(); ++i) mask.data()[i] = keep(rng) ? 1.0 / (1.0 - rate) : 0.0;
  return Hadamard(a, a.graph().Constant(std::move(mask)));
}

}  // namespace pricenego::ad
