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

#include "pricenego/nn.hpp"

#include <cmath>

#include "pricenego/error.hpp"

namespace pricenego {

double Uniform01(std::mt19937_64& rng) { return static_cast<double>(rng() >> 11) * 0x1.0p-53; }

int SampleIndex(const double* weights, int n, std::mt19937_64& rng) {
  double total = 0.0;
  for (int i = 0; i < n; ++i) total += weights[i];
  if (!(total > 0.0) || !std::isfinite(total)) Fail(ErrorKind::kNumeric, "cannot sample from zero weights");
  double u = Uniform01(rng) * total;
  int last = -1;
  for (int i = 0; i < n; ++i) {
    if (weights[i] <= 0.0) continue;
    last = i;
    u -= weights[i];
    if (u < 0.0) return i;
  }
  return last;
}

Linear::Linear(ParameterStore& store, const std::string& name, int in, int out, std::mt19937_64& rng) {
  double scale = std::sqrt(6.0 / static_cast<double>(in + out));
  weight_ = &store.AddUniform(name + ".W", out, in, scale, rng);
  bias_ = &store.AddZeros(name + ".b", out, 1);
}

ad::Var Linear::operator()(ad::Graph& g, ad::Var x) const {
  return ad::MatMul(g.Param(*weight_), x) + g.Param(*bias_);
}

Mlp::Mlp(ParameterStore& store, const std::string& name, const std::vector<int>& sizes, std::mt19937_64& rng) {
  if (sizes.size() < 2) Fail(ErrorKind::kInvalidArgument, "Mlp needs at least input and output sizes");
  for (size_t i = 0; i + 1 < sizes.size(); ++i) {
    layers_.emplace_back(store, name + ".l" + std::to_string(i), sizes[i], sizes[i + 1], rng);
  }
}

ad::Var Mlp::operator()(ad::Graph& g, ad::Var x, const ForwardMode& mode) const {
  ad::Var h = x;
  for (size_t i = 0; i < layers_.size(); ++i) {
    h = layers_[i](g, h);
    if (i + 1 < layers_.size()) h = mode.MaybeDropout(ad::Relu(h));
  }
  return h;
}

Lstm::Lstm(ParameterStore& store, const std::string& name, int input, int hidden, int layers,
           std::mt19937_64& rng)
    : hidden_(hidden) {
  for (int l = 0; l < layers; ++l) {
    const std::string prefix = name + ".l" + std::to_string(l);
    const int in = l == 0 ? input : hidden;
    double scale = 1.0 / std::sqrt(static_cast<double>(hidden));
    w_input_.push_back(&store.AddUniform(prefix + ".Wx", 4 * hidden, in, scale, rng));
    w_hidden_.push_back(&store.AddUniform(prefix + ".Wh", 4 * hidden, hidden, scale, rng));
    Matrix b = Matrix::Zero(4 * hidden, 1);
    b.middleRows(hidden, hidden).setOnes();  // forget-gate bias
    bias_.push_back(&store.Add(prefix + ".b", std::move(b)));
  }
}

Lstm::State Lstm::Zero(ad::Graph& g) const {
  State s;
  for (int l = 0; l < layers(); ++l) {
    s.h.push_back(g.Constant(Matrix::Zero(hidden_, 1)));
    s.c.push_back(g.Constant(Matrix::Zero(hidden_, 1)));
  }
  return s;
}

Lstm::State Lstm::FromValues(ad::Graph& g, const StateValues& values) const {
  if (static_cast<int>(values.h.size()) != layers() || static_cast<int>(values.c.size()) != layers()) {
    Fail(ErrorKind::kInvalidArgument, "LSTM state has the wrong number of layers");
  }
  State s;
  for (int l = 0; l < layers(); ++l) {
    s.h.push_back(g.Constant(Matrix(values.h[static_cast<size_t>(l)])));
    s.c.push_back(g.Constant(Matrix(values.c[static_cast<size_t>(l)])));
  }
  return s;
}

Lstm::StateValues Lstm::Values(const State& state) {
  StateValues v;
  for (const ad::Var& h : state.h) v.h.push_back(h.value().col(0));
  for (const ad::Var& c : state.c) v.c.push_back(c.value().col(0));
  return v;
}

Lstm::State Lstm::Step(ad::Graph& g, const State& state, ad::Var x, const ForwardMode& mode) const {
  State next;
  ad::Var input = x;
  for (int l = 0; l < layers(); ++l) {
    const size_t i = static_cast<size_t>(l);
    if (l > 0) input = mode.MaybeDropout(input);
    ad::Var hc = ad::LstmCell(input, state.h[i], state.c[i], g.Param(*w_input_[i]), g.Param(*w_hidden_[i]),
                              g.Param(*bias_[i]));
    ad::Var h = ad::Slice(hc, 0, hidden_);
    ad::Var c = ad::Slice(hc, hidden_, hidden_);
    next.h.push_back(h);
    next.c.push_back(c);
    input = h;
  }
  return next;
}

}  // namespace pricenego
