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

#include "pricenego/policy.hpp"

#include <cmath>
#include <limits>

#include "pricenego/error.hpp"

namespace pricenego {

bool InvokesAdjuster(Action a) { return a == Action::kConcede || a == Action::kOffer; }

Vector MaskVector(const ActionMask& mask) {
  Vector v(kNumActions);
  bool any = false;
  for (int i = 0; i < kNumActions; ++i) {
    v[i] = mask[static_cast<size_t>(i)] ? 0.0 : -std::numeric_limits<double>::infinity();
    any = any || mask[static_cast<size_t>(i)];
  }
  if (!any) Fail(ErrorKind::kInvalidArgument, "action mask has no legal action");
  return v;
}

PolicyHeads::PolicyHeads(ParameterStore& store, const std::string& name, int state_dim, int hidden,
                         std::mt19937_64& rng)
    : state_dim_(state_dim),
      action_(store, name + ".action", {state_dim, hidden, hidden, hidden, kNumActions}, rng),
      ratio_(store, name + ".ratio", {state_dim + kNumActions, hidden, hidden, hidden, kNumRatios}, rng) {}

ad::Var PolicyHeads::ActionLogits(ad::Graph& g, ad::Var state, const ForwardMode& mode) const {
  if (state.rows() != state_dim_) Fail(ErrorKind::kInvalidArgument, "dialogue state has the wrong length");
  return action_(g, state, mode);
}

ad::Var PolicyHeads::RatioLogits(ad::Graph& g, ad::Var state, Action action, const ForwardMode& mode) const {
  if (!InvokesAdjuster(action)) {
    Fail(ErrorKind::kInvalidArgument,
         "price adjuster invoked for action " + std::string(ActionName(action)));
  }
  if (state.rows() != state_dim_) Fail(ErrorKind::kInvalidArgument, "dialogue state has the wrong length");
  Matrix onehot = Matrix::Zero(kNumActions, 1);
  onehot(Index(action), 0) = 1.0;
  std::array<ad::Var, 2> parts = {state, g.Constant(std::move(onehot))};
  return ratio_(g, ad::Concat(parts), mode);
}

ActionProbs PredictAction(const PolicyHeads& heads, const Vector& state, const ActionMask& mask) {
  ad::Graph g(false);
  ad::Var logits = heads.ActionLogits(g, g.Constant(Matrix(state)), kInference);
  Vector logp = ad::LogSoftmax(logits, MaskVector(mask)).value().col(0);
  ActionProbs out{};
  for (int i = 0; i < kNumActions; ++i) out[static_cast<size_t>(i)] = std::exp(logp[i]);
  return out;
}

RatioProbs PredictRatio(const PolicyHeads& heads, const Vector& state, Action action) {
  ad::Graph g(false);
  Vector p = ad::Softmax(heads.RatioLogits(g, g.Constant(Matrix(state)), action, kInference)).value().col(0);
  RatioProbs out{};
  for (int i = 0; i < kNumRatios; ++i) out[static_cast<size_t>(i)] = p[i];
  return out;
}

}  // namespace pricenego
