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

#include <cmath>
#include <numeric>
#include <random>

#include "doctest.h"
#include "pricenego/error.hpp"
#include "pricenego/learn.hpp"
#include "pricenego/policy.hpp"

namespace pricenego {
namespace {

constexpr int kStateDim = 12;

struct Heads {
  std::mt19937_64 rng{5};
  ParameterStore store;
  PolicyHeads heads{store, "policy", kStateDim, 8, rng};
  Vector state = Vector::Random(kStateDim);
};

double Total(const ActionProbs& p) { return std::accumulate(p.begin(), p.end(), 0.0); }

TEST_CASE("adjuster is invoked only for concede and offer") {
  for (Action a : kActions) CHECK(InvokesAdjuster(a) == (a == Action::kConcede || a == Action::kOffer));
}

TEST_CASE("mask vector") {
  ActionMask m{};
  CHECK_THROWS_AS(MaskVector(m), Error);
  m[Index(Action::kQuit)] = true;
  const Vector v = MaskVector(m);
  for (Action a : kActions) CHECK((a == Action::kQuit ? v[Index(a)] == 0.0 : std::isinf(v[Index(a)])));
}

TEST_CASE("zero final layer gives uniform action and ratio distributions") {
  Heads h;
  h.store.Get("policy.action.l3.W").value.setZero();
  h.store.Get("policy.action.l3.b").value.setZero();
  h.store.Get("policy.ratio.l3.W").value.setZero();
  h.store.Get("policy.ratio.l3.b").value.setZero();
  for (double p : PredictAction(h.heads, h.state, kAllActions)) CHECK(p == doctest::Approx(1.0 / 6.0));
  for (double p : PredictRatio(h.heads, h.state, Action::kOffer)) CHECK(p == doctest::Approx(1.0 / 6.0));
}

TEST_CASE("masked actions get exactly zero mass") {
  Heads h;
  ActionMask m{};
  m[Index(Action::kAccept)] = m[Index(Action::kReject)] = true;
  const ActionProbs p = PredictAction(h.heads, h.state, m);
  CHECK(Total(p) == doctest::Approx(1.0).epsilon(1e-12));
  for (Action a : kActions) {
    if (!m[Index(a)]) CHECK(p[Index(a)] == 0.0);
  }
  CHECK(p[Index(Action::kAccept)] > 0.0);
}

TEST_CASE("masking renormalizes the unmasked softmax") {
  Heads h;
  const ActionProbs full = PredictAction(h.heads, h.state, kAllActions);
  ActionMask m = kAllActions;
  m[Index(Action::kAccept)] = m[Index(Action::kReject)] = false;
  const ActionProbs part = PredictAction(h.heads, h.state, m);
  const double kept = 1.0 - full[Index(Action::kAccept)] - full[Index(Action::kReject)];
  for (Action a : kActions) {
    if (m[Index(a)]) CHECK(part[Index(a)] == doctest::Approx(full[Index(a)] / kept).epsilon(1e-12));
  }
}

TEST_CASE("logit shift leaves the argmax unchanged") {
  Heads h;
  const ActionProbs before = PredictAction(h.heads, h.state, kAllActions);
  h.store.Get("policy.action.l3.b").value.array() += 3.7;
  const ActionProbs after = PredictAction(h.heads, h.state, kAllActions);
  for (int i = 0; i < kNumActions; ++i) CHECK(after[i] == doctest::Approx(before[i]).epsilon(1e-12));
}

TEST_CASE("ratio head refuses actions that do not adjust the price") {
  Heads h;
  for (Action a : kActions) {
    if (InvokesAdjuster(a)) {
      const RatioProbs p = PredictRatio(h.heads, h.state, a);
      CHECK(std::accumulate(p.begin(), p.end(), 0.0) == doctest::Approx(1.0));
      const RatioProbs again = PredictRatio(h.heads, h.state, a);
      CHECK(p == again);
    } else {
      CHECK_THROWS_AS(PredictRatio(h.heads, h.state, a), Error);
    }
  }
}

TEST_CASE("state length is checked") {
  Heads h;
  CHECK_THROWS_AS(PredictAction(h.heads, Vector::Zero(kStateDim + 1), kAllActions), Error);
  CHECK_THROWS_AS(PredictRatio(h.heads, Vector::Zero(kStateDim - 1), Action::kOffer), Error);
}

TEST_CASE("weighted cross-entropy gradient at a uniform prediction") {
  // loss = -w_c log softmax(z)_c; at z = 0 the gradient is w_c (1/6 - [k == c]).
  const std::array<double, kNumRatios> w = {0.5, 1.0, 2.0, 1.5, 0.7, 3.0};
  auto loss_at = [&](const Matrix& z, int c) {
    ad::Graph g(false);
    return WeightedCrossEntropy(g.Constant(z), c, w).scalar();
  };
  for (int c = 0; c < kNumRatios; ++c) {
    Parameter z("z", Matrix::Zero(kNumRatios, 1));
    ad::Graph g;
    g.Backward(WeightedCrossEntropy(g.Param(z), c, w));
    for (int k = 0; k < kNumRatios; ++k) {
      const double want = w[static_cast<size_t>(c)] * (1.0 / 6.0 - (k == c ? 1.0 : 0.0));
      CHECK(z.grad(k, 0) == doctest::Approx(want).epsilon(1e-12));
      Matrix up = z.value, down = z.value;
      up(k, 0) += 1e-5;
      down(k, 0) -= 1e-5;
      const double fd = (loss_at(up, c) - loss_at(down, c)) / 2e-5;
      CHECK(std::abs(fd - z.grad(k, 0)) < 1e-4);
    }
  }
  CHECK(loss_at(Matrix::Zero(kNumRatios, 1), 2) == doctest::Approx(2.0 * std::log(6.0)));
}

}  // namespace
}  // namespace pricenego
