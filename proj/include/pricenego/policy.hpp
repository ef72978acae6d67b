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

#ifndef PRICENEGO_POLICY_HPP_
#define PRICENEGO_POLICY_HPP_

// The action predictor and price adjuster heads.

#include <array>
#include <string>

#include "pricenego/nn.hpp"
#include "pricenego/types.hpp"

namespace pricenego {

using ActionMask = std::array<bool, kNumActions>;
using ActionProbs = std::array<double, kNumActions>;
using RatioProbs = std::array<double, kNumRatios>;

inline constexpr ActionMask kAllActions = {true, true, true, true, true, true};

bool InvokesAdjuster(Action a);

// 0 for legal entries, -infinity for illegal ones. Throws when nothing is
// legal.
Vector MaskVector(const ActionMask& mask);

class PolicyHeads {
 public:
  PolicyHeads() = default;
  // Both heads are four affine layers: state -> hidden -> hidden -> hidden -> 6.
  PolicyHeads(ParameterStore& store, const std::string& name, int state_dim, int hidden, std::mt19937_64& rng);

  ad::Var ActionLogits(ad::Graph& g, ad::Var state, const ForwardMode& mode) const;
  // Throws unless the action is Concede or Offer.
  ad::Var RatioLogits(ad::Graph& g, ad::Var state, Action action, const ForwardMode& mode) const;

  const Mlp& action_head() const { return action_; }
  const Mlp& ratio_head() const { return ratio_; }
  int state_dim() const { return state_dim_; }

 private:
  int state_dim_ = 0;
  Mlp action_;
  Mlp ratio_;
};

ActionProbs PredictAction(const PolicyHeads& heads, const Vector& state, const ActionMask& mask);
RatioProbs PredictRatio(const PolicyHeads& heads, const Vector& state, Action action);

}  // namespace pricenego

#endif  // PRICENEGO_POLICY_HPP_
