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

#ifndef PRICENEGO_PRICING_HPP_
#define PRICENEGO_PRICING_HPP_

// Deterministic price arithmetic shared by the encoder, the policy heads and
// the session state machine.

#include <array>
#include <optional>

#include "pricenego/corpus.hpp"
#include "pricenego/types.hpp"

namespace pricenego {

inline constexpr double kSellerBottomFraction = 0.7;
inline constexpr int kNumPriceBuckets = 7;

// Per-role normalization frame: target maps to 1, bottom line to 0.
struct PriceFrame {
  Role role;
  double target;
  double bottom;
};

PriceFrame FrameFor(Role role, const Scenario& scenario);
double NormalizePrice(double price, const PriceFrame& frame);

// 0 below 0; 1..5 for [0, .2), [.2, .4), [.4, .6), [.6, .8), [.8, 1]; 6 above 1.
int PriceBucket(double normalized);
std::array<double, kNumPriceBuckets> BucketOneHot(double normalized);

// Seller: 0.3 x listing. Buyer: listing - buyer target.
double ConcessionRange(Role role, const Scenario& scenario);
double InitialPrice(Role role, const Scenario& scenario);

// Moves `current` toward the opponent by ratio x range, rounds to cents and
// clamps so the result never crosses the opponent's standing proposal.
double AdjustPrice(Role role, double current, RatioClass ratio, const Scenario& scenario,
                   std::optional<double> opponent_last);

double RoundToCents(double price);

}  // namespace pricenego

#endif  // PRICENEGO_PRICING_HPP_
