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

#include "pricenego/pricing.hpp"

#include <cmath>

#include "pricenego/error.hpp"

namespace pricenego {

PriceFrame FrameFor(Role role, const Scenario& scenario) {
  const double listing = scenario.listing_price();
  if (role == Role::kSeller) return {role, listing, kSellerBottomFraction * listing};
  return {role, scenario.buyer_target, listing};
}

double NormalizePrice(double price, const PriceFrame& frame) {
  if (frame.target == frame.bottom) Fail(ErrorKind::kInvariant, "degenerate price frame");
  return (price - frame.bottom) / (frame.target - frame.bottom);
}

int PriceBucket(double normalized) {
  if (std::isnan(normalized)) Fail(ErrorKind::kNumeric, "price bucket of NaN");
  if (normalized < 0.0) return 0;
  if (normalized > 1.0) return 6;
  if (normalized >= 0.8) return 5;
  if (normalized >= 0.6) return 4;
  if (normalized >= 0.4) return 3;
  if (normalized >= 0.2) return 2;
  return 1;
}

std::array<double, kNumPriceBuckets> BucketOneHot(double normalized) {
  std::array<double, kNumPriceBuckets> out{};
  out[static_cast<size_t>(PriceBucket(normalized))] = 1.0;
  return out;
}

double ConcessionRange(Role role, const Scenario& scenario) {
  double range = role == Role::kSeller ? (1.0 - kSellerBottomFraction) * scenario.listing_price()
                                       : scenario.listing_price() - scenario.buyer_target;
  if (range < 0.0) Fail(ErrorKind::kInvariant, "negative concession range for " + scenario.id());
  return range;
}

double InitialPrice(Role role, const Scenario& scenario) {
  return role == Role::kSeller ? scenario.listing_price() : scenario.buyer_target;
}

double RoundToCents(double price) { return std::round(price * 100.0) / 100.0; }

double AdjustPrice(Role role, double current, RatioClass ratio, const Scenario& scenario,
                   std::optional<double> opponent_last) {
  if (!(current > 0.0)) Fail(ErrorKind::kInvalidArgument, "current price must be positive");
  const double step = RatioValue(ratio) * ConcessionRange(role, scenario);
  double next = RoundToCents(role == Role::kSeller ? current - step : current + step);
  if (opponent_last) {
    if (role == Role::kSeller && next < *opponent_last) next = *opponent_last;
    if (role == Role::kBuyer && next > *opponent_last) next = *opponent_last;
  }
  // Never move away from the opponent, even when the clamp target is behind us.
  if (role == Role::kSeller) next = std::min(next, current);
  if (role == Role::kBuyer) next = std::max(next, current);
  return next;
}

}  // namespace pricenego
