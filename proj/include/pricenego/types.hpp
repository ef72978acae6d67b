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

#ifndef PRICENEGO_TYPES_HPP_
#define PRICENEGO_TYPES_HPP_

#include <array>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace pricenego {

using Tokens = std::vector<std::string>;

enum class Role { kSeller = 0, kBuyer = 1 };
inline constexpr std::array<Role, 2> kRoles = {Role::kSeller, Role::kBuyer};

inline Role Opponent(Role r) { return r == Role::kSeller ? Role::kBuyer : Role::kSeller; }
std::string_view RoleName(Role r);
Role ParseRole(std::string_view name);

enum class Category { kBike = 0, kCar, kElectronics, kFurniture, kHousing, kPhone };
inline constexpr int kNumCategories = 6;
std::string_view CategoryName(Category c);
Category ParseCategory(std::string_view name);

// The six price-level decisions; the index is the model's class id.
enum class Action { kNegotiate = 0, kConcede, kOffer, kAccept, kReject, kQuit };
inline constexpr int kNumActions = 6;
inline constexpr std::array<Action, kNumActions> kActions = {
    Action::kNegotiate, Action::kConcede, Action::kOffer,
    Action::kAccept,    Action::kReject,  Action::kQuit};
std::string_view ActionName(Action a);
Action ParseAction(std::string_view name);
inline int Index(Action a) { return static_cast<int>(a); }

// Concession step as a fraction of the role's concession range: index * 0.2.
enum class RatioClass { k0 = 0, k20, k40, k60, k80, k100 };
inline constexpr int kNumRatios = 6;
inline double RatioValue(RatioClass r) { return 0.2 * static_cast<int>(r); }
inline int Index(RatioClass r) { return static_cast<int>(r); }
inline RatioClass RatioFromIndex(int i) { return static_cast<RatioClass>(i); }
// Nearest grid point to a normalized step; ties resolve to the smaller class.
RatioClass NearestRatio(double step);

// Price-carrying dialogue events recorded outside the utterance text.
enum class EventType { kOffer, kAccept, kReject, kQuit };
std::string_view EventName(EventType e);
EventType ParseEvent(std::string_view name);

struct TurnEvent {
  EventType type;
  std::optional<double> price;
};

}  // namespace pricenego

#endif  // PRICENEGO_TYPES_HPP_
