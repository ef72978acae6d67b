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

#ifndef PRICENEGO_CORPUS_HPP_
#define PRICENEGO_CORPUS_HPP_

#include <array>
#include <cstddef>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"
#include "pricenego/text.hpp"
#include "pricenego/types.hpp"

namespace pricenego {

// An advertised item: shared by scenarios and the external catalog.
struct Item {
  std::string id;
  Category category = Category::kBike;
  std::vector<double> image_features;
  std::string title_text;
  std::string description_text;
  Tokens title;
  Tokens description;
  double listing_price = 0.0;
};

using CatalogItem = Item;

struct Scenario {
  Item item;
  double seller_bottom = 0.0;
  double buyer_target = 0.0;
  std::string image_url;

  const std::string& id() const { return item.id; }
  double listing_price() const { return item.listing_price; }
};

struct TurnRecord {
  Role speaker = Role::kSeller;
  std::string text;
  Tokens tokens;               // price-abstracted, at most kMaxTurnTokens
  std::vector<double> price_values;  // one per sentinel in `tokens`
  std::optional<TurnEvent> event;
  std::optional<Action> action;
  std::optional<RatioClass> ratio;
  std::string intent;
};

struct DialogueOutcome {
  bool agreed = false;
  std::optional<double> price;
};

struct Dialogue {
  std::string scenario_id;
  std::vector<TurnRecord> turns;
  DialogueOutcome outcome;
};

using ScenarioIndex = std::map<std::string, const Scenario*>;
ScenarioIndex IndexScenarios(const std::vector<Scenario>& scenarios);

// Line-oriented loaders. All malformed or invariant-violating records are
// reported together, each with its 1-based line number; nothing is returned
// unless every record is valid.
std::vector<Scenario> LoadScenarios(const std::string& path);
std::vector<CatalogItem> LoadCatalog(const std::string& path);
// Scenario listings bound bare-numeral price detection; dialogues whose
// scenario is unknown use currency-prefixed detection only.
std::vector<Dialogue> LoadDialogues(const std::string& path, const ScenarioIndex& scenarios);

Scenario ScenarioFromJson(const nlohmann::json& j);
CatalogItem ItemFromJson(const nlohmann::json& j);
nlohmann::json ScenarioToJson(const Scenario& s);
nlohmann::json ItemToJson(const Item& item);
Dialogue DialogueFromJson(const nlohmann::json& j, const ScenarioIndex& scenarios);
nlohmann::json DialogueToJson(const Dialogue& d);
void WriteDialogues(const std::string& path, const std::vector<Dialogue>& dialogues);

void ValidateScenario(const Scenario& s);
void ValidateItem(const Item& item);
void ValidateDialogue(const Dialogue& d);

// Builds a turn from raw text: tokenization, price abstraction, truncation.
TurnRecord MakeTurn(Role speaker, const std::string& text, std::optional<double> listing_price,
                    std::optional<TurnEvent> event = std::nullopt);

// Mean agreed price over the item's agreed dialogues.
double GroundTruthPrice(const std::string& scenario_id, const std::vector<Dialogue>& dialogues);
// Ground truth for every scenario with at least one agreement.
std::map<std::string, double> GroundTruthPrices(const std::vector<Dialogue>& dialogues);

// The speaker's own price commitment in a turn: an offer event's price, else
// the mentioned price most favorable to the speaker (seller: highest, buyer:
// lowest). Empty when the turn names no price.
std::optional<double> SpeakerProposal(const TurnRecord& turn);

// Fills action, ratio and intent for every turn of a human dialogue.
void DeriveLabels(Dialogue& dialogue, const Scenario& scenario);

inline constexpr std::array<const char*, 11> kIntents = {
    "intro", "inquiry", "inform", "propose-price", "counter-price", "agree",
    "offer", "accept", "reject", "quit", "unknown"};

std::string ExtractIntent(const TurnRecord& turn, const TurnRecord* prev_turn, const Scenario* scenario);

struct ClassHistogram {
  std::array<size_t, kNumActions> actions{};
  std::array<size_t, kNumRatios> ratios{};
};
ClassHistogram ClassFrequencies(const std::vector<Dialogue>& dialogues);

}  // namespace pricenego

#endif  // PRICENEGO_CORPUS_HPP_
