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

#include "pricenego/corpus.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <set>
#include <unordered_set>

#include "pricenego/error.hpp"
#include "pricenego/pricing.hpp"

namespace pricenego {

using nlohmann::json;

ScenarioIndex IndexScenarios(const std::vector<Scenario>& scenarios) {
  ScenarioIndex index;
  for (const Scenario& s : scenarios) index[s.id()] = &s;
  return index;
}

namespace {

double RequirePrice(const json& j, const char* key) {
  if (!j.contains(key) || !j.at(key).is_number()) {
    Fail(ErrorKind::kParse, std::string("missing numeric field '") + key + "'");
  }
  return j.at(key).get<double>();
}

std::string RequireString(const json& j, const char* key) {
  if (!j.contains(key) || !j.at(key).is_string()) {
    Fail(ErrorKind::kParse, std::string("missing string field '") + key + "'");
  }
  return j.at(key).get<std::string>();
}

std::string OptionalString(const json& j, const char* key) {
  if (!j.contains(key) || j.at(key).is_null()) return {};
  if (!j.at(key).is_string()) Fail(ErrorKind::kParse, std::string("field '") + key + "' must be a string");
  return j.at(key).get<std::string>();
}

void ReadItemFields(const json& j, Item& item) {
  if (!j.is_object()) Fail(ErrorKind::kParse, "record is not a JSON object");
  item.id = RequireString(j, "id");
  item.category = ParseCategory(RequireString(j, "category"));
  item.title_text = OptionalString(j, "title");
  item.description_text = OptionalString(j, "description");
  item.title = Tokenize(item.title_text);
  item.description = Tokenize(item.description_text);
  item.listing_price = RequirePrice(j, "listing_price");
  if (!j.contains("image_features") || !j.at("image_features").is_array()) {
    Fail(ErrorKind::kParse, "missing array field 'image_features'");
  }
  item.image_features.clear();
  for (const json& x : j.at("image_features")) {
    if (!x.is_number()) Fail(ErrorKind::kParse, "image_features must hold numbers");
    item.image_features.push_back(x.get<double>());
  }
}

bool PositiveFinite(double x) { return std::isfinite(x) && x > 0.0; }

template <typename T, typename ParseFn>
std::vector<T> LoadLines(const std::string& path, ParseFn parse) {
  std::ifstream f(path);
  if (!f) Fail(ErrorKind::kIo, "cannot open " + path);
  std::vector<T> out;
  std::string line;
  size_t line_no = 0;
  std::string errors;
  std::optional<ErrorKind> first_kind;
  while (std::getline(f, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      out.push_back(parse(json::parse(line)));
    } catch (const json::exception& e) {
      if (!first_kind) first_kind = ErrorKind::kParse;
      errors += "\n  line " + std::to_string(line_no) + ": " + e.what();
    } catch (const Error& e) {
      if (!first_kind) first_kind = e.kind();
      errors += "\n  line " + std::to_string(line_no) + ": " + e.what();
    }
  }
  if (first_kind) Fail(*first_kind, path + ": rejected records:" + errors);
  return out;
}

}  // namespace

void ValidateItem(const Item& item) {
  if (item.id.empty()) Fail(ErrorKind::kInvariant, "item id is empty");
  if (!PositiveFinite(item.listing_price)) Fail(ErrorKind::kInvariant, "listing_price must be positive and finite");
  for (double x : item.image_features) {
    if (!std::isfinite(x)) Fail(ErrorKind::kInvariant, "image_features contain a non-finite value");
  }
}

void ValidateScenario(const Scenario& s) {
  ValidateItem(s.item);
  if (!PositiveFinite(s.seller_bottom) || !PositiveFinite(s.buyer_target)) {
    Fail(ErrorKind::kInvariant, "scenario prices must be positive and finite");
  }
  if (!(s.buyer_target < s.listing_price())) {
    Fail(ErrorKind::kInvariant, "buyer_target must be below listing_price");
  }
  if (!(s.seller_bottom < s.listing_price())) {
    Fail(ErrorKind::kInvariant, "seller_bottom must be below listing_price");
  }
}

CatalogItem ItemFromJson(const json& j) {
  CatalogItem item;
  ReadItemFields(j, item);
  ValidateItem(item);
  return item;
}

Scenario ScenarioFromJson(const json& j) {
  Scenario s;
  ReadItemFields(j, s.item);
  s.seller_bottom = RequirePrice(j, "seller_bottom");
  s.buyer_target = RequirePrice(j, "buyer_target");
  s.image_url = OptionalString(j, "image_url");
  ValidateScenario(s);
  return s;
}

json ItemToJson(const Item& item) {
  return json{{"id", item.id},
              {"category", CategoryName(item.category)},
              {"title", item.title_text},
              {"description", item.description_text},
              {"listing_price", item.listing_price},
              {"image_features", item.image_features}};
}

json ScenarioToJson(const Scenario& s) {
  json j = ItemToJson(s.item);
  j["seller_bottom"] = s.seller_bottom;
  j["buyer_target"] = s.buyer_target;
  if (!s.image_url.empty()) j["image_url"] = s.image_url;
  return j;
}

std::vector<Scenario> LoadScenarios(const std::string& path) {
  return LoadLines<Scenario>(path, [](const json& j) { return ScenarioFromJson(j); });
}

std::vector<CatalogItem> LoadCatalog(const std::string& path) {
  return LoadLines<CatalogItem>(path, [](const json& j) { return ItemFromJson(j); });
}

TurnRecord MakeTurn(Role speaker, const std::string& text, std::optional<double> listing_price,
                    std::optional<TurnEvent> event) {
  TurnRecord turn;
  turn.speaker = speaker;
  turn.text = text;
  AbstractedText abstracted = TokenizeWithPrices(text, listing_price);
  turn.tokens = std::move(abstracted.tokens);
  turn.price_values = std::move(abstracted.prices);
  if (turn.tokens.size() > kMaxTurnTokens) {
    turn.tokens.resize(kMaxTurnTokens);
    size_t kept = static_cast<size_t>(std::count(turn.tokens.begin(), turn.tokens.end(), kPriceToken));
    turn.price_values.resize(kept);
  }
  turn.event = event;
  return turn;
}

void ValidateDialogue(const Dialogue& d) {
  int terminal = 0;
  for (size_t i = 0; i < d.turns.size(); ++i) {
    if (i > 0 && d.turns[i].speaker == d.turns[i - 1].speaker) {
      Fail(ErrorKind::kInvariant, "turns " + std::to_string(i) + " and " + std::to_string(i + 1) +
                                      " have the same speaker");
    }
    const auto& ev = d.turns[i].event;
    if (ev && ev->type != EventType::kOffer) ++terminal;
    if (ev && ev->type == EventType::kOffer && !ev->price) {
      Fail(ErrorKind::kInvariant, "offer event without a price");
    }
  }
  if (terminal > 1) Fail(ErrorKind::kInvariant, "more than one terminal turn");
  if (d.outcome.agreed != d.outcome.price.has_value()) {
    Fail(ErrorKind::kInvariant, "outcome.agreed must coincide with outcome.price being present");
  }
}

Dialogue DialogueFromJson(const json& j, const ScenarioIndex& scenarios) {
  if (!j.is_object()) Fail(ErrorKind::kParse, "record is not a JSON object");
  Dialogue d;
  d.scenario_id = RequireString(j, "scenario_id");
  std::optional<double> listing;
  if (auto it = scenarios.find(d.scenario_id); it != scenarios.end()) listing = it->second->listing_price();
  if (!j.contains("turns") || !j.at("turns").is_array()) Fail(ErrorKind::kParse, "missing array field 'turns'");
  for (const json& t : j.at("turns")) {
    Role speaker = ParseRole(RequireString(t, "speaker"));
    std::string text = OptionalString(t, "text");
    std::optional<TurnEvent> event;
    if (t.contains("event") && !t.at("event").is_null()) {
      const json& e = t.at("event");
      TurnEvent ev{ParseEvent(RequireString(e, "type")), std::nullopt};
      if (e.contains("price") && !e.at("price").is_null()) ev.price = RequirePrice(e, "price");
      event = ev;
    }
    d.turns.push_back(MakeTurn(speaker, text, listing, event));
  }
  if (!j.contains("outcome") || !j.at("outcome").is_object()) Fail(ErrorKind::kParse, "missing object 'outcome'");
  const json& o = j.at("outcome");
  if (!o.contains("agreed") || !o.at("agreed").is_boolean()) Fail(ErrorKind::kParse, "outcome.agreed must be a boolean");
  d.outcome.agreed = o.at("agreed").get<bool>();
  if (o.contains("price") && !o.at("price").is_null()) d.outcome.price = RequirePrice(o, "price");
  ValidateDialogue(d);
  return d;
}

json DialogueToJson(const Dialogue& d) {
  json turns = json::array();
  for (const TurnRecord& t : d.turns) {
    json jt{{"speaker", RoleName(t.speaker)}, {"text", t.text}};
    if (t.event) {
      json e{{"type", EventName(t.event->type)}};
      if (t.event->price) e["price"] = *t.event->price;
      jt["event"] = e;
    }
    turns.push_back(std::move(jt));
  }
  json outcome{{"agreed", d.outcome.agreed}};
  if (d.outcome.price) outcome["price"] = *d.outcome.price;
  return json{{"scenario_id", d.scenario_id}, {"turns", std::move(turns)}, {"outcome", std::move(outcome)}};
}

std::vector<Dialogue> LoadDialogues(const std::string& path, const ScenarioIndex& scenarios) {
  return LoadLines<Dialogue>(path, [&](const json& j) { return DialogueFromJson(j, scenarios); });
}

void WriteDialogues(const std::string& path, const std::vector<Dialogue>& dialogues) {
  std::ofstream f(path, std::ios::trunc);
  if (!f) Fail(ErrorKind::kIo, "cannot write " + path);
  for (const Dialogue& d : dialogues) f << DialogueToJson(d).dump() << '\n';
  if (!f) Fail(ErrorKind::kIo, "write failed for " + path);
}

double GroundTruthPrice(const std::string& scenario_id, const std::vector<Dialogue>& dialogues) {
  double sum = 0.0;
  size_t n = 0;
  for (const Dialogue& d : dialogues) {
    if (d.scenario_id == scenario_id && d.outcome.agreed && d.outcome.price) {
      sum += *d.outcome.price;
      ++n;
    }
  }
  if (n == 0) Fail(ErrorKind::kNoData, "no agreed dialogue for scenario " + scenario_id);
  return sum / static_cast<double>(n);
}

std::map<std::string, double> GroundTruthPrices(const std::vector<Dialogue>& dialogues) {
  std::map<std::string, std::pair<double, size_t>> acc;
  for (const Dialogue& d : dialogues) {
    if (!d.outcome.agreed || !d.outcome.price) continue;
    auto& [sum, n] = acc[d.scenario_id];
    sum += *d.outcome.price;
    ++n;
  }
  std::map<std::string, double> out;
  for (const auto& [id, sn] : acc) out[id] = sn.first / static_cast<double>(sn.second);
  return out;
}

std::optional<double> SpeakerProposal(const TurnRecord& turn) {
  if (turn.event && turn.event->type == EventType::kOffer && turn.event->price) return turn.event->price;
  if (turn.price_values.empty()) return std::nullopt;
  if (turn.speaker == Role::kSeller) {
    return *std::max_element(turn.price_values.begin(), turn.price_values.end());
  }
  return *std::min_element(turn.price_values.begin(), turn.price_values.end());
}

namespace {

RatioClass StepRatio(Role role, double from, double to, const Scenario& scenario) {
  double range = ConcessionRange(role, scenario);
  if (range <= 0.0) return RatioClass::k0;
  double toward = role == Role::kSeller ? from - to : to - from;
  return NearestRatio(toward / range);
}

bool MovesToward(Role role, double from, double to) {
  constexpr double kTol = 1e-9;
  return role == Role::kSeller ? to < from - kTol : to > from + kTol;
}

}  // namespace

void DeriveLabels(Dialogue& dialogue, const Scenario& scenario) {
  std::array<double, 2> current = {InitialPrice(Role::kSeller, scenario), InitialPrice(Role::kBuyer, scenario)};
  const TurnRecord* prev = nullptr;
  for (TurnRecord& turn : dialogue.turns) {
    const Role role = turn.speaker;
    double& mine = current[static_cast<size_t>(role)];
    turn.ratio.reset();
    if (turn.event) {
      switch (turn.event->type) {
        case EventType::kOffer: {
          turn.action = Action::kOffer;
          double price = turn.event->price.value_or(mine);
          turn.ratio = StepRatio(role, mine, price, scenario);
          mine = price;
          break;
        }
        case EventType::kAccept: turn.action = Action::kAccept; break;
        case EventType::kReject: turn.action = Action::kReject; break;
        case EventType::kQuit: turn.action = Action::kQuit; break;
      }
    } else if (auto proposal = SpeakerProposal(turn)) {
      if (MovesToward(role, mine, *proposal)) {
        turn.action = Action::kConcede;
        turn.ratio = StepRatio(role, mine, *proposal, scenario);
      } else {
        turn.action = Action::kNegotiate;
      }
      mine = *proposal;
    } else {
      turn.action = Action::kNegotiate;
    }
    turn.intent = ExtractIntent(turn, prev, &scenario);
    prev = &turn;
  }
}

namespace {

const std::unordered_set<std::string>& Greetings() {
  static const std::unordered_set<std::string> words = {"hi", "hello", "hey", "howdy", "greetings", "hiya"};
  return words;
}

const std::unordered_set<std::string>& Agreements() {
  static const std::unordered_set<std::string> words = {
      "deal", "ok", "okay", "sure", "agreed", "agree", "yes", "yeah", "yep", "great", "perfect", "sounds"};
  return words;
}

bool ContainsAny(const Tokens& tokens, const std::unordered_set<std::string>& words) {
  return std::any_of(tokens.begin(), tokens.end(), [&](const std::string& t) { return words.count(t) > 0; });
}

bool MentionsPrice(const TurnRecord& turn) {
  return std::find(turn.tokens.begin(), turn.tokens.end(), kPriceToken) != turn.tokens.end();
}

}  // namespace

std::string ExtractIntent(const TurnRecord& turn, const TurnRecord* prev_turn, const Scenario* /*scenario*/) {
  if (turn.event) return std::string(EventName(turn.event->type));
  if (MentionsPrice(turn)) {
    bool opponent_priced = prev_turn != nullptr && prev_turn->speaker != turn.speaker &&
                           (MentionsPrice(*prev_turn) ||
                            (prev_turn->event && prev_turn->event->price.has_value()));
    return opponent_priced ? "counter-price" : "propose-price";
  }
  if (ContainsAny(turn.tokens, Greetings())) return "intro";
  if (std::find(turn.tokens.begin(), turn.tokens.end(), "?") != turn.tokens.end()) return "inquiry";
  if (ContainsAny(turn.tokens, Agreements())) return "agree";
  if (!turn.tokens.empty()) return "inform";
  return "unknown";
}

ClassHistogram ClassFrequencies(const std::vector<Dialogue>& dialogues) {
  ClassHistogram h;
  for (const Dialogue& d : dialogues) {
    for (const TurnRecord& t : d.turns) {
      if (t.action) ++h.actions[static_cast<size_t>(Index(*t.action))];
      if (t.ratio) ++h.ratios[static_cast<size_t>(Index(*t.ratio))];
    }
  }
  return h;
}

}  // namespace pricenego
