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


#include <filesystem>
#include <fstream>

#include "doctest.h"
#include "json.hpp"
#include "pricenego/corpus.hpp"
#include "pricenego/error.hpp"

namespace pricenego {
namespace {

using nlohmann::json;

json ScenarioRecord() {
  return {{"id", "bike-1"},        {"category", "bike"},     {"title", "Road Bike"},
          {"description", "Barely used, 21 speeds"}, {"listing_price", 1000}, {"seller_bottom", 700},
          {"buyer_target", 700},   {"image_features", {0.5, -1.0, 2.0}}};
}

std::string TempFile(const std::string& name) {
  return (std::filesystem::temp_directory_path() / ("pricenego_corpus_" + name)).string();
}

TEST_CASE("scenario records parse and round trip") {
  Scenario s = ScenarioFromJson(ScenarioRecord());
  CHECK(s.id() == "bike-1");
  CHECK(s.item.category == Category::kBike);
  CHECK(s.item.title == Tokens{"road", "bike"});
  CHECK(s.item.image_features.size() == 3);
  Scenario back = ScenarioFromJson(ScenarioToJson(s));
  CHECK(back.item.description == s.item.description);
  CHECK(back.buyer_target == s.buyer_target);
}

TEST_CASE("scenario invariants reject bad prices") {
  json j = ScenarioRecord();
  j["buyer_target"] = 1200;
  try {
    ScenarioFromJson(j);
    FAIL("expected an invariant error");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::kInvariant);
  }
  j = ScenarioRecord();
  j["seller_bottom"] = 1000;
  CHECK_THROWS_AS(ScenarioFromJson(j), Error);
  j = ScenarioRecord();
  j["listing_price"] = -5;
  CHECK_THROWS_AS(ScenarioFromJson(j), Error);
  j = ScenarioRecord();
  j.erase("image_features");
  try {
    ScenarioFromJson(j);
    FAIL("expected a parse error");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::kParse);
  }
  j = ScenarioRecord();
  j["category"] = "boat";
  CHECK_THROWS_AS(ScenarioFromJson(j), Error);
}

TEST_CASE("jsonl loaders report every bad line") {
  const std::string path = TempFile("scenarios.jsonl");
  {
    std::ofstream f(path);
    json bad = ScenarioRecord();
    bad["buyer_target"] = 5000;
    f << ScenarioRecord().dump() << "\n\n" << bad.dump() << "\n{not json\n";
  }
  try {
    LoadScenarios(path);
    FAIL("expected rejection");
  } catch (const Error& e) {
    const std::string what = e.what();
    CHECK(what.find("line 3") != std::string::npos);
    CHECK(what.find("line 4") != std::string::npos);
  }
  {
    std::ofstream f(path);
    f << ScenarioRecord().dump() << "\n";
  }
  CHECK(LoadScenarios(path).size() == 1);
  CHECK_THROWS_AS(LoadCatalog(path + ".missing"), Error);
}

struct Fixture {
  Scenario s = ScenarioFromJson(ScenarioRecord());
  ScenarioIndex index{{"bike-1", &s}};

  Dialogue Parse(const json& turns, const json& outcome) {
    return DialogueFromJson({{"scenario_id", "bike-1"}, {"turns", turns}, {"outcome", outcome}}, index);
  }
};

TEST_CASE_FIXTURE(Fixture, "dialogue parsing abstracts prices with the scenario listing") {
  Dialogue d = Parse({{{"speaker", "buyer"}, {"text", "would you take 650?"}},
                      {{"speaker", "seller"}, {"text", "I can go down to $900."}},
                      {{"speaker", "buyer"}, {"text", ""}, {"event", {{"type", "offer"}, {"price", 800}}}},
                      {{"speaker", "seller"}, {"text", ""}, {"event", {{"type", "accept"}}}}},
                     {{"agreed", true}, {"price", 800}});
  REQUIRE(d.turns.size() == 4);
  CHECK(d.turns[0].tokens == Tokens{"would", "you", "take", "<price>", "?"});
  CHECK(d.turns[0].price_values == std::vector<double>{650});
  CHECK(d.turns[1].price_values == std::vector<double>{900});
  CHECK(d.turns[2].event->price == 800);

  json round = DialogueToJson(d);
  Dialogue again = DialogueFromJson(round, index);
  CHECK(again.turns[1].tokens == d.turns[1].tokens);
  CHECK(again.outcome.price == d.outcome.price);
}

TEST_CASE_FIXTURE(Fixture, "dialogue invariants") {
  CHECK_THROWS_AS(Parse({{{"speaker", "buyer"}, {"text", "hi"}}, {{"speaker", "buyer"}, {"text", "hello?"}}},
                        {{"agreed", false}}),
                  Error);
  CHECK_THROWS_AS(Parse({{{"speaker", "buyer"}, {"text", ""}, {"event", {{"type", "quit"}}}},
                         {{"speaker", "seller"}, {"text", ""}, {"event", {{"type", "quit"}}}}},
                        {{"agreed", false}}),
                  Error);
  CHECK_THROWS_AS(Parse({{{"speaker", "buyer"}, {"text", ""}, {"event", {{"type", "offer"}}}}}, {{"agreed", false}}),
                  Error);
  CHECK_THROWS_AS(Parse(json::array(), {{"agreed", true}}), Error);
  CHECK_THROWS_AS(Parse(json::array(), {{"agreed", "yes"}}), Error);
}

TEST_CASE("long turns are truncated with their prices") {
  std::string text;
  for (int i = 0; i < 45; ++i) text += "$" + std::to_string(100 + i) + " ";
  TurnRecord t = MakeTurn(Role::kBuyer, text, std::nullopt);
  CHECK(t.tokens.size() == kMaxTurnTokens);
  CHECK(t.price_values.size() == kMaxTurnTokens);
  CHECK(t.price_values.back() == 100 + kMaxTurnTokens - 1);
}

TEST_CASE("ground truth price is the mean agreed price") {
  auto d = [](std::string id, std::optional<double> p) {
    Dialogue x;
    x.scenario_id = std::move(id);
    x.outcome.agreed = p.has_value();
    x.outcome.price = p;
    return x;
  };
  CHECK(GroundTruthPrice("a", {d("a", 100)}) == 100);
  CHECK(GroundTruthPrice("a", {d("a", 90), d("a", 110)}) == 100);
  CHECK(GroundTruthPrice("a", {d("a", 80), d("b", 5), d("a", 100), d("a", std::nullopt), d("a", 90)}) == 90);
  CHECK_THROWS_AS(GroundTruthPrice("a", {d("a", std::nullopt)}), Error);
  const auto all = GroundTruthPrices({d("a", 80), d("b", 5), d("a", 100)});
  CHECK(all.at("a") == 90);
  CHECK(all.at("b") == 5);
}

TEST_CASE_FIXTURE(Fixture, "derived action and ratio labels") {
  Dialogue d = Parse({{{"speaker", "buyer"}, {"text", "hi, is it available?"}},
                      {{"speaker", "seller"}, {"text", "yes"}},
                      {{"speaker", "buyer"}, {"text", "would you take $760"}},
                      {{"speaker", "seller"}, {"text", "i can do $1000"}},
                      {{"speaker", "buyer"}, {"text", "how about $850"}},
                      {{"speaker", "seller"}, {"text", "i can't go that low. i can go down to $880."}},
                      {{"speaker", "buyer"}, {"text", ""}, {"event", {{"type", "offer"}, {"price", 880}}}},
                      {{"speaker", "seller"}, {"text", ""}, {"event", {{"type", "accept"}}}}},
                     {{"agreed", true}, {"price", 880}});
  DeriveLabels(d, s);
  const auto& t = d.turns;
  CHECK(t[0].action == Action::kNegotiate);
  CHECK(t[0].intent == "intro");
  CHECK(t[1].intent == "agree");
  // 700 -> 760 is a 0.2 step of the 300 range.
  CHECK(t[2].action == Action::kConcede);
  CHECK(t[2].ratio == RatioClass::k20);
  CHECK(t[2].intent == "propose-price");
  CHECK(t[3].action == Action::kNegotiate);
  CHECK_FALSE(t[3].ratio.has_value());
  CHECK(t[3].intent == "counter-price");
  // 760 -> 850 is 0.3, a tie that goes to the smaller class.
  CHECK(t[4].ratio == RatioClass::k20);
  CHECK(t[5].action == Action::kConcede);
  CHECK(t[5].ratio == RatioClass::k40);
  CHECK(t[5].intent == "counter-price");
  // 850 -> 880 is 0.1, between 0% and 20%.
  CHECK(t[6].action == Action::kOffer);
  CHECK(t[6].ratio == RatioClass::k0);
  CHECK(t[6].intent == "offer");
  CHECK(t[7].action == Action::kAccept);
  CHECK(t[7].intent == "accept");

  const ClassHistogram h = ClassFrequencies({d});
  CHECK(h.actions[static_cast<size_t>(Index(Action::kConcede))] == 3);
  CHECK(h.actions[static_cast<size_t>(Index(Action::kNegotiate))] == 3);
  CHECK(h.ratios[static_cast<size_t>(Index(RatioClass::k20))] == 2);
  CHECK(h.ratios[static_cast<size_t>(Index(RatioClass::k40))] == 1);
  CHECK(h.ratios[static_cast<size_t>(Index(RatioClass::k0))] == 1);
  size_t total = 0;
  for (size_t n : h.actions) total += n;
  CHECK(total == t.size());
}

TEST_CASE("intent rules") {
  auto intent = [](const std::string& text, const TurnRecord* prev = nullptr) {
    return ExtractIntent(MakeTurn(Role::kSeller, text, 700.0), prev, nullptr);
  };
  CHECK(intent("what condition is it in?") == "inquiry");
  CHECK(intent("it has new tires") == "inform");
  CHECK(intent("$650") == "propose-price");
  const TurnRecord opp = MakeTurn(Role::kBuyer, "how about 600", 700.0);
  CHECK(intent("i can't go that low . i can go down to $650 .", &opp) == "counter-price");
  CHECK(intent("") == "unknown");
  TurnRecord quit = MakeTurn(Role::kSeller, "", 700.0, TurnEvent{EventType::kQuit, std::nullopt});
  CHECK(ExtractIntent(quit, nullptr, nullptr) == "quit");
}

TEST_CASE("speaker proposal takes the speaker's best price") {
  CHECK(SpeakerProposal(MakeTurn(Role::kSeller, "$900 or $950", std::nullopt)) == 950);
  CHECK(SpeakerProposal(MakeTurn(Role::kBuyer, "$900 or $950", std::nullopt)) == 900);
  CHECK_FALSE(SpeakerProposal(MakeTurn(Role::kBuyer, "no", std::nullopt)).has_value());
  CHECK(SpeakerProposal(MakeTurn(Role::kBuyer, "$1", std::nullopt, TurnEvent{EventType::kOffer, 5.0})) == 5.0);
}

TEST_CASE("write and load dialogues") {
  Scenario s = ScenarioFromJson(ScenarioRecord());
  ScenarioIndex index{{"bike-1", &s}};
  Dialogue d;
  d.scenario_id = "bike-1";
  d.turns.push_back(MakeTurn(Role::kBuyer, "hi $800", 1000.0));
  d.turns.push_back(MakeTurn(Role::kSeller, "", 1000.0, TurnEvent{EventType::kQuit, std::nullopt}));
  const std::string path = TempFile("dialogues.jsonl");
  WriteDialogues(path, {d, d});
  const auto back = LoadDialogues(path, index);
  REQUIRE(back.size() == 2);
  CHECK(back[1].turns[0].price_values == std::vector<double>{800});
  CHECK(back[1].turns[1].event->type == EventType::kQuit);
}

}  // namespace
}  // namespace pricenego
