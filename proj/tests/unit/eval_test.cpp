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

#include <algorithm>
#include <random>
#include <sstream>

#include "doctest.h"
#include "pricenego/error.hpp"
#include "pricenego/eval.hpp"
#include "pricenego/pricing.hpp"

namespace pricenego {
namespace {

Tokens Split(const std::string& s) {
  std::istringstream in(s);
  Tokens out;
  for (std::string w; in >> w;) out.push_back(w);
  return out;
}

Scenario MakeScenario(const std::string& id, double listing) {
  Scenario s;
  s.item.id = id;
  s.item.title = {"bike"};
  s.item.listing_price = listing;
  s.item.image_features = {0.0};
  s.seller_bottom = kSellerBottomFraction * listing;
  s.buyer_target = 0.6 * listing;
  return s;
}

struct Line {
  Role speaker;
  std::string text;
  std::optional<TurnEvent> event = std::nullopt;
};

Dialogue MakeDialogue(const std::string& id, double listing, const std::vector<Line>& lines,
                      std::optional<double> agreed = std::nullopt) {
  Dialogue d;
  d.scenario_id = id;
  for (const Line& l : lines) d.turns.push_back(MakeTurn(l.speaker, l.text, listing, l.event));
  d.outcome.agreed = agreed.has_value();
  d.outcome.price = agreed;
  return d;
}

TurnEvent Offer(double p) { return TurnEvent{EventType::kOffer, p}; }
TurnEvent AcceptEvent() { return TurnEvent{EventType::kAccept, std::nullopt}; }

constexpr Role kB = Role::kBuyer;
constexpr Role kS = Role::kSeller;

TEST_CASE("bleu: identity, disjoint, hand example") {
  const Tokens ref = Split("the cat is on the mat");
  CHECK(Bleu({ref}, {{ref}}) == doctest::Approx(1.0));
  BleuOptions plain;
  plain.smoothing = false;
  CHECK(Bleu({Split("a b c d e")}, {{Split("v w x y z")}}, plain) == 0.0);
  const Tokens hyp = Split("the cat sat on the mat");
  CHECK(Bleu({hyp}, {{ref}}, plain) == 0.0);
  // Smoothed precisions 5/6, 4/6, 2/5, 1/4 and no brevity penalty.
  const double want = std::pow(5.0 / 6.0 * 4.0 / 6.0 * 2.0 / 5.0 * 1.0 / 4.0, 0.25);
  CHECK(Bleu({hyp}, {{ref}}) == doctest::Approx(want).epsilon(1e-12));
  CHECK(want == doctest::Approx(0.485492).epsilon(1e-6));
  CHECK_THROWS_AS(Bleu({}, {}), Error);
  CHECK_THROWS_AS(Bleu({hyp}, {}), Error);
}

TEST_CASE("bleu: brevity penalty and multiple references") {
  BleuOptions o;
  const Tokens ref = Split("a b c d e f g h");
  const Tokens hyp = Split("a b c d e f");
  // All n-grams match; penalty exp(1 - 8/6).
  CHECK(Bleu({hyp}, {{ref}}, o) == doctest::Approx(std::exp(1.0 - 8.0 / 6.0)).epsilon(1e-12));
  // The closest reference length removes the penalty.
  CHECK(Bleu({hyp}, {{ref, Split("x y z w v u")}}, o) == doctest::Approx(1.0));
  // Clipping: a repeated word counts at most as often as in a reference.
  BleuOptions unigram;
  unigram.max_order = 1;
  CHECK(Bleu({Split("the the the the")}, {{Split("the cat on mat")}}, unigram) == doctest::Approx(0.25));
}

TEST_CASE("bleu: identity on random corpora and permutation invariance") {
  std::mt19937_64 rng(4);
  std::uniform_int_distribution<int> word(0, 9), len(4, 12);
  for (int trial = 0; trial < 50; ++trial) {
    std::vector<Tokens> hyps;
    std::vector<std::vector<Tokens>> refs;
    for (int i = 0; i < 5; ++i) {
      Tokens h, r;
      for (int k = len(rng); k > 0; --k) h.push_back("w" + std::to_string(word(rng)));
      for (int k = len(rng); k > 0; --k) r.push_back("w" + std::to_string(word(rng)));
      hyps.push_back(h);
      refs.push_back({r});
    }
    std::vector<std::vector<Tokens>> self;
    for (const Tokens& h : hyps) self.push_back({h});
    CHECK(Bleu(hyps, self) == doctest::Approx(1.0));
    const double base = Bleu(hyps, refs);
    CHECK(base >= 0.0);
    CHECK(base <= 1.0);
    std::vector<size_t> order = {0, 1, 2, 3, 4};
    std::shuffle(order.begin(), order.end(), rng);
    std::vector<Tokens> h2;
    std::vector<std::vector<Tokens>> r2;
    for (size_t i : order) {
      h2.push_back(hyps[i]);
      r2.push_back(refs[i]);
    }
    CHECK(Bleu(h2, r2) == doctest::Approx(base).epsilon(1e-12));
  }
}

TEST_CASE("dialogue and intent bleu use same-scenario references and skip the rest") {
  const std::vector<Line> lines = {{kB, "hello , is this still for sale ?"},
                                   {kS, "yes it is , it is in great shape"},
                                   {kB, "would you take $700 ?"},
                                   {kS, "i can do $900", Offer(900)},
                                   {kB, "deal", AcceptEvent()}};
  const Dialogue human = MakeDialogue("a", 1000, lines, 900.0);
  const Dialogue other = MakeDialogue("zz", 1000, lines, 900.0);
  const ReferencedScore same = DialogueBleu({human, other}, {human});
  CHECK(same.score == doctest::Approx(1.0));
  CHECK(same.scored == 1);
  CHECK(same.skipped == 1);
  CHECK(IntentBleu({human}, {human}).score == doctest::Approx(1.0));

  const Tokens intents = IntentSequence(human);
  REQUIRE(intents.size() == 5);
  CHECK(intents[0] == "intro");
  CHECK(intents[2] == "propose-price");
  CHECK(intents[3] == "offer");
  CHECK(intents[4] == "accept");
  CHECK(DialogueTokens(human).size() > 10);
}

TEST_CASE("diversity and length") {
  const Dialogue d = MakeDialogue("a", 1000,
                                  {{kB, "hello there"}, {kS, "hello there"}, {kB, "is it new"}, {kS, "yes"}});
  const Diversity div = ComputeDiversity({d});
  CHECK(div.sentence == doctest::Approx(0.75));
  // Tokens: hello there hello there is it new yes.
  CHECK(div.vocabulary == doctest::Approx(6.0 / 8.0));
  const Dialogue same = MakeDialogue("a", 1000, {{kB, "ok"}, {kS, "ok"}, {kB, "ok"}});
  CHECK(ComputeDiversity({same}).sentence == doctest::Approx(1.0 / 3.0));
  CHECK(ComputeDiversity({}).sentence == 0.0);
  CHECK(AverageLength({d, same}) == doctest::Approx(3.5));
  CHECK(AverageLength({}) == 0.0);
}

TEST_CASE("price inconsistency") {
  const Dialogue monotone = MakeDialogue(
      "a", 1000, {{kB, "$600 ?"}, {kS, "$950"}, {kB, "$700"}, {kS, "$900", Offer(900)}, {kB, "ok", AcceptEvent()}},
      900.0);
  CHECK_FALSE(HasPriceInconsistency(monotone));
  // Agreed at 639, then the seller asks for 720.
  const Dialogue regress = MakeDialogue("a", 1000,
                                        {{kB, "how about $600 ?"},
                                         {kS, "i can do $639"},
                                         {kB, "great , $639 works"},
                                         {kS, "$720 and it is yours", Offer(720)}});
  CHECK(HasPriceInconsistency(regress));
  const Dialogue cross =
      MakeDialogue("a", 1000, {{kS, "$900"}, {kB, "i will pay $950"}});
  CHECK(HasPriceInconsistency(cross));
  std::vector<Dialogue> twenty(19, monotone);
  twenty.push_back(regress);
  CHECK(PriceInconsistencyRate(twenty) == doctest::Approx(0.05));
  CHECK(PriceInconsistencyRate({}) == 0.0);
}

TEST_CASE("offer inconsistency") {
  const Scenario s = MakeScenario("a", 1000);
  const ScenarioIndex index = {{"a", &s}};
  const Dialogue same = MakeDialogue("a", 1000, {{kB, "$600 ?"}, {kS, "$900 is my price"}, {kB, "no"}, {kS, "", Offer(900)}});
  CHECK_FALSE(HasOfferInconsistency(same, &s));
  const Dialogue differs = MakeDialogue("a", 1000, {{kB, "$600 ?"}, {kS, "$900 is my price"}, {kB, "no"}, {kS, "", Offer(850)}});
  CHECK(HasOfferInconsistency(differs, &s));
  const Dialogue own_words = MakeDialogue("a", 1000, {{kS, "final : $850", Offer(850)}});
  CHECK_FALSE(HasOfferInconsistency(own_words, &s));
  const Dialogue initial = MakeDialogue("a", 1000, {{kS, "", Offer(1000)}});
  CHECK_FALSE(HasOfferInconsistency(initial, &s));
  const Dialogue unsaid = MakeDialogue("a", 1000, {{kS, "", Offer(990)}});
  CHECK(HasOfferInconsistency(unsaid, &s));
  CHECK_FALSE(HasOfferInconsistency(unsaid, nullptr));
  CHECK(OfferInconsistencyRate({same, differs, initial, unsaid}, index) == doctest::Approx(0.5));
}

TEST_CASE("human divergence") {
  const Dialogue a = MakeDialogue("a", 1000, {{kS, "", Offer(90)}, {kB, "", AcceptEvent()}}, 90.0);
  const Dialogue none = MakeDialogue("a", 1000, {{kS, "bye"}});
  CHECK(HumanDivergence({a}, {{"a", 100.0}}) == doctest::Approx(10.0));
  CHECK(HumanDivergence({a}, {{"a", 90.0}}) == doctest::Approx(0.0));
  CHECK_FALSE(HumanDivergence({a, none}, {{"b", 90.0}}).has_value());
  CHECK_FALSE(HumanDivergence({none}, {{"a", 90.0}}).has_value());
  Dialogue scaled = a;
  scaled.outcome.price = 900.0;
  CHECK(*HumanDivergence({scaled}, {{"a", 1000.0}}) == doctest::Approx(10.0 * *HumanDivergence({a}, {{"a", 100.0}})));
}

TEST_CASE("report") {
  const Scenario s = MakeScenario("a", 1000);
  const ScenarioIndex index = {{"a", &s}};
  const std::vector<Line> lines = {{kB, "hi , would you take $700 ?"}, {kS, "$900 then", Offer(900)},
                                   {kB, "ok", AcceptEvent()}};
  const Dialogue human = MakeDialogue("a", 1000, lines, 900.0);
  const Dialogue stranger = MakeDialogue("q", 1000, lines, 900.0);
  const MetricReport r = Evaluate({human, stranger}, {human}, index);
  CHECK(r.dialogues == 2);
  CHECK(r.agreed == 2);
  CHECK(r.unreferenced == 1);
  CHECK(r.bleu == doctest::Approx(1.0));
  CHECK(r.ibleu == doctest::Approx(1.0));
  CHECK(r.avg_dialogue_length == doctest::Approx(3.0));
  CHECK(r.price_inconsistency_rate == 0.0);
  REQUIRE(r.human_divergence);
  CHECK(*r.human_divergence == doctest::Approx(0.0));

  const nlohmann::json j = ToJson(r);
  for (const char* key : {"ibleu", "bleu", "sentence_diversity", "vocab_diversity", "avg_dialogue_length",
                          "price_inconsistency_rate", "offer_inconsistency_rate", "human_divergence"}) {
    CHECK(j.contains(key));
  }
  CHECK(j["bleu"].get<double>() == doctest::Approx(1.0));

  const std::string table = FormatTable({{"model", r}, {"other", MetricReport{}}});
  CHECK(table.find("model") != std::string::npos);
  CHECK(table.find("100.00") != std::string::npos);
  std::istringstream in(table);
  std::vector<size_t> widths;
  for (std::string line; std::getline(in, line);) widths.push_back(line.size());
  CHECK(widths.size() >= 3);
  CHECK(std::adjacent_find(widths.begin(), widths.end(), std::not_equal_to<>()) == widths.end());
}

}  // namespace
}  // namespace pricenego
