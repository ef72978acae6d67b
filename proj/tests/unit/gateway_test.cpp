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
#include <set>
#include <sstream>

#include "doctest.h"
#include "pricenego/error.hpp"
#include "pricenego/gateway.hpp"
#include "support/world.hpp"

namespace pricenego {
namespace {

using nlohmann::json;

ErrorKind KindOf(const std::function<void()>& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.kind();
  }
  FAIL("expected an error");
  return ErrorKind::kInvalidArgument;
}

std::string ReadAll(const std::string& path) {
  std::ifstream in(path);
  std::stringstream s;
  s << in.rdbuf();
  return s.str();
}

WireMessage Msg(WireType t, std::optional<std::string> text = std::nullopt, std::optional<double> price = std::nullopt) {
  WireMessage m;
  m.type = t;
  m.text = std::move(text);
  m.price = price;
  return m;
}

// An agent whose action head strongly prefers `favourite` wherever legal.
struct Fixture {
  testing::World world = [] {
    testing::WorldOptions o;
    o.catalog_items = 30;
    o.scenarios = 4;
    return testing::MakeWorld(o);
  }();
  std::unique_ptr<Model> model = testing::MakeModel(world, testing::SmallModelConfig(world, 8));
  Agent agent{*model, *world.index};
  double now = 0.0;

  void Favour(Action a) { model->store().Get("policy.action.l3.b").value(Index(a), 0) = 100.0; }
  std::unique_ptr<SessionService> Service(const std::string& log = "", double idle = 600.0) {
    ServiceOptions o;
    o.log_path = log;
    o.idle_timeout_seconds = idle;
    return std::make_unique<SessionService>(agent, world.scenarios, o, [this] { return now; });
  }
  const std::string& scenario() const { return world.scenarios[0].item.id; }
};

TEST_CASE("wire messages: JSON round trip and strict parsing") {
  WireMessage m = Msg(WireType::kOffer, "how about", 812.5);
  m.session_id = "s1";
  m.seq = 4;
  m.from = "agent";
  const json j = ToJson(m);
  CHECK(j["type"] == "offer");
  CHECK(j["price"] == 812.5);
  CHECK(j["seq"] == 4);
  const WireMessage back = WireMessageFromJson(j);
  CHECK(back.type == WireType::kOffer);
  CHECK(back.text == "how about");
  CHECK(back.price == 812.5);
  CHECK(back.session_id == "s1");
  for (int t = 0; t < 7; ++t) CHECK(ParseWireType(WireTypeName(static_cast<WireType>(t))) == static_cast<WireType>(t));

  CHECK(KindOf([] { WireMessageFromJson(json::array()); }) == ErrorKind::kParse);
  CHECK(KindOf([] { WireMessageFromJson(json{{"text", "hi"}}); }) == ErrorKind::kParse);
  CHECK(KindOf([] { WireMessageFromJson(json{{"type", "haggle"}}); }) == ErrorKind::kParse);
  CHECK(KindOf([] { WireMessageFromJson(json{{"type", "offer"}, {"price", "$5"}}); }) == ErrorKind::kParse);
  CHECK(KindOf([] { WireMessageFromJson(json{{"type", "utterance"}, {"text", 5}}); }) == ErrorKind::kParse);
  const WireMessage bare = WireMessageFromJson(json{{"type", "accept"}, {"price", nullptr}});
  CHECK(bare.type == WireType::kAccept);
  CHECK_FALSE(bare.price);
}

TEST_CASE("ratings") {
  const Rating r = RatingFromJson(json{{"human_likeness", 5}, {"language", 1}, {"pricing", 3}});
  CHECK(r.human_likeness == 5);
  CHECK(ToJson(r) == json{{"human_likeness", 5}, {"language", 1}, {"pricing", 3}});
  CHECK_THROWS_AS(RatingFromJson(json{{"human_likeness", 6}, {"language", 1}, {"pricing", 3}}), Error);
  CHECK_THROWS_AS(RatingFromJson(json{{"human_likeness", 0}, {"language", 1}, {"pricing", 3}}), Error);
  CHECK_THROWS_AS(RatingFromJson(json{{"human_likeness", 4.5}, {"language", 1}, {"pricing", 3}}), Error);
  CHECK_THROWS_AS(RatingFromJson(json{{"language", 1}, {"pricing", 3}}), Error);
  CHECK_THROWS_AS(RatingFromJson(json::array()), Error);
}

TEST_CASE("legal-action table matches the published fixture") {
  std::ifstream in(std::string(PN_FIXTURE_DIR) + "/legal_actions.json");
  REQUIRE(in);
  CHECK(LegalActionTable() == json::parse(in));
}

TEST_CASE("create: roles, distinct ids, unknown scenario") {
  Fixture f;
  auto service = f.Service();
  const CreatedSession a = service->Create(f.scenario(), Role::kBuyer);
  CHECK(a.agent_role == Role::kSeller);
  CHECK(a.messages.empty());  // the buyer moves first
  const CreatedSession b = service->Create(f.scenario(), Role::kBuyer);
  CHECK(a.session_id != b.session_id);
  const CreatedSession c = service->Create(f.scenario(), Role::kSeller);
  CHECK(c.agent_role == Role::kBuyer);
  REQUIRE_FALSE(c.messages.empty());
  CHECK(c.messages.front().from == "agent");
  CHECK(c.messages.front().seq == 1);
  CHECK(KindOf([&] { service->Create("nope", Role::kBuyer); }) == ErrorKind::kNotFound);
  CHECK(KindOf([&] { service->Handle("nope", Msg(WireType::kQuit)); }) == ErrorKind::kNotFound);

  const json summary = service->ScenarioSummary(f.scenario());
  for (const char* key : {"id", "category", "title", "description", "listing_price", "image_url"}) {
    CHECK(summary.contains(key));
  }
  CHECK(summary["listing_price"] == f.world.scenarios[0].listing_price());
  CHECK(KindOf([&] { service->ScenarioSummary("nope"); }) == ErrorKind::kNotFound);
}

TEST_CASE("illegal messages are rejected and leave the session unchanged") {
  Fixture f;
  auto service = f.Service();
  const std::string id = service->Create(f.scenario(), Role::kBuyer).session_id;
  for (const WireMessage& bad : {Msg(WireType::kAccept), Msg(WireType::kReject), Msg(WireType::kUtterance, ""),
                                 Msg(WireType::kOffer), Msg(WireType::kOffer, std::nullopt, -3.0),
                                 Msg(WireType::kOutcome), Msg(WireType::kError, "x")}) {
    const std::vector<WireMessage> out = service->Handle(id, bad);
    REQUIRE(out.size() == 1);
    CHECK(out[0].type == WireType::kError);
    CHECK(out[0].from == "system");
  }
  CHECK(service->SessionOutcome(id).turns == 0);
  CHECK_FALSE(service->IsClosed(id));
}

TEST_CASE("an utterance gets a reply in the same exchange") {
  Fixture f;
  f.Favour(Action::kNegotiate);
  auto service = f.Service();
  const std::string id = service->Create(f.scenario(), Role::kBuyer).session_id;
  const std::vector<WireMessage> out = service->Handle(id, Msg(WireType::kUtterance, "would you take $500?"));
  REQUIRE(out.size() >= 2);
  CHECK(out[0].from == "human");
  CHECK(out[0].type == WireType::kUtterance);
  CHECK(out[1].from == "agent");
  CHECK(service->SessionOutcome(id).turns == 2);
}

TEST_CASE("human accepts the agent's offer") {
  Fixture f;
  f.Favour(Action::kOffer);
  auto service = f.Service();
  const std::string id = service->Create(f.scenario(), Role::kBuyer).session_id;
  const std::vector<WireMessage> first = service->Handle(id, Msg(WireType::kUtterance, "hi , is it available ?"));
  REQUIRE(first.back().type == WireType::kOffer);
  REQUIRE(first.back().price);
  const double offered = *first.back().price;
  CHECK(offered == f.world.scenarios[0].listing_price());  // the seller stands at the listing

  CHECK(service->Handle(id, Msg(WireType::kUtterance, "hmm"))[0].type == WireType::kError);
  const std::vector<WireMessage> end = service->Handle(id, Msg(WireType::kAccept));
  REQUIRE(end.size() == 2);
  CHECK(end[1].type == WireType::kOutcome);
  CHECK(end[1].agreed == true);
  CHECK(end[1].price == offered);
  CHECK(service->IsClosed(id));
  CHECK(service->Handle(id, Msg(WireType::kQuit))[0].type == WireType::kError);

  const std::vector<WireMessage> all = service->Messages(id, 0);
  int outcomes = 0;
  for (size_t i = 0; i < all.size(); ++i) {
    CHECK(all[i].seq == static_cast<int64_t>(i + 1));
    outcomes += all[i].type == WireType::kOutcome ? 1 : 0;
  }
  CHECK(outcomes == 1);
  CHECK(service->Messages(id, all.back().seq).empty());
  CHECK(service->WaitMessages(id, 0, 5.0).size() == all.size());
}

TEST_CASE("ratings only after the negotiation ends") {
  Fixture f;
  auto service = f.Service();
  const std::string id = service->Create(f.scenario(), Role::kBuyer).session_id;
  CHECK(KindOf([&] { service->Rate(id, Rating{5, 5, 5}); }) == ErrorKind::kState);
  service->Handle(id, Msg(WireType::kQuit));
  CHECK(service->IsClosed(id));
  service->Rate(id, Rating{5, 5, 5});
  service->Rate(id, Rating{2, 3, 4});
  CHECK(KindOf([&] { service->Rate(id, Rating{6, 5, 5}); }) == ErrorKind::kInvalidArgument);
}

TEST_CASE("idle sessions expire as a quit by the side to move") {
  Fixture f;
  f.Favour(Action::kNegotiate);
  auto service = f.Service("", 30.0);
  const std::string idle = service->Create(f.scenario(), Role::kBuyer).session_id;
  f.now = 20.0;
  const std::string busy = service->Create(f.scenario(), Role::kBuyer).session_id;
  f.now = 30.0;
  CHECK(service->ExpireIdle() == 0);
  f.now = 40.0;
  service->Handle(busy, Msg(WireType::kUtterance, "hello"));
  f.now = 45.0;
  CHECK(service->ExpireIdle() == 1);
  CHECK(service->IsClosed(idle));
  CHECK_FALSE(service->IsClosed(busy));
  const Outcome o = service->SessionOutcome(idle);
  CHECK(o.ended_by == Phase::kQuit);
  CHECK_FALSE(o.agreed);
  const std::vector<WireMessage> msgs = service->Messages(idle, 0);
  REQUIRE(msgs.size() == 2);
  CHECK(msgs[0].type == WireType::kQuit);
  CHECK(msgs[0].from == "human");
  CHECK(msgs[1].type == WireType::kOutcome);
  f.now = 1000.0;
  CHECK(service->ExpireIdle() == 1);
  CHECK(service->ExpireIdle() == 0);
}

TEST_CASE("the append-only log replays to the same outcomes") {
  const std::string log = testing::TempPath("gateway_sessions.jsonl");
  std::filesystem::remove(log);
  Fixture f;
  f.Favour(Action::kOffer);
  std::string before;
  {
    auto service = f.Service(log);
    const std::string a = service->Create(f.scenario(), Role::kBuyer).session_id;
    service->Handle(a, Msg(WireType::kAccept));  // rejected, still logged
    service->Handle(a, Msg(WireType::kUtterance, "is $700 ok ?"));
    service->Handle(a, Msg(WireType::kAccept));
    service->Rate(a, Rating{4, 4, 4});
    const std::string b = service->Create(f.world.scenarios[1].item.id, Role::kSeller).session_id;
    service->Handle(b, Msg(WireType::kReject));
    before = ReadAll(log);
    service->Create(f.world.scenarios[2].item.id, Role::kBuyer);  // left open
    const std::string after = ReadAll(log);
    CHECK(after.size() > before.size());
    CHECK(after.compare(0, before.size(), before) == 0);
  }
  const ReplayReport r = ReplayLog(log, f.world.scenarios);
  CHECK(r.sessions == 3);
  CHECK(r.matched == 2);
  CHECK(r.open == 1);
  CHECK(r.mismatched.empty());
  CHECK(r.ToJson()["matched"] == 2);

  std::set<std::string> kinds;
  std::istringstream lines(ReadAll(log));
  for (std::string line; std::getline(lines, line);) kinds.insert(json::parse(line).at("record").get<std::string>());
  CHECK(kinds == std::set<std::string>{"create", "message", "move", "outcome", "rating", "rejected"});

  // A tampered outcome record is caught.
  std::ostringstream edited;
  bool flipped = false;
  std::istringstream again(ReadAll(log));
  for (std::string line; std::getline(again, line);) {
    json rec = json::parse(line);
    if (!flipped && rec["record"] == "outcome" && rec["agreed"] == true) {
      rec["agreed"] = false;
      flipped = true;
    }
    edited << rec.dump() << '\n';
  }
  REQUIRE(flipped);
  const std::string tampered = testing::TempPath("gateway_tampered.jsonl");
  std::ofstream(tampered) << edited.str();
  CHECK(ReplayLog(tampered, f.world.scenarios).mismatched.size() == 1);
  CHECK_THROWS_AS(ReplayLog(testing::TempPath("missing.jsonl"), f.world.scenarios), Error);
}

}  // namespace
}  // namespace pricenego
