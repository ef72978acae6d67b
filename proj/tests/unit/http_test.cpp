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

#include <fstream>
#include <sstream>
#include <thread>

#include "doctest.h"
#include "pricenego/gateway.hpp"
#include "support/world.hpp"

#include "httplib.h"

namespace pricenego {
namespace {

using nlohmann::json;

std::vector<json> Lines(const std::string& body) {
  std::vector<json> out;
  std::istringstream in(body);
  for (std::string line; std::getline(in, line);) {
    if (!line.empty()) out.push_back(json::parse(line));
  }
  return out;
}

struct Server {
  testing::World world = [] {
    testing::WorldOptions o;
    o.catalog_items = 30;
    o.scenarios = 3;
    return testing::MakeWorld(o);
  }();
  std::unique_ptr<Model> model = testing::MakeModel(world, testing::SmallModelConfig(world, 8));
  Agent agent{*model, *world.index};
  SessionService service{agent, world.scenarios, ServiceOptions{}};
  HttpGateway gateway{service};
  int port = 0;
  std::thread thread;

  Server() {
    // Negotiate whenever legal so sessions stay open until the client ends them.
    model->store().Get("policy.action.l3.b").value(Index(Action::kNegotiate), 0) = 100.0;
    port = gateway.Bind("127.0.0.1", 0);
    thread = std::thread([this] { gateway.Run(); });
    gateway.WaitUntilReady();
  }
  ~Server() {
    gateway.Stop();
    thread.join();
  }
  httplib::Client Client() const {
    httplib::Client c("127.0.0.1", port);
    c.set_read_timeout(10, 0);
    return c;
  }
  std::string Create(const std::string& role = "buyer") {
    auto c = Client();
    auto res = c.Post("/sessions", json{{"scenario_id", world.scenarios[0].item.id}, {"human_role", role}}.dump(),
                      "application/json");
    REQUIRE(res);
    REQUIRE(res->status == 201);
    return json::parse(res->body).at("session_id").get<std::string>();
  }
};

TEST_CASE("static routes") {
  Server s;
  auto c = s.Client();
  auto health = c.Get("/healthz");
  REQUIRE(health);
  CHECK(health->status == 200);

  auto legal = c.Get("/protocol/legal-actions");
  REQUIRE(legal);
  std::ifstream fixture(std::string(PN_FIXTURE_DIR) + "/legal_actions.json");
  CHECK(json::parse(legal->body) == json::parse(fixture));

  auto scenario = c.Get("/scenarios/" + s.world.scenarios[1].item.id);
  REQUIRE(scenario);
  CHECK(scenario->status == 200);
  const json j = json::parse(scenario->body);
  CHECK(j["id"] == s.world.scenarios[1].item.id);
  CHECK(j["listing_price"] == s.world.scenarios[1].listing_price());
  CHECK(j.contains("image_url"));
  auto missing = c.Get("/scenarios/nope");
  REQUIRE(missing);
  CHECK(missing->status == 404);
  CHECK(json::parse(missing->body)["type"] == "error");
}

TEST_CASE("session creation errors") {
  Server s;
  auto c = s.Client();
  auto bad_json = c.Post("/sessions", "{", "application/json");
  REQUIRE(bad_json);
  CHECK(bad_json->status == 400);
  auto no_id = c.Post("/sessions", R"({"human_role":"buyer"})", "application/json");
  REQUIRE(no_id);
  CHECK(no_id->status == 400);
  auto bad_role = c.Post("/sessions", json{{"scenario_id", s.world.scenarios[0].item.id}, {"human_role", "broker"}}.dump(),
                         "application/json");
  REQUIRE(bad_role);
  CHECK(bad_role->status == 400);
  auto unknown = c.Post("/sessions", R"({"scenario_id":"nope"})", "application/json");
  REQUIRE(unknown);
  CHECK(unknown->status == 404);

  auto seller = c.Post("/sessions", json{{"scenario_id", s.world.scenarios[0].item.id}, {"human_role", "seller"}}.dump(),
                       "application/json");
  REQUIRE(seller);
  CHECK(seller->status == 201);
  const json created = json::parse(seller->body);
  CHECK(created["agent_role"] == "buyer");
  CHECK_FALSE(created["messages"].empty());
}

TEST_CASE("a negotiation over NDJSON") {
  Server s;
  auto c = s.Client();
  const std::string id = s.Create();
  const std::string base = "/sessions/" + id;

  auto exchange = c.Post(base + "/messages",
                         R"({"type":"utterance","text":"hi , is it available ?"})"
                         "\n"
                         R"({"type":"accept"})"
                         "\n",
                         "application/x-ndjson");
  REQUIRE(exchange);
  CHECK(exchange->status == 200);
  const std::vector<json> replies = Lines(exchange->body);
  REQUIRE(replies.size() >= 3);
  CHECK(replies[0]["from"] == "human");
  CHECK(replies[1]["from"] == "agent");
  CHECK(replies.back()["type"] == "error");  // nothing pending to accept
  for (size_t i = 1; i < replies.size(); ++i) CHECK(replies[i]["seq"] > replies[i - 1]["seq"]);

  auto early = c.Post(base + "/rating", R"({"human_likeness":5,"language":5,"pricing":5})", "application/json");
  REQUIRE(early);
  CHECK(early->status == 409);

  auto quit = c.Post(base + "/messages", R"({"type":"quit"})", "application/x-ndjson");
  REQUIRE(quit);
  const std::vector<json> end = Lines(quit->body);
  REQUIRE_FALSE(end.empty());
  CHECK(end.back()["type"] == "outcome");
  CHECK(end.back()["agreed"] == false);

  auto outcome = c.Get(base + "/outcome");
  REQUIRE(outcome);
  const json o = json::parse(outcome->body);
  CHECK(o["closed"] == true);
  CHECK(o["ended_by"] == "quit");

  auto all = c.Get(base + "/messages?after=0");
  REQUIRE(all);
  const std::vector<json> history = Lines(all->body);
  CHECK(history.back()["type"] == "outcome");
  auto tail = c.Get(base + "/messages?after=" + std::to_string(history.size() - 1));
  REQUIRE(tail);
  CHECK(Lines(tail->body).size() == 1);
  auto bad_after = c.Get(base + "/messages?after=abc");
  REQUIRE(bad_after);
  CHECK(bad_after->status == 400);

  auto events = c.Get(base + "/events?after=0");
  REQUIRE(events);
  CHECK(Lines(events->body).size() == history.size());

  auto rating6 = c.Post(base + "/rating", R"({"human_likeness":6,"language":5,"pricing":5})", "application/json");
  REQUIRE(rating6);
  CHECK(rating6->status == 400);
  auto rating = c.Post(base + "/rating", R"({"human_likeness":4,"language":3,"pricing":5})", "application/json");
  REQUIRE(rating);
  CHECK(rating->status == 200);
}

TEST_CASE("message errors") {
  Server s;
  auto c = s.Client();
  const std::string id = s.Create();
  auto unknown = c.Post("/sessions/nope/messages", R"({"type":"quit"})", "application/x-ndjson");
  REQUIRE(unknown);
  CHECK(unknown->status == 404);
  auto empty = c.Post("/sessions/" + id + "/messages", "\n", "application/x-ndjson");
  REQUIRE(empty);
  CHECK(empty->status == 400);
  auto garbage = c.Post("/sessions/" + id + "/messages", "not json\n", "application/x-ndjson");
  REQUIRE(garbage);
  CHECK(garbage->status == 400);
  auto untyped = c.Post("/sessions/" + id + "/messages", R"({"text":"hi"})", "application/x-ndjson");
  REQUIRE(untyped);
  CHECK(untyped->status == 400);
  auto events = c.Get("/sessions/nope/events");
  REQUIRE(events);
  CHECK(events->status == 404);
}

TEST_CASE("the event stream delivers messages from another connection") {
  Server s;
  const std::string id = s.Create();
  std::string streamed;
  std::thread reader([&] {
    auto c = s.Client();
    c.Get("/sessions/" + id + "/events", [&](const char* data, size_t n) {
      streamed.append(data, n);
      return true;
    });
  });
  auto c = s.Client();
  c.Post("/sessions/" + id + "/messages", R"({"type":"utterance","text":"hello"})", "application/x-ndjson");
  c.Post("/sessions/" + id + "/messages", R"({"type":"quit"})", "application/x-ndjson");
  reader.join();
  const std::vector<json> got = Lines(streamed);
  REQUIRE_FALSE(got.empty());
  CHECK(got.front()["seq"] == 1);
  CHECK(got.back()["type"] == "outcome");
}

}  // namespace
}  // namespace pricenego
