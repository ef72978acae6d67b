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

#include "pricenego/gateway.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <random>
#include <sstream>

#include "pricenego/error.hpp"

namespace pricenego {

using nlohmann::json;

namespace {

constexpr std::array<std::string_view, 7> kWireNames = {"utterance", "offer", "accept", "reject",
                                                        "quit",      "outcome", "error"};

double SteadySeconds() {
  return std::chrono::duration<double>(std::chrono::steady_clock::now().time_since_epoch()).count();
}

json MoveToJson(Role role, const Move& m) {
  json j = {{"role", RoleName(role)}, {"action", ActionName(m.action)}, {"text", m.text}};
  if (m.ratio) j["ratio"] = Index(*m.ratio);
  if (m.offer_price) j["offer_price"] = *m.offer_price;
  return j;
}

Move MoveFromJson(const json& j) {
  Move m;
  m.action = ParseAction(j.at("action").get<std::string>());
  m.text = j.value("text", "");
  if (j.contains("ratio")) m.ratio = RatioFromIndex(j.at("ratio").get<int>());
  if (j.contains("offer_price")) m.offer_price = j.at("offer_price").get<double>();
  return m;
}

json OutcomeToJson(const Outcome& o) {
  json j = {{"agreed", o.agreed}, {"price", nullptr}, {"turns", o.turns}, {"ended_by", PhaseName(o.ended_by)}};
  if (o.price) j["price"] = *o.price;
  return j;
}

bool SameOutcome(const Outcome& o, const json& logged) {
  if (o.agreed != logged.at("agreed").get<bool>()) return false;
  if (o.turns != logged.at("turns").get<int>()) return false;
  if (PhaseName(o.ended_by) != logged.at("ended_by").get<std::string>()) return false;
  const json& p = logged.at("price");
  if (p.is_null() != !o.price.has_value()) return false;
  return p.is_null() || std::abs(p.get<double>() - *o.price) < 1e-9;
}

}  // namespace

std::string_view WireTypeName(WireType t) { return kWireNames[static_cast<size_t>(t)]; }

WireType ParseWireType(std::string_view name) {
  for (size_t i = 0; i < kWireNames.size(); ++i) {
    if (kWireNames[i] == name) return static_cast<WireType>(i);
  }
  Fail(ErrorKind::kParse, "unknown message type: " + std::string(name));
}

json ToJson(const WireMessage& m) {
  json j = {{"type", WireTypeName(m.type)}, {"session_id", m.session_id}, {"seq", m.seq}};
  if (!m.from.empty()) j["from"] = m.from;
  if (m.text) j["text"] = *m.text;
  if (m.price) j["price"] = *m.price;
  if (m.agreed) j["agreed"] = *m.agreed;
  return j;
}

WireMessage WireMessageFromJson(const json& j) {
  if (!j.is_object()) Fail(ErrorKind::kParse, "message must be a JSON object");
  WireMessage m;
  try {
    if (!j.contains("type") || !j.at("type").is_string()) Fail(ErrorKind::kParse, "message needs a string 'type'");
    m.type = ParseWireType(j.at("type").get<std::string>());
    if (j.contains("text") && !j.at("text").is_null()) m.text = j.at("text").get<std::string>();
    if (j.contains("price") && !j.at("price").is_null()) {
      if (!j.at("price").is_number()) Fail(ErrorKind::kParse, "'price' must be a number");
      m.price = j.at("price").get<double>();
    }
    if (j.contains("agreed") && !j.at("agreed").is_null()) m.agreed = j.at("agreed").get<bool>();
    m.session_id = j.value("session_id", "");
  } catch (const json::exception& e) {
    Fail(ErrorKind::kParse, std::string("message: ") + e.what());
  }
  return m;
}

void ValidateRating(const Rating& r) {
  for (int v : {r.human_likeness, r.language, r.pricing}) {
    if (v < 1 || v > 5) Fail(ErrorKind::kInvalidArgument, "ratings must be integers from 1 to 5");
  }
}

json ToJson(const Rating& r) {
  return {{"human_likeness", r.human_likeness}, {"language", r.language}, {"pricing", r.pricing}};
}

Rating RatingFromJson(const json& j) {
  if (!j.is_object()) Fail(ErrorKind::kParse, "rating must be a JSON object");
  Rating r;
  try {
    for (const char* key : {"human_likeness", "language", "pricing"}) {
      if (!j.contains(key) || !j.at(key).is_number_integer()) {
        Fail(ErrorKind::kInvalidArgument, std::string("rating needs an integer '") + key + "'");
      }
    }
    r.human_likeness = j.at("human_likeness").get<int>();
    r.language = j.at("language").get<int>();
    r.pricing = j.at("pricing").get<int>();
  } catch (const json::exception& e) {
    Fail(ErrorKind::kParse, std::string("rating: ") + e.what());
  }
  ValidateRating(r);
  return r;
}

json LegalActionTable() {
  json table = json::object();
  for (Phase p : {Phase::kOpen, Phase::kOfferPending, Phase::kAgreed, Phase::kRejected, Phase::kQuit,
                  Phase::kMaxTurns}) {
    json legal = json::array();
    ActionMask mask = LegalActionsFor(p);
    for (Action a : kActions) {
      if (mask[static_cast<size_t>(Index(a))]) legal.push_back(ActionName(a));
    }
    table[std::string(PhaseName(p))] = legal;
  }
  return table;
}

struct SessionService::Live {
  Live(std::string id_, Role human_, Scenario scenario, SessionOptions options)
      : id(std::move(id_)), human(human_), agent(Opponent(human_)), session(std::move(scenario), options) {}

  std::string id;
  Role human;
  Role agent;
  NegotiationSession session;
  AgentMemory memory;
  std::vector<WireMessage> messages;
  int64_t next_seq = 1;
  double last_activity = 0.0;
  std::optional<Rating> rating;
  bool closed = false;
  std::mutex mu;
  std::condition_variable cv;
};

SessionService::SessionService(const Agent& agent, std::vector<Scenario> scenarios, ServiceOptions options,
                               Clock clock)
    : agent_(&agent), options_(std::move(options)), clock_(clock ? std::move(clock) : Clock(SteadySeconds)) {
  for (Scenario& s : scenarios) {
    std::string id = s.id();
    scenarios_.emplace(std::move(id), std::move(s));
  }
  if (!(options_.idle_timeout_seconds > 0.0)) Fail(ErrorKind::kInvalidArgument, "idle timeout must be positive");
  std::random_device rd;
  salt_ = (static_cast<uint64_t>(rd()) << 32) ^ rd();
  if (!options_.log_path.empty()) {
    log_ = std::make_unique<std::ofstream>(options_.log_path, std::ios::app);
    if (!*log_) Fail(ErrorKind::kIo, "cannot append to session log " + options_.log_path);
  }
}

SessionService::~SessionService() = default;

void SessionService::Log(const json& record) {
  if (!log_) return;
  std::lock_guard<std::mutex> lock(log_mu_);
  *log_ << record.dump() << '\n';
  log_->flush();
}

SessionService::Live& SessionService::Find(const std::string& session_id) const {
  std::lock_guard<std::mutex> lock(mu_);
  auto it = sessions_.find(session_id);
  if (it == sessions_.end()) Fail(ErrorKind::kNotFound, "unknown session: " + session_id);
  return *it->second;
}

WireMessage SessionService::Emit(Live& live, WireMessage m) {
  m.session_id = live.id;
  m.seq = live.next_seq++;
  live.messages.push_back(m);
  Log({{"record", "message"},
       {"session_id", live.id},
       {"direction", m.from == "human" ? "in" : "out"},
       {"message", ToJson(m)}});
  live.cv.notify_all();
  return m;
}

void SessionService::ApplyMove(Live& live, Role role, const Move& move, std::vector<WireMessage>& out,
                               bool from_agent) {
  live.session.Step(role, move);
  Log({{"record", "move"}, {"session_id", live.id}, {"move", MoveToJson(role, move)}});
  if (!from_agent) return;
  const TurnRecord& turn = live.session.transcript().back();
  if (!turn.text.empty() || move.action == Action::kNegotiate || move.action == Action::kConcede) {
    WireMessage u;
    u.type = WireType::kUtterance;
    u.text = turn.text;
    u.from = "agent";
    out.push_back(Emit(live, u));
  }
  if (turn.event) {
    WireMessage e;
    e.from = "agent";
    switch (turn.event->type) {
      case EventType::kOffer:
        e.type = WireType::kOffer;
        e.price = turn.event->price;
        break;
      case EventType::kAccept: e.type = WireType::kAccept; break;
      case EventType::kReject: e.type = WireType::kReject; break;
      case EventType::kQuit: e.type = WireType::kQuit; break;
    }
    out.push_back(Emit(live, e));
  }
}

void SessionService::Close(Live& live, std::vector<WireMessage>& out) {
  const Outcome o = live.session.outcome();
  WireMessage m;
  m.type = WireType::kOutcome;
  m.agreed = o.agreed;
  m.price = o.price;
  m.text = std::string(PhaseName(o.ended_by));
  m.from = "system";
  out.push_back(Emit(live, m));
  json record = OutcomeToJson(o);
  record["record"] = "outcome";
  record["session_id"] = live.id;
  Log(record);
  live.closed = true;
  live.cv.notify_all();
}

void SessionService::RunAgent(Live& live, std::vector<WireMessage>& out) {
  if (live.session.terminal() || live.session.to_move() != live.agent) return;
  AgentTurn turn = agent_->Act(live.session, live.agent, live.memory, ActOptions{});
  ApplyMove(live, live.agent, turn.move, out, true);
}

CreatedSession SessionService::Create(const std::string& scenario_id, Role human_role) {
  auto it = scenarios_.find(scenario_id);
  if (it == scenarios_.end()) Fail(ErrorKind::kNotFound, "unknown scenario: " + scenario_id);
  std::string id;
  Live* live = nullptr;
  {
    std::lock_guard<std::mutex> lock(mu_);
    char buf[32];
    std::snprintf(buf, sizeof(buf), "s%016llx",
                  static_cast<unsigned long long>(salt_ + 0x9e3779b97f4a7c15ULL * ++counter_));
    id = buf;
    auto owned = std::make_unique<Live>(id, human_role, it->second, options_.session);
    live = owned.get();
    sessions_.emplace(id, std::move(owned));
  }
  std::lock_guard<std::mutex> lock(live->mu);
  live->last_activity = clock_();
  Log({{"record", "create"},
       {"session_id", id},
       {"scenario_id", scenario_id},
       {"human_role", RoleName(human_role)},
       {"agent_role", RoleName(live->agent)},
       {"max_turns", options_.session.max_turns},
       {"first_mover", RoleName(options_.session.first_mover)}});
  CreatedSession created{id, human_role, live->agent, {}};
  RunAgent(*live, created.messages);
  if (live->session.terminal()) Close(*live, created.messages);
  return created;
}

std::vector<WireMessage> SessionService::Handle(const std::string& session_id, const WireMessage& message) {
  Live& live = Find(session_id);
  std::lock_guard<std::mutex> lock(live.mu);
  live.last_activity = clock_();
  std::vector<WireMessage> out;
  auto reject = [&](const std::string& reason) {
    Log({{"record", "rejected"}, {"session_id", live.id}, {"reason", reason}, {"message", ToJson(message)}});
    WireMessage e;
    e.type = WireType::kError;
    e.text = reason;
    e.from = "system";
    out.push_back(Emit(live, e));
    return out;
  };
  if (live.closed) return reject("negotiation is over");
  Move move;
  move.text = message.text.value_or("");
  switch (message.type) {
    case WireType::kUtterance:
      if (move.text.empty()) return reject("utterance needs text");
      move.action = Action::kNegotiate;
      break;
    case WireType::kOffer:
      if (!message.price || !(*message.price > 0.0) || !std::isfinite(*message.price)) {
        return reject("offer needs a positive price");
      }
      move.action = Action::kOffer;
      move.offer_price = RoundToCents(*message.price);
      break;
    case WireType::kAccept: move.action = Action::kAccept; break;
    case WireType::kReject: move.action = Action::kReject; break;
    case WireType::kQuit: move.action = Action::kQuit; break;
    default: return reject(std::string(WireTypeName(message.type)) + " messages come from the server only");
  }
  if (live.session.to_move() != live.human) return reject("it is not your turn");
  if (!live.session.IsLegal(live.human, move.action)) {
    return reject(std::string(ActionName(move.action)) + " is not legal while " +
                  std::string(PhaseName(live.session.phase())));
  }
  WireMessage echo = message;
  echo.from = "human";
  if (move.offer_price) echo.price = move.offer_price;
  out.push_back(Emit(live, echo));
  ApplyMove(live, live.human, move, out, false);
  RunAgent(live, out);
  if (live.session.terminal()) Close(live, out);
  return out;
}

void SessionService::Rate(const std::string& session_id, const Rating& rating) {
  ValidateRating(rating);
  Live& live = Find(session_id);
  std::lock_guard<std::mutex> lock(live.mu);
  if (!live.closed) Fail(ErrorKind::kState, "ratings are accepted only after the negotiation ends");
  live.rating = rating;
  Log({{"record", "rating"}, {"session_id", live.id}, {"rating", ToJson(rating)}});
}

json SessionService::ScenarioSummary(const std::string& scenario_id) const {
  auto it = scenarios_.find(scenario_id);
  if (it == scenarios_.end()) Fail(ErrorKind::kNotFound, "unknown scenario: " + scenario_id);
  const Scenario& s = it->second;
  return {{"id", s.id()},
          {"category", CategoryName(s.item.category)},
          {"title", s.item.title_text},
          {"description", s.item.description_text},
          {"listing_price", s.listing_price()},
          {"image_url", s.image_url}};
}

std::vector<WireMessage> SessionService::Messages(const std::string& session_id, int64_t after_seq) const {
  Live& live = Find(session_id);
  std::lock_guard<std::mutex> lock(live.mu);
  std::vector<WireMessage> out;
  for (const WireMessage& m : live.messages) {
    if (m.seq > after_seq) out.push_back(m);
  }
  return out;
}

std::vector<WireMessage> SessionService::WaitMessages(const std::string& session_id, int64_t after_seq,
                                                      double timeout_seconds) {
  Live& live = Find(session_id);
  std::unique_lock<std::mutex> lock(live.mu);
  live.cv.wait_for(lock, std::chrono::duration<double>(timeout_seconds), [&] {
    return live.closed || (!live.messages.empty() && live.messages.back().seq > after_seq);
  });
  std::vector<WireMessage> out;
  for (const WireMessage& m : live.messages) {
    if (m.seq > after_seq) out.push_back(m);
  }
  return out;
}

bool SessionService::IsClosed(const std::string& session_id) const {
  Live& live = Find(session_id);
  std::lock_guard<std::mutex> lock(live.mu);
  return live.closed;
}

Outcome SessionService::SessionOutcome(const std::string& session_id) const {
  Live& live = Find(session_id);
  std::lock_guard<std::mutex> lock(live.mu);
  return live.session.outcome();
}

size_t SessionService::ExpireIdle() {
  std::vector<Live*> all;
  {
    std::lock_guard<std::mutex> lock(mu_);
    for (auto& [id, live] : sessions_) all.push_back(live.get());
  }
  size_t expired = 0;
  const double now = clock_();
  for (Live* live : all) {
    std::lock_guard<std::mutex> lock(live->mu);
    if (live->closed || now - live->last_activity <= options_.idle_timeout_seconds) continue;
    const Role idle = live->session.to_move();
    std::vector<WireMessage> out;
    Move quit;
    quit.action = Action::kQuit;
    ApplyMove(*live, idle, quit, out, false);
    WireMessage m;
    m.type = WireType::kQuit;
    m.text = "idle timeout";
    m.from = idle == live->human ? "human" : "agent";
    Emit(*live, m);
    Close(*live, out);
    ++expired;
  }
  return expired;
}

json ReplayReport::ToJson() const {
  return {{"sessions", sessions}, {"matched", matched}, {"open", open}, {"mismatched", mismatched}};
}

ReplayReport ReplayLog(const std::string& log_path, const std::vector<Scenario>& scenarios) {
  std::ifstream f(log_path);
  if (!f) Fail(ErrorKind::kIo, "cannot open session log " + log_path);
  std::map<std::string, const Scenario*> by_id;
  for (const Scenario& s : scenarios) by_id[s.id()] = &s;
  struct Replayed {
    std::unique_ptr<NegotiationSession> session;
    bool broken = false;
    std::optional<bool> matched;
  };
  std::map<std::string, Replayed> sessions;
  std::vector<std::string> order;
  std::string line;
  size_t line_no = 0;
  while (std::getline(f, line)) {
    ++line_no;
    if (line.empty()) continue;
    json rec;
    try {
      rec = json::parse(line);
    } catch (const json::exception& e) {
      Fail(ErrorKind::kParse, log_path + ":" + std::to_string(line_no) + ": " + e.what());
    }
    const std::string kind = rec.value("record", "");
    const std::string id = rec.value("session_id", "");
    if (kind == "create") {
      auto s = by_id.find(rec.at("scenario_id").get<std::string>());
      Replayed r;
      if (s == by_id.end()) {
        r.broken = true;
      } else {
        SessionOptions opts;
        opts.max_turns = rec.value("max_turns", kDefaultMaxTurns);
        opts.first_mover = ParseRole(rec.value("first_mover", "buyer"));
        r.session = std::make_unique<NegotiationSession>(*s->second, opts);
      }
      if (!sessions.count(id)) order.push_back(id);
      sessions[id] = std::move(r);
      continue;
    }
    auto it = sessions.find(id);
    if (it == sessions.end()) continue;
    Replayed& r = it->second;
    if (r.broken) continue;
    try {
      if (kind == "move") {
        const json& mv = rec.at("move");
        r.session->Step(ParseRole(mv.at("role").get<std::string>()), MoveFromJson(mv));
      } else if (kind == "outcome") {
        r.matched = SameOutcome(r.session->outcome(), rec);
      }
    } catch (const Error&) {
      r.broken = true;
    } catch (const json::exception&) {
      r.broken = true;
    }
  }
  ReplayReport report;
  for (const std::string& id : order) {
    const Replayed& r = sessions.at(id);
    ++report.sessions;
    if (r.broken || (r.matched && !*r.matched)) {
      report.mismatched.push_back(id);
    } else if (!r.matched) {
      ++report.open;
    } else {
      ++report.matched;
    }
  }
  return report;
}

}  // namespace pricenego
