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

#ifndef PRICENEGO_GATEWAY_HPP_
#define PRICENEGO_GATEWAY_HPP_

// Live negotiations between a human and the agent: the wire schema, the
// session service with its append-only log, log replay, and the HTTP front
// end.

#include <condition_variable>
#include <cstdint>
#include <fstream>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"
#include "pricenego/session.hpp"

namespace pricenego {

enum class WireType { kUtterance, kOffer, kAccept, kReject, kQuit, kOutcome, kError };
std::string_view WireTypeName(WireType t);
WireType ParseWireType(std::string_view name);

// One newline-delimited JSON message. `seq` is assigned by the server and
// strictly increases within a session; `from` is "human", "agent" or
// "system".
struct WireMessage {
  WireType type = WireType::kUtterance;
  std::optional<std::string> text;
  std::optional<double> price;
  std::optional<bool> agreed;  // outcome only
  std::string session_id;
  int64_t seq = 0;
  std::string from;
};

nlohmann::json ToJson(const WireMessage& m);
// Accepts client messages: only `type` is required; `seq` and `from` are
// ignored.
WireMessage WireMessageFromJson(const nlohmann::json& j);

struct Rating {
  int human_likeness = 0;
  int language = 0;
  int pricing = 0;
};
void ValidateRating(const Rating& r);
nlohmann::json ToJson(const Rating& r);
Rating RatingFromJson(const nlohmann::json& j);

// Phase name -> legal action names, the table both the server and any client
// enforce.
nlohmann::json LegalActionTable();

struct ServiceOptions {
  std::string log_path;  // empty: no persistence
  double idle_timeout_seconds = 600.0;
  SessionOptions session;
};

struct CreatedSession {
  std::string session_id;
  Role human_role;
  Role agent_role;
  std::vector<WireMessage> messages;
};

class SessionService {
 public:
  using Clock = std::function<double()>;  // seconds, monotonic

  SessionService(const Agent& agent, std::vector<Scenario> scenarios, ServiceOptions options, Clock clock = {});
  ~SessionService();
  SessionService(const SessionService&) = delete;
  SessionService& operator=(const SessionService&) = delete;

  // Throws kNotFound for an unknown scenario. When the agent moves first its
  // opening turn is among the returned messages.
  CreatedSession Create(const std::string& scenario_id, Role human_role);

  // Applies a human message and, if the negotiation continues, the agent's
  // reply. Illegal messages come back as a single `error` message and leave
  // the session unchanged. Throws kNotFound for an unknown session.
  std::vector<WireMessage> Handle(const std::string& session_id, const WireMessage& message);

  // Last rating wins. Throws kState while the session is live.
  void Rate(const std::string& session_id, const Rating& rating);

  nlohmann::json ScenarioSummary(const std::string& scenario_id) const;

  // Messages with seq > after_seq.
  std::vector<WireMessage> Messages(const std::string& session_id, int64_t after_seq) const;
  // Like Messages, but waits up to `timeout_seconds` for something new while
  // the session is live.
  std::vector<WireMessage> WaitMessages(const std::string& session_id, int64_t after_seq, double timeout_seconds);
  bool IsClosed(const std::string& session_id) const;
  Outcome SessionOutcome(const std::string& session_id) const;

  // Ends sessions idle longer than the timeout with a Quit by the side to
  // move. Returns how many were ended.
  size_t ExpireIdle();

 private:
  struct Live;
  Live& Find(const std::string& session_id) const;
  void Log(const nlohmann::json& record);
  WireMessage Emit(Live& live, WireMessage m);
  void RunAgent(Live& live, std::vector<WireMessage>& out);
  void ApplyMove(Live& live, Role role, const Move& move, std::vector<WireMessage>& out, bool from_agent);
  void Close(Live& live, std::vector<WireMessage>& out);

  const Agent* agent_;
  std::map<std::string, Scenario> scenarios_;
  ServiceOptions options_;
  Clock clock_;
  mutable std::mutex mu_;  // guards sessions_ and counter_
  std::map<std::string, std::unique_ptr<Live>> sessions_;
  uint64_t counter_ = 0;
  uint64_t salt_ = 0;
  std::mutex log_mu_;
  std::unique_ptr<std::ofstream> log_;
};

struct ReplayReport {
  size_t sessions = 0;
  size_t matched = 0;
  size_t open = 0;  // no outcome recorded yet
  std::vector<std::string> mismatched;
  nlohmann::json ToJson() const;
};

// Re-applies every logged move through a fresh state machine and compares the
// resulting outcome with the logged one.
ReplayReport ReplayLog(const std::string& log_path, const std::vector<Scenario>& scenarios);

// HTTP front end. Routes:
//   POST /sessions                 {"scenario_id", "human_role"}
//   POST /sessions/{id}/messages   NDJSON in, NDJSON out
//   GET  /sessions/{id}/events     chunked NDJSON stream (?after=seq)
//   POST /sessions/{id}/rating     {"human_likeness", "language", "pricing"}
//   GET  /sessions/{id}/messages   NDJSON (?after=seq)
//   GET  /sessions/{id}/outcome
//   GET  /scenarios/{id}
//   GET  /protocol/legal-actions
//   GET  /healthz
class HttpGateway {
 public:
  explicit HttpGateway(SessionService& service);
  ~HttpGateway();
  HttpGateway(const HttpGateway&) = delete;
  HttpGateway& operator=(const HttpGateway&) = delete;

  // Returns the bound port; port 0 picks a free one.
  int Bind(const std::string& host, int port);
  // Blocks until Stop. Also expires idle sessions periodically.
  void Run();
  // Blocks until a concurrent Run is accepting connections.
  void WaitUntilReady() const;
  void Stop();

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

}  // namespace pricenego

#endif  // PRICENEGO_GATEWAY_HPP_
