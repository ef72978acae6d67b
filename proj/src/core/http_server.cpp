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

#include <atomic>
#include <chrono>
#include <sstream>
#include <thread>

#include "pricenego/error.hpp"
#include "pricenego/gateway.hpp"

// After Eigen: httplib pulls in system headers that clash with its templates.
#include "httplib.h"

namespace pricenego {

using nlohmann::json;

namespace {

constexpr const char* kNdjson = "application/x-ndjson";
constexpr const char* kJson = "application/json";
constexpr double kPollSeconds = 1.0;

int StatusFor(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::kNotFound: return 404;
    case ErrorKind::kInvalidArgument:
    case ErrorKind::kParse: return 400;
    case ErrorKind::kState: return 409;
    default: return 500;
  }
}

void SendError(httplib::Response& res, int status, const std::string& text) {
  res.status = status;
  res.set_content(json{{"type", "error"}, {"text", text}}.dump(), kJson);
}

std::string Ndjson(const std::vector<WireMessage>& messages) {
  std::string body;
  for (const WireMessage& m : messages) body += ToJson(m).dump() + "\n";
  return body;
}

json ParseBody(const httplib::Request& req) {
  try {
    return json::parse(req.body);
  } catch (const json::exception& e) {
    Fail(ErrorKind::kParse, std::string("request body is not JSON: ") + e.what());
  }
}

int64_t AfterParam(const httplib::Request& req) {
  if (!req.has_param("after")) return 0;
  try {
    return std::stoll(req.get_param_value("after"));
  } catch (const std::exception&) {
    Fail(ErrorKind::kInvalidArgument, "'after' must be an integer");
  }
}

// Wraps a handler so library errors map onto HTTP statuses.
template <typename F>
httplib::Server::Handler Guard(F f) {
  return [f](const httplib::Request& req, httplib::Response& res) {
    try {
      f(req, res);
    } catch (const Error& e) {
      SendError(res, StatusFor(e.kind()), e.what());
    } catch (const std::exception& e) {
      SendError(res, 500, e.what());
    }
  };
}

}  // namespace

struct HttpGateway::Impl {
  explicit Impl(SessionService& s) : service(s) {}

  SessionService& service;
  httplib::Server server;
  std::atomic<bool> running{false};
  std::thread reaper;
  std::mutex stop_mu;
  std::condition_variable stop_cv;

  void Routes() {
    server.Get("/healthz", [](const httplib::Request&, httplib::Response& res) {
      res.set_content(R"({"ok":true})", kJson);
    });
    server.Get("/protocol/legal-actions", [](const httplib::Request&, httplib::Response& res) {
      res.set_content(LegalActionTable().dump(2), kJson);
    });
    server.Get(R"(/scenarios/([^/]+))", Guard([this](const httplib::Request& req, httplib::Response& res) {
                 res.set_content(service.ScenarioSummary(req.matches[1]).dump(), kJson);
               }));
    server.Post("/sessions", Guard([this](const httplib::Request& req, httplib::Response& res) {
                  const json body = ParseBody(req);
                  if (!body.is_object() || !body.contains("scenario_id") || !body.at("scenario_id").is_string()) {
                    Fail(ErrorKind::kInvalidArgument, "body needs a string 'scenario_id'");
                  }
                  const Role role = ParseRole(body.value("human_role", "buyer"));
                  CreatedSession created = service.Create(body.at("scenario_id").get<std::string>(), role);
                  json messages = json::array();
                  for (const WireMessage& m : created.messages) messages.push_back(ToJson(m));
                  res.status = 201;
                  res.set_content(json{{"session_id", created.session_id},
                                       {"human_role", RoleName(created.human_role)},
                                       {"agent_role", RoleName(created.agent_role)},
                                       {"messages", messages}}
                                      .dump(),
                                  kJson);
                }));
    server.Post(R"(/sessions/([^/]+)/messages)", Guard([this](const httplib::Request& req, httplib::Response& res) {
                  const std::string id = req.matches[1];
                  // Only NDJSON bodies carry several messages; replies are concatenated.
                  std::vector<WireMessage> out;
                  std::istringstream lines(req.body);
                  std::string line;
                  bool any = false;
                  while (std::getline(lines, line)) {
                    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
                    any = true;
                    json j;
                    try {
                      j = json::parse(line);
                    } catch (const json::exception& e) {
                      Fail(ErrorKind::kParse, std::string("message is not JSON: ") + e.what());
                    }
                    for (WireMessage& m : service.Handle(id, WireMessageFromJson(j))) out.push_back(std::move(m));
                  }
                  if (!any) Fail(ErrorKind::kInvalidArgument, "empty request body");
                  res.set_content(Ndjson(out), kNdjson);
                }));
    server.Get(R"(/sessions/([^/]+)/messages)", Guard([this](const httplib::Request& req, httplib::Response& res) {
                 res.set_content(Ndjson(service.Messages(req.matches[1], AfterParam(req))), kNdjson);
               }));
    server.Get(R"(/sessions/([^/]+)/events)", Guard([this](const httplib::Request& req, httplib::Response& res) {
                 const std::string id = req.matches[1];
                 auto last = std::make_shared<int64_t>(AfterParam(req));
                 service.IsClosed(id);  // 404 before the stream starts
                 res.set_chunked_content_provider(kNdjson, [this, id, last](size_t, httplib::DataSink& sink) {
                   if (!running.load()) {
                     sink.done();
                     return true;
                   }
                   const bool closed = service.IsClosed(id);
                   std::vector<WireMessage> fresh = service.WaitMessages(id, *last, kPollSeconds);
                   if (!fresh.empty()) {
                     const std::string chunk = Ndjson(fresh);
                     if (!sink.write(chunk.data(), chunk.size())) return false;
                     *last = fresh.back().seq;
                   }
                   if (closed && service.Messages(id, *last).empty()) sink.done();
                   return true;
                 });
               }));
    server.Get(R"(/sessions/([^/]+)/outcome)", Guard([this](const httplib::Request& req, httplib::Response& res) {
                 const std::string id = req.matches[1];
                 const Outcome o = service.SessionOutcome(id);
                 json j = {{"closed", service.IsClosed(id)},
                           {"agreed", o.agreed},
                           {"price", nullptr},
                           {"turns", o.turns},
                           {"ended_by", PhaseName(o.ended_by)}};
                 if (o.price) j["price"] = *o.price;
                 res.set_content(j.dump(), kJson);
               }));
    server.Post(R"(/sessions/([^/]+)/rating)", Guard([this](const httplib::Request& req, httplib::Response& res) {
                  service.Rate(req.matches[1], RatingFromJson(ParseBody(req)));
                  res.set_content(R"({"ok":true})", kJson);
                }));
  }
};

HttpGateway::HttpGateway(SessionService& service) : impl_(std::make_unique<Impl>(service)) { impl_->Routes(); }

HttpGateway::~HttpGateway() { Stop(); }

int HttpGateway::Bind(const std::string& host, int port) {
  if (port < 0 || port > 65535) Fail(ErrorKind::kInvalidArgument, "port out of range");
  if (port == 0) {
    const int bound = impl_->server.bind_to_any_port(host);
    if (bound < 0) Fail(ErrorKind::kIo, "cannot bind " + host);
    return bound;
  }
  if (!impl_->server.bind_to_port(host, port)) Fail(ErrorKind::kIo, "cannot bind " + host + ":" + std::to_string(port));
  return port;
}

void HttpGateway::Run() {
  impl_->running = true;
  impl_->reaper = std::thread([impl = impl_.get()] {
    std::unique_lock<std::mutex> lock(impl->stop_mu);
    while (impl->running.load()) {
      impl->stop_cv.wait_for(lock, std::chrono::seconds(1));
      if (impl->running.load()) impl->service.ExpireIdle();
    }
  });
  impl_->server.listen_after_bind();
}

void HttpGateway::WaitUntilReady() const { impl_->server.wait_until_ready(); }

void HttpGateway::Stop() {
  {
    std::lock_guard<std::mutex> lock(impl_->stop_mu);
    impl_->running = false;
  }
  impl_->stop_cv.notify_all();
  impl_->server.stop();
  if (impl_->reaper.joinable()) impl_->reaper.join();
}

}  // namespace pricenego
