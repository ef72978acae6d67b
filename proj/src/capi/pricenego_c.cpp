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

#include "pricenego.h"

#include <cstdlib>
#include <cstring>
#include <memory>
#include <random>
#include <string>
#include <thread>

#include "json.hpp"
#include "pricenego/error.hpp"
#include "pricenego/eval.hpp"
#include "pricenego/gateway.hpp"
#include "pricenego/learn.hpp"
#include "pricenego/model.hpp"
#include "pricenego/session.hpp"

using nlohmann::json;
using namespace pricenego;

struct pn_corpus {
  std::vector<Scenario> scenarios;
  ScenarioIndex index;
  std::vector<Dialogue> dialogues;  // labeled where the scenario is known
  size_t labeled = 0;
  std::string catalog_path;
  std::string word_vectors_path;
  std::unique_ptr<WordVectors> words;
  std::unique_ptr<Catalog> catalog;
};

struct pn_model {
  std::unique_ptr<Model> model;
};

struct pn_service {
  std::unique_ptr<Agent> agent;
  std::unique_ptr<SessionService> service;
};

struct pn_server {
  std::unique_ptr<HttpGateway> gateway;
  std::thread thread;
};

namespace {

thread_local std::string g_last_error;

pn_status StatusOf(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::kInvalidArgument: return PN_ERR_INVALID_ARGUMENT;
    case ErrorKind::kIo: return PN_ERR_IO;
    case ErrorKind::kParse: return PN_ERR_PARSE;
    case ErrorKind::kInvariant: return PN_ERR_INVARIANT;
    case ErrorKind::kState: return PN_ERR_STATE;
    case ErrorKind::kNotFound: return PN_ERR_NOT_FOUND;
    case ErrorKind::kNoData: return PN_ERR_NO_DATA;
    case ErrorKind::kNumeric: return PN_ERR_NUMERIC;
  }
  return PN_ERR_INTERNAL;
}

template <typename F>
pn_status Guarded(F&& f) {
  g_last_error.clear();
  try {
    f();
    return PN_OK;
  } catch (const Error& e) {
    g_last_error = e.what();
    return StatusOf(e.kind());
  } catch (const json::exception& e) {
    g_last_error = e.what();
    return PN_ERR_PARSE;
  } catch (const std::bad_alloc&) {
    g_last_error = "out of memory";
    return PN_ERR_INTERNAL;
  } catch (const std::exception& e) {
    g_last_error = e.what();
    return PN_ERR_INTERNAL;
  }
}

void Require(const void* p, const char* what) {
  if (p == nullptr) Fail(ErrorKind::kInvalidArgument, std::string(what) + " must not be null");
}

json ParseOptions(const char* text) {
  if (text == nullptr || *text == '\0') return json::object();
  json j;
  try {
    j = json::parse(text);
  } catch (const json::exception& e) {
    Fail(ErrorKind::kParse, std::string("options are not JSON: ") + e.what());
  }
  if (!j.is_object()) Fail(ErrorKind::kParse, "options must be a JSON object");
  return j;
}

void CheckKeys(const json& j, std::initializer_list<const char*> allowed) {
  for (auto it = j.begin(); it != j.end(); ++it) {
    bool ok = false;
    for (const char* a : allowed) ok = ok || it.key() == a;
    if (!ok) Fail(ErrorKind::kInvalidArgument, "unknown option: " + it.key());
  }
}

char* Dup(const std::string& s) {
  char* out = static_cast<char*>(std::malloc(s.size() + 1));
  if (out == nullptr) throw std::bad_alloc();
  std::memcpy(out, s.c_str(), s.size() + 1);
  return out;
}

void Emit(char** out, const json& j) {
  if (out != nullptr) *out = Dup(j.dump());
}

TrainConfig TrainOptions(const char* text) { return TrainConfigFromJson(ParseOptions(text)); }

std::unique_ptr<MetricsLog> OpenMetrics(const char* path) {
  if (path == nullptr || *path == '\0') return nullptr;
  return std::make_unique<MetricsLog>(path);
}

json StageJson(const StageReport& r) { return {{"epoch_loss", r.epoch_loss}}; }

std::vector<ValueExample> CorpusValueExamples(const pn_corpus& c) {
  return ValueExamples(c.scenarios, GroundTruthPrices(c.dialogues));
}

std::vector<Dialogue> Labeled(const pn_corpus& c) {
  std::vector<Dialogue> out;
  for (const Dialogue& d : c.dialogues) {
    if (c.index.count(d.scenario_id)) out.push_back(d);
  }
  if (out.empty()) Fail(ErrorKind::kNoData, "corpus has no dialogues for known scenarios");
  return out;
}

void CheckWords(const Model& m, const pn_corpus& c) {
  if (m.config().similarity_dim != c.words->dim()) {
    Fail(ErrorKind::kInvalidArgument, "model similarity_dim " + std::to_string(m.config().similarity_dim) +
                                          " does not match the corpus word vectors (" +
                                          std::to_string(c.words->dim()) + ")");
  }
}

}  // namespace

extern "C" {

const char* pn_version(void) { return "1.0.0"; }

const char* pn_last_error(void) { return g_last_error.c_str(); }

const char* pn_status_name(pn_status status) {
  switch (status) {
    case PN_OK: return "ok";
    case PN_ERR_INVALID_ARGUMENT: return "invalid_argument";
    case PN_ERR_IO: return "io";
    case PN_ERR_PARSE: return "parse";
    case PN_ERR_INVARIANT: return "invariant";
    case PN_ERR_STATE: return "state";
    case PN_ERR_NOT_FOUND: return "not_found";
    case PN_ERR_NO_DATA: return "no_data";
    case PN_ERR_NUMERIC: return "numeric";
    case PN_ERR_INTERNAL: return "internal";
  }
  return "unknown";
}

void pn_string_free(char* s) { std::free(s); }

pn_status pn_corpus_open(const char* config_json, pn_corpus** out) {
  return Guarded([&] {
    Require(out, "out");
    *out = nullptr;
    const json cfg = ParseOptions(config_json);
    CheckKeys(cfg, {"scenarios", "catalog", "dialogues", "word_vectors", "word_dim"});
    if (!cfg.contains("scenarios") && !cfg.contains("catalog")) {
      Fail(ErrorKind::kInvalidArgument, "corpus needs 'scenarios' or 'catalog'");
    }
    auto c = std::make_unique<pn_corpus>();
    if (cfg.contains("scenarios")) c->scenarios = LoadScenarios(cfg.at("scenarios").get<std::string>());
    c->index = IndexScenarios(c->scenarios);
    if (cfg.contains("word_vectors")) {
      c->word_vectors_path = cfg.at("word_vectors").get<std::string>();
      c->words = std::make_unique<WordVectors>(WordVectors::Load(c->word_vectors_path));
    } else {
      const int dim = cfg.value("word_dim", 300);
      if (dim <= 0) Fail(ErrorKind::kInvalidArgument, "word_dim must be positive");
      c->words = std::make_unique<WordVectors>(dim);
    }
    std::vector<CatalogItem> items;
    if (cfg.contains("catalog")) {
      c->catalog_path = cfg.at("catalog").get<std::string>();
      items = LoadCatalog(c->catalog_path);
    } else {
      for (const Scenario& s : c->scenarios) items.push_back(s.item);
    }
    c->catalog = std::make_unique<Catalog>(std::move(items), *c->words);
    if (cfg.contains("dialogues")) {
      c->dialogues = LoadDialogues(cfg.at("dialogues").get<std::string>(), c->index);
      for (Dialogue& d : c->dialogues) {
        auto it = c->index.find(d.scenario_id);
        if (it == c->index.end()) continue;
        DeriveLabels(d, *it->second);
        ++c->labeled;
      }
    }
    *out = c.release();
  });
}

void pn_corpus_free(pn_corpus* corpus) { delete corpus; }

pn_status pn_corpus_stats(const pn_corpus* corpus, char** stats_json) {
  return Guarded([&] {
    Require(corpus, "corpus");
    size_t agreed = 0;
    for (const Dialogue& d : corpus->dialogues) agreed += d.outcome.agreed ? 1 : 0;
    Emit(stats_json, {{"scenarios", corpus->scenarios.size()},
                      {"catalog_items", corpus->catalog->size()},
                      {"dialogues", corpus->dialogues.size()},
                      {"labeled_dialogues", corpus->labeled},
                      {"agreed", agreed}});
  });
}

pn_status pn_model_create(const pn_corpus* corpus, const char* config_json, pn_model** out) {
  return Guarded([&] {
    Require(corpus, "corpus");
    Require(out, "out");
    *out = nullptr;
    json cfg = ParseOptions(config_json);
    if (!cfg.contains("feature_dim") && corpus->catalog->size() > 0) {
      cfg["feature_dim"] = corpus->catalog->item(0).image_features.size();
    }
    if (!cfg.contains("similarity_dim")) cfg["similarity_dim"] = corpus->words->dim();
    const ModelConfig config = ModelConfigFromJson(cfg);
    std::vector<const Item*> items;
    for (const CatalogItem& it : corpus->catalog->items()) items.push_back(&it);
    for (const Scenario& s : corpus->scenarios) items.push_back(&s.item);
    auto m = std::make_unique<pn_model>();
    m->model = std::make_unique<Model>(config, BuildOveVocabulary(items),
                                       BuildDialogueVocabulary(items, corpus->dialogues));
    CheckWords(*m->model, *corpus);
    if (corpus->words->loaded() > 0 && corpus->words->dim() == config.dim) m->model->InitWordVectors(*corpus->words);
    m->model->set_catalog_path(corpus->catalog_path);
    m->model->set_word_vectors_path(corpus->word_vectors_path);
    *out = m.release();
  });
}

pn_status pn_model_load(const char* path, pn_model** out) {
  return Guarded([&] {
    Require(path, "path");
    Require(out, "out");
    *out = nullptr;
    auto m = std::make_unique<pn_model>();
    m->model = Model::Load(path);
    *out = m.release();
  });
}

pn_status pn_model_save(const pn_model* model, const char* path) {
  return Guarded([&] {
    Require(model, "model");
    Require(path, "path");
    model->model->Save(path);
  });
}

void pn_model_free(pn_model* model) { delete model; }

pn_status pn_model_info(const pn_model* model, char** info_json) {
  return Guarded([&] {
    Require(model, "model");
    const Model& m = *model->model;
    Emit(info_json, {{"config", ToJson(m.config())},
                     {"stages", std::vector<std::string>(m.stages().begin(), m.stages().end())},
                     {"parameters", m.store().ScalarCount()},
                     {"catalog_path", m.catalog_path()},
                     {"word_vectors_path", m.word_vectors_path()}});
  });
}

pn_status pn_train_ove(pn_model* model, const pn_corpus* corpus, const char* train_json, const char* metrics_csv,
                       char** report_json) {
  return Guarded([&] {
    Require(model, "model");
    Require(corpus, "corpus");
    Model& m = *model->model;
    CheckWords(m, *corpus);
    const TrainConfig config = TrainOptions(train_json);
    auto log = OpenMetrics(metrics_csv);
    const auto examples = CorpusValueExamples(*corpus);
    const StageReport ove = TrainOve(m, *corpus->catalog, examples, config, log.get());
    const StageReport ave = TrainAve(m, examples, config, log.get());
    Emit(report_json, {{"examples", examples.size()},
                       {"ove", StageJson(ove)},
                       {"ave", StageJson(ave)},
                       {"ove_divergence", EvaluateOve(m, *corpus->catalog, examples)},
                       {"ave_divergence", EvaluateAve(m, examples)}});
  });
}

pn_status pn_train_sl(pn_model* model, const pn_corpus* corpus, const char* train_json, const char* metrics_csv,
                      char** report_json) {
  return Guarded([&] {
    Require(model, "model");
    Require(corpus, "corpus");
    Model& m = *model->model;
    CheckWords(m, *corpus);
    const TrainConfig config = TrainOptions(train_json);
    auto log = OpenMetrics(metrics_csv);
    const std::vector<Dialogue> dialogues = Labeled(*corpus);
    json report = json::object();
    if (!m.HasStage("ove")) {
      report["ove"] = StageJson(TrainOve(m, *corpus->catalog, CorpusValueExamples(*corpus), config, log.get()));
    }
    report["language"] = StageJson(TrainLanguage(m, *corpus->catalog, dialogues, corpus->index, config, log.get()));
    const auto examples = PolicyExamples(m, *corpus->catalog, dialogues, corpus->index);
    report["policy"] = StageJson(TrainPolicy(m, examples, config, log.get()));
    report["language_nll"] = LanguageNll(m, *corpus->catalog, dialogues, corpus->index);
    report["policy_accuracy"] = PolicyAccuracy(m, examples);
    Emit(report_json, report);
  });
}

pn_status pn_train_rl(pn_model* model, const pn_corpus* corpus, const char* train_json, const char* metrics_csv,
                      char** report_json) {
  return Guarded([&] {
    Require(model, "model");
    Require(corpus, "corpus");
    CheckWords(*model->model, *corpus);
    const TrainConfig config = TrainOptions(train_json);
    auto log = OpenMetrics(metrics_csv);
    const RlReport r = TrainRl(*model->model, *corpus->catalog, corpus->scenarios, config, log.get());
    double mean = 0.0;
    for (double x : r.rewards) mean += x;
    if (!r.rewards.empty()) mean /= static_cast<double>(r.rewards.size());
    Emit(report_json, {{"episodes", r.rewards.size()}, {"mean_reward", mean}, {"final_baseline", r.final_baseline}});
  });
}

pn_status pn_estimate(const pn_model* model, const pn_corpus* corpus, const char* item_json, char** result_json) {
  return Guarded([&] {
    Require(model, "model");
    Require(corpus, "corpus");
    Require(item_json, "item_json");
    const Model& m = *model->model;
    CheckWords(m, *corpus);
    const Item item = ItemFromJson(json::parse(item_json));
    const ValueEstimate v =
        Estimate(m.matching(), m.ove_vocab(), m.config().feature_dim, item, *corpus->catalog, m.config().neighbors);
    json neighbors = json::array();
    for (size_t i = 0; i < v.neighbors.neighbors.size(); ++i) {
      const Neighbor& n = v.neighbors.neighbors[i];
      neighbors.push_back({{"id", n.id}, {"score", n.score}, {"weight", v.weights[static_cast<Eigen::Index>(i)]}});
    }
    Emit(result_json, {{"estimate", v.estimate}, {"unclamped", v.unclamped}, {"neighbors", neighbors}});
  });
}

pn_status pn_selfplay(const pn_model* model, const pn_corpus* corpus, const char* options_json, const char* out_path,
                      char** summary_json) {
  return Guarded([&] {
    Require(model, "model");
    Require(corpus, "corpus");
    Require(out_path, "out_path");
    CheckWords(*model->model, *corpus);
    const json opts = ParseOptions(options_json);
    CheckKeys(opts, {"n", "seed", "sample", "temperature", "max_turns"});
    const int n = opts.value("n", 1);
    if (n <= 0) Fail(ErrorKind::kInvalidArgument, "n must be positive");
    if (corpus->scenarios.empty()) Fail(ErrorKind::kNoData, "corpus has no scenarios");
    std::mt19937_64 rng(opts.value("seed", uint64_t{1}));
    SelfPlayOptions sp;
    sp.session.max_turns = opts.value("max_turns", kDefaultMaxTurns);
    sp.act.sample_actions = opts.value("sample", false);
    sp.act.sample_text = sp.act.sample_actions;
    sp.act.temperature = opts.value("temperature", kDefaultSampleTemperature);
    sp.act.rng = &rng;
    const Agent agent(*model->model, *corpus->catalog);
    std::vector<Dialogue> out;
    size_t agreed = 0;
    double reward = 0.0;
    for (int i = 0; i < n; ++i) {
      const Scenario& s = corpus->scenarios[static_cast<size_t>(i) % corpus->scenarios.size()];
      SelfPlayResult r = SelfPlay(agent, s, sp);
      agreed += r.outcome.agreed ? 1 : 0;
      reward += Reward(r.outcome, r.estimate, s.listing_price());
      out.push_back(std::move(r.dialogue));
    }
    WriteDialogues(out_path, out);
    Emit(summary_json, {{"dialogues", out.size()}, {"agreed", agreed}, {"mean_reward", reward / n}});
  });
}

pn_status pn_evaluate(const char* generated_path, const char* human_path, const char* scenarios_path,
                      char** report_json) {
  return Guarded([&] {
    Require(generated_path, "generated_path");
    Require(human_path, "human_path");
    std::vector<Scenario> scenarios;
    if (scenarios_path != nullptr && *scenarios_path != '\0') scenarios = LoadScenarios(scenarios_path);
    const ScenarioIndex index = IndexScenarios(scenarios);
    const auto generated = LoadDialogues(generated_path, index);
    const auto human = LoadDialogues(human_path, index);
    Emit(report_json, ToJson(Evaluate(generated, human, index)));
  });
}

pn_status pn_service_create(const pn_model* model, const pn_corpus* corpus, const char* options_json,
                            pn_service** out) {
  return Guarded([&] {
    Require(model, "model");
    Require(corpus, "corpus");
    Require(out, "out");
    *out = nullptr;
    CheckWords(*model->model, *corpus);
    const json opts = ParseOptions(options_json);
    CheckKeys(opts, {"log_path", "idle_timeout_seconds", "max_turns", "first_mover"});
    ServiceOptions so;
    so.log_path = opts.value("log_path", "");
    so.idle_timeout_seconds = opts.value("idle_timeout_seconds", so.idle_timeout_seconds);
    so.session.max_turns = opts.value("max_turns", kDefaultMaxTurns);
    so.session.first_mover = ParseRole(opts.value("first_mover", "buyer"));
    auto s = std::make_unique<pn_service>();
    s->agent = std::make_unique<Agent>(*model->model, *corpus->catalog);
    s->service = std::make_unique<SessionService>(*s->agent, corpus->scenarios, so);
    *out = s.release();
  });
}

void pn_service_free(pn_service* service) { delete service; }

pn_status pn_service_create_session(pn_service* service, const char* scenario_id, const char* human_role,
                                    char** session_json) {
  return Guarded([&] {
    Require(service, "service");
    Require(scenario_id, "scenario_id");
    const Role role = ParseRole(human_role != nullptr ? human_role : "buyer");
    const CreatedSession c = service->service->Create(scenario_id, role);
    json messages = json::array();
    for (const WireMessage& m : c.messages) messages.push_back(ToJson(m));
    Emit(session_json, {{"session_id", c.session_id},
                        {"human_role", RoleName(c.human_role)},
                        {"agent_role", RoleName(c.agent_role)},
                        {"messages", messages}});
  });
}

pn_status pn_service_handle(pn_service* service, const char* session_id, const char* message_json,
                            char** messages_json) {
  return Guarded([&] {
    Require(service, "service");
    Require(session_id, "session_id");
    Require(message_json, "message_json");
    json j;
    try {
      j = json::parse(message_json);
    } catch (const json::exception& e) {
      Fail(ErrorKind::kParse, std::string("message is not JSON: ") + e.what());
    }
    json out = json::array();
    for (const WireMessage& m : service->service->Handle(session_id, WireMessageFromJson(j))) {
      out.push_back(ToJson(m));
    }
    Emit(messages_json, out);
  });
}

pn_status pn_service_rate(pn_service* service, const char* session_id, const char* rating_json) {
  return Guarded([&] {
    Require(service, "service");
    Require(session_id, "session_id");
    Require(rating_json, "rating_json");
    service->service->Rate(session_id, RatingFromJson(json::parse(rating_json)));
  });
}

pn_status pn_service_scenario(const pn_service* service, const char* scenario_id, char** summary_json) {
  return Guarded([&] {
    Require(service, "service");
    Require(scenario_id, "scenario_id");
    Emit(summary_json, service->service->ScenarioSummary(scenario_id));
  });
}

pn_status pn_service_expire_idle(pn_service* service, size_t* expired) {
  return Guarded([&] {
    Require(service, "service");
    const size_t n = service->service->ExpireIdle();
    if (expired != nullptr) *expired = n;
  });
}

pn_status pn_server_start(pn_service* service, const char* host, int port, pn_server** out, int* bound_port) {
  return Guarded([&] {
    Require(service, "service");
    Require(out, "out");
    *out = nullptr;
    auto s = std::make_unique<pn_server>();
    s->gateway = std::make_unique<HttpGateway>(*service->service);
    const int bound = s->gateway->Bind(host != nullptr ? host : "127.0.0.1", port);
    if (bound_port != nullptr) *bound_port = bound;
    s->thread = std::thread([g = s->gateway.get()] { g->Run(); });
    s->gateway->WaitUntilReady();
    *out = s.release();
  });
}

pn_status pn_server_wait(pn_server* server) {
  return Guarded([&] {
    Require(server, "server");
    if (server->thread.joinable()) server->thread.join();
  });
}

void pn_server_stop(pn_server* server) {
  if (server != nullptr) server->gateway->Stop();
}

void pn_server_free(pn_server* server) {
  if (server == nullptr) return;
  server->gateway->Stop();
  if (server->thread.joinable()) server->thread.join();
  delete server;
}

pn_status pn_replay(const char* log_path, const char* scenarios_path, char** report_json) {
  return Guarded([&] {
    Require(log_path, "log_path");
    Require(scenarios_path, "scenarios_path");
    Emit(report_json, ReplayLog(log_path, LoadScenarios(scenarios_path)).ToJson());
  });
}

pn_status pn_legal_actions(char** table_json) {
  return Guarded([&] { Emit(table_json, LegalActionTable()); });
}

}  // extern "C"
