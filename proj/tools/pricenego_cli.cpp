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

// Command-line front end. Talks to the engine only through the C API.

#include <csignal>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <memory>
#include <sstream>
#include <string>

#include "CLI11.hpp"
#include "json.hpp"
#include "pricenego.h"

using nlohmann::json;

namespace {

struct Failure {
  std::string message;
};

void Check(pn_status s, const std::string& what) {
  if (s != PN_OK) throw Failure{what + ": " + pn_status_name(s) + ": " + pn_last_error()};
}

// Takes ownership of a string returned by the library.
std::string Take(char* s) {
  std::string out = s != nullptr ? s : "";
  pn_string_free(s);
  return out;
}

std::string ReadFile(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw Failure{"cannot read " + path};
  std::stringstream ss;
  ss << f.rdbuf();
  return ss.str();
}

void WriteFile(const std::string& path, const std::string& text) {
  std::ofstream f(path, std::ios::trunc);
  if (!f || !(f << text << '\n')) throw Failure{"cannot write " + path};
}

const char* OrNull(const std::string& s) { return s.empty() ? nullptr : s.c_str(); }

using CorpusPtr = std::unique_ptr<pn_corpus, decltype(&pn_corpus_free)>;
using ModelPtr = std::unique_ptr<pn_model, decltype(&pn_model_free)>;
using ServicePtr = std::unique_ptr<pn_service, decltype(&pn_service_free)>;

struct DataArgs {
  std::string scenarios;
  std::string catalog;
  std::string dialogues;
  std::string word_vectors;
  int word_dim = 0;

  void Add(CLI::App* app, bool need_dialogues) {
    app->add_option("--scenarios", scenarios, "Scenario JSONL")->check(CLI::ExistingFile);
    app->add_option("--catalog", catalog, "Catalog JSONL (default: the checkpoint's, else the scenarios' items)")
        ->check(CLI::ExistingFile);
    auto* d = app->add_option("--dialogues", dialogues, "Human dialogue JSONL")->check(CLI::ExistingFile);
    if (need_dialogues) d->required();
    app->add_option("--word-vectors", word_vectors, "GloVe-format text file")->check(CLI::ExistingFile);
    app->add_option("--word-dim", word_dim, "Dimension of hashed word vectors")->check(CLI::PositiveNumber);
  }
};

json ModelInfo(const pn_model* m) {
  char* out = nullptr;
  Check(pn_model_info(m, &out), "model info");
  return json::parse(Take(out));
}

// Missing data paths fall back to those recorded in the checkpoint.
CorpusPtr OpenCorpus(const DataArgs& a, const pn_model* model) {
  json cfg = json::object();
  if (!a.scenarios.empty()) cfg["scenarios"] = a.scenarios;
  if (!a.dialogues.empty()) cfg["dialogues"] = a.dialogues;
  std::string catalog = a.catalog;
  std::string words = a.word_vectors;
  int dim = a.word_dim;
  if (model != nullptr) {
    const json info = ModelInfo(model);
    if (catalog.empty()) catalog = info.value("catalog_path", "");
    if (words.empty()) words = info.value("word_vectors_path", "");
    if (dim == 0) dim = info.at("config").at("similarity_dim").get<int>();
  }
  if (!catalog.empty()) cfg["catalog"] = catalog;
  if (!words.empty()) {
    cfg["word_vectors"] = words;
  } else if (dim > 0) {
    cfg["word_dim"] = dim;
  }
  pn_corpus* c = nullptr;
  Check(pn_corpus_open(cfg.dump().c_str(), &c), "loading data");
  return CorpusPtr(c, pn_corpus_free);
}

ModelPtr LoadModel(const std::string& path) {
  pn_model* m = nullptr;
  Check(pn_model_load(path.c_str(), &m), "loading " + path);
  return ModelPtr(m, pn_model_free);
}

ModelPtr CreateModel(const pn_corpus* corpus, const std::string& config_path) {
  const std::string cfg = config_path.empty() ? "{}" : ReadFile(config_path);
  pn_model* m = nullptr;
  Check(pn_model_create(corpus, cfg.c_str(), &m), "creating model");
  return ModelPtr(m, pn_model_free);
}

ServicePtr MakeService(const pn_model* model, const pn_corpus* corpus, const json& options) {
  pn_service* s = nullptr;
  Check(pn_service_create(model, corpus, options.dump().c_str(), &s), "starting service");
  return ServicePtr(s, pn_service_free);
}

pn_server* g_server = nullptr;

void OnSignal(int) {
  if (g_server != nullptr) pn_server_stop(g_server);
}

std::string Env(const char* name) {
  const char* v = std::getenv(name);
  return v != nullptr ? v : "";
}

void PrintMessages(const json& messages) {
  for (const json& m : messages) {
    const std::string type = m.at("type");
    const std::string from = m.value("from", "");
    if (from == "human") continue;
    if (type == "utterance") {
      std::cout << "agent: " << m.value("text", "") << "\n";
    } else if (type == "offer") {
      std::cout << "agent offers $" << m.at("price").get<double>() << "  (/accept or /reject)\n";
    } else if (type == "outcome") {
      std::cout << "-- " << m.value("text", "") << ": ";
      if (m.value("agreed", false)) {
        std::cout << "deal at $" << m.at("price").get<double>() << "\n";
      } else {
        std::cout << "no deal\n";
      }
    } else if (type == "error") {
      std::cout << "!! " << m.value("text", "") << "\n";
    } else {
      std::cout << "agent: <" << type << ">\n";
    }
  }
  std::cout.flush();
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Price negotiation: training, self-play, evaluation and serving"};
  app.require_subcommand(1);

  DataArgs data;
  std::string ckpt, out, model_config, train_config, metrics;

  auto* train_ove = app.add_subcommand("train-ove", "Train the value estimators");
  data.Add(train_ove, true);
  train_ove->add_option("--ckpt", ckpt, "Start from this checkpoint")->check(CLI::ExistingFile);
  train_ove->add_option("--out", out, "Output checkpoint")->required();

  auto* train_sl = app.add_subcommand("train-sl", "Supervised training of language and policy");
  data.Add(train_sl, true);
  train_sl->add_option("--ckpt", ckpt, "Start from this checkpoint")->check(CLI::ExistingFile);
  train_sl->add_option("--out", out, "Output checkpoint")->required();

  auto* train_rl = app.add_subcommand("train-rl", "Policy-gradient fine-tuning by self-play");
  data.Add(train_rl, false);
  train_rl->add_option("--ckpt", ckpt, "Supervised checkpoint")->required()->check(CLI::ExistingFile);
  train_rl->add_option("--out", out, "Output checkpoint")->required();

  for (CLI::App* sub : {train_ove, train_sl, train_rl}) {
    sub->add_option("--train-config", train_config, "Training config JSON")->check(CLI::ExistingFile);
    sub->add_option("--metrics", metrics, "Append per-epoch metrics CSV here");
  }
  for (CLI::App* sub : {train_ove, train_sl}) {
    sub->add_option("--model-config", model_config, "Model config JSON for a fresh model")->check(CLI::ExistingFile);
  }

  int n = 1;
  uint64_t seed = 1;
  bool sample = false;
  auto* selfplay = app.add_subcommand("selfplay", "Agent-vs-agent transcripts");
  data.Add(selfplay, false);
  selfplay->add_option("--ckpt", ckpt, "Checkpoint")->required()->check(CLI::ExistingFile);
  selfplay->add_option("--n", n, "Number of transcripts")->check(CLI::PositiveNumber);
  selfplay->add_option("--out", out, "Output JSONL")->required();
  selfplay->add_option("--seed", seed, "Sampling seed");
  selfplay->add_flag("--sample", sample, "Sample actions and text instead of greedy decoding");

  std::string gen, ref, report;
  auto* eval = app.add_subcommand("eval", "Metric report for generated dialogues");
  eval->add_option("--gen", gen, "Generated dialogue JSONL")->required()->check(CLI::ExistingFile);
  eval->add_option("--ref", ref, "Human dialogue JSONL")->required()->check(CLI::ExistingFile);
  eval->add_option("--scenarios", data.scenarios, "Scenario JSONL")->check(CLI::ExistingFile);
  eval->add_option("--out", report, "Write the report here (default report.json)");

  std::string item;
  auto* estimate = app.add_subcommand("estimate", "Estimate an item's value");
  estimate->add_option("--item", item, "Item JSON")->required()->check(CLI::ExistingFile);
  estimate->add_option("--catalog", data.catalog, "Catalog JSONL")->check(CLI::ExistingFile);
  estimate->add_option("--word-vectors", data.word_vectors, "GloVe-format text file")->check(CLI::ExistingFile);
  estimate->add_option("--ckpt", ckpt, "Checkpoint (default $PRICENEGO_CKPT)")->check(CLI::ExistingFile);

  std::string host, log_path;
  int port = -1;
  double idle = 600.0;
  auto* serve = app.add_subcommand("serve", "HTTP gateway for human-vs-agent sessions");
  data.Add(serve, false);
  serve->add_option("--ckpt", ckpt, "Checkpoint (default $PRICENEGO_CKPT)")->check(CLI::ExistingFile);
  serve->add_option("--host", host, "Bind address (default from $PRICENEGO_BIND, else 127.0.0.1)");
  serve->add_option("--port", port, "Port (default from $PRICENEGO_BIND, else 8080)")->check(CLI::Range(0, 65535));
  serve->add_option("--log", log_path, "Session log (default sessions.jsonl)");
  serve->add_option("--idle-timeout", idle, "Seconds before an idle session is quit")->check(CLI::PositiveNumber);

  std::string scenario_id, role = "buyer";
  auto* chat = app.add_subcommand("chat", "Negotiate with the agent in the terminal");
  data.Add(chat, false);
  chat->add_option("--ckpt", ckpt, "Checkpoint (default $PRICENEGO_CKPT)")->check(CLI::ExistingFile);
  chat->add_option("--scenario", scenario_id, "Scenario id (default: the first)");
  chat->add_option("--role", role, "Your role")->check(CLI::IsMember({"buyer", "seller"}));
  chat->add_option("--log", log_path, "Session log");

  auto* replay = app.add_subcommand("replay", "Check a session log against the state machine");
  replay->add_option("--log", log_path, "Session log")->required()->check(CLI::ExistingFile);
  replay->add_option("--scenarios", data.scenarios, "Scenario JSONL")->required()->check(CLI::ExistingFile);

  CLI11_PARSE(app, argc, argv);

  try {
    if (ckpt.empty() && (estimate->parsed() || serve->parsed() || chat->parsed())) ckpt = Env("PRICENEGO_CKPT");
    const std::string train_json = train_config.empty() ? "{}" : ReadFile(train_config);
    char* result = nullptr;

    if (train_ove->parsed() || train_sl->parsed() || train_rl->parsed()) {
      ModelPtr model(nullptr, pn_model_free);
      CorpusPtr corpus(nullptr, pn_corpus_free);
      if (!ckpt.empty()) {
        model = LoadModel(ckpt);
        corpus = OpenCorpus(data, model.get());
      } else {
        if (data.scenarios.empty()) throw Failure{"--scenarios is required for a fresh model"};
        corpus = OpenCorpus(data, nullptr);
        model = CreateModel(corpus.get(), model_config);
      }
      const char* m = OrNull(metrics);
      if (train_ove->parsed()) {
        Check(pn_train_ove(model.get(), corpus.get(), train_json.c_str(), m, &result), "train-ove");
      } else if (train_sl->parsed()) {
        Check(pn_train_sl(model.get(), corpus.get(), train_json.c_str(), m, &result), "train-sl");
      } else {
        Check(pn_train_rl(model.get(), corpus.get(), train_json.c_str(), m, &result), "train-rl");
      }
      Check(pn_model_save(model.get(), out.c_str()), "saving " + out);
      std::cout << Take(result) << "\n";
    } else if (selfplay->parsed()) {
      ModelPtr model = LoadModel(ckpt);
      if (data.scenarios.empty()) throw Failure{"--scenarios is required"};
      CorpusPtr corpus = OpenCorpus(data, model.get());
      const json opts = {{"n", n}, {"seed", seed}, {"sample", sample}};
      Check(pn_selfplay(model.get(), corpus.get(), opts.dump().c_str(), out.c_str(), &result), "selfplay");
      std::cout << Take(result) << "\n";
    } else if (eval->parsed()) {
      Check(pn_evaluate(gen.c_str(), ref.c_str(), OrNull(data.scenarios), &result), "eval");
      const std::string text = json::parse(Take(result)).dump(2);
      WriteFile(report.empty() ? "report.json" : report, text);
      std::cout << text << "\n";
    } else if (estimate->parsed()) {
      if (ckpt.empty()) throw Failure{"--ckpt or PRICENEGO_CKPT is required"};
      ModelPtr model = LoadModel(ckpt);
      CorpusPtr corpus = OpenCorpus(data, model.get());
      const std::string item_json = ReadFile(item);
      Check(pn_estimate(model.get(), corpus.get(), item_json.c_str(), &result), "estimate");
      const json r = json::parse(Take(result));
      std::cout << "estimate " << r.at("estimate").get<double>() << "\n";
      for (const json& nb : r.at("neighbors")) {
        std::cout << nb.at("id").get<std::string>() << " " << nb.at("weight").get<double>() << "\n";
      }
    } else if (serve->parsed() || chat->parsed()) {
      if (ckpt.empty()) throw Failure{"--ckpt or PRICENEGO_CKPT is required"};
      if (data.scenarios.empty()) throw Failure{"--scenarios is required"};
      ModelPtr model = LoadModel(ckpt);
      CorpusPtr corpus = OpenCorpus(data, model.get());
      json opts = {{"idle_timeout_seconds", idle}};
      if (serve->parsed() && log_path.empty()) log_path = "sessions.jsonl";
      if (!log_path.empty()) opts["log_path"] = log_path;
      ServicePtr service = MakeService(model.get(), corpus.get(), opts);

      if (serve->parsed()) {
        const std::string bind = Env("PRICENEGO_BIND");
        if (!bind.empty()) {
          const auto colon = bind.rfind(':');
          if (host.empty()) host = bind.substr(0, colon);
          if (port < 0 && colon != std::string::npos) port = std::stoi(bind.substr(colon + 1));
        }
        if (host.empty()) host = "127.0.0.1";
        if (port < 0) port = 8080;
        int bound = 0;
        Check(pn_server_start(service.get(), host.c_str(), port, &g_server, &bound), "serve");
        std::signal(SIGINT, OnSignal);
        std::signal(SIGTERM, OnSignal);
        std::cout << "listening on " << host << ":" << bound << std::endl;
        Check(pn_server_wait(g_server), "serve");
        pn_server_free(g_server);
        g_server = nullptr;
      } else {
        if (scenario_id.empty()) {
          std::ifstream f(data.scenarios);
          std::string line;
          while (scenario_id.empty() && std::getline(f, line)) {
            if (!line.empty()) scenario_id = json::parse(line).at("id").get<std::string>();
          }
        }
        Check(pn_service_scenario(service.get(), scenario_id.c_str(), &result), "scenario");
        const json summary = json::parse(Take(result));
        std::cout << summary.at("title").get<std::string>() << " (" << summary.at("category").get<std::string>()
                  << "), listed at $" << summary.at("listing_price").get<double>() << "\n"
                  << "You are the " << role << ". Type to talk; /offer <price>, /accept, /reject, /quit.\n";
        Check(pn_service_create_session(service.get(), scenario_id.c_str(), role.c_str(), &result), "session");
        const json session = json::parse(Take(result));
        const std::string id = session.at("session_id");
        PrintMessages(session.at("messages"));
        std::string line;
        bool closed = false;
        while (!closed && std::cout << "> " << std::flush && std::getline(std::cin, line)) {
          if (line.empty()) continue;
          json msg;
          if (line.rfind("/offer", 0) == 0) {
            msg = {{"type", "offer"}};
            std::string amount = line.substr(6);
            std::erase_if(amount, [](char c) { return c == '$' || c == ','; });
            try {
              msg["price"] = std::stod(amount);
            } catch (const std::exception&) {
              std::cout << "usage: /offer <price>\n";
              continue;
            }
          } else if (line == "/accept" || line == "/reject" || line == "/quit") {
            msg = {{"type", line.substr(1)}};
          } else {
            msg = {{"type", "utterance"}, {"text", line}};
          }
          Check(pn_service_handle(service.get(), id.c_str(), msg.dump().c_str(), &result), "message");
          const json replies = json::parse(Take(result));
          PrintMessages(replies);
          for (const json& r : replies) closed = closed || r.at("type") == "outcome";
        }
      }
    } else if (replay->parsed()) {
      Check(pn_replay(log_path.c_str(), data.scenarios.c_str(), &result), "replay");
      const json r = json::parse(Take(result));
      std::cout << r.dump(2) << "\n";
      if (!r.at("mismatched").empty()) return 2;
    }
  } catch (const Failure& f) {
    std::cerr << "error: " << f.message << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
