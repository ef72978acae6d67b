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

// Runs the command-line tool as a subprocess against the generated world.

#include <signal.h>
#include <sys/wait.h>
#include <unistd.h>

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <thread>

#include "doctest.h"
#include "httplib.h"
#include "json.hpp"

namespace {

using nlohmann::json;
namespace fs = std::filesystem;

const std::string kCli = PN_CLI_PATH;
const std::string kWorld = PN_WORLD_DIR;

fs::path Dir() {
  const fs::path d = fs::temp_directory_path() / "pricenego_cli";
  fs::create_directories(d);
  return d;
}

std::string Write(const std::string& name, const std::string& text) {
  const fs::path p = Dir() / name;
  std::ofstream(p) << text;
  return p.string();
}

struct Result {
  int code = -1;
  std::string out;
};

Result Run(const std::string& args, const std::string& input = "") {
  std::string cmd = "'" + kCli + "' " + args + " 2>/dev/null";
  if (!input.empty()) cmd += " < '" + Write("stdin.txt", input) + "'";
  FILE* p = popen(cmd.c_str(), "r");
  REQUIRE(p != nullptr);
  Result r;
  char buf[4096];
  size_t n = 0;
  while ((n = fread(buf, 1, sizeof buf, p)) > 0) r.out.append(buf, n);
  const int status = pclose(p);
  r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  return r;
}



std::vector<std::string> Lines(const fs::path& p) {
  std::ifstream f(p);
  std::vector<std::string> out;
  for (std::string line; std::getline(f, line);) {
    if (!line.empty()) out.push_back(line);
  }
  return out;
}

std::string Data() {
  return " --scenarios " + kWorld + "/scenarios.jsonl --catalog " + kWorld + "/catalog.jsonl --dialogues " + kWorld +
         "/dialogues.jsonl --word-dim 8";
}

// Trains a tiny checkpoint once and shares it across cases.
const std::string& Checkpoint() {
  static const std::string path = [] {
    const std::string model = Write("model.json", R"({"dim": 8, "layers": 1, "policy_hidden": 8, "ave_hidden": 8,
                                                     "similarity_dim": 8, "neighbors": 8})");
    const json s = {{"lr_high", 1e-2}, {"epochs_high", 2}, {"lr_low", 1e-3}, {"epochs_low", 0}};
    const std::string train = Write(
        "train.json",
        json{{"ove", s}, {"ave", s}, {"language", s}, {"policy", s}, {"batch_size", 8}, {"rl_episodes", 4}}.dump());
    const std::string a = (Dir() / "a.bin").string(), b = (Dir() / "b.bin").string(),
                      c = (Dir() / "c.bin").string();
    const std::string metrics = (Dir() / "metrics.csv").string();
    fs::remove(metrics);
    const std::string common = " --train-config " + train + " --metrics " + metrics;
    REQUIRE(Run("train-ove" + Data() + " --model-config " + model + common + " --out " + a).code == 0);
    REQUIRE(Run("train-sl" + Data() + " --ckpt " + a + common + " --out " + b).code == 0);
    const Result rl = Run("train-rl --scenarios " + kWorld + "/scenarios.jsonl --ckpt " + b + common + " --out " + c);
    REQUIRE(rl.code == 0);
    CHECK(json::parse(rl.out).at("episodes") == 4);
    // One log across the three commands, with a single header.
    const auto rows = Lines(metrics);
    REQUIRE(!rows.empty());
    CHECK(std::count(rows.begin(), rows.end(), rows.front()) == 1);
    for (const char* stage : {"ove,", "language,", "policy,", "rl,"}) {
      CHECK_MESSAGE(std::any_of(rows.begin(), rows.end(), [&](const std::string& r) { return r.rfind(stage, 0) == 0; }),
                    stage);
    }
    return c;
  }();
  return path;
}

}  // namespace

TEST_CASE("bad invocations exit nonzero") {
  CHECK(Run("").code != 0);
  CHECK(Run("no-such-command").code != 0);
  CHECK(Run("eval --gen x --ref y --bogus").code != 0);
  CHECK(Run("eval --gen /no/such/file --ref /no/such/file").code != 0);
  CHECK(Run("train-rl --ckpt /no/such/file --out x.bin").code != 0);
  CHECK(Run("--help").code == 0);
}

TEST_CASE("a garbage checkpoint is a runtime error") {
  const std::string junk = Write("junk.bin", "not a checkpoint");
  CHECK(Run("estimate --item " + kWorld + "/item.json --ckpt " + junk).code == 1);
}

TEST_CASE("selfplay writes one transcript per line and eval reports every metric") {
  const fs::path out = Dir() / "self.jsonl";
  const Result r =
      Run("selfplay --scenarios " + kWorld + "/scenarios.jsonl --ckpt " + Checkpoint() + " --n 6 --out " + out.string());
  REQUIRE(r.code == 0);
  const auto lines = Lines(out);
  REQUIRE(lines.size() == 6);
  for (const std::string& l : lines) {
    const json d = json::parse(l);
    CHECK(d.contains("scenario_id"));
    CHECK(d.at("turns").is_array());
  }

  const fs::path report = Dir() / "report.json";
  fs::remove(report);
  const Result e = Run("eval --gen " + out.string() + " --ref " + kWorld + "/dialogues.jsonl --scenarios " + kWorld +
                       "/scenarios.jsonl --out " + report.string());
  REQUIRE(e.code == 0);
  REQUIRE(fs::exists(report));
  std::ifstream f(report);
  const json j = json::parse(f);
  for (const char* key : {"bleu", "ibleu", "vocab_diversity", "sentence_diversity", "avg_dialogue_length",
                          "price_inconsistency_rate", "offer_inconsistency_rate", "human_divergence"}) {
    CHECK_MESSAGE(j.contains(key), key);
  }
  CHECK(j.at("dialogues") == 6);
  CHECK(j == json::parse(e.out));
}

TEST_CASE("estimate prints the value and its weighted neighbours") {
  const Result r = Run("estimate --item " + kWorld + "/item.json --ckpt " + Checkpoint());
  REQUIRE(r.code == 0);
  std::istringstream in(r.out);
  std::string word;
  double value = 0.0;
  in >> word >> value;
  CHECK(word == "estimate");
  CHECK(value > 0.0);
  int count = 0;
  double total = 0.0;
  std::string id;
  double w = 0.0;
  while (in >> id >> w) {
    CHECK(w >= 0.0);
    total += w;
    ++count;
  }
  CHECK(count == 8);
  CHECK(total == doctest::Approx(1.0).epsilon(1e-4));
}

TEST_CASE("a scripted chat leaves a log that replays cleanly") {
  const fs::path log = Dir() / "chat.jsonl";
  fs::remove(log);
  const Result r = Run("chat --scenarios " + kWorld + "/scenarios.jsonl --ckpt " + Checkpoint() +
                           " --role buyer --log " + log.string(),
                       "hello there\n/accept\n/offer $1,000\n/quit\n");
  REQUIRE(r.code == 0);
  CHECK(r.out.find("You are the buyer") != std::string::npos);
  CHECK(r.out.find("usage: /offer") == std::string::npos);
  CHECK(r.out.find("-- ") != std::string::npos);
  CHECK(!Lines(log).empty());

  const Result ok = Run("replay --log " + log.string() + " --scenarios " + kWorld + "/scenarios.jsonl");
  CHECK(ok.code == 0);
  const json rep = json::parse(ok.out);
  CHECK(rep.at("matched") == 1);
  CHECK(rep.at("mismatched").empty());

  // Rewrite the agreed price in the outcome record.
  std::vector<std::string> lines = Lines(log);
  bool edited = false;
  for (std::string& l : lines) {
    json j = json::parse(l);
    if (j.value("record", "") == "outcome") {
      j["agreed"] = !j.value("agreed", false);
      l = j.dump();
      edited = true;
    }
  }
  REQUIRE(edited);
  std::ofstream bad(Dir() / "tampered.jsonl");
  for (const std::string& l : lines) bad << l << "\n";
  bad.close();
  CHECK(Run("replay --log " + (Dir() / "tampered.jsonl").string() + " --scenarios " + kWorld + "/scenarios.jsonl")
            .code == 2);
}

TEST_CASE("serve answers on an ephemeral port and stops on SIGTERM") {
  const fs::path out = Dir() / "serve.out";
  fs::remove(out);
  const std::string cmd = "'" + kCli + "' serve --scenarios " + kWorld + "/scenarios.jsonl --ckpt " + Checkpoint() +
                          " --port 0 --log " + (Dir() / "serve.jsonl").string() + " > " + out.string() +
                          " 2>&1 & echo $!";
  FILE* p = popen(cmd.c_str(), "r");
  REQUIRE(p != nullptr);
  int pid = 0;
  REQUIRE(fscanf(p, "%d", &pid) == 1);
  pclose(p);

  int port = 0;
  for (int i = 0; i < 200 && port == 0; ++i) {
    std::ifstream f(out);
    std::string text((std::istreambuf_iterator<char>(f)), std::istreambuf_iterator<char>());
    const auto at = text.find("listening on ");
    if (at != std::string::npos && text.find('\n', at) != std::string::npos) {
      port = std::stoi(text.substr(text.rfind(':', text.find('\n', at)) + 1));
    } else {
      std::this_thread::sleep_for(std::chrono::milliseconds(50));
    }
  }
  REQUIRE(port > 0);

  httplib::Client client("127.0.0.1", port);
  const auto health = client.Get("/healthz");
  REQUIRE(health);
  CHECK(health->status == 200);
  std::ifstream scenarios(kWorld + "/scenarios.jsonl");
  std::string first;
  std::getline(scenarios, first);
  const json body = {{"scenario_id", json::parse(first).at("id")}, {"human_role", "seller"}};
  const auto created = client.Post("/sessions", body.dump(), "application/json");
  REQUIRE(created);
  CHECK(created->status == 201);

  REQUIRE(kill(pid, SIGTERM) == 0);
  bool gone = false;
  for (int i = 0; i < 200 && !gone; ++i) {
    gone = kill(pid, 0) != 0;
    if (!gone) std::this_thread::sleep_for(std::chrono::milliseconds(50));
  }
  CHECK(gone);
}
