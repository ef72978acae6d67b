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

#include "pricenego/model.hpp"

#include <random>

#include "pricenego/error.hpp"

namespace pricenego {

void ModelConfig::Validate() const {
  if (feature_dim <= 0 || dim <= 0 || layers <= 0 || policy_hidden <= 0 || ave_hidden <= 0 || neighbors <= 0 ||
      similarity_dim <= 0) {
    Fail(ErrorKind::kInvalidArgument, "model dimensions must be positive");
  }
}

nlohmann::json ToJson(const ModelConfig& c) {
  return {{"feature_dim", c.feature_dim},     {"dim", c.dim},
          {"layers", c.layers},               {"policy_hidden", c.policy_hidden},
          {"ave_hidden", c.ave_hidden},       {"neighbors", c.neighbors},
          {"similarity_dim", c.similarity_dim}, {"seed", c.seed}};
}

ModelConfig ModelConfigFromJson(const nlohmann::json& j) {
  if (!j.is_object()) Fail(ErrorKind::kParse, "model config must be a JSON object");
  static const std::set<std::string> known = {"feature_dim", "dim",       "layers",         "policy_hidden",
                                              "ave_hidden",  "neighbors", "similarity_dim", "seed"};
  for (const auto& [key, value] : j.items()) {
    if (!known.count(key)) Fail(ErrorKind::kInvalidArgument, "unknown model config key: " + key);
  }
  ModelConfig c;
  try {
    c.feature_dim = j.value("feature_dim", c.feature_dim);
    c.dim = j.value("dim", c.dim);
    c.layers = j.value("layers", c.layers);
    c.policy_hidden = j.value("policy_hidden", c.policy_hidden);
    c.ave_hidden = j.value("ave_hidden", c.ave_hidden);
    c.neighbors = j.value("neighbors", c.neighbors);
    c.similarity_dim = j.value("similarity_dim", c.similarity_dim);
    c.seed = j.value("seed", c.seed);
  } catch (const nlohmann::json::exception& e) {
    Fail(ErrorKind::kParse, std::string("model config: ") + e.what());
  }
  c.Validate();
  return c;
}

Model::Model(ModelConfig config, Vocabulary ove_vocab, Vocabulary dialogue_vocab)
    : config_(config), ove_vocab_(std::move(ove_vocab)), dialogue_vocab_(std::move(dialogue_vocab)) {
  config_.Validate();
  std::mt19937_64 rng(config_.seed);
  const int d = config_.dim;
  matching_ = MatchingNetwork(store_, "ove", config_.feature_dim, d, ove_vocab_.size(), rng);
  ave_ = ValueRegressor(store_, "ave", config_.feature_dim, d, config_.ave_hidden, ove_vocab_.size(), rng);
  dialogue_table_ = &store_.AddUniform("dlg.word_emb", d, dialogue_vocab_.size(), 0.1, rng);
  word_encoder_ = WordEncoder(store_, "enc.word", *dialogue_table_, d, config_.layers, rng);
  history_encoder_ = HistoryEncoder(store_, "enc.hist", d, config_.layers, rng);
  decoder_ = Decoder(store_, "dec", *dialogue_table_, d, config_.layers, dialogue_vocab_.size(), rng);
  policy_ = PolicyHeads(store_, "policy", config_.state_dim(), config_.policy_hidden, rng);
}

std::vector<Parameter*> Model::LanguageParameters() {
  std::vector<Parameter*> out;
  for (const char* prefix : {"dlg.", "enc.", "dec."}) {
    for (Parameter* p : store_.WithPrefix(prefix)) out.push_back(p);
  }
  return out;
}

nlohmann::json Model::Metadata() const {
  return {{"format", "pricenego-model"},
          {"config", ToJson(config_)},
          {"ove_vocab", ove_vocab_.tokens()},
          {"dialogue_vocab", dialogue_vocab_.tokens()},
          {"stages", std::vector<std::string>(stages_.begin(), stages_.end())},
          {"catalog_path", catalog_path_},
          {"word_vectors_path", word_vectors_path_}};
}

std::string Model::Serialize() const { return SerializeCheckpoint(Metadata().dump(), store_); }

void Model::Save(const std::string& path) const { WriteCheckpoint(path, Metadata().dump(), store_); }

std::unique_ptr<Model> Model::FromCheckpoint(const Checkpoint& checkpoint) {
  nlohmann::json meta;
  try {
    meta = nlohmann::json::parse(checkpoint.metadata);
  } catch (const nlohmann::json::exception& e) {
    Fail(ErrorKind::kParse, std::string("checkpoint metadata: ") + e.what());
  }
  if (meta.value("format", "") != "pricenego-model") Fail(ErrorKind::kParse, "not a pricenego model checkpoint");
  auto model = std::make_unique<Model>(ModelConfigFromJson(meta.at("config")),
                                       Vocabulary::FromTokens(meta.at("ove_vocab").get<std::vector<std::string>>()),
                                       Vocabulary::FromTokens(meta.at("dialogue_vocab").get<std::vector<std::string>>()));
  for (const std::string& s : meta.value("stages", std::vector<std::string>{})) model->MarkStage(s);
  model->set_catalog_path(meta.value("catalog_path", ""));
  model->set_word_vectors_path(meta.value("word_vectors_path", ""));
  if (checkpoint.tensors.size() != model->store().size()) {
    Fail(ErrorKind::kParse, "checkpoint has " + std::to_string(checkpoint.tensors.size()) + " tensors, model expects " +
                                std::to_string(model->store().size()));
  }
  for (const auto& [name, value] : checkpoint.tensors) {
    if (!model->store().Contains(name)) Fail(ErrorKind::kParse, "unexpected tensor in checkpoint: " + name);
    Parameter& p = model->store().Get(name);
    if (p.value.rows() != value.rows() || p.value.cols() != value.cols()) {
      Fail(ErrorKind::kParse, "tensor shape mismatch for " + name);
    }
    p.value = value;
  }
  return model;
}

std::unique_ptr<Model> Model::Load(const std::string& path) { return FromCheckpoint(ReadCheckpoint(path)); }

size_t Model::InitWordVectors(const WordVectors& words) {
  if (words.dim() != config_.dim) {
    Fail(ErrorKind::kInvalidArgument, "word vectors have dimension " + std::to_string(words.dim()) +
                                          ", model dimension is " + std::to_string(config_.dim));
  }
  size_t replaced = 0;
  auto fill = [&](Parameter& table, const Vocabulary& vocab) {
    for (int id = Vocabulary::kNumReserved; id < vocab.size(); ++id) {
      if (!words.Contains(vocab.Token(id))) continue;
      table.value.col(id) = words.Lookup(vocab.Token(id));
      ++replaced;
    }
  };
  fill(matching_.word_table(), ove_vocab_);
  fill(*dialogue_table_, dialogue_vocab_);
  return replaced;
}

Vocabulary BuildOveVocabulary(const std::vector<const Item*>& items) {
  std::vector<const Tokens*> corpora;
  for (const Item* item : items) {
    corpora.push_back(&item->title);
    corpora.push_back(&item->description);
  }
  return Vocabulary::Build(corpora);
}

Vocabulary BuildDialogueVocabulary(const std::vector<const Item*>& items, const std::vector<Dialogue>& dialogues) {
  std::vector<const Tokens*> corpora;
  for (const Item* item : items) {
    corpora.push_back(&item->title);
    corpora.push_back(&item->description);
  }
  for (const Dialogue& d : dialogues) {
    for (const TurnRecord& t : d.turns) corpora.push_back(&t.tokens);
  }
  return Vocabulary::Build(corpora);
}

std::vector<ad::Var> ItemMemory(ad::Graph& g, const Model& model, const Item& item, const ForwardMode& mode) {
  std::vector<ad::Var> columns;
  for (const Tokens* source : {&item.title, &item.description}) {
    Tokens clipped(source->begin(), source->begin() + static_cast<std::ptrdiff_t>(
                                                          std::min(source->size(), kMaxTurnTokens)));
    std::vector<int> ids = model.dialogue_vocab().Encode(clipped);
    WordEncoder::Output out = model.word_encoder().Encode(g, ids, mode);
    columns.insert(columns.end(), out.outputs.begin(), out.outputs.end());
  }
  return columns;
}

}  // namespace pricenego
