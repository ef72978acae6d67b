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

#ifndef PRICENEGO_MODEL_HPP_
#define PRICENEGO_MODEL_HPP_

// Every trainable block of the negotiator in one parameter store, with the
// two vocabularies and the configuration needed to rebuild it from a
// checkpoint.

#include <cstdint>
#include <memory>
#include <set>
#include <string>
#include <vector>

#include "json.hpp"
#include "pricenego/encoder.hpp"
#include "pricenego/generator.hpp"
#include "pricenego/policy.hpp"
#include "pricenego/valuation.hpp"

namespace pricenego {

struct ModelConfig {
  int feature_dim = 2048;
  int dim = 300;
  int layers = 2;
  int policy_hidden = 128;
  int ave_hidden = 128;
  int neighbors = kDefaultNeighbors;
  int similarity_dim = 300;
  uint64_t seed = 1;

  int state_dim() const { return dim + kStatePriceSlots; }
  void Validate() const;
};

nlohmann::json ToJson(const ModelConfig& c);
ModelConfig ModelConfigFromJson(const nlohmann::json& j);

class Model {
 public:
  // `ove_vocab` indexes title/description text for valuation, `dialogue_vocab`
  // everything the encoders and decoder see.
  Model(ModelConfig config, Vocabulary ove_vocab, Vocabulary dialogue_vocab);
  Model(const Model&) = delete;
  Model& operator=(const Model&) = delete;

  static std::unique_ptr<Model> Load(const std::string& path);
  static std::unique_ptr<Model> FromCheckpoint(const Checkpoint& checkpoint);
  void Save(const std::string& path) const;
  std::string Serialize() const;
  nlohmann::json Metadata() const;

  // Copies pretrained vectors into both word tables where tokens match.
  // Returns the number of columns replaced.
  size_t InitWordVectors(const WordVectors& words);

  const ModelConfig& config() const { return config_; }
  ParameterStore& store() { return store_; }
  const ParameterStore& store() const { return store_; }
  const Vocabulary& ove_vocab() const { return ove_vocab_; }
  const Vocabulary& dialogue_vocab() const { return dialogue_vocab_; }

  const MatchingNetwork& matching() const { return matching_; }
  const ValueRegressor& ave() const { return ave_; }
  const WordEncoder& word_encoder() const { return word_encoder_; }
  const HistoryEncoder& history_encoder() const { return history_encoder_; }
  const Decoder& decoder() const { return decoder_; }
  const PolicyHeads& policy() const { return policy_; }

  // Completed training stages ("ove", "ave", "language", "policy", "rl").
  const std::set<std::string>& stages() const { return stages_; }
  bool HasStage(const std::string& s) const { return stages_.count(s) > 0; }
  void MarkStage(const std::string& s) { stages_.insert(s); }

  // Default catalog for commands that take a checkpoint.
  const std::string& catalog_path() const { return catalog_path_; }
  void set_catalog_path(std::string p) { catalog_path_ = std::move(p); }
  // Empty means hashed vectors of similarity_dim.
  const std::string& word_vectors_path() const { return word_vectors_path_; }
  void set_word_vectors_path(std::string p) { word_vectors_path_ = std::move(p); }

  // Parameter groups by training stage.
  std::vector<Parameter*> OveParameters() { return store_.WithPrefix("ove."); }
  std::vector<Parameter*> AveParameters() { return store_.WithPrefix("ave."); }
  std::vector<Parameter*> LanguageParameters();
  std::vector<Parameter*> PolicyParameters() { return store_.WithPrefix("policy."); }

 private:
  ModelConfig config_;
  Vocabulary ove_vocab_;
  Vocabulary dialogue_vocab_;
  ParameterStore store_;
  MatchingNetwork matching_;
  ValueRegressor ave_;
  Parameter* dialogue_table_ = nullptr;
  WordEncoder word_encoder_;
  HistoryEncoder history_encoder_;
  Decoder decoder_;
  PolicyHeads policy_;
  std::set<std::string> stages_;
  std::string catalog_path_;
  std::string word_vectors_path_;
};

// Vocabularies over a corpus: valuation text comes from item titles and
// descriptions; dialogue text adds every turn.
Vocabulary BuildOveVocabulary(const std::vector<const Item*>& items);
Vocabulary BuildDialogueVocabulary(const std::vector<const Item*>& items, const std::vector<Dialogue>& dialogues);

// Word-encoder outputs for the item's title then description, each truncated
// to the per-turn token limit.
std::vector<ad::Var> ItemMemory(ad::Graph& g, const Model& model, const Item& item, const ForwardMode& mode);

}  // namespace pricenego

#endif  // PRICENEGO_MODEL_HPP_
