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

#ifndef PRICENEGO_VALUATION_HPP_
#define PRICENEGO_VALUATION_HPP_

// Online value estimation: catalog retrieval, multimodal embeddings, the
// three-hop attention matching network with its discount map, and the
// averaging / O-KNN / AVE baselines.

#include <array>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "pricenego/corpus.hpp"
#include "pricenego/nn.hpp"
#include "pricenego/text.hpp"

namespace pricenego {

inline constexpr int kDefaultNeighbors = 32;
inline constexpr int kMatchingHops = 3;
inline constexpr int kEmbeddingBanks = 4;

// An item prepared for the network: raw visual features, text ids in the
// valuation vocabulary, listing price.
struct ItemTensors {
  Vector visual;
  std::vector<int> title_ids;
  std::vector<int> description_ids;
  double listing_price = 0.0;
};

ItemTensors PrepareItem(const Item& item, const Vocabulary& vocab, int feature_dim);

// visual: F -> d affine; text: sum of title and description token vectors
// from a shared d x |V| table; fusion: 2d -> d -> d with ReLU in between.
class MultimodalEmbedder {
 public:
  MultimodalEmbedder() = default;
  MultimodalEmbedder(ParameterStore& store, const std::string& name, Parameter& word_table,
                     int feature_dim, int dim, std::mt19937_64& rng);

  ad::Var Embed(ad::Graph& g, const ItemTensors& item, const ForwardMode& mode) const;

  const Linear& visual() const { return visual_; }
  const Linear& fuse_hidden() const { return fuse_hidden_; }
  const Linear& fuse_out() const { return fuse_out_; }

 private:
  Parameter* word_table_ = nullptr;
  Linear visual_;
  Linear fuse_hidden_;
  Linear fuse_out_;
};

struct MatchingOutput {
  ad::Var estimate;        // discount(raw), 1 x 1
  ad::Var raw;             // sum_k w_3k * listing_k, 1 x 1
  std::array<ad::Var, kMatchingHops> weights;  // K x 1 each
  ad::Var representation;  // u_3, d x 1
};

// Hop l (1-based) keys on bank l-1 and reads values from bank l; the query
// starts as bank 0's embedding of the item.
class MatchingNetwork {
 public:
  MatchingNetwork() = default;
  MatchingNetwork(ParameterStore& store, const std::string& name, int feature_dim, int dim, int vocab_size,
                  std::mt19937_64& rng);

  MatchingOutput Forward(ad::Graph& g, const ItemTensors& item, std::span<const ItemTensors> neighbors,
                         const ForwardMode& mode) const;

  const MultimodalEmbedder& bank(int i) const { return banks_[static_cast<size_t>(i)]; }
  Parameter& word_table() const { return *word_table_; }
  Parameter& discount_weight() const { return *discount_w_; }
  Parameter& discount_bias() const { return *discount_b_; }

 private:
  Parameter* word_table_ = nullptr;
  std::array<MultimodalEmbedder, kEmbeddingBanks> banks_;
  Parameter* discount_w_ = nullptr;
  Parameter* discount_b_ = nullptr;
};

// Attention value estimator baseline: the item's own embedding regressed to a
// price through a two-layer perceptron. No catalog access.
class ValueRegressor {
 public:
  ValueRegressor() = default;
  ValueRegressor(ParameterStore& store, const std::string& name, int feature_dim, int dim, int hidden,
                 int vocab_size, std::mt19937_64& rng);

  ad::Var Forward(ad::Graph& g, const ItemTensors& item, const ForwardMode& mode) const;
  const Mlp& head() const { return head_; }

 private:
  Parameter* word_table_ = nullptr;
  MultimodalEmbedder embedder_;
  Mlp head_;
};

// (1/3)(cos_visual+1)/2 + (1/3)(cos_text+1)/2 + (1/3)(1 - |pa-pb|/max(pa,pb)).
// A zero vector has cosine 0 with anything.
double Similarity(const Item& a, const Vector& text_a, const Item& b, const Vector& text_b);
double Similarity(const Item& a, const Item& b, const WordVectors& words);

struct Neighbor {
  size_t index = 0;
  std::string id;
  double score = 0.0;
};

struct SimilarityResult {
  std::vector<Neighbor> neighbors;  // score descending, ties by id
};

class Catalog {
 public:
  Catalog(std::vector<CatalogItem> items, const WordVectors& words);

  // Top-K by similarity from the item's category, filled from other
  // categories when the category has fewer than K items.
  SimilarityResult Knn(const Item& item, int k) const;

  const std::vector<CatalogItem>& items() const { return items_; }
  const CatalogItem& item(size_t i) const { return items_.at(i); }
  size_t size() const { return items_.size(); }
  const WordVectors& words() const { return *words_; }

 private:
  std::vector<CatalogItem> items_;
  std::vector<Vector> text_features_;
  const WordVectors* words_;
};

struct ValueEstimate {
  double estimate = 0.0;  // clamped to [0.1, 2] x listing
  double unclamped = 0.0;
  double raw = 0.0;
  Vector weights;  // final-hop attention over neighbors
  SimilarityResult neighbors;
  Vector representation;  // u_3
};

inline constexpr double kEstimateFloor = 0.1;
inline constexpr double kEstimateCeiling = 2.0;

ValueEstimate Estimate(const MatchingNetwork& network, const Vocabulary& vocab, int feature_dim, const Item& item,
                       const Catalog& catalog, int k);

// Mean ground-truth price of the category; unseen categories fall back to the
// global mean.
class AveragingBaseline {
 public:
  void Fit(const std::vector<std::pair<const Item*, double>>& examples);
  double Predict(Category category) const;

 private:
  std::map<Category, std::pair<double, size_t>> by_category_;
  double global_sum_ = 0.0;
  size_t global_count_ = 0;
};

// Mean listing of the K neighbors times (1 - discount_ratio).
double OknnEstimate(const Item& item, const Catalog& catalog, int k, double discount_ratio);

}  // namespace pricenego

#endif  // PRICENEGO_VALUATION_HPP_
