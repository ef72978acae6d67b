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

#include "pricenego/valuation.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "pricenego/error.hpp"

namespace pricenego {

ItemTensors PrepareItem(const Item& item, const Vocabulary& vocab, int feature_dim) {
  if (static_cast<int>(item.image_features.size()) != feature_dim) {
    Fail(ErrorKind::kInvalidArgument, "item " + item.id + " has " + std::to_string(item.image_features.size()) +
                                          " image features, expected " + std::to_string(feature_dim));
  }
  ItemTensors t;
  t.visual = Eigen::Map<const Vector>(item.image_features.data(), feature_dim);
  t.title_ids = vocab.Encode(item.title);
  t.description_ids = vocab.Encode(item.description);
  t.listing_price = item.listing_price;
  return t;
}

MultimodalEmbedder::MultimodalEmbedder(ParameterStore& store, const std::string& name, Parameter& word_table,
                                       int feature_dim, int dim, std::mt19937_64& rng)
    : word_table_(&word_table),
      visual_(store, name + ".visual", feature_dim, dim, rng),
      fuse_hidden_(store, name + ".fuse0", 2 * dim, dim, rng),
      fuse_out_(store, name + ".fuse1", dim, dim, rng) {}

ad::Var MultimodalEmbedder::Embed(ad::Graph& g, const ItemTensors& item, const ForwardMode& mode) const {
  if (item.visual.size() != visual_.in()) Fail(ErrorKind::kInvalidArgument, "image feature dimension mismatch");
  ad::Var table = g.Param(*word_table_);
  ad::Var visual = visual_(g, g.Constant(item.visual));
  std::vector<int> ids = item.title_ids;
  ids.insert(ids.end(), item.description_ids.begin(), item.description_ids.end());
  ad::Var text = ad::EmbeddingSum(table, ids);
  std::array<ad::Var, 2> parts = {visual, text};
  ad::Var hidden = mode.MaybeDropout(ad::Relu(fuse_hidden_(g, ad::Concat(parts))));
  return fuse_out_(g, hidden);
}

MatchingNetwork::MatchingNetwork(ParameterStore& store, const std::string& name, int feature_dim, int dim,
                                 int vocab_size, std::mt19937_64& rng) {
  word_table_ = &store.AddUniform(name + ".word_emb", dim, vocab_size, 0.1, rng);
  for (int b = 0; b < kEmbeddingBanks; ++b) {
    banks_[static_cast<size_t>(b)] =
        MultimodalEmbedder(store, name + ".bank" + std::to_string(b), *word_table_, feature_dim, dim, rng);
  }
  discount_w_ = &store.Add(name + ".discount.w", Matrix::Ones(1, 1));
  discount_b_ = &store.Add(name + ".discount.b", Matrix::Zero(1, 1));
}

MatchingOutput MatchingNetwork::Forward(ad::Graph& g, const ItemTensors& item,
                                        std::span<const ItemTensors> neighbors, const ForwardMode& mode) const {
  if (neighbors.empty()) Fail(ErrorKind::kInvalidArgument, "matching network needs at least one neighbor");
  std::array<std::vector<ad::Var>, kEmbeddingBanks> embedded;
  for (int b = 0; b < kEmbeddingBanks; ++b) {
    for (const ItemTensors& n : neighbors) embedded[static_cast<size_t>(b)].push_back(banks_[static_cast<size_t>(b)].Embed(g, n, mode));
  }
  MatchingOutput out;
  ad::Var u = banks_[0].Embed(g, item, mode);
  for (int hop = 1; hop <= kMatchingHops; ++hop) {
    ad::Var keys = ad::Columns(embedded[static_cast<size_t>(hop - 1)]);
    ad::Var values = ad::Columns(embedded[static_cast<size_t>(hop)]);
    ad::Var w = ad::Softmax(ad::MatMul(ad::Transpose(keys), u));
    u = u + ad::MatMul(values, w);
    out.weights[static_cast<size_t>(hop - 1)] = w;
  }
  Matrix listings(static_cast<Eigen::Index>(neighbors.size()), 1);
  for (size_t k = 0; k < neighbors.size(); ++k) listings(static_cast<Eigen::Index>(k), 0) = neighbors[k].listing_price;
  out.raw = ad::MatMul(ad::Transpose(g.Constant(std::move(listings))), out.weights.back());
  out.estimate = ad::ScalarMul(g.Param(*discount_w_), out.raw) + g.Param(*discount_b_);
  out.representation = u;
  return out;
}

ValueRegressor::ValueRegressor(ParameterStore& store, const std::string& name, int feature_dim, int dim,
                               int hidden, int vocab_size, std::mt19937_64& rng) {
  word_table_ = &store.AddUniform(name + ".word_emb", dim, vocab_size, 0.1, rng);
  embedder_ = MultimodalEmbedder(store, name + ".embed", *word_table_, feature_dim, dim, rng);
  head_ = Mlp(store, name + ".head", {dim, hidden, 1}, rng);
}

ad::Var ValueRegressor::Forward(ad::Graph& g, const ItemTensors& item, const ForwardMode& mode) const {
  return head_(g, embedder_.Embed(g, item, mode), mode);
}

namespace {

double RescaledCosine(const Vector& a, const Vector& b) {
  if (a.size() != b.size()) Fail(ErrorKind::kInvalidArgument, "cosine of vectors with different sizes");
  double na = a.norm(), nb = b.norm();
  double cosine = (na == 0.0 || nb == 0.0) ? 0.0 : std::clamp(a.dot(b) / (na * nb), -1.0, 1.0);
  return 0.5 * (cosine + 1.0);
}

}  // namespace

double Similarity(const Item& a, const Vector& text_a, const Item& b, const Vector& text_b) {
  Vector va = Eigen::Map<const Vector>(a.image_features.data(), static_cast<Eigen::Index>(a.image_features.size()));
  Vector vb = Eigen::Map<const Vector>(b.image_features.data(), static_cast<Eigen::Index>(b.image_features.size()));
  double price = 1.0 - std::abs(a.listing_price - b.listing_price) / std::max(a.listing_price, b.listing_price);
  return (RescaledCosine(va, vb) + RescaledCosine(text_a, text_b) + price) / 3.0;
}

double Similarity(const Item& a, const Item& b, const WordVectors& words) {
  Tokens ta = a.title, tb = b.title;
  ta.insert(ta.end(), a.description.begin(), a.description.end());
  tb.insert(tb.end(), b.description.begin(), b.description.end());
  return Similarity(a, words.SumOf(ta), b, words.SumOf(tb));
}

namespace {

Vector TextFeatures(const Item& item, const WordVectors& words) {
  Tokens all = item.title;
  all.insert(all.end(), item.description.begin(), item.description.end());
  return words.SumOf(all);
}

}  // namespace

Catalog::Catalog(std::vector<CatalogItem> items, const WordVectors& words)
    : items_(std::move(items)), words_(&words) {
  text_features_.reserve(items_.size());
  for (const CatalogItem& item : items_) text_features_.push_back(TextFeatures(item, words));
}

SimilarityResult Catalog::Knn(const Item& item, int k) const {
  if (items_.empty()) Fail(ErrorKind::kNoData, "catalog is empty");
  if (k <= 0) Fail(ErrorKind::kInvalidArgument, "neighbor count must be positive");
  const Vector text = TextFeatures(item, *words_);
  std::vector<Neighbor> same, other;
  for (size_t i = 0; i < items_.size(); ++i) {
    Neighbor n{i, items_[i].id, Similarity(item, text, items_[i], text_features_[i])};
    (items_[i].category == item.category ? same : other).push_back(std::move(n));
  }
  auto better = [](const Neighbor& a, const Neighbor& b) {
    if (a.score != b.score) return a.score > b.score;
    return a.id < b.id;
  };
  std::sort(same.begin(), same.end(), better);
  std::sort(other.begin(), other.end(), better);
  SimilarityResult result;
  const size_t want = static_cast<size_t>(k);
  for (size_t i = 0; i < same.size() && result.neighbors.size() < want; ++i) result.neighbors.push_back(same[i]);
  for (size_t i = 0; i < other.size() && result.neighbors.size() < want; ++i) result.neighbors.push_back(other[i]);
  std::sort(result.neighbors.begin(), result.neighbors.end(), better);
  return result;
}

ValueEstimate Estimate(const MatchingNetwork& network, const Vocabulary& vocab, int feature_dim, const Item& item,
                       const Catalog& catalog, int k) {
  ValueEstimate out;
  out.neighbors = catalog.Knn(item, k);
  std::vector<ItemTensors> neighbors;
  for (const Neighbor& n : out.neighbors.neighbors) {
    neighbors.push_back(PrepareItem(catalog.item(n.index), vocab, feature_dim));
  }
  ad::Graph g(false);
  MatchingOutput m = network.Forward(g, PrepareItem(item, vocab, feature_dim), neighbors, kInference);
  out.raw = m.raw.scalar();
  out.unclamped = m.estimate.scalar();
  out.estimate = std::clamp(out.unclamped, kEstimateFloor * item.listing_price, kEstimateCeiling * item.listing_price);
  out.weights = m.weights.back().value().col(0);
  out.representation = m.representation.value().col(0);
  return out;
}

void AveragingBaseline::Fit(const std::vector<std::pair<const Item*, double>>& examples) {
  by_category_.clear();
  global_sum_ = 0.0;
  global_count_ = 0;
  for (const auto& [item, price] : examples) {
    auto& [sum, n] = by_category_[item->category];
    sum += price;
    ++n;
    global_sum_ += price;
    ++global_count_;
  }
}

double AveragingBaseline::Predict(Category category) const {
  auto it = by_category_.find(category);
  if (it != by_category_.end()) return it->second.first / static_cast<double>(it->second.second);
  if (global_count_ == 0) Fail(ErrorKind::kNoData, "averaging baseline has no training data");
  return global_sum_ / static_cast<double>(global_count_);
}

double OknnEstimate(const Item& item, const Catalog& catalog, int k, double discount_ratio) {
  SimilarityResult r = catalog.Knn(item, k);
  double sum = 0.0;
  for (const Neighbor& n : r.neighbors) sum += catalog.item(n.index).listing_price;
  return sum / static_cast<double>(r.neighbors.size()) * (1.0 - discount_ratio);
}

}  // namespace pricenego
