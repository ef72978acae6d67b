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

#ifndef PRICENEGO_TEXT_HPP_
#define PRICENEGO_TEXT_HPP_

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "pricenego/autodiff.hpp"
#include "pricenego/types.hpp"

namespace pricenego {

inline constexpr std::string_view kPriceToken = "<price>";
inline constexpr std::string_view kPadToken = "<pad>";
inline constexpr std::string_view kUnknownToken = "<unk>";
inline constexpr std::string_view kEndToken = "</s>";
inline constexpr size_t kMaxTurnTokens = 40;

struct AbstractedText {
  Tokens tokens;
  std::vector<double> prices;  // one per kPriceToken, in order
};

// Lowercases and splits into words and single punctuation marks, replacing
// price mentions by kPriceToken. "$"-prefixed numerals are always prices; a
// bare numeral is a price only when `listing_price` is given and the value
// falls in [0.2, 2.0] x listing. Numerals accept thousands separators, a
// decimal part and a trailing "k".
AbstractedText TokenizeWithPrices(std::string_view text, std::optional<double> listing_price);

// Plain tokenization (titles, descriptions): same splitting, no abstraction.
Tokens Tokenize(std::string_view text);

// "$" + integer when whole, otherwise two decimals.
std::string FormatPrice(double price);
// Joins tokens with spaces, substituting prices for the sentinel in order.
std::string Detokenize(const Tokens& tokens, const std::vector<double>& prices);

// True for tokens that would read as a currency amount ("$5", "1,200", "3.5").
bool LooksNumeric(std::string_view token);

class Vocabulary {
 public:
  static constexpr int kPad = 0;
  static constexpr int kUnknown = 1;
  static constexpr int kEnd = 2;
  static constexpr int kPrice = 3;
  static constexpr int kFirstStart = 4;
  static constexpr int kNumReserved = kFirstStart + 2 * kNumActions;

  // Reserved tokens only.
  Vocabulary();
  // Reserved tokens followed by the sorted distinct non-numeric tokens.
  static Vocabulary Build(const std::vector<const Tokens*>& corpora);
  static Vocabulary FromTokens(const std::vector<std::string>& tokens);

  int Id(std::string_view token) const;
  const std::string& Token(int id) const { return tokens_.at(static_cast<size_t>(id)); }
  std::vector<int> Encode(const Tokens& tokens) const;
  int size() const { return static_cast<int>(tokens_.size()); }
  const std::vector<std::string>& tokens() const { return tokens_; }

  static int StartToken(Role role, Action action) {
    return kFirstStart + static_cast<int>(role) * kNumActions + Index(action);
  }
  static std::string StartTokenText(Role role, Action action);
  static bool IsStartToken(int id) { return id >= kFirstStart && id < kNumReserved; }

 private:
  void Insert(const std::string& token);
  std::vector<std::string> tokens_;
  std::unordered_map<std::string, int> index_;
};

// Fixed word vectors for similarity features and embedding initialization.
// Tokens missing from the loaded table get a deterministic pseudo-random
// vector derived from a hash of the token, so features are reproducible
// without a pretrained file.
class WordVectors {
 public:
  explicit WordVectors(int dim = 300) : dim_(dim) {}
  // GloVe text layout: token followed by `dim` decimals per line.
  static WordVectors Load(const std::string& path);

  int dim() const { return dim_; }
  bool Contains(const std::string& token) const { return table_.count(token) > 0; }
  Vector Lookup(const std::string& token) const;
  Vector SumOf(const Tokens& tokens) const;
  size_t loaded() const { return table_.size(); }
  void Set(const std::string& token, Vector v);

 private:
  int dim_;
  std::unordered_map<std::string, Vector> table_;
};

}  // namespace pricenego

#endif  // PRICENEGO_TEXT_HPP_
