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

#ifndef PRICENEGO_GENERATOR_HPP_
#define PRICENEGO_GENERATOR_HPP_

// Attention decoder over title, description and previous-utterance
// encodings, and the substitution of price sentinels with policy prices.

#include <optional>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "pricenego/encoder.hpp"
#include "pricenego/text.hpp"

namespace pricenego {

inline constexpr double kDefaultSampleTemperature = 0.5;

// d x n matrix of memory columns; an empty source list becomes one zero column.
ad::Var BuildMemory(ad::Graph& g, std::span<const ad::Var> columns, int dim);

class Decoder {
 public:
  struct StepOutput {
    Lstm::State state;
    ad::Var log_probs;  // |V| x 1
    ad::Var attention;  // n x 1
  };

  Decoder() = default;
  Decoder(ParameterStore& store, const std::string& name, Parameter& word_table, int dim, int layers,
          int vocab_size, std::mt19937_64& rng);

  // Each decoder layer starts from the corresponding history-encoder layer.
  Lstm::State Init(const HistoryEncoder::State& history) const;

  // One step fed `input_id`; `mask` (0 / -infinity per token) is optional.
  StepOutput Step(ad::Graph& g, const Lstm::State& state, int input_id, ad::Var memory,
                  const ForwardMode& mode, const Vector* mask = nullptr) const;

  int vocab_size() const { return static_cast<int>(out_.out()); }
  const Linear& output_layer() const { return out_; }
  Parameter& attention_weight() const { return *attention_; }
  const Lstm& lstm() const { return lstm_; }

 private:
  Parameter* word_table_ = nullptr;
  Lstm lstm_;
  Parameter* attention_ = nullptr;
  Linear out_;
};

struct DecodeOptions {
  bool sample = false;
  double temperature = kDefaultSampleTemperature;
  std::mt19937_64* rng = nullptr;
  bool suppress_price = false;
  size_t max_tokens = kMaxTurnTokens;
};

// Autoregressive generation from the role/action start token. Returns token
// ids without the end token. Padding, unknown and start tokens are never
// emitted.
std::vector<int> DecodeUtterance(ad::Graph& g, const Decoder& decoder, const HistoryEncoder::State& history,
                                 ad::Var memory, Role role, Action action, const DecodeOptions& options);

// Mean per-token negative log-likelihood of `gold` followed by the end
// token, under teacher forcing. Throws on an empty gold sequence.
ad::Var TeacherForcedNll(ad::Graph& g, const Decoder& decoder, const HistoryEncoder::State& history,
                         ad::Var memory, Role role, Action action, std::span<const int> gold,
                         const ForwardMode& mode);

// Replaces every price sentinel with the formatted price and detokenizes.
// Throws when a sentinel is present and no price is given.
std::string ApplyCopy(const Tokens& tokens, std::optional<double> price);

}  // namespace pricenego

#endif  // PRICENEGO_GENERATOR_HPP_
