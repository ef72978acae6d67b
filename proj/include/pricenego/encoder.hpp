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

#ifndef PRICENEGO_ENCODER_HPP_
#define PRICENEGO_ENCODER_HPP_

// Hierarchical dialogue encoding: a word-level LSTM per utterance feeding a
// turn-level LSTM seeded with the matching network's representation, plus
// assembly of the policy's dialogue state.

#include <optional>
#include <span>
#include <string>
#include <vector>

#include "pricenego/nn.hpp"
#include "pricenego/pricing.hpp"

namespace pricenego {

inline constexpr int kStatePriceSlots = 3 * kNumPriceBuckets;

class WordEncoder {
 public:
  struct Output {
    std::vector<ad::Var> outputs;  // top-layer hidden state after each token
    ad::Var final;                 // zero vector for an empty utterance
  };

  WordEncoder() = default;
  WordEncoder(ParameterStore& store, const std::string& name, Parameter& word_table, int dim, int layers,
              std::mt19937_64& rng);

  Output Encode(ad::Graph& g, std::span<const int> ids, const ForwardMode& mode) const;
  int dim() const { return lstm_.hidden(); }
  const Lstm& lstm() const { return lstm_; }

 private:
  Parameter* word_table_ = nullptr;
  Lstm lstm_;
};

// The turn-level recurrence. Its bottom layer starts from the seed vector and
// every other layer from zero; before any turn the history vector is the seed.
class HistoryEncoder {
 public:
  struct State {
    Lstm::State lstm;
    ad::Var seed;
    int turns = 0;
    ad::Var vector() const { return turns == 0 ? seed : lstm.top(); }
  };

  HistoryEncoder() = default;
  HistoryEncoder(ParameterStore& store, const std::string& name, int dim, int layers, std::mt19937_64& rng);

  State Start(ad::Graph& g, ad::Var seed) const;
  State Step(ad::Graph& g, const State& state, ad::Var turn_vector, const ForwardMode& mode) const;
  State Encode(ad::Graph& g, ad::Var seed, std::span<const ad::Var> turns, const ForwardMode& mode) const;
  const Lstm& lstm() const { return lstm_; }

 private:
  Lstm lstm_;
};

// Plain-value copy of a history state, for carrying it between graphs.
struct HistoryValues {
  Lstm::StateValues lstm;
  Vector seed;
  int turns = 0;
  Vector vector() const { return turns == 0 ? seed : lstm.h.back(); }
};
HistoryValues ToValues(const HistoryEncoder::State& state);
HistoryEncoder::State FromValues(ad::Graph& g, const HistoryEncoder& encoder, const HistoryValues& values);

// history ⧺ one-hot(agent price) ⧺ one-hot(opponent price) ⧺ one-hot(estimate),
// every price normalized in the agent's frame.
Vector AssembleState(const Vector& history, double agent_price, double opponent_price, double estimate,
                     const PriceFrame& frame);

}  // namespace pricenego

#endif  // PRICENEGO_ENCODER_HPP_
