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

#include "pricenego/encoder.hpp"

#include "pricenego/error.hpp"

namespace pricenego {

WordEncoder::WordEncoder(ParameterStore& store, const std::string& name, Parameter& word_table, int dim,
                         int layers, std::mt19937_64& rng)
    : word_table_(&word_table), lstm_(store, name, static_cast<int>(word_table.value.rows()), dim, layers, rng) {}

WordEncoder::Output WordEncoder::Encode(ad::Graph& g, std::span<const int> ids, const ForwardMode& mode) const {
  Output out;
  if (ids.empty()) {
    out.final = g.Constant(Matrix::Zero(lstm_.hidden(), 1));
    return out;
  }
  ad::Var table = g.Param(*word_table_);
  Lstm::State state = lstm_.Zero(g);
  for (int id : ids) {
    state = lstm_.Step(g, state, mode.MaybeDropout(ad::Embedding(table, id)), mode);
    out.outputs.push_back(state.top());
  }
  out.final = out.outputs.back();
  return out;
}

HistoryEncoder::HistoryEncoder(ParameterStore& store, const std::string& name, int dim, int layers,
                               std::mt19937_64& rng)
    : lstm_(store, name, dim, dim, layers, rng) {}

HistoryEncoder::State HistoryEncoder::Start(ad::Graph& g, ad::Var seed) const {
  if (seed.rows() != lstm_.hidden() || seed.cols() != 1) {
    Fail(ErrorKind::kInvalidArgument, "history seed must be a " + std::to_string(lstm_.hidden()) + "-vector");
  }
  State s;
  s.lstm = lstm_.Zero(g);
  s.lstm.h[0] = seed;
  s.seed = seed;
  return s;
}

HistoryEncoder::State HistoryEncoder::Step(ad::Graph& g, const State& state, ad::Var turn_vector,
                                           const ForwardMode& mode) const {
  State next;
  next.lstm = lstm_.Step(g, state.lstm, turn_vector, mode);
  next.seed = state.seed;
  next.turns = state.turns + 1;
  return next;
}

HistoryEncoder::State HistoryEncoder::Encode(ad::Graph& g, ad::Var seed, std::span<const ad::Var> turns,
                                             const ForwardMode& mode) const {
  State s = Start(g, seed);
  for (const ad::Var& t : turns) s = Step(g, s, t, mode);
  return s;
}

HistoryValues ToValues(const HistoryEncoder::State& state) {
  HistoryValues v;
  v.lstm = Lstm::Values(state.lstm);
  v.seed = state.seed.value().col(0);
  v.turns = state.turns;
  return v;
}

HistoryEncoder::State FromValues(ad::Graph& g, const HistoryEncoder& encoder, const HistoryValues& values) {
  HistoryEncoder::State s;
  s.lstm = encoder.lstm().FromValues(g, values.lstm);
  s.seed = g.Constant(Matrix(values.seed));
  s.turns = values.turns;
  return s;
}

Vector AssembleState(const Vector& history, double agent_price, double opponent_price, double estimate,
                     const PriceFrame& frame) {
  Vector s = Vector::Zero(history.size() + kStatePriceSlots);
  s.head(history.size()) = history;
  const double prices[3] = {agent_price, opponent_price, estimate};
  for (int k = 0; k < 3; ++k) {
    s[history.size() + k * kNumPriceBuckets + PriceBucket(NormalizePrice(prices[k], frame))] = 1.0;
  }
  return s;
}

}  // namespace pricenego
