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

#include "pricenego/generator.hpp"

#include <cmath>
#include <limits>

#include "pricenego/error.hpp"

namespace pricenego {

ad::Var BuildMemory(ad::Graph& g, std::span<const ad::Var> columns, int dim) {
  if (columns.empty()) return g.Constant(Matrix::Zero(dim, 1));
  return ad::Columns(columns);
}

Decoder::Decoder(ParameterStore& store, const std::string& name, Parameter& word_table, int dim, int layers,
                 int vocab_size, std::mt19937_64& rng)
    : word_table_(&word_table),
      lstm_(store, name, static_cast<int>(word_table.value.rows()), dim, layers, rng),
      out_(store, name + ".out", 2 * dim, vocab_size, rng) {
  attention_ = &store.AddUniform(name + ".attn.W", dim, dim, 1.0 / std::sqrt(static_cast<double>(dim)), rng);
}

Lstm::State Decoder::Init(const HistoryEncoder::State& history) const {
  if (history.lstm.h.size() != static_cast<size_t>(lstm_.layers())) {
    Fail(ErrorKind::kInvalidArgument, "decoder and history encoder depths differ");
  }
  return history.lstm;
}

Decoder::StepOutput Decoder::Step(ad::Graph& g, const Lstm::State& state, int input_id, ad::Var memory,
                                  const ForwardMode& mode, const Vector* mask) const {
  StepOutput out;
  ad::Var x = mode.MaybeDropout(ad::Embedding(g.Param(*word_table_), input_id));
  out.state = lstm_.Step(g, state, x, mode);
  ad::Var h = out.state.top();
  ad::Var scores = ad::MatMul(ad::Transpose(memory), ad::MatMul(g.Param(*attention_), h));
  out.attention = ad::Softmax(scores);
  ad::Var context = ad::MatMul(memory, out.attention);
  std::array<ad::Var, 2> parts = {mode.MaybeDropout(h), context};
  ad::Var logits = out_(g, ad::Concat(parts));
  out.log_probs = mask != nullptr ? ad::LogSoftmax(logits, *mask) : ad::LogSoftmax(logits);
  return out;
}

namespace {

Vector GenerationMask(int vocab_size, bool suppress_price) {
  Vector mask = Vector::Zero(vocab_size);
  const double ninf = -std::numeric_limits<double>::infinity();
  mask[Vocabulary::kPad] = ninf;
  mask[Vocabulary::kUnknown] = ninf;
  for (int id = Vocabulary::kFirstStart; id < Vocabulary::kNumReserved && id < vocab_size; ++id) mask[id] = ninf;
  if (suppress_price) mask[Vocabulary::kPrice] = ninf;
  return mask;
}

int SampleFrom(const Vector& log_probs, double temperature, std::mt19937_64& rng) {
  const Vector scaled = log_probs / temperature;
  const double mx = scaled.maxCoeff();
  Vector w(scaled.size());
  for (Eigen::Index i = 0; i < w.size(); ++i) w[i] = std::exp(scaled[i] - mx);  // masked entries stay exactly 0
  return SampleIndex(w.data(), static_cast<int>(w.size()), rng);
}

}  // namespace

std::vector<int> DecodeUtterance(ad::Graph& g, const Decoder& decoder, const HistoryEncoder::State& history,
                                 ad::Var memory, Role role, Action action, const DecodeOptions& options) {
  if (options.sample && (options.rng == nullptr || !(options.temperature > 0.0))) {
    Fail(ErrorKind::kInvalidArgument, "sampling needs an rng and a positive temperature");
  }
  const Vector mask = GenerationMask(decoder.vocab_size(), options.suppress_price);
  Lstm::State state = decoder.Init(history);
  int input = Vocabulary::StartToken(role, action);
  std::vector<int> tokens;
  while (tokens.size() < options.max_tokens) {
    Decoder::StepOutput step = decoder.Step(g, state, input, memory, kInference, &mask);
    const Vector logp = step.log_probs.value().col(0);
    int next;
    if (options.sample) {
      next = SampleFrom(logp, options.temperature, *options.rng);
    } else {
      Eigen::Index best;
      logp.maxCoeff(&best);
      next = static_cast<int>(best);
    }
    if (next == Vocabulary::kEnd) break;
    tokens.push_back(next);
    state = step.state;
    input = next;
  }
  return tokens;
}

ad::Var TeacherForcedNll(ad::Graph& g, const Decoder& decoder, const HistoryEncoder::State& history,
                         ad::Var memory, Role role, Action action, std::span<const int> gold,
                         const ForwardMode& mode) {
  if (gold.empty()) Fail(ErrorKind::kInvalidArgument, "teacher forcing needs a non-empty gold turn");
  Lstm::State state = decoder.Init(history);
  int input = Vocabulary::StartToken(role, action);
  std::vector<ad::Var> picked;
  for (size_t t = 0; t <= gold.size(); ++t) {
    const int target = t < gold.size() ? gold[t] : Vocabulary::kEnd;
    Decoder::StepOutput step = decoder.Step(g, state, input, memory, mode);
    picked.push_back(ad::Pick(step.log_probs, target));
    state = step.state;
    input = target;
  }
  ad::Var total = ad::Sum(ad::Concat(picked));
  return ad::Scale(total, -1.0 / static_cast<double>(picked.size()));
}

std::string ApplyCopy(const Tokens& tokens, std::optional<double> price) {
  size_t sentinels = 0;
  for (const std::string& t : tokens) sentinels += t == kPriceToken ? 1 : 0;
  if (sentinels > 0 && !price) Fail(ErrorKind::kState, "price sentinel generated with no price to copy");
  return Detokenize(tokens, std::vector<double>(sentinels, price.value_or(0.0)));
}

}  // namespace pricenego
