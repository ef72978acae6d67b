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

#include "pricenego/eval.hpp"

#include <cmath>
#include <cstdio>
#include <map>
#include <set>
#include <sstream>

#include "pricenego/error.hpp"
#include "pricenego/pricing.hpp"

namespace pricenego {

namespace {

using NgramCounts = std::map<Tokens, size_t>;

NgramCounts CountNgrams(const Tokens& seq, int n) {
  NgramCounts counts;
  if (static_cast<int>(seq.size()) < n) return counts;
  for (size_t i = 0; i + static_cast<size_t>(n) <= seq.size(); ++i) {
    ++counts[Tokens(seq.begin() + static_cast<std::ptrdiff_t>(i), seq.begin() + static_cast<std::ptrdiff_t>(i) + n)];
  }
  return counts;
}

}  // namespace

double Bleu(const std::vector<Tokens>& hypotheses, const std::vector<std::vector<Tokens>>& references,
            const BleuOptions& options) {
  if (hypotheses.empty()) Fail(ErrorKind::kNoData, "BLEU of an empty corpus");
  if (hypotheses.size() != references.size()) Fail(ErrorKind::kInvalidArgument, "BLEU corpora are not aligned");
  if (options.max_order <= 0) Fail(ErrorKind::kInvalidArgument, "BLEU order must be positive");
  const size_t orders = static_cast<size_t>(options.max_order);
  std::vector<double> matches(orders, 0.0), totals(orders, 0.0);
  double hyp_len = 0.0, ref_len = 0.0;
  for (size_t i = 0; i < hypotheses.size(); ++i) {
    const Tokens& hyp = hypotheses[i];
    if (references[i].empty()) Fail(ErrorKind::kInvalidArgument, "hypothesis without references");
    hyp_len += static_cast<double>(hyp.size());
    // Closest reference length, ties to the shorter one.
    size_t best = references[i].front().size();
    for (const Tokens& ref : references[i]) {
      const long diff = std::labs(static_cast<long>(ref.size()) - static_cast<long>(hyp.size()));
      const long best_diff = std::labs(static_cast<long>(best) - static_cast<long>(hyp.size()));
      if (diff < best_diff || (diff == best_diff && ref.size() < best)) best = ref.size();
    }
    ref_len += static_cast<double>(best);
    for (size_t n = 1; n <= orders; ++n) {
      NgramCounts hyp_counts = CountNgrams(hyp, static_cast<int>(n));
      NgramCounts max_ref;
      for (const Tokens& ref : references[i]) {
        for (const auto& [gram, c] : CountNgrams(ref, static_cast<int>(n))) max_ref[gram] = std::max(max_ref[gram], c);
      }
      for (const auto& [gram, c] : hyp_counts) {
        auto it = max_ref.find(gram);
        matches[n - 1] += static_cast<double>(std::min(c, it == max_ref.end() ? size_t{0} : it->second));
        totals[n - 1] += static_cast<double>(c);
      }
    }
  }
  if (hyp_len == 0.0) return 0.0;
  bool any_zero = false;
  for (size_t n = 0; n < orders; ++n) any_zero = any_zero || matches[n] == 0.0;
  double log_sum = 0.0;
  for (size_t n = 0; n < orders; ++n) {
    double m = matches[n], t = totals[n];
    if (options.smoothing && any_zero && n > 0) {
      m += 1.0;
      t += 1.0;
    }
    if (m == 0.0 || t == 0.0) return 0.0;
    log_sum += std::log(m / t);
  }
  const double bp = hyp_len > ref_len ? 1.0 : std::exp(1.0 - ref_len / hyp_len);
  return bp * std::exp(log_sum / static_cast<double>(orders));
}

Tokens DialogueTokens(const Dialogue& d) {
  Tokens out;
  for (const TurnRecord& t : d.turns) out.insert(out.end(), t.tokens.begin(), t.tokens.end());
  return out;
}

Tokens IntentSequence(const Dialogue& d) {
  Tokens out;
  for (size_t i = 0; i < d.turns.size(); ++i) {
    out.push_back(ExtractIntent(d.turns[i], i == 0 ? nullptr : &d.turns[i - 1], nullptr));
  }
  return out;
}

namespace {

template <typename SeqFn>
ReferencedScore ReferencedBleu(const std::vector<Dialogue>& generated, const std::vector<Dialogue>& human,
                               const BleuOptions& options, SeqFn seq) {
  std::map<std::string, std::vector<Tokens>> refs;
  for (const Dialogue& d : human) refs[d.scenario_id].push_back(seq(d));
  std::vector<Tokens> hyps;
  std::vector<std::vector<Tokens>> aligned;
  ReferencedScore r;
  for (const Dialogue& d : generated) {
    auto it = refs.find(d.scenario_id);
    if (it == refs.end()) {
      ++r.skipped;
      continue;
    }
    hyps.push_back(seq(d));
    aligned.push_back(it->second);
  }
  r.scored = hyps.size();
  if (!hyps.empty()) r.score = Bleu(hyps, aligned, options);
  return r;
}

}  // namespace

ReferencedScore DialogueBleu(const std::vector<Dialogue>& generated, const std::vector<Dialogue>& human,
                             const BleuOptions& options) {
  return ReferencedBleu(generated, human, options, DialogueTokens);
}

ReferencedScore IntentBleu(const std::vector<Dialogue>& generated, const std::vector<Dialogue>& human,
                           const BleuOptions& options) {
  return ReferencedBleu(generated, human, options, IntentSequence);
}

Diversity ComputeDiversity(const std::vector<Dialogue>& dialogues) {
  std::set<std::string> sentences;
  std::set<std::string> words;
  size_t utterances = 0, tokens = 0;
  for (const Dialogue& d : dialogues) {
    for (const TurnRecord& t : d.turns) {
      if (t.text.empty()) continue;
      ++utterances;
      sentences.insert(t.text);
      tokens += t.tokens.size();
      words.insert(t.tokens.begin(), t.tokens.end());
    }
  }
  Diversity out;
  if (utterances > 0) out.sentence = static_cast<double>(sentences.size()) / static_cast<double>(utterances);
  if (tokens > 0) out.vocabulary = static_cast<double>(words.size()) / static_cast<double>(tokens);
  return out;
}

double AverageLength(const std::vector<Dialogue>& dialogues) {
  if (dialogues.empty()) return 0.0;
  double total = 0.0;
  for (const Dialogue& d : dialogues) total += static_cast<double>(d.turns.size());
  return total / static_cast<double>(dialogues.size());
}

bool HasPriceInconsistency(const Dialogue& d) {
  std::array<std::optional<double>, 2> last;
  for (const TurnRecord& t : d.turns) {
    auto p = SpeakerProposal(t);
    if (!p) continue;
    const size_t me = static_cast<size_t>(t.speaker);
    const size_t them = static_cast<size_t>(Opponent(t.speaker));
    if (t.speaker == Role::kSeller) {
      if (last[me] && *p > *last[me] + kPriceTolerance) return true;
      if (last[them] && *p < *last[them] - kPriceTolerance) return true;
    } else {
      if (last[me] && *p < *last[me] - kPriceTolerance) return true;
      if (last[them] && *p > *last[them] + kPriceTolerance) return true;
    }
    last[me] = *p;
  }
  return false;
}

bool HasOfferInconsistency(const Dialogue& d, const Scenario* scenario) {
  std::array<std::optional<double>, 2> spoken;
  for (const TurnRecord& t : d.turns) {
    const size_t me = static_cast<size_t>(t.speaker);
    TurnRecord words_only = t;
    words_only.event.reset();
    if (auto p = SpeakerProposal(words_only)) spoken[me] = *p;
    if (!t.event || t.event->type != EventType::kOffer || !t.event->price) continue;
    std::optional<double> reference = spoken[me];
    if (!reference && scenario != nullptr) reference = InitialPrice(t.speaker, *scenario);
    if (reference && std::abs(*reference - *t.event->price) > kPriceTolerance) return true;
  }
  return false;
}

double PriceInconsistencyRate(const std::vector<Dialogue>& dialogues) {
  if (dialogues.empty()) return 0.0;
  size_t bad = 0;
  for (const Dialogue& d : dialogues) bad += HasPriceInconsistency(d) ? 1 : 0;
  return static_cast<double>(bad) / static_cast<double>(dialogues.size());
}

double OfferInconsistencyRate(const std::vector<Dialogue>& dialogues, const ScenarioIndex& scenarios) {
  if (dialogues.empty()) return 0.0;
  size_t bad = 0;
  for (const Dialogue& d : dialogues) {
    auto it = scenarios.find(d.scenario_id);
    bad += HasOfferInconsistency(d, it == scenarios.end() ? nullptr : it->second) ? 1 : 0;
  }
  return static_cast<double>(bad) / static_cast<double>(dialogues.size());
}

std::optional<double> HumanDivergence(const std::vector<Dialogue>& generated,
                                      const std::map<std::string, double>& ground_truth) {
  double total = 0.0;
  size_t n = 0;
  for (const Dialogue& d : generated) {
    if (!d.outcome.agreed || !d.outcome.price) continue;
    auto it = ground_truth.find(d.scenario_id);
    if (it == ground_truth.end()) continue;
    total += std::abs(*d.outcome.price - it->second);
    ++n;
  }
  if (n == 0) return std::nullopt;
  return total / static_cast<double>(n);
}

MetricReport Evaluate(const std::vector<Dialogue>& generated, const std::vector<Dialogue>& human,
                      const ScenarioIndex& scenarios) {
  if (generated.empty()) Fail(ErrorKind::kNoData, "no generated dialogues to evaluate");
  MetricReport r;
  r.dialogues = generated.size();
  for (const Dialogue& d : generated) r.agreed += d.outcome.agreed ? 1 : 0;
  ReferencedScore intents = IntentBleu(generated, human);
  r.ibleu = intents.score;
  r.bleu = DialogueBleu(generated, human).score;
  r.unreferenced = intents.skipped;
  Diversity div = ComputeDiversity(generated);
  r.sentence_diversity = div.sentence;
  r.vocab_diversity = div.vocabulary;
  r.avg_dialogue_length = AverageLength(generated);
  r.price_inconsistency_rate = PriceInconsistencyRate(generated);
  r.offer_inconsistency_rate = OfferInconsistencyRate(generated, scenarios);
  r.human_divergence = HumanDivergence(generated, GroundTruthPrices(human));
  return r;
}

nlohmann::json ToJson(const MetricReport& r) {
  nlohmann::json j = {{"ibleu", r.ibleu},
                      {"bleu", r.bleu},
                      {"sentence_diversity", r.sentence_diversity},
                      {"vocab_diversity", r.vocab_diversity},
                      {"avg_dialogue_length", r.avg_dialogue_length},
                      {"price_inconsistency_rate", r.price_inconsistency_rate},
                      {"offer_inconsistency_rate", r.offer_inconsistency_rate},
                      {"human_divergence", nullptr},
                      {"dialogues", r.dialogues},
                      {"agreed", r.agreed},
                      {"unreferenced", r.unreferenced}};
  if (r.human_divergence) j["human_divergence"] = *r.human_divergence;
  return j;
}

std::string FormatTable(const std::vector<std::pair<std::string, MetricReport>>& rows) {
  const std::vector<std::string> header = {"Model",   "IBLEU",  "BLEU",          "Sent.Div",     "Vocab.Div",
                                           "Length",  "Price Incons.", "Offer Incons.", "Human Div."};
  std::vector<std::vector<std::string>> cells = {header};
  auto fmt = [](double v, int digits) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.*f", digits, v);
    return std::string(buf);
  };
  for (const auto& [name, r] : rows) {
    cells.push_back({name, fmt(100 * r.ibleu, 2), fmt(100 * r.bleu, 2), fmt(r.sentence_diversity, 3),
                     fmt(r.vocab_diversity, 3), fmt(r.avg_dialogue_length, 2),
                     fmt(100 * r.price_inconsistency_rate, 1) + "%", fmt(100 * r.offer_inconsistency_rate, 1) + "%",
                     r.human_divergence ? "$" + fmt(*r.human_divergence, 2) : "n/a"});
  }
  std::vector<size_t> width(header.size(), 0);
  for (const auto& row : cells) {
    for (size_t c = 0; c < row.size(); ++c) width[c] = std::max(width[c], row[c].size());
  }
  std::ostringstream out;
  for (size_t r = 0; r < cells.size(); ++r) {
    for (size_t c = 0; c < cells[r].size(); ++c) {
      if (c > 0) out << "  ";
      const std::string& s = cells[r][c];
      if (c == 0) {
        out << s << std::string(width[c] - s.size(), ' ');
      } else {
        out << std::string(width[c] - s.size(), ' ') << s;
      }
    }
    out << '\n';
    if (r == 0) {
      size_t total = 0;
      for (size_t w : width) total += w;
      out << std::string(total + 2 * (width.size() - 1), '-') << '\n';
    }
  }
  return out.str();
}

}  // namespace pricenego
