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

#ifndef PRICENEGO_EVAL_HPP_
#define PRICENEGO_EVAL_HPP_

// Language and pricing metrics over generated dialogues.

#include <optional>
#include <string>
#include <vector>

#include "json.hpp"
#include "pricenego/corpus.hpp"

namespace pricenego {

inline constexpr double kPriceTolerance = 0.005;

struct BleuOptions {
  int max_order = 4;
  // Add one to numerator and denominator of every order above 1 when any
  // clipped precision is zero.
  bool smoothing = true;
};

// Corpus-level BLEU with clipped n-gram precision against any number of
// references per hypothesis, and the brevity penalty over closest
// reference lengths.
double Bleu(const std::vector<Tokens>& hypotheses, const std::vector<std::vector<Tokens>>& references,
            const BleuOptions& options = {});

struct ReferencedScore {
  double score = 0.0;
  size_t scored = 0;
  size_t skipped = 0;  // generated dialogues whose scenario has no human reference
};

Tokens DialogueTokens(const Dialogue& d);
// Intent label of every turn, recomputed from the turn and its predecessor.
Tokens IntentSequence(const Dialogue& d);

// Whole-dialogue BLEU against all human dialogues of the same scenario.
ReferencedScore DialogueBleu(const std::vector<Dialogue>& generated, const std::vector<Dialogue>& human,
                             const BleuOptions& options = {});
// The same over intent sequences.
ReferencedScore IntentBleu(const std::vector<Dialogue>& generated, const std::vector<Dialogue>& human,
                           const BleuOptions& options = {});

struct Diversity {
  double sentence = 0.0;
  double vocabulary = 0.0;
};
Diversity ComputeDiversity(const std::vector<Dialogue>& dialogues);

double AverageLength(const std::vector<Dialogue>& dialogues);

// Whether a dialogue has a proposal that regresses past the speaker's own
// previous proposal or crosses the opponent's standing proposal.
bool HasPriceInconsistency(const Dialogue& d);
// Whether a formal offer differs from the offering role's last spoken price
// (the offer turn's own words included). With no spoken price it is compared
// with the role's initial price when the scenario is known.
bool HasOfferInconsistency(const Dialogue& d, const Scenario* scenario);

double PriceInconsistencyRate(const std::vector<Dialogue>& dialogues);
double OfferInconsistencyRate(const std::vector<Dialogue>& dialogues, const ScenarioIndex& scenarios);

// Mean |agreed - ground truth| over agreed dialogues whose scenario has a
// ground truth; empty when there are none.
std::optional<double> HumanDivergence(const std::vector<Dialogue>& generated,
                                      const std::map<std::string, double>& ground_truth);

struct MetricReport {
  double ibleu = 0.0;
  double bleu = 0.0;
  double sentence_diversity = 0.0;
  double vocab_diversity = 0.0;
  double avg_dialogue_length = 0.0;
  double price_inconsistency_rate = 0.0;
  double offer_inconsistency_rate = 0.0;
  std::optional<double> human_divergence;
  size_t dialogues = 0;
  size_t agreed = 0;
  size_t unreferenced = 0;
};

MetricReport Evaluate(const std::vector<Dialogue>& generated, const std::vector<Dialogue>& human,
                      const ScenarioIndex& scenarios);

nlohmann::json ToJson(const MetricReport& r);
// Aligned columns, BLEU-family scaled by 100 and rates as percentages.
std::string FormatTable(const std::vector<std::pair<std::string, MetricReport>>& rows);

}  // namespace pricenego

#endif  // PRICENEGO_EVAL_HPP_
