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

#ifndef PRICENEGO_LEARN_HPP_
#define PRICENEGO_LEARN_HPP_

// Losses, schedules and the training procedures: staged supervised learning
// followed by REINFORCE fine-tuning of the two policy heads.

#include <cstdint>
#include <fstream>
#include <map>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "json.hpp"
#include "pricenego/model.hpp"
#include "pricenego/session.hpp"

namespace pricenego {

// A fixed rate for `epochs_high` epochs, then a lower one for `epochs_low`.
struct Schedule {
  double lr_high = 1e-3;
  int epochs_high = 20;
  double lr_low = 1e-4;
  int epochs_low = 320;

  int epochs() const { return epochs_high + epochs_low; }
  double LearningRate(int epoch) const { return epoch < epochs_high ? lr_high : lr_low; }
};

struct TrainConfig {
  Schedule ove;
  Schedule ave;
  Schedule language;
  Schedule policy;
  int batch_size = 128;
  double dropout = 0.3;
  double clip_norm = 5.0;  // recurrent nets only; 0 disables
  uint64_t seed = 1;
  int rl_episodes = 5000;
  double rl_lr = 1e-4;
  bool rl_baseline = true;
  double rl_baseline_decay = 0.95;
  int max_turns = kDefaultMaxTurns;

  void Validate() const;
};

nlohmann::json ToJson(const TrainConfig& c);
// Unknown keys are rejected; missing keys keep their defaults.
TrainConfig TrainConfigFromJson(const nlohmann::json& j);

// CSV training log: stage,step,learning_rate,loss,reward_mean. Appends to an
// existing file; the header is written only to a new or empty one. A default
// constructed log discards everything.
class MetricsLog {
 public:
  MetricsLog() = default;
  explicit MetricsLog(const std::string& path);
  void Write(const std::string& stage, int64_t step, double learning_rate, double loss,
             std::optional<double> reward_mean = std::nullopt);

 private:
  std::unique_ptr<std::ofstream> out_;
};

// Mean absolute error; the value-estimation objective.
double MeanAbsoluteError(std::span<const double> estimates, std::span<const double> truths);
ad::Var L1Loss(std::span<const ad::Var> estimates, std::span<const double> truths);

// w_c proportional to 1/sqrt(count_c), unseen classes counted as weight 1
// before rescaling, rescaled so the weights sum to the number of classes.
std::vector<double> ClassWeights(std::span<const size_t> counts);

// weights[target] * -log softmax(logits)[target], optionally over a masked
// softmax.
ad::Var WeightedCrossEntropy(ad::Var logits, int target, std::span<const double> weights,
                             const Vector* mask = nullptr);

struct StageReport {
  std::vector<double> epoch_loss;
};

// --- value estimation -------------------------------------------------------

struct ValueExample {
  const Item* item;
  double price;
};

// Scenarios with a ground-truth price.
std::vector<ValueExample> ValueExamples(const std::vector<Scenario>& scenarios,
                                        const std::map<std::string, double>& truths);

StageReport TrainOve(Model& model, const Catalog& catalog, const std::vector<ValueExample>& examples,
                     const TrainConfig& config, MetricsLog* log = nullptr);
StageReport TrainAve(Model& model, const std::vector<ValueExample>& examples, const TrainConfig& config,
                     MetricsLog* log = nullptr);
// Mean absolute divergence from the examples' prices, with inference-time
// clamping.
double EvaluateOve(const Model& model, const Catalog& catalog, const std::vector<ValueExample>& examples);
double EvaluateAve(const Model& model, const std::vector<ValueExample>& examples);

// --- language ---------------------------------------------------------------

// Encoder and decoder trained together on teacher-forced next-token
// likelihood; the value network is frozen and supplies the history seed.
StageReport TrainLanguage(Model& model, const Catalog& catalog, const std::vector<Dialogue>& dialogues,
                          const ScenarioIndex& scenarios, const TrainConfig& config, MetricsLog* log = nullptr);
// Per-token negative log-likelihood over every non-empty labeled turn.
double LanguageNll(const Model& model, const Catalog& catalog, const std::vector<Dialogue>& dialogues,
                   const ScenarioIndex& scenarios);

// Greedy decoding of each labeled turn from its gold context; returns the
// decoded token sequences aligned with the turns that have tokens.
struct Reconstruction {
  size_t turns = 0;
  size_t exact = 0;
  std::vector<Tokens> decoded;
};
Reconstruction ReconstructTurns(const Model& model, const Catalog& catalog, const std::vector<Dialogue>& dialogues,
                                const ScenarioIndex& scenarios);

// --- policy -----------------------------------------------------------------

struct PolicyExample {
  Vector state;
  ActionMask mask{};
  Action action = Action::kNegotiate;
  std::optional<RatioClass> ratio;
};

// Dialogue states of every labeled human turn from the speaker's seat, using
// the frozen encoders.
std::vector<PolicyExample> PolicyExamples(const Model& model, const Catalog& catalog,
                                          const std::vector<Dialogue>& dialogues, const ScenarioIndex& scenarios);

StageReport TrainPolicy(Model& model, const std::vector<PolicyExample>& examples, const TrainConfig& config,
                        MetricsLog* log = nullptr);
// Fraction of examples whose masked argmax equals the label.
double PolicyAccuracy(const Model& model, const std::vector<PolicyExample>& examples);

struct SupervisedReport {
  StageReport ove;
  StageReport language;
  StageReport policy;
};

// All three stages in order. Dialogues must carry derived labels.
SupervisedReport TrainSupervised(Model& model, const Catalog& catalog, const std::vector<Scenario>& scenarios,
                                 const std::vector<Dialogue>& dialogues, const TrainConfig& config,
                                 MetricsLog* log = nullptr);

// --- reinforcement ----------------------------------------------------------

// Log-probability of the episode's decisions under the current heads,
// recorded on `g`.
ad::Var EpisodeLogProb(ad::Graph& g, const Model& model, std::span<const Decision> decisions);

// One ascent step on advantage * sum log p over the decisions, updating only
// the policy heads. A zero advantage leaves every parameter untouched.
void PolicyGradientStep(Model& model, Adam& adam, std::span<const Decision> decisions, double advantage,
                        double learning_rate);

struct RlReport {
  std::vector<double> rewards;
  double final_baseline = 0.0;
};

// Self-play episodes with sampled actions and ratios and greedy text.
RlReport TrainRl(Model& model, const Catalog& catalog, const std::vector<Scenario>& scenarios,
                 const TrainConfig& config, MetricsLog* log = nullptr);

}  // namespace pricenego

#endif  // PRICENEGO_LEARN_HPP_
