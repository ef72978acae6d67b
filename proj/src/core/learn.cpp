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

#include "pricenego/learn.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <filesystem>
#include <fstream>
#include <numeric>
#include <random>
#include <set>

#include "pricenego/error.hpp"
#include "pricenego/pricing.hpp"

namespace pricenego {

using nlohmann::json;

namespace {

json ScheduleJson(const Schedule& s) {
  return {{"lr_high", s.lr_high}, {"epochs_high", s.epochs_high}, {"lr_low", s.lr_low}, {"epochs_low", s.epochs_low}};
}

Schedule ScheduleFromJson(const json& j, Schedule s) {
  if (!j.is_object()) Fail(ErrorKind::kParse, "schedule must be a JSON object");
  for (const auto& [key, value] : j.items()) {
    if (key == "lr_high") {
      s.lr_high = value.get<double>();
    } else if (key == "epochs_high") {
      s.epochs_high = value.get<int>();
    } else if (key == "lr_low") {
      s.lr_low = value.get<double>();
    } else if (key == "epochs_low") {
      s.epochs_low = value.get<int>();
    } else {
      Fail(ErrorKind::kInvalidArgument, "unknown schedule key: " + key);
    }
  }
  return s;
}

void CheckSchedule(const Schedule& s, const char* name) {
  if (!(s.lr_high > 0.0) || !(s.lr_low > 0.0) || s.epochs_high < 0 || s.epochs_low < 0) {
    Fail(ErrorKind::kInvalidArgument, std::string("invalid schedule for ") + name);
  }
}

void ZeroGrad(const std::vector<Parameter*>& params) {
  for (Parameter* p : params) p->grad.setZero();
}

// Batches of shuffled indices for one epoch.
std::vector<std::vector<size_t>> Batches(size_t n, int batch_size, std::mt19937_64& rng) {
  std::vector<size_t> order(n);
  std::iota(order.begin(), order.end(), size_t{0});
  std::shuffle(order.begin(), order.end(), rng);
  std::vector<std::vector<size_t>> out;
  for (size_t i = 0; i < n; i += static_cast<size_t>(batch_size)) {
    out.emplace_back(order.begin() + static_cast<std::ptrdiff_t>(i),
                     order.begin() + static_cast<std::ptrdiff_t>(std::min(n, i + static_cast<size_t>(batch_size))));
  }
  return out;
}

}  // namespace

void TrainConfig::Validate() const {
  CheckSchedule(ove, "ove");
  CheckSchedule(ave, "ave");
  CheckSchedule(language, "language");
  CheckSchedule(policy, "policy");
  if (batch_size <= 0) Fail(ErrorKind::kInvalidArgument, "batch_size must be positive");
  if (!(dropout >= 0.0 && dropout < 1.0)) Fail(ErrorKind::kInvalidArgument, "dropout must lie in [0, 1)");
  if (clip_norm < 0.0) Fail(ErrorKind::kInvalidArgument, "clip_norm must be nonnegative");
  if (rl_episodes < 0 || !(rl_lr > 0.0)) Fail(ErrorKind::kInvalidArgument, "invalid reinforcement settings");
  if (!(rl_baseline_decay >= 0.0 && rl_baseline_decay < 1.0)) {
    Fail(ErrorKind::kInvalidArgument, "rl_baseline_decay must lie in [0, 1)");
  }
  if (max_turns < 2) Fail(ErrorKind::kInvalidArgument, "max_turns must be at least 2");
}

json ToJson(const TrainConfig& c) {
  return {{"ove", ScheduleJson(c.ove)},
          {"ave", ScheduleJson(c.ave)},
          {"language", ScheduleJson(c.language)},
          {"policy", ScheduleJson(c.policy)},
          {"batch_size", c.batch_size},
          {"dropout", c.dropout},
          {"clip_norm", c.clip_norm},
          {"seed", c.seed},
          {"rl_episodes", c.rl_episodes},
          {"rl_lr", c.rl_lr},
          {"rl_baseline", c.rl_baseline},
          {"rl_baseline_decay", c.rl_baseline_decay},
          {"max_turns", c.max_turns}};
}

TrainConfig TrainConfigFromJson(const json& j) {
  if (!j.is_object()) Fail(ErrorKind::kParse, "training options must be a JSON object");
  TrainConfig c;
  try {
    for (const auto& [key, value] : j.items()) {
      if (key == "ove") {
        c.ove = ScheduleFromJson(value, c.ove);
      } else if (key == "ave") {
        c.ave = ScheduleFromJson(value, c.ave);
      } else if (key == "language") {
        c.language = ScheduleFromJson(value, c.language);
      } else if (key == "policy") {
        c.policy = ScheduleFromJson(value, c.policy);
      } else if (key == "batch_size") {
        c.batch_size = value.get<int>();
      } else if (key == "dropout") {
        c.dropout = value.get<double>();
      } else if (key == "clip_norm") {
        c.clip_norm = value.get<double>();
      } else if (key == "seed") {
        c.seed = value.get<uint64_t>();
      } else if (key == "rl_episodes") {
        c.rl_episodes = value.get<int>();
      } else if (key == "rl_lr") {
        c.rl_lr = value.get<double>();
      } else if (key == "rl_baseline") {
        c.rl_baseline = value.get<bool>();
      } else if (key == "rl_baseline_decay") {
        c.rl_baseline_decay = value.get<double>();
      } else if (key == "max_turns") {
        c.max_turns = value.get<int>();
      } else {
        Fail(ErrorKind::kInvalidArgument, "unknown training option: " + key);
      }
    }
  } catch (const json::exception& e) {
    Fail(ErrorKind::kParse, std::string("training options: ") + e.what());
  }
  c.Validate();
  return c;
}

MetricsLog::MetricsLog(const std::string& path) {
  if (path.empty()) return;
  std::error_code ec;
  const bool fresh = !std::filesystem::exists(path, ec) || std::filesystem::file_size(path, ec) == 0;
  out_ = std::make_unique<std::ofstream>(path, std::ios::app);
  if (!*out_) Fail(ErrorKind::kIo, "cannot write metrics log " + path);
  if (fresh) *out_ << "stage,step,learning_rate,loss,reward_mean\n";
}

void MetricsLog::Write(const std::string& stage, int64_t step, double learning_rate, double loss,
                       std::optional<double> reward_mean) {
  if (!out_) return;
  *out_ << stage << ',' << step << ',' << learning_rate << ',' << loss << ',';
  if (reward_mean) *out_ << *reward_mean;
  *out_ << '\n';
  out_->flush();
}

double MeanAbsoluteError(std::span<const double> estimates, std::span<const double> truths) {
  if (estimates.size() != truths.size()) Fail(ErrorKind::kInvalidArgument, "estimate/truth counts differ");
  if (estimates.empty()) Fail(ErrorKind::kNoData, "mean absolute error of nothing");
  double total = 0.0;
  for (size_t i = 0; i < estimates.size(); ++i) total += std::abs(estimates[i] - truths[i]);
  return total / static_cast<double>(estimates.size());
}

ad::Var L1Loss(std::span<const ad::Var> estimates, std::span<const double> truths) {
  if (estimates.size() != truths.size()) Fail(ErrorKind::kInvalidArgument, "estimate/truth counts differ");
  if (estimates.empty()) Fail(ErrorKind::kNoData, "L1 loss of nothing");
  ad::Graph& g = estimates.front().graph();
  std::vector<ad::Var> terms;
  for (size_t i = 0; i < estimates.size(); ++i) {
    terms.push_back(ad::Abs(estimates[i] - g.Constant(Matrix::Constant(1, 1, truths[i]))));
  }
  return ad::Scale(ad::Sum(ad::Concat(terms)), 1.0 / static_cast<double>(terms.size()));
}

std::vector<double> ClassWeights(std::span<const size_t> counts) {
  if (counts.empty()) Fail(ErrorKind::kInvalidArgument, "class weights of no classes");
  std::vector<double> w(counts.size());
  for (size_t c = 0; c < counts.size(); ++c) {
    w[c] = counts[c] == 0 ? 1.0 : 1.0 / std::sqrt(static_cast<double>(counts[c]));
  }
  const double total = std::accumulate(w.begin(), w.end(), 0.0);
  for (double& x : w) x *= static_cast<double>(counts.size()) / total;
  return w;
}

ad::Var WeightedCrossEntropy(ad::Var logits, int target, std::span<const double> weights, const Vector* mask) {
  if (target < 0 || target >= logits.rows() || weights.size() != static_cast<size_t>(logits.rows())) {
    Fail(ErrorKind::kInvalidArgument, "cross entropy target or weights do not match the logits");
  }
  ad::Var logp = mask != nullptr ? ad::LogSoftmax(logits, *mask) : ad::LogSoftmax(logits);
  return ad::Scale(ad::Pick(logp, target), -weights[static_cast<size_t>(target)]);
}

// --- value estimation -------------------------------------------------------

std::vector<ValueExample> ValueExamples(const std::vector<Scenario>& scenarios,
                                        const std::map<std::string, double>& truths) {
  std::vector<ValueExample> out;
  for (const Scenario& s : scenarios) {
    auto it = truths.find(s.id());
    if (it != truths.end()) out.push_back({&s.item, it->second});
  }
  return out;
}

namespace {

struct PreparedValueExample {
  ItemTensors item;
  std::vector<ItemTensors> neighbors;
  double price;
};

std::vector<PreparedValueExample> PrepareValueExamples(const Model& model, const Catalog* catalog,
                                                       const std::vector<ValueExample>& examples) {
  if (examples.empty()) Fail(ErrorKind::kNoData, "no items with a ground-truth price");
  const int f = model.config().feature_dim;
  std::vector<PreparedValueExample> out;
  for (const ValueExample& ex : examples) {
    PreparedValueExample p{PrepareItem(*ex.item, model.ove_vocab(), f), {}, ex.price};
    if (catalog != nullptr) {
      for (const Neighbor& n : catalog->Knn(*ex.item, model.config().neighbors).neighbors) {
        p.neighbors.push_back(PrepareItem(catalog->item(n.index), model.ove_vocab(), f));
      }
    }
    out.push_back(std::move(p));
  }
  return out;
}

template <typename ForwardFn>
StageReport TrainRegression(const std::string& stage, std::vector<Parameter*> params,
                            const std::vector<PreparedValueExample>& data, const Schedule& schedule,
                            const TrainConfig& config, MetricsLog* log, ForwardFn forward) {
  StageReport report;
  Adam adam;
  std::mt19937_64 rng(config.seed);
  ForwardMode mode{true, config.dropout, &rng};
  for (int epoch = 0; epoch < schedule.epochs(); ++epoch) {
    const double lr = schedule.LearningRate(epoch);
    double total = 0.0;
    for (const auto& batch : Batches(data.size(), config.batch_size, rng)) {
      ZeroGrad(params);
      for (size_t i : batch) {
        ad::Graph g;
        ad::Var estimate = forward(g, data[i], mode);
        ad::Var err = ad::Abs(estimate - g.Constant(Matrix::Constant(1, 1, data[i].price)));
        total += err.scalar();
        g.Backward(ad::Scale(err, 1.0 / static_cast<double>(batch.size())));
      }
      adam.Step(params, lr);
    }
    report.epoch_loss.push_back(total / static_cast<double>(data.size()));
    if (log) log->Write(stage, epoch, lr, report.epoch_loss.back());
  }
  return report;
}

}  // namespace

StageReport TrainOve(Model& model, const Catalog& catalog, const std::vector<ValueExample>& examples,
                     const TrainConfig& config, MetricsLog* log) {
  config.Validate();
  auto data = PrepareValueExamples(model, &catalog, examples);
  const MatchingNetwork& net = model.matching();
  StageReport r = TrainRegression("ove", model.OveParameters(), data, config.ove, config, log,
                                  [&](ad::Graph& g, const PreparedValueExample& ex, const ForwardMode& mode) {
                                    return net.Forward(g, ex.item, ex.neighbors, mode).estimate;
                                  });
  model.MarkStage("ove");
  return r;
}

StageReport TrainAve(Model& model, const std::vector<ValueExample>& examples, const TrainConfig& config,
                     MetricsLog* log) {
  config.Validate();
  auto data = PrepareValueExamples(model, nullptr, examples);
  const ValueRegressor& net = model.ave();
  StageReport r = TrainRegression("ave", model.AveParameters(), data, config.ave, config, log,
                                  [&](ad::Graph& g, const PreparedValueExample& ex, const ForwardMode& mode) {
                                    return net.Forward(g, ex.item, mode);
                                  });
  model.MarkStage("ave");
  return r;
}

double EvaluateOve(const Model& model, const Catalog& catalog, const std::vector<ValueExample>& examples) {
  std::vector<double> est, truth;
  for (const ValueExample& ex : examples) {
    est.push_back(Estimate(model.matching(), model.ove_vocab(), model.config().feature_dim, *ex.item, catalog,
                           model.config().neighbors)
                      .estimate);
    truth.push_back(ex.price);
  }
  return MeanAbsoluteError(est, truth);
}

double EvaluateAve(const Model& model, const std::vector<ValueExample>& examples) {
  std::vector<double> est, truth;
  for (const ValueExample& ex : examples) {
    ad::Graph g(false);
    est.push_back(
        model.ave().Forward(g, PrepareItem(*ex.item, model.ove_vocab(), model.config().feature_dim), kInference)
            .scalar());
    truth.push_back(ex.price);
  }
  return MeanAbsoluteError(est, truth);
}

// --- dialogue walking -------------------------------------------------------

namespace {

struct DialogueInput {
  const Dialogue* dialogue;
  const Scenario* scenario;
  ValueEstimate value;
  std::vector<std::vector<int>> ids;  // per turn
};

std::vector<DialogueInput> PrepareDialogues(const Model& model, const Catalog& catalog,
                                            const std::vector<Dialogue>& dialogues, const ScenarioIndex& scenarios) {
  std::map<std::string, ValueEstimate> cache;
  std::vector<DialogueInput> out;
  for (const Dialogue& d : dialogues) {
    auto it = scenarios.find(d.scenario_id);
    if (it == scenarios.end()) continue;
    DialogueInput in{&d, it->second, {}, {}};
    auto c = cache.find(d.scenario_id);
    if (c == cache.end()) {
      c = cache
              .emplace(d.scenario_id, Estimate(model.matching(), model.ove_vocab(), model.config().feature_dim,
                                               it->second->item, catalog, model.config().neighbors))
              .first;
    }
    in.value = c->second;
    for (const TurnRecord& t : d.turns) in.ids.push_back(model.dialogue_vocab().Encode(t.tokens));
    out.push_back(std::move(in));
  }
  if (out.empty()) Fail(ErrorKind::kNoData, "no dialogues with a known scenario");
  return out;
}

// Calls fn(turn_index, history_before_turn, attention_memory) for every turn,
// then folds the turn into the history.
template <typename Fn>
void WalkDialogue(ad::Graph& g, const Model& model, const DialogueInput& in, const ForwardMode& mode, Fn&& fn) {
  const std::vector<ad::Var> item_memory = ItemMemory(g, model, in.scenario->item, mode);
  HistoryEncoder::State h = model.history_encoder().Start(g, g.Constant(Matrix(in.value.representation)));
  std::vector<ad::Var> previous;
  for (size_t t = 0; t < in.dialogue->turns.size(); ++t) {
    std::vector<ad::Var> columns = item_memory;
    columns.insert(columns.end(), previous.begin(), previous.end());
    fn(t, h, BuildMemory(g, columns, model.config().dim));
    WordEncoder::Output out = model.word_encoder().Encode(g, in.ids[t], mode);
    h = model.history_encoder().Step(g, h, out.final, mode);
    previous = out.outputs;
  }
}

bool HasTarget(const TurnRecord& turn) { return turn.action.has_value() && !turn.tokens.empty(); }

void RequireStage(const Model& model, const std::string& stage, const std::string& what) {
  if (!model.HasStage(stage)) Fail(ErrorKind::kState, what + " requires the '" + stage + "' stage to be trained first");
}

}  // namespace

// --- language ---------------------------------------------------------------

StageReport TrainLanguage(Model& model, const Catalog& catalog, const std::vector<Dialogue>& dialogues,
                          const ScenarioIndex& scenarios, const TrainConfig& config, MetricsLog* log) {
  config.Validate();
  RequireStage(model, "ove", "language training");
  const std::vector<DialogueInput> data = PrepareDialogues(model, catalog, dialogues, scenarios);
  std::vector<Parameter*> params = model.LanguageParameters();
  StageReport report;
  Adam adam;
  std::mt19937_64 rng(config.seed);
  ForwardMode mode{true, config.dropout, &rng};
  for (int epoch = 0; epoch < config.language.epochs(); ++epoch) {
    const double lr = config.language.LearningRate(epoch);
    double nll_sum = 0.0;
    size_t token_sum = 0;
    for (const auto& batch : Batches(data.size(), config.batch_size, rng)) {
      size_t batch_tokens = 0;
      for (size_t i : batch) {
        for (size_t t = 0; t < data[i].dialogue->turns.size(); ++t) {
          if (HasTarget(data[i].dialogue->turns[t])) batch_tokens += data[i].ids[t].size() + 1;
        }
      }
      if (batch_tokens == 0) continue;
      ZeroGrad(params);
      for (size_t i : batch) {
        const DialogueInput& in = data[i];
        ad::Graph g;
        std::vector<ad::Var> terms;
        WalkDialogue(g, model, in, mode, [&](size_t t, const HistoryEncoder::State& h, ad::Var memory) {
          const TurnRecord& turn = in.dialogue->turns[t];
          if (!HasTarget(turn)) return;
          ad::Var nll = TeacherForcedNll(g, model.decoder(), h, memory, turn.speaker, *turn.action, in.ids[t], mode);
          const double n = static_cast<double>(in.ids[t].size() + 1);
          nll_sum += nll.scalar() * n;
          terms.push_back(ad::Scale(nll, n / static_cast<double>(batch_tokens)));
        });
        if (terms.empty()) continue;
        g.Backward(ad::Sum(ad::Concat(terms)));
      }
      token_sum += batch_tokens;
      if (config.clip_norm > 0.0) ClipGradNorm(params, config.clip_norm);
      adam.Step(params, lr);
    }
    report.epoch_loss.push_back(token_sum == 0 ? 0.0 : nll_sum / static_cast<double>(token_sum));
    if (log) log->Write("language", epoch, lr, report.epoch_loss.back());
  }
  model.MarkStage("language");
  return report;
}

double LanguageNll(const Model& model, const Catalog& catalog, const std::vector<Dialogue>& dialogues,
                   const ScenarioIndex& scenarios) {
  const std::vector<DialogueInput> data = PrepareDialogues(model, catalog, dialogues, scenarios);
  double nll_sum = 0.0;
  size_t tokens = 0;
  for (const DialogueInput& in : data) {
    ad::Graph g(false);
    WalkDialogue(g, model, in, kInference, [&](size_t t, const HistoryEncoder::State& h, ad::Var memory) {
      const TurnRecord& turn = in.dialogue->turns[t];
      if (!HasTarget(turn)) return;
      const size_t n = in.ids[t].size() + 1;
      nll_sum += TeacherForcedNll(g, model.decoder(), h, memory, turn.speaker, *turn.action, in.ids[t], kInference)
                     .scalar() *
                 static_cast<double>(n);
      tokens += n;
    });
  }
  if (tokens == 0) Fail(ErrorKind::kNoData, "no labeled non-empty turns");
  return nll_sum / static_cast<double>(tokens);
}

Reconstruction ReconstructTurns(const Model& model, const Catalog& catalog, const std::vector<Dialogue>& dialogues,
                                const ScenarioIndex& scenarios) {
  const std::vector<DialogueInput> data = PrepareDialogues(model, catalog, dialogues, scenarios);
  Reconstruction r;
  for (const DialogueInput& in : data) {
    ad::Graph g(false);
    WalkDialogue(g, model, in, kInference, [&](size_t t, const HistoryEncoder::State& h, ad::Var memory) {
      const TurnRecord& turn = in.dialogue->turns[t];
      if (!HasTarget(turn)) return;
      std::vector<int> ids = DecodeUtterance(g, model.decoder(), h, memory, turn.speaker, *turn.action, {});
      Tokens decoded;
      for (int id : ids) decoded.push_back(model.dialogue_vocab().Token(id));
      ++r.turns;
      if (ids == in.ids[t]) ++r.exact;
      r.decoded.push_back(std::move(decoded));
    });
  }
  return r;
}

// --- policy -----------------------------------------------------------------

std::vector<PolicyExample> PolicyExamples(const Model& model, const Catalog& catalog,
                                          const std::vector<Dialogue>& dialogues, const ScenarioIndex& scenarios) {
  RequireStage(model, "language", "policy training");
  const std::vector<DialogueInput> data = PrepareDialogues(model, catalog, dialogues, scenarios);
  std::vector<PolicyExample> out;
  for (const DialogueInput& in : data) {
    const Scenario& s = *in.scenario;
    std::array<double, 2> current = {InitialPrice(Role::kSeller, s), InitialPrice(Role::kBuyer, s)};
    std::optional<Role> pending_by;
    ad::Graph g(false);
    WalkDialogue(g, model, in, kInference, [&](size_t t, const HistoryEncoder::State& h, ad::Var) {
      const TurnRecord& turn = in.dialogue->turns[t];
      const Role role = turn.speaker;
      if (turn.action) {
        PolicyExample ex;
        ex.state = AssembleState(h.vector().value().col(0), current[static_cast<size_t>(role)],
                                 current[static_cast<size_t>(Opponent(role))], in.value.estimate, FrameFor(role, s));
        ex.mask = LegalActionsFor(pending_by == Opponent(role) ? Phase::kOfferPending : Phase::kOpen);
        ex.action = *turn.action;
        if (!ex.mask[static_cast<size_t>(Index(ex.action))]) ex.mask = kAllActions;
        if (InvokesAdjuster(ex.action)) ex.ratio = turn.ratio;
        out.push_back(std::move(ex));
      }
      if (auto p = SpeakerProposal(turn)) current[static_cast<size_t>(role)] = *p;
      if (turn.event) pending_by = turn.event->type == EventType::kOffer ? std::optional<Role>(role) : std::nullopt;
    });
  }
  return out;
}

StageReport TrainPolicy(Model& model, const std::vector<PolicyExample>& examples, const TrainConfig& config,
                        MetricsLog* log) {
  config.Validate();
  if (examples.empty()) Fail(ErrorKind::kNoData, "no labeled policy examples");
  std::array<size_t, kNumActions> action_counts{};
  std::array<size_t, kNumRatios> ratio_counts{};
  for (const PolicyExample& ex : examples) {
    ++action_counts[static_cast<size_t>(Index(ex.action))];
    if (ex.ratio) ++ratio_counts[static_cast<size_t>(Index(*ex.ratio))];
  }
  const std::vector<double> action_w = ClassWeights(action_counts);
  const std::vector<double> ratio_w = ClassWeights(ratio_counts);
  std::vector<Parameter*> params = model.PolicyParameters();
  const PolicyHeads& heads = model.policy();
  StageReport report;
  Adam adam;
  std::mt19937_64 rng(config.seed);
  ForwardMode mode{true, config.dropout, &rng};
  for (int epoch = 0; epoch < config.policy.epochs(); ++epoch) {
    const double lr = config.policy.LearningRate(epoch);
    double total = 0.0;
    for (const auto& batch : Batches(examples.size(), config.batch_size, rng)) {
      ZeroGrad(params);
      for (size_t i : batch) {
        const PolicyExample& ex = examples[i];
        ad::Graph g;
        ad::Var state = g.Constant(Matrix(ex.state));
        const Vector mask = MaskVector(ex.mask);
        ad::Var loss = WeightedCrossEntropy(heads.ActionLogits(g, state, mode), Index(ex.action), action_w, &mask);
        if (ex.ratio) {
          loss = loss + WeightedCrossEntropy(heads.RatioLogits(g, state, ex.action, mode), Index(*ex.ratio), ratio_w);
        }
        total += loss.scalar();
        g.Backward(ad::Scale(loss, 1.0 / static_cast<double>(batch.size())));
      }
      adam.Step(params, lr);
    }
    report.epoch_loss.push_back(total / static_cast<double>(examples.size()));
    if (log) log->Write("policy", epoch, lr, report.epoch_loss.back());
  }
  model.MarkStage("policy");
  return report;
}

double PolicyAccuracy(const Model& model, const std::vector<PolicyExample>& examples) {
  if (examples.empty()) Fail(ErrorKind::kNoData, "no policy examples");
  size_t right = 0;
  for (const PolicyExample& ex : examples) {
    ActionProbs p = PredictAction(model.policy(), ex.state, ex.mask);
    if (std::max_element(p.begin(), p.end()) - p.begin() == Index(ex.action)) ++right;
  }
  return static_cast<double>(right) / static_cast<double>(examples.size());
}

SupervisedReport TrainSupervised(Model& model, const Catalog& catalog, const std::vector<Scenario>& scenarios,
                                 const std::vector<Dialogue>& dialogues, const TrainConfig& config, MetricsLog* log) {
  SupervisedReport r;
  const auto truths = GroundTruthPrices(dialogues);
  r.ove = TrainOve(model, catalog, ValueExamples(scenarios, truths), config, log);
  const ScenarioIndex index = IndexScenarios(scenarios);
  r.language = TrainLanguage(model, catalog, dialogues, index, config, log);
  r.policy = TrainPolicy(model, PolicyExamples(model, catalog, dialogues, index), config, log);
  return r;
}

// --- reinforcement ----------------------------------------------------------

ad::Var EpisodeLogProb(ad::Graph& g, const Model& model, std::span<const Decision> decisions) {
  if (decisions.empty()) Fail(ErrorKind::kInvalidArgument, "episode has no decisions");
  const PolicyHeads& heads = model.policy();
  std::vector<ad::Var> terms;
  for (const Decision& d : decisions) {
    ad::Var state = g.Constant(Matrix(d.state));
    terms.push_back(ad::Pick(ad::LogSoftmax(heads.ActionLogits(g, state, kInference), MaskVector(d.mask)),
                             Index(d.action)));
    if (d.ratio) {
      terms.push_back(ad::Pick(ad::LogSoftmax(heads.RatioLogits(g, state, d.action, kInference)), Index(*d.ratio)));
    }
  }
  return ad::Sum(ad::Concat(terms));
}

void PolicyGradientStep(Model& model, Adam& adam, std::span<const Decision> decisions, double advantage,
                        double learning_rate) {
  if (!std::isfinite(advantage)) Fail(ErrorKind::kNumeric, "non-finite advantage");
  if (advantage == 0.0 || decisions.empty()) return;
  std::vector<Parameter*> params = model.PolicyParameters();
  ZeroGrad(params);
  ad::Graph g;
  g.Backward(ad::Scale(EpisodeLogProb(g, model, decisions), -advantage));
  adam.Step(params, learning_rate);
}

RlReport TrainRl(Model& model, const Catalog& catalog, const std::vector<Scenario>& scenarios,
                 const TrainConfig& config, MetricsLog* log) {
  config.Validate();
  RequireStage(model, "policy", "reinforcement learning");
  if (scenarios.empty()) Fail(ErrorKind::kNoData, "no scenarios for self-play");
  Agent agent(model, catalog);
  Adam adam;
  std::mt19937_64 rng(config.seed);
  SelfPlayOptions options;
  options.session.max_turns = config.max_turns;
  options.act.sample_actions = true;
  options.act.rng = &rng;
  RlReport report;
  std::optional<double> baseline;
  std::deque<double> window;
  double window_sum = 0.0;
  std::vector<size_t> order;
  for (int episode = 0; episode < config.rl_episodes; ++episode) {
    if (order.empty()) {
      order.resize(scenarios.size());
      std::iota(order.begin(), order.end(), size_t{0});
      std::shuffle(order.begin(), order.end(), rng);
    }
    const Scenario& s = scenarios[order.back()];
    order.pop_back();
    SelfPlayResult result = SelfPlay(agent, s, options);
    const double reward = Reward(result.outcome, result.estimate, s.listing_price());
    if (!baseline) baseline = reward;
    const double advantage = config.rl_baseline ? reward - *baseline : reward;
    PolicyGradientStep(model, adam, result.decisions, advantage, config.rl_lr);
    *baseline = config.rl_baseline_decay * *baseline + (1.0 - config.rl_baseline_decay) * reward;
    report.rewards.push_back(reward);
    window.push_back(reward);
    window_sum += reward;
    if (window.size() > 100) {
      window_sum -= window.front();
      window.pop_front();
    }
    if (log) log->Write("rl", episode, config.rl_lr, -advantage, window_sum / static_cast<double>(window.size()));
  }
  report.final_baseline = baseline.value_or(0.0);
  model.MarkStage("rl");
  return report;
}

}  // namespace pricenego
