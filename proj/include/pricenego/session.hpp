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

#ifndef PRICENEGO_SESSION_HPP_
#define PRICENEGO_SESSION_HPP_

// The negotiation state machine, the model-driven agent turn, self-play and
// the episode reward.

#include <map>
#include <mutex>
#include <optional>
#include <random>
#include <string>
#include <string_view>
#include <vector>

#include "pricenego/corpus.hpp"
#include "pricenego/model.hpp"
#include "pricenego/policy.hpp"

namespace pricenego {

enum class Phase { kOpen, kOfferPending, kAgreed, kRejected, kQuit, kMaxTurns };
std::string_view PhaseName(Phase p);
Phase ParsePhase(std::string_view name);
bool IsTerminal(Phase p);

inline constexpr int kDefaultMaxTurns = 20;
inline constexpr double kNoAgreementReward = -0.5;

struct SessionOptions {
  int max_turns = kDefaultMaxTurns;
  Role first_mover = Role::kBuyer;
};

// What a participant does on its turn. Prices said in `text` become the
// mover's proposal; an Offer uses `offer_price` when given, else the price in
// the text, else the mover's current price.
struct Move {
  Action action = Action::kNegotiate;
  std::optional<RatioClass> ratio;
  std::string text;
  std::optional<double> offer_price;
};

struct PendingOffer {
  Role by;
  double price;
};

struct Outcome {
  bool agreed = false;
  std::optional<double> price;
  int turns = 0;
  Phase ended_by = Phase::kOpen;
};

// Legal actions for the participant to move: Negotiate/Concede/Offer/Quit
// while open, Accept/Reject/Quit while the opponent's offer is pending.
ActionMask LegalActionsFor(Phase phase);

class NegotiationSession {
 public:
  explicit NegotiationSession(Scenario scenario, SessionOptions options = {});

  const Scenario& scenario() const { return scenario_; }
  const SessionOptions& options() const { return options_; }
  Phase phase() const { return phase_; }
  bool terminal() const { return IsTerminal(phase_); }
  Role to_move() const { return to_move_; }
  int turns() const { return static_cast<int>(transcript_.size()); }
  // Last price the role committed to, or its initial price.
  double current(Role r) const { return current_[static_cast<size_t>(r)]; }
  bool has_proposed(Role r) const { return proposed_[static_cast<size_t>(r)]; }
  const std::optional<PendingOffer>& pending() const { return pending_; }

  // All false unless `r` holds the turn of a live session.
  ActionMask LegalActions(Role r) const;
  bool IsLegal(Role r, Action a) const;

  // Applies a move. Throws ErrorKind::kState, leaving the session unchanged,
  // when the actor does not hold the turn or the action is illegal.
  const TurnRecord& Step(Role actor, const Move& move);

  const std::vector<TurnRecord>& transcript() const { return transcript_; }
  Outcome outcome() const;
  Dialogue ToDialogue() const;

 private:
  Scenario scenario_;
  SessionOptions options_;
  Phase phase_ = Phase::kOpen;
  Role to_move_;
  std::array<double, 2> current_{};
  std::array<bool, 2> proposed_{};
  std::optional<PendingOffer> pending_;
  std::optional<double> agreed_price_;
  std::vector<TurnRecord> transcript_;
};

// Agreed: -|price - estimate| / listing. Otherwise kNoAgreementReward.
double Reward(const Outcome& outcome, double estimate, double listing);

// Per-scenario quantities the agent needs every turn.
struct ScenarioContext {
  ValueEstimate value;
  std::vector<Vector> item_memory;  // word-encoder outputs over title and description
};

// Incremental encoding of one session from one agent's seat.
struct AgentMemory {
  bool started = false;
  int encoded = 0;
  HistoryValues history;
  std::vector<Vector> last_utterance;
};

struct ActOptions {
  bool sample_actions = false;
  bool sample_text = false;
  double temperature = kDefaultSampleTemperature;
  std::mt19937_64* rng = nullptr;
};

struct AgentTurn {
  Move move;
  Vector state;
  ActionMask mask{};
  ActionProbs action_probs{};
  std::optional<RatioProbs> ratio_probs;
  Tokens tokens;                    // decoder output before copying prices
  std::optional<double> adjusted;   // price-adjuster result, if invoked
};

class Agent {
 public:
  Agent(const Model& model, const Catalog& catalog);

  // Computed once per scenario id and cached; safe to call concurrently.
  const ScenarioContext& Context(const Scenario& scenario) const;

  // Encode, act, adjust, decode, copy. The session is not modified.
  AgentTurn Act(const NegotiationSession& session, Role role, AgentMemory& memory, const ActOptions& options) const;

  const Model& model() const { return *model_; }
  const Catalog& catalog() const { return *catalog_; }

 private:
  void Sync(const NegotiationSession& session, AgentMemory& memory) const;

  const Model* model_;
  const Catalog* catalog_;
  mutable std::mutex mu_;
  mutable std::map<std::string, ScenarioContext> contexts_;
};

// One policy decision of an episode, kept for the policy-gradient update.
struct Decision {
  Role role;
  Vector state;
  ActionMask mask{};
  Action action;
  std::optional<RatioClass> ratio;
};

struct SelfPlayOptions {
  SessionOptions session;
  ActOptions act;
};

struct SelfPlayResult {
  Dialogue dialogue;
  Outcome outcome;
  std::vector<Decision> decisions;
  double estimate = 0.0;
};

SelfPlayResult SelfPlay(const Agent& seller, const Agent& buyer, const Scenario& scenario,
                        const SelfPlayOptions& options);
inline SelfPlayResult SelfPlay(const Agent& agent, const Scenario& scenario, const SelfPlayOptions& options) {
  return SelfPlay(agent, agent, scenario, options);
}

}  // namespace pricenego

#endif  // PRICENEGO_SESSION_HPP_
