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

#include "pricenego/session.hpp"

#include <cmath>

#include "pricenego/error.hpp"
#include "pricenego/pricing.hpp"

namespace pricenego {

namespace {

constexpr std::array<std::string_view, 6> kPhaseNames = {"open",     "offer_pending", "agreed",
                                                         "rejected", "quit",          "max_turns"};

}  // namespace

std::string_view PhaseName(Phase p) { return kPhaseNames[static_cast<size_t>(p)]; }

Phase ParsePhase(std::string_view name) {
  for (size_t i = 0; i < kPhaseNames.size(); ++i) {
    if (kPhaseNames[i] == name) return static_cast<Phase>(i);
  }
  Fail(ErrorKind::kParse, "unknown phase: " + std::string(name));
}

bool IsTerminal(Phase p) { return p != Phase::kOpen && p != Phase::kOfferPending; }

ActionMask LegalActionsFor(Phase phase) {
  ActionMask m{};
  switch (phase) {
    case Phase::kOpen:
      m[Index(Action::kNegotiate)] = m[Index(Action::kConcede)] = m[Index(Action::kOffer)] = true;
      m[Index(Action::kQuit)] = true;
      break;
    case Phase::kOfferPending:
      m[Index(Action::kAccept)] = m[Index(Action::kReject)] = m[Index(Action::kQuit)] = true;
      break;
    default:
      break;
  }
  return m;
}

NegotiationSession::NegotiationSession(Scenario scenario, SessionOptions options)
    : scenario_(std::move(scenario)), options_(options), to_move_(options.first_mover) {
  if (options_.max_turns < 2) Fail(ErrorKind::kInvalidArgument, "max_turns must be at least 2");
  ValidateScenario(scenario_);
  for (Role r : kRoles) current_[static_cast<size_t>(r)] = InitialPrice(r, scenario_);
}

ActionMask NegotiationSession::LegalActions(Role r) const {
  if (terminal() || r != to_move_) return ActionMask{};
  // The mover never holds its own pending offer: the turn passed when it was made.
  return LegalActionsFor(phase_);
}

bool NegotiationSession::IsLegal(Role r, Action a) const { return LegalActions(r)[static_cast<size_t>(Index(a))]; }

const TurnRecord& NegotiationSession::Step(Role actor, const Move& move) {
  if (terminal()) Fail(ErrorKind::kState, "negotiation is over (" + std::string(PhaseName(phase_)) + ")");
  if (actor != to_move_) Fail(ErrorKind::kState, "it is the " + std::string(RoleName(to_move_)) + "'s turn");
  if (!IsLegal(actor, move.action)) {
    Fail(ErrorKind::kState, std::string(ActionName(move.action)) + " is not legal while " +
                                std::string(PhaseName(phase_)));
  }
  const double listing = scenario_.listing_price();
  std::optional<TurnEvent> event;
  switch (move.action) {
    case Action::kOffer: {
      double price = current(actor);
      if (move.offer_price) {
        price = *move.offer_price;
      } else if (auto said = SpeakerProposal(MakeTurn(actor, move.text, listing))) {
        price = *said;
      }
      if (!(price > 0.0) || !std::isfinite(price)) Fail(ErrorKind::kInvalidArgument, "offer price must be positive");
      event = TurnEvent{EventType::kOffer, RoundToCents(price)};
      break;
    }
    case Action::kAccept: event = TurnEvent{EventType::kAccept, std::nullopt}; break;
    case Action::kReject: event = TurnEvent{EventType::kReject, std::nullopt}; break;
    case Action::kQuit: event = TurnEvent{EventType::kQuit, std::nullopt}; break;
    default: break;
  }
  TurnRecord turn = MakeTurn(actor, move.text, listing, event);
  turn.action = move.action;
  turn.ratio = move.ratio;
  turn.intent = ExtractIntent(turn, transcript_.empty() ? nullptr : &transcript_.back(), &scenario_);

  if (auto proposal = SpeakerProposal(turn)) {
    current_[static_cast<size_t>(actor)] = *proposal;
    proposed_[static_cast<size_t>(actor)] = true;
  }
  switch (move.action) {
    case Action::kOffer:
      phase_ = Phase::kOfferPending;
      pending_ = PendingOffer{actor, *turn.event->price};
      break;
    case Action::kAccept:
      phase_ = Phase::kAgreed;
      agreed_price_ = pending_->price;
      pending_.reset();
      break;
    case Action::kReject: phase_ = Phase::kRejected; break;
    case Action::kQuit: phase_ = Phase::kQuit; break;
    default: break;
  }
  transcript_.push_back(std::move(turn));
  to_move_ = Opponent(actor);
  if (!terminal() && turns() >= options_.max_turns) phase_ = Phase::kMaxTurns;
  return transcript_.back();
}

Outcome NegotiationSession::outcome() const {
  Outcome o;
  o.agreed = phase_ == Phase::kAgreed;
  o.price = agreed_price_;
  o.turns = turns();
  o.ended_by = phase_;
  return o;
}

Dialogue NegotiationSession::ToDialogue() const {
  Dialogue d;
  d.scenario_id = scenario_.id();
  d.turns = transcript_;
  d.outcome.agreed = phase_ == Phase::kAgreed;
  d.outcome.price = agreed_price_;
  return d;
}

double Reward(const Outcome& outcome, double estimate, double listing) {
  if (!(estimate > 0.0) || !(listing > 0.0)) Fail(ErrorKind::kInvalidArgument, "reward needs positive prices");
  if (!outcome.agreed || !outcome.price) return kNoAgreementReward;
  return -std::abs(*outcome.price - estimate) / listing;
}

Agent::Agent(const Model& model, const Catalog& catalog) : model_(&model), catalog_(&catalog) {
  if (catalog.size() == 0) Fail(ErrorKind::kNoData, "agent needs a non-empty catalog");
}

const ScenarioContext& Agent::Context(const Scenario& scenario) const {
  {
    std::lock_guard<std::mutex> lock(mu_);
    auto it = contexts_.find(scenario.id());
    if (it != contexts_.end()) return it->second;
  }
  ScenarioContext ctx;
  ctx.value = Estimate(model_->matching(), model_->ove_vocab(), model_->config().feature_dim, scenario.item, *catalog_,
                       model_->config().neighbors);
  ad::Graph g(false);
  for (const ad::Var& v : ItemMemory(g, *model_, scenario.item, kInference)) ctx.item_memory.push_back(v.value().col(0));
  std::lock_guard<std::mutex> lock(mu_);
  return contexts_.emplace(scenario.id(), std::move(ctx)).first->second;
}

void Agent::Sync(const NegotiationSession& session, AgentMemory& memory) const {
  const Model& m = *model_;
  ad::Graph g(false);
  if (!memory.started) {
    const ScenarioContext& ctx = Context(session.scenario());
    memory.history = ToValues(m.history_encoder().Start(g, g.Constant(Matrix(ctx.value.representation))));
    memory.encoded = 0;
    memory.last_utterance.clear();
    memory.started = true;
  }
  const auto& transcript = session.transcript();
  if (static_cast<size_t>(memory.encoded) > transcript.size()) {
    Fail(ErrorKind::kInvalidArgument, "agent memory is ahead of the session");
  }
  if (static_cast<size_t>(memory.encoded) == transcript.size()) return;
  HistoryEncoder::State h = FromValues(g, m.history_encoder(), memory.history);
  for (size_t t = static_cast<size_t>(memory.encoded); t < transcript.size(); ++t) {
    std::vector<int> ids = m.dialogue_vocab().Encode(transcript[t].tokens);
    WordEncoder::Output out = m.word_encoder().Encode(g, ids, kInference);
    h = m.history_encoder().Step(g, h, out.final, kInference);
    memory.last_utterance.clear();
    for (const ad::Var& v : out.outputs) memory.last_utterance.push_back(v.value().col(0));
  }
  memory.history = ToValues(h);
  memory.encoded = static_cast<int>(transcript.size());
}

namespace {

template <size_t N>
int Choose(const std::array<double, N>& probs, bool sample, std::mt19937_64* rng) {
  if (sample) {
    if (rng == nullptr) Fail(ErrorKind::kInvalidArgument, "sampling needs an rng");
    return SampleIndex(probs.data(), static_cast<int>(N), *rng);
  }
  int best = 0;
  for (size_t i = 1; i < N; ++i) {
    if (probs[i] > probs[static_cast<size_t>(best)]) best = static_cast<int>(i);
  }
  return best;
}

}  // namespace

AgentTurn Agent::Act(const NegotiationSession& session, Role role, AgentMemory& memory,
                     const ActOptions& options) const {
  if (session.terminal()) Fail(ErrorKind::kState, "negotiation is over");
  if (session.to_move() != role) Fail(ErrorKind::kState, "agent asked to act out of turn");
  const Model& m = *model_;
  const Scenario& scenario = session.scenario();
  const ScenarioContext& ctx = Context(scenario);
  Sync(session, memory);

  AgentTurn turn;
  const Role opp = Opponent(role);
  turn.state = AssembleState(memory.history.vector(), session.current(role), session.current(opp),
                             ctx.value.estimate, FrameFor(role, scenario));
  turn.mask = session.LegalActions(role);
  turn.action_probs = PredictAction(m.policy(), turn.state, turn.mask);
  const Action action = kActions[static_cast<size_t>(Choose(turn.action_probs, options.sample_actions, options.rng))];
  turn.move.action = action;

  std::optional<double> price = session.current(role);
  if (InvokesAdjuster(action)) {
    turn.ratio_probs = PredictRatio(m.policy(), turn.state, action);
    RatioClass ratio = RatioFromIndex(Choose(*turn.ratio_probs, options.sample_actions, options.rng));
    turn.move.ratio = ratio;
    turn.adjusted = AdjustPrice(role, session.current(role), ratio, scenario, session.current(opp));
    price = turn.adjusted;
  } else if (action == Action::kAccept && session.pending()) {
    price = session.pending()->price;
  }

  ad::Graph g(false);
  HistoryEncoder::State h = FromValues(g, m.history_encoder(), memory.history);
  std::vector<ad::Var> columns;
  for (const Vector& v : ctx.item_memory) columns.push_back(g.Constant(Matrix(v)));
  for (const Vector& v : memory.last_utterance) columns.push_back(g.Constant(Matrix(v)));
  ad::Var mem = BuildMemory(g, columns, m.config().dim);
  DecodeOptions decode;
  decode.sample = options.sample_text;
  decode.temperature = options.temperature;
  decode.rng = options.rng;
  std::vector<int> ids = DecodeUtterance(g, m.decoder(), h, mem, role, action, decode);
  bool said_price = false;
  for (int id : ids) {
    turn.tokens.push_back(m.dialogue_vocab().Token(id));
    said_price = said_price || id == Vocabulary::kPrice;
  }
  turn.move.text = ApplyCopy(turn.tokens, price);
  // The adjusted price only takes effect once it is said; an offer without a
  // spoken price stands at the current price.
  if (action == Action::kOffer) turn.move.offer_price = said_price ? *price : session.current(role);
  return turn;
}

SelfPlayResult SelfPlay(const Agent& seller, const Agent& buyer, const Scenario& scenario,
                        const SelfPlayOptions& options) {
  NegotiationSession session(scenario, options.session);
  std::array<AgentMemory, 2> memory;
  SelfPlayResult result;
  while (!session.terminal()) {
    const Role role = session.to_move();
    const Agent& agent = role == Role::kSeller ? seller : buyer;
    AgentTurn turn = agent.Act(session, role, memory[static_cast<size_t>(role)], options.act);
    result.decisions.push_back(Decision{role, turn.state, turn.mask, turn.move.action, turn.move.ratio});
    session.Step(role, turn.move);
  }
  result.dialogue = session.ToDialogue();
  result.outcome = session.outcome();
  result.estimate = seller.Context(scenario).value.estimate;
  return result;
}

}  // namespace pricenego
