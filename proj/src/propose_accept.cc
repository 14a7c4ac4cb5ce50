// Copyright 2026 The Negolab Authors
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

#include "negolab/propose_accept.h"

#include <algorithm>
#include <numeric>
#include <sstream>

#include "negolab/error.h"

namespace negolab::pa {

void Config::Validate() const {
  Require(total_reward >= 1, ErrorCode::kConfig, "total reward must be >= 1");
  Require(continue_prob > 0.0 && continue_prob < 1.0, ErrorCode::kConfig,
          "continue probability must lie in (0, 1)");
  Require(!max_rounds || *max_rounds >= 1, ErrorCode::kConfig, "max_rounds must be >= 1");
}

const char* PhaseName(Phase phase) {
  switch (phase) {
    case Phase::kPropose: return "propose";
    case Phase::kRespond: return "respond";
    case Phase::kTerminal: return "terminal";
  }
  return "?";
}

Coalition Allocation::Team() const {
  std::uint32_t mask = 0;
  for (std::size_t i = 0; i < shares.size(); ++i) {
    if (shares[i] > 0) mask |= 1u << i;
  }
  return Coalition(mask);
}

int Allocation::Total() const { return std::accumulate(shares.begin(), shares.end(), 0); }

std::string Allocation::ToString() const {
  std::string out;
  for (std::size_t i = 0; i < shares.size(); ++i) {
    if (i > 0) out += ',';
    out += std::to_string(shares[i]);
  }
  return out;
}

std::vector<int> State::Proposees() const {
  std::vector<int> out;
  if (!pending) return out;
  for (int i = 0; i < n(); ++i) {
    if (i != proposer && pending->shares[i] > 0) out.push_back(i);
  }
  return out;
}

int FeatureSize(int n, bool shapley_aware) { return 4 * n + 3 + (shapley_aware ? n : 0); }

void EncodeFeatures(const Observation& obs, int total_reward, std::span<double> out) {
  const int n = static_cast<int>(obs.weights.size());
  Require(static_cast<int>(out.size()) == FeatureSize(n, obs.shapley.has_value()),
          ErrorCode::kContract, "feature buffer has the wrong size");
  std::fill(out.begin(), out.end(), 0.0);
  double total = 0.0;
  for (double w : obs.weights) total += w;
  int k = 0;
  for (int i = 0; i < n; ++i) out[k++] = obs.weights[i] / obs.quota;
  out[k++] = obs.quota / total;
  out[k + obs.self] = 1.0;
  k += n;
  if (obs.phase == Phase::kPropose) out[k] = 1.0;
  if (obs.phase == Phase::kRespond) out[k + 1] = 1.0;
  k += 2;
  out[k + obs.proposer] = 1.0;
  k += n;
  for (int i = 0; i < n; ++i) out[k++] = static_cast<double>(obs.pending[i]) / total_reward;
  if (obs.shapley) {
    for (int i = 0; i < n; ++i) out[k++] = (*obs.shapley)[i];
  }
}

std::vector<double> EncodeFeatures(const Observation& obs, int total_reward) {
  std::vector<double> out(FeatureSize(static_cast<int>(obs.weights.size()),
                                      obs.shapley.has_value()));
  EncodeFeatures(obs, total_reward, out);
  return out;
}

Observation Observe(const State& state, int agent, const Config& config) {
  Observation obs;
  obs.weights = state.board.weights();
  obs.quota = state.board.quota();
  obs.self = agent;
  obs.phase = state.phase;
  obs.proposer = state.proposer;
  obs.pending = state.pending ? state.pending->shares : std::vector<int>(state.n(), 0);
  if (config.shapley_aware) obs.shapley = state.shapley;
  return obs;
}

std::vector<Observation> ObserveAll(const State& state, const Config& config) {
  std::vector<Observation> out;
  for (int i = 0; i < state.n(); ++i) out.push_back(Observe(state, i, config));
  return out;
}

State Reset(const Board& board, const Config& config, Rng& rng) {
  config.Validate();
  State state{board};
  state.phase = Phase::kPropose;
  state.proposer = rng.UniformInt(board.n());
  state.round = 0;
  if (config.shapley_aware) state.shapley = Shapley(board).values;
  return state;
}

void CheckProposal(const Board& board, int proposer, int total_reward,
                   const Allocation& allocation) {
  Require(static_cast<int>(allocation.shares.size()) == board.n(), ErrorCode::kIllegalAction,
          "allocation needs one share per agent");
  for (int s : allocation.shares) {
    Require(s >= 0, ErrorCode::kIllegalAction, "negative share in " + allocation.ToString());
  }
  Require(allocation.Total() == total_reward, ErrorCode::kIllegalAction,
          "allocation " + allocation.ToString() + " does not sum to " +
              std::to_string(total_reward));
  Require(allocation.shares[proposer] > 0, ErrorCode::kIllegalAction,
          "proposer " + std::to_string(proposer) + " is not in the proposed team");
  Require(board.Wins(allocation.Team()), ErrorCode::kIllegalAction,
          "team " + allocation.Team().ToString() + " is not viable");
}

namespace {

void Finish(State& state, std::vector<double> rewards, StepResult& result) {
  state.phase = Phase::kTerminal;
  state.terminal_rewards = rewards;
  result.done = true;
  result.rewards = std::move(rewards);
}

}  // namespace

StepResult Step(State& state, const Config& config, const Action& action, Rng& rng) {
  const int n = state.n();
  StepResult result;
  result.rewards.assign(n, 0.0);
  Require(state.phase != Phase::kTerminal, ErrorCode::kIllegalAction,
          "episode already terminated");

  if (state.phase == Phase::kPropose) {
    const Allocation* proposal = std::get_if<Allocation>(&action);
    Require(proposal != nullptr, ErrorCode::kIllegalAction,
            "propose phase expects an allocation");
    CheckProposal(state.board, state.proposer, config.total_reward, *proposal);
    state.pending = *proposal;
    if (state.Proposees().empty()) {
      // Nobody has to agree: a winning singleton team settles immediately.
      std::vector<double> rewards(proposal->shares.begin(), proposal->shares.end());
      Finish(state, std::move(rewards), result);
      return result;
    }
    state.phase = Phase::kRespond;
    return result;
  }

  const Responses* responses = std::get_if<Responses>(&action);
  Require(responses != nullptr, ErrorCode::kIllegalAction,
          "respond phase expects accept/decline responses");
  Require(static_cast<int>(responses->size()) == n, ErrorCode::kIllegalAction,
          "responses need one entry per agent");
  const Coalition team = state.pending->Team();
  bool all_accept = true;
  for (int i = 0; i < n; ++i) {
    const bool proposee = i != state.proposer && team.Contains(i);
    const Response r = (*responses)[i];
    if (!proposee) {
      Require(r == Response::kNone, ErrorCode::kIllegalAction,
              "agent " + std::to_string(i) + " is not a proposee");
      continue;
    }
    Require(r != Response::kNone, ErrorCode::kIllegalAction,
            "missing response from proposee " + std::to_string(i));
    if (r == Response::kDecline) all_accept = false;
  }
  if (all_accept) {
    std::vector<double> rewards(state.pending->shares.begin(), state.pending->shares.end());
    Finish(state, std::move(rewards), result);
    return result;
  }
  bool next_round;
  if (config.max_rounds) {
    next_round = state.round + 1 < *config.max_rounds;
  } else {
    next_round = rng.Bernoulli(config.continue_prob);
  }
  if (!next_round) {
    Finish(state, std::vector<double>(n, 0.0), result);
    return result;
  }
  state.phase = Phase::kPropose;
  state.pending.reset();
  ++state.round;
  state.proposer = rng.UniformInt(n);
  result.continued = true;
  return result;
}

AllocationSpace::AllocationSpace(int n, int total_reward)
    : n_(n), total_reward_(total_reward) {
  Require(n >= 1 && n <= kMaxAgents, ErrorCode::kConfig, "bad agent count");
  Require(total_reward >= 1, ErrorCode::kConfig, "total reward must be >= 1");
  std::vector<int> shares(n, 0);
  // Depth-first walk in increasing order of each coordinate yields the
  // lexicographic order.
  auto walk = [&](auto&& self, int pos, int remaining) -> void {
    if (pos == n - 1) {
      shares[pos] = remaining;
      allocations_.push_back(Allocation{shares});
      return;
    }
    for (int s = 0; s <= remaining; ++s) {
      shares[pos] = s;
      self(self, pos + 1, remaining - s);
    }
  };
  walk(walk, 0, total_reward);
  teams_.reserve(allocations_.size());
  for (int k = 0; k < size(); ++k) {
    teams_.push_back(allocations_[k].Team());
    std::uint64_t key = 0;
    for (int s : allocations_[k].shares) key = key * (total_reward + 1) + s;
    index_.emplace(key, k);
  }
}

int AllocationSpace::IndexOf(const Allocation& allocation) const {
  if (static_cast<int>(allocation.shares.size()) != n_) return -1;
  std::uint64_t key = 0;
  for (int s : allocation.shares) {
    if (s < 0 || s > total_reward_) return -1;
    key = key * (total_reward_ + 1) + s;
  }
  auto it = index_.find(key);
  return it == index_.end() ? -1 : it->second;
}

std::vector<std::uint8_t> AllocationSpace::ProposalMask(const Board& board,
                                                        int proposer) const {
  Require(board.n() == n_, ErrorCode::kContract, "board size does not match action space");
  std::vector<std::uint8_t> mask(size(), 0);
  for (int k = 0; k < size(); ++k) {
    mask[k] = allocations_[k].shares[proposer] > 0 && board.Wins(teams_[k]);
  }
  return mask;
}

std::vector<Allocation> LegalAllocations(const Board& board, int proposer,
                                         int total_reward) {
  const AllocationSpace space(board.n(), total_reward);
  const std::vector<std::uint8_t> mask = space.ProposalMask(board, proposer);
  std::vector<Allocation> out;
  for (int k = 0; k < space.size(); ++k) {
    if (mask[k]) out.push_back(space.at(k));
  }
  return out;
}

void TrajectoryLog::Record(int episode, const State& before, const Action& action,
                           const StepResult& result) {
  std::ostream& out = *out_;
  out << "episode=" << episode << " round=" << before.round
      << " phase=" << PhaseName(before.phase);
  if (const auto* alloc = std::get_if<Allocation>(&action)) {
    out << " actor=" << before.proposer << " action=" << alloc->ToString();
  } else {
    const auto& responses = std::get<Responses>(action);
    std::string actors, answers;
    for (std::size_t i = 0; i < responses.size(); ++i) {
      if (responses[i] == Response::kNone) continue;
      if (!actors.empty()) {
        actors += ',';
        answers += ',';
      }
      actors += std::to_string(i);
      answers += responses[i] == Response::kAccept ? 'A' : 'D';
    }
    out << " actor=" << actors << " action=" << answers;
  }
  out << " rewards=";
  for (std::size_t i = 0; i < result.rewards.size(); ++i) {
    if (i > 0) out << ',';
    out << result.rewards[i];
  }
  out << " done=" << (result.done ? 1 : 0) << '\n';
}

}  // namespace negolab::pa
