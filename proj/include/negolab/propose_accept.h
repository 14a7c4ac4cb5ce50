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

#ifndef NEGOLAB_PROPOSE_ACCEPT_H_
#define NEGOLAB_PROPOSE_ACCEPT_H_

// Non-spatial negotiation game. Each round a uniformly drawn proposer offers
// an integral split of the reward to a viable team; unanimous acceptance ends
// the episode, any decline continues with probability p (or, under a fixed
// horizon, until the last round).

#include <cstdint>
#include <optional>
#include <ostream>
#include <span>
#include <string>
#include <unordered_map>
#include <variant>
#include <vector>

#include "negolab/coopgame.h"
#include "negolab/rng.h"

namespace negolab::pa {

struct Config {
  int total_reward = 20;
  double continue_prob = 0.9;
  bool shapley_aware = false;
  // Unset: geometric termination. Set: exactly this many proposal rounds.
  std::optional<int> max_rounds;

  void Validate() const;
};

enum class Phase { kPropose, kRespond, kTerminal };
const char* PhaseName(Phase phase);

// Integral reward split. The proposed team is {i : shares[i] > 0}.
struct Allocation {
  std::vector<int> shares;

  Coalition Team() const;
  int Total() const;
  std::string ToString() const;  // "18,1,1,0,0"
  bool operator==(const Allocation&) const = default;
};

enum class Response : std::uint8_t { kNone, kAccept, kDecline };

// One entry per agent; proposees answer kAccept/kDecline, everyone else kNone.
using Responses = std::vector<Response>;
using Action = std::variant<Allocation, Responses>;

struct State {
  Board board;
  Phase phase = Phase::kPropose;
  int proposer = 0;
  std::optional<Allocation> pending;
  int round = 0;
  std::optional<std::vector<double>> terminal_rewards;
  // Cached for Shapley-aware observations.
  std::vector<double> shapley;

  int n() const { return board.n(); }
  // Team members other than the proposer, in index order.
  std::vector<int> Proposees() const;
};

struct Observation {
  std::vector<double> weights;
  double quota = 0;
  int self = 0;
  Phase phase = Phase::kPropose;
  int proposer = 0;
  std::vector<int> pending;  // zeros when nothing is pending
  std::optional<std::vector<double>> shapley;
};

// Feature layout: w_i/q (n), q/sum(w), one-hot self (n), one-hot phase
// (propose, respond), one-hot proposer (n), pending shares / r (n), and
// optionally the Shapley vector (n).
int FeatureSize(int n, bool shapley_aware);
void EncodeFeatures(const Observation& obs, int total_reward, std::span<double> out);
std::vector<double> EncodeFeatures(const Observation& obs, int total_reward);

Observation Observe(const State& state, int agent, const Config& config);
std::vector<Observation> ObserveAll(const State& state, const Config& config);

State Reset(const Board& board, const Config& config, Rng& rng);

struct StepResult {
  bool done = false;
  std::vector<double> rewards;  // zero until the episode ends
  bool continued = false;       // a declined proposal led to a new round
};

// Advances `state` in place. Throws kIllegalAction when the action does not
// fit the phase or violates the allocation rules.
StepResult Step(State& state, const Config& config, const Action& action, Rng& rng);

// Every composition of `total_reward` into n nonnegative parts, in
// lexicographic order. A learner's flat proposal index is a position here;
// the two indices after the last composition are accept and decline.
class AllocationSpace {
 public:
  AllocationSpace(int n, int total_reward);

  int n() const { return n_; }
  int total_reward() const { return total_reward_; }
  int size() const { return static_cast<int>(allocations_.size()); }
  int num_actions() const { return size() + 2; }
  int accept_action() const { return size(); }
  int decline_action() const { return size() + 1; }

  const Allocation& at(int index) const { return allocations_.at(index); }
  Coalition team(int index) const { return teams_[index]; }
  // -1 if the vector is not a composition of total_reward.
  int IndexOf(const Allocation& allocation) const;

  // Legal proposals for `proposer`: viable team, proposer share > 0.
  std::vector<std::uint8_t> ProposalMask(const Board& board, int proposer) const;

 private:
  int n_;
  int total_reward_;
  std::vector<Allocation> allocations_;
  std::vector<Coalition> teams_;
  std::unordered_map<std::uint64_t, int> index_;
};

// All legal allocations for `proposer`, in lexicographic order.
std::vector<Allocation> LegalAllocations(const Board& board, int proposer,
                                         int total_reward);

// Throws kIllegalAction unless `allocation` is a legal proposal.
void CheckProposal(const Board& board, int proposer, int total_reward,
                   const Allocation& allocation);

// Line-oriented trajectory log: one record per step with episode, round,
// phase, actor(s), action and rewards.
class TrajectoryLog {
 public:
  explicit TrajectoryLog(std::ostream& out) : out_(&out) {}
  void Record(int episode, const State& before, const Action& action,
              const StepResult& result);

 private:
  std::ostream* out_;
};

}  // namespace negolab::pa

#endif  // NEGOLAB_PROPOSE_ACCEPT_H_
