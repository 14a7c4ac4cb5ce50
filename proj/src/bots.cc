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

#include "negolab/bots.h"

#include <cmath>

#include "negolab/error.h"

namespace negolab {

const char* BotModeName(BotMode mode) {
  switch (mode) {
    case BotMode::kRandom: return "random";
    case BotMode::kWeight: return "weight";
    case BotMode::kShapley: return "shapley";
  }
  return "?";
}

BotMode ParseBotMode(const std::string& name) {
  if (name == "random") return BotMode::kRandom;
  if (name == "weight") return BotMode::kWeight;
  if (name == "shapley") return BotMode::kShapley;
  Fail(ErrorCode::kConfig, "unknown bot mode '" + name + "'");
}

TargetAllocation IntegralTargetAllocation(const Board& board, Coalition team,
                                          int total_reward, BotMode mode) {
  board.CheckCoalition(team);
  Require(mode != BotMode::kRandom, ErrorCode::kPrecondition,
          "target allocations need weight or shapley mode");
  Require(board.Wins(team), ErrorCode::kPrecondition,
          "team " + team.ToString() + " is not viable");
  const std::vector<int> members = team.Members();
  const int m = static_cast<int>(members.size());
  Require(total_reward >= m, ErrorCode::kPrecondition,
          "reward too small to pay every team member");
  const int n = board.n();
  std::vector<double> basis =
      mode == BotMode::kWeight ? board.weights() : Shapley(board).values;
  double denom = 0.0;
  for (int i : members) denom += basis[i];
  TargetAllocation out;
  out.team = team;
  out.targets.assign(n, 0.0);
  for (int i : members) {
    out.targets[i] = denom > 0.0 ? total_reward * basis[i] / denom
                                 : static_cast<double>(total_reward) / m;
  }

  // Enumerate compositions with every member >= 1 in lexicographic order; the
  // first minimum found is the lexicographically smallest.
  std::vector<int> shares(m, 1);
  std::vector<int> best;
  double best_l1 = 0.0;
  auto walk = [&](auto&& self, int pos, int remaining) -> void {
    if (pos == m - 1) {
      shares[pos] = remaining;
      double l1 = 0.0;
      for (int k = 0; k < m; ++k) l1 += std::abs(shares[k] - out.targets[members[k]]);
      if (best.empty() || l1 < best_l1 - 1e-9) {
        best = shares;
        best_l1 = l1;
      }
      return;
    }
    const int tail = m - 1 - pos;  // members after this one need >= 1 each
    for (int s = 1; s <= remaining - tail; ++s) {
      shares[pos] = s;
      self(self, pos + 1, remaining - s);
    }
  };
  walk(walk, 0, total_reward);
  out.integral.shares.assign(n, 0);
  for (int k = 0; k < m; ++k) out.integral.shares[members[k]] = best[k];
  return out;
}

double RespondProbability(int offer_share, double target_share, int total_reward,
                          double acceptance_scale) {
  const double g = (offer_share - target_share) / total_reward;
  return 1.0 / (1.0 + std::exp(-acceptance_scale * g));
}

Bot::BoardCache& Bot::CacheFor(const pa::Observation& obs, int total_reward) {
  if (total_reward != cached_reward_) {
    caches_.clear();
    cached_reward_ = total_reward;
  }
  for (BoardCache& c : caches_) {
    if (c.board.weights() == obs.weights && c.board.quota() == obs.quota) return c;
  }
  if (caches_.size() > 512) caches_.clear();
  BoardCache cache{Board(obs.weights, obs.quota)};
  const int n = cache.board.n();
  cache.legal.resize(n);
  cache.teams.resize(n);
  for (int proposer = 0; proposer < n; ++proposer) {
    for (std::uint32_t mask = 0; mask <= Coalition::Grand(n).mask(); ++mask) {
      const Coalition c(mask);
      if (c.Contains(proposer) && cache.board.Wins(c) && c.Size() <= total_reward) {
        cache.teams[proposer].push_back(c);
      }
    }
  }
  caches_.push_back(std::move(cache));
  return caches_.back();
}

pa::Allocation Bot::Propose(const pa::Observation& obs, int total_reward, Rng& rng) {
  BoardCache& cache = CacheFor(obs, total_reward);
  const int proposer = obs.self;
  if (params_.mode == BotMode::kRandom) {
    auto& legal = cache.legal[proposer];
    if (legal.empty()) legal = pa::LegalAllocations(cache.board, proposer, total_reward);
    Require(!legal.empty(), ErrorCode::kPrecondition, "no legal proposal");
    return legal[rng.UniformInt(static_cast<int>(legal.size()))];
  }
  const auto& teams = cache.teams[proposer];
  Require(!teams.empty(), ErrorCode::kPrecondition, "no viable team contains the proposer");
  const Coalition team = teams[rng.UniformInt(static_cast<int>(teams.size()))];
  auto it = cache.targets.find(team.mask());
  if (it == cache.targets.end()) {
    it = cache.targets
             .emplace(team.mask(),
                      IntegralTargetAllocation(cache.board, team, total_reward, params_.mode))
             .first;
  }
  return it->second.integral;
}

pa::Response Bot::Respond(const pa::Observation& obs, int total_reward, Rng& rng) {
  if (params_.mode == BotMode::kRandom) {
    return rng.Bernoulli(0.5) ? pa::Response::kAccept : pa::Response::kDecline;
  }
  BoardCache& cache = CacheFor(obs, total_reward);
  pa::Allocation pending{obs.pending};
  const Coalition team = pending.Team();
  auto it = cache.targets.find(team.mask());
  if (it == cache.targets.end()) {
    it = cache.targets
             .emplace(team.mask(),
                      IntegralTargetAllocation(cache.board, team, total_reward, params_.mode))
             .first;
  }
  const double p = RespondProbability(obs.pending[obs.self], it->second.targets[obs.self],
                                      total_reward, params_.acceptance_scale);
  return rng.Bernoulli(p) ? pa::Response::kAccept : pa::Response::kDecline;
}

BotDecision Bot::Act(const pa::Observation& obs, int total_reward, Rng& rng) {
  Require(obs.phase != pa::Phase::kTerminal, ErrorCode::kPrecondition,
          "bots do not act in terminal states");
  if (obs.phase == pa::Phase::kPropose) {
    Require(obs.proposer == obs.self, ErrorCode::kPrecondition, "bot is not the proposer");
    return Propose(obs, total_reward, rng);
  }
  return Respond(obs, total_reward, rng);
}

BotDecision BotAct(const BotParams& params, const pa::Observation& obs, int total_reward,
                   Rng& rng) {
  Bot bot(params);
  return bot.Act(obs, total_reward, rng);
}

}  // namespace negolab
