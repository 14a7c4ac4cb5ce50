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

#ifndef NEGOLAB_BOTS_H_
#define NEGOLAB_BOTS_H_

// Hand-crafted Propose-Accept negotiators: random, weight-proportional and
// Shapley-proportional.

#include <map>
#include <string>
#include <variant>
#include <vector>

#include "negolab/coopgame.h"
#include "negolab/propose_accept.h"
#include "negolab/rng.h"

namespace negolab {

enum class BotMode { kRandom, kWeight, kShapley };
const char* BotModeName(BotMode mode);
BotMode ParseBotMode(const std::string& name);

struct BotParams {
  BotMode mode = BotMode::kWeight;
  double acceptance_scale = 5.0;  // c in sigma(c * g)
};

struct TargetAllocation {
  Coalition team;
  std::vector<double> targets;  // p_i for members, 0 elsewhere
  pa::Allocation integral;
};

// Target p_i = r * x_i / sum_{j in C} x_j with x = weights or Shapley values;
// the integral split is the L1-closest allocation that pays every member at
// least 1, ties broken toward the lexicographically smallest vector.
TargetAllocation IntegralTargetAllocation(const Board& board, Coalition team,
                                          int total_reward, BotMode mode);

// sigma(c * g) with g = (offer - target) / r.
double RespondProbability(int offer_share, double target_share, int total_reward,
                          double acceptance_scale);

using BotDecision = std::variant<pa::Allocation, pa::Response>;

// Stateless entry point; rebuilds the board-derived tables on every call.
BotDecision BotAct(const BotParams& params, const pa::Observation& obs, int total_reward,
                   Rng& rng);

// Same policy as BotAct with per-board caches, for use inside training loops.
class Bot {
 public:
  explicit Bot(BotParams params) : params_(params) {}

  const BotParams& params() const { return params_; }
  BotDecision Act(const pa::Observation& obs, int total_reward, Rng& rng);
  pa::Allocation Propose(const pa::Observation& obs, int total_reward, Rng& rng);
  pa::Response Respond(const pa::Observation& obs, int total_reward, Rng& rng);

 private:
  struct BoardCache {
    Board board;
    std::vector<std::vector<pa::Allocation>> legal;  // per proposer (random mode)
    std::vector<std::vector<Coalition>> teams;       // per proposer
    std::map<std::uint32_t, TargetAllocation> targets;
  };
  BoardCache& CacheFor(const pa::Observation& obs, int total_reward);

  BotParams params_;
  std::vector<BoardCache> caches_;
  int cached_reward_ = -1;
};

}  // namespace negolab

#endif  // NEGOLAB_BOTS_H_
