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

#include "doctest.h"
#include "negolab/error.h"

namespace negolab {
namespace {

const Board kPaBoard({5, 6, 7, 5, 4}, 15);
const Board kParliament({49, 49, 2}, 50);
const Board kDictator({16, 1, 1, 1, 1}, 15);

// Exhaustive L1 search over every composition of r into the team members
// (each >= 1), returning the best vector in agent order.
std::vector<int> BruteL1(const std::vector<double>& targets, Coalition team, int r) {
  const std::vector<int> members = team.Members();
  const int n = static_cast<int>(targets.size());
  std::vector<int> best;
  double best_l1 = 1e300;
  std::vector<int> cur(n, 0);
  auto rec = [&](auto&& self, std::size_t k, int left) -> void {
    if (k + 1 == members.size()) {
      if (left < 1) return;
      cur[members[k]] = left;
      double l1 = 0;
      for (int i : members) l1 += std::abs(cur[i] - targets[i]);
      if (l1 < best_l1 - 1e-9) {
        best_l1 = l1;
        best = cur;
      }
      return;
    }
    for (int s = 1; s < left; ++s) {
      cur[members[k]] = s;
      self(self, k + 1, left - s);
    }
  };
  rec(rec, 0, r);
  return best;
}

TEST_CASE("integral target allocation") {
  const TargetAllocation t =
      IntegralTargetAllocation(kPaBoard, Coalition::FromMembers({0, 1, 2}), 20, BotMode::kWeight);
  CHECK(t.targets[0] == doctest::Approx(100.0 / 18.0));
  CHECK(t.targets[1] == doctest::Approx(120.0 / 18.0));
  CHECK(t.targets[2] == doctest::Approx(140.0 / 18.0));
  CHECK(t.integral.shares == std::vector<int>{5, 7, 8, 0, 0});
  CHECK(t.integral.shares == BruteL1(t.targets, t.team, 20));

  const TargetAllocation dict =
      IntegralTargetAllocation(kDictator, Coalition::FromMembers({0}), 9, BotMode::kWeight);
  CHECK(dict.integral.shares == std::vector<int>{9, 0, 0, 0, 0});

  const Board even({3, 3, 3, 3, 3}, 12);
  const TargetAllocation four =
      IntegralTargetAllocation(even, Coalition::FromMembers({0, 1, 2, 3}), 8, BotMode::kWeight);
  CHECK(four.integral.shares == std::vector<int>{2, 2, 2, 2, 0});

  const TargetAllocation sh = IntegralTargetAllocation(
      kParliament, Coalition::FromMembers({0, 2}), 20, BotMode::kShapley);
  CHECK(sh.targets[0] == doctest::Approx(10.0));
  CHECK(sh.targets[2] == doctest::Approx(10.0));
  CHECK(sh.integral.shares == std::vector<int>{10, 0, 10});

  CHECK_THROWS_AS(IntegralTargetAllocation(kPaBoard, Coalition::FromMembers({3, 4}), 20,
                                           BotMode::kWeight),
                  Error);
}

TEST_CASE("integral allocation agrees with brute force on random teams") {
  Rng rng(4);
  for (int trial = 0; trial < 200; ++trial) {
    const Board board = kPaBoard;
    const Coalition team(static_cast<std::uint32_t>(1 + rng.UniformInt(31)));
    if (!board.Wins(team)) continue;
    const int r = team.Size() + rng.UniformInt(15);
    for (BotMode mode : {BotMode::kWeight, BotMode::kShapley}) {
      const TargetAllocation t = IntegralTargetAllocation(board, team, r, mode);
      CHECK(t.integral.shares == BruteL1(t.targets, team, r));
      CHECK(t.integral.Total() == r);
      CHECK(t.integral.Team() == team);
    }
  }
}

TEST_CASE("respond probability") {
  CHECK(RespondProbability(5, 5.0, 20, 5.0) == doctest::Approx(0.5));
  CHECK(RespondProbability(20, 0.0, 20, 5.0) == doctest::Approx(1.0 / (1.0 + std::exp(-5.0))));
  CHECK(RespondProbability(0, 20.0, 20, 5.0) == doctest::Approx(1.0 / (1.0 + std::exp(5.0))));
  CHECK(RespondProbability(20, 0.0, 20, 5.0) == doctest::Approx(0.9933).epsilon(1e-4));
  for (int offer = 0; offer < 20; ++offer) {
    CHECK(RespondProbability(offer, 7.3, 20, 5.0) < RespondProbability(offer + 1, 7.3, 20, 5.0));
  }
}

TEST_CASE("random bot responds with a fair coin") {
  Rng rng(8);
  pa::Config cfg;
  pa::State s = pa::Reset(kPaBoard, cfg, rng);
  s.proposer = 0;
  pa::Step(s, cfg, pa::Allocation{{18, 1, 1, 0, 0}}, rng);
  const pa::Observation obs = pa::Observe(s, 1, cfg);
  Bot bot({BotMode::kRandom});
  const int calls = 10000;
  int accepts = 0;
  for (int k = 0; k < calls; ++k) {
    accepts += bot.Respond(obs, cfg.total_reward, rng) == pa::Response::kAccept;
  }
  const double se = std::sqrt(0.25 / calls);
  CHECK(std::abs(accepts / static_cast<double>(calls) - 0.5) <= 3 * se);
}

TEST_CASE("every bot proposal is legal") {
  Rng rng(9);
  pa::Config cfg;
  cfg.total_reward = 10;
  for (BotMode mode : {BotMode::kRandom, BotMode::kWeight, BotMode::kShapley}) {
    Bot bot({mode});
    for (const Board& board : {kPaBoard, kDictator, Board({6, 7, 5, 6, 8}, 15)}) {
      for (int k = 0; k < 200; ++k) {
        pa::State s = pa::Reset(board, cfg, rng);
        const pa::Observation obs = pa::Observe(s, s.proposer, cfg);
        const auto decision = bot.Act(obs, cfg.total_reward, rng);
        const auto* alloc = std::get_if<pa::Allocation>(&decision);
        REQUIRE(alloc != nullptr);
        CHECK_NOTHROW(pa::CheckProposal(board, s.proposer, cfg.total_reward, *alloc));
      }
    }
  }
}

TEST_CASE("dictator weight bot can keep everything") {
  Rng rng(10);
  pa::Config cfg;
  cfg.total_reward = 10;
  Bot bot({BotMode::kWeight});
  bool saw_solo = false;
  for (int k = 0; k < 200 && !saw_solo; ++k) {
    pa::State s = pa::Reset(kDictator, cfg, rng);
    s.proposer = 0;
    const auto alloc = bot.Propose(pa::Observe(s, 0, cfg), cfg.total_reward, rng);
    saw_solo = alloc.shares == std::vector<int>{10, 0, 0, 0, 0};
  }
  CHECK(saw_solo);
}

TEST_CASE("weight and shapley bots coincide when power is proportional to weight") {
  // Equal weights: phi proportional to w.
  const Board even({4, 4, 4, 4}, 9);
  for (std::uint32_t mask = 1; mask < 16; ++mask) {
    const Coalition team(mask);
    if (!even.Wins(team)) continue;
    CHECK(IntegralTargetAllocation(even, team, 12, BotMode::kWeight).integral ==
          IntegralTargetAllocation(even, team, 12, BotMode::kShapley).integral);
  }
}

TEST_CASE("stateless entry point") {
  Rng rng(11);
  pa::Config cfg;
  pa::State s = pa::Reset(kPaBoard, cfg, rng);
  const auto d = BotAct({BotMode::kShapley}, pa::Observe(s, s.proposer, cfg), cfg.total_reward, rng);
  CHECK(std::holds_alternative<pa::Allocation>(d));
  CHECK(ParseBotMode("weight") == BotMode::kWeight);
  CHECK_THROWS_AS(ParseBotMode("greedy"), Error);
}

}  // namespace
}  // namespace negolab
