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

#include "negolab/nash_solver.h"

#include <cmath>
#include <numeric>

#include "doctest.h"
#include "negolab/error.h"
#include "test_util.h"

namespace negolab {
namespace {

const Board kExample({0.4, 0.4, 0.2, 0.2, 0.2}, 1.0);

std::vector<Coalition> Set(std::initializer_list<std::initializer_list<int>> sets) {
  std::vector<Coalition> out;
  for (auto s : sets) out.push_back(Coalition::FromMembers(s));
  return out;
}

// Final-round expectation computed from the game rules alone: every proposee
// takes 1, the proposer keeps the rest and picks uniformly among the winning
// coalitions of minimum size that contain it.
std::vector<double> FinalRoundByEnumeration(const Board& board, int reward) {
  const int n = board.n();
  std::vector<double> expected(n, 0.0);
  for (int proposer = 0; proposer < n; ++proposer) {
    int best_size = n + 1;
    std::vector<Coalition> best;
    for (std::uint32_t mask = 0; mask < (1u << n); ++mask) {
      const Coalition c(mask);
      if (!c.Contains(proposer) || Value(board, c) == 0) continue;
      if (c.Size() < best_size) {
        best_size = c.Size();
        best.clear();
      }
      if (c.Size() == best_size) best.push_back(c);
    }
    for (const Coalition& c : best) {
      const double p = 1.0 / n / best.size();
      for (int i : c.Members()) {
        expected[i] += p * (i == proposer ? reward - (best_size - 1) : 1.0);
      }
    }
  }
  return expected;
}

TEST_CASE("min payment coalitions on the worked example") {
  const std::vector<double> ones(5, 1.0);
  const MinPayment p0 = MinPaymentCoalitions(kExample, 0, ones);
  CHECK(p0.payment == 2.0);
  CHECK(p0.coalitions == Set({{0, 1, 2}, {0, 1, 3}, {0, 1, 4}}));
  const MinPayment p2 = MinPaymentCoalitions(kExample, 2, ones);
  CHECK(p2.payment == 2.0);
  CHECK(p2.coalitions == Set({{0, 1, 2}}));

  const Board dictator({16, 1, 1, 1, 1}, 15);
  const MinPayment pd = MinPaymentCoalitions(dictator, 0, ones);
  CHECK(pd.payment == 0.0);
  CHECK(pd.coalitions == Set({{0}}));

  CHECK_THROWS_AS(MinPaymentCoalitions(kExample, 0, {1, 1, 0, 1, 1}), Error);
}

TEST_CASE("final round tables") {
  const NashSolution sol = SolveBackwardInduction(kExample, 20, 1);
  const NashRound& r0 = sol.tables.rounds.at(0);
  CHECK(r0.acceptance == std::vector<double>(5, 1.0));
  CHECK(r0.min_payment[0] == 2.0);
  CHECK(r0.proposer_payoff[0] == 18.0);
  const Coalition c = Coalition::FromMembers({0, 1, 2});
  CHECK(sol.tables.Share(c, 0, 0, 0) == 18.0);
  CHECK(sol.tables.Share(c, 0, 1, 0) == 1.0);
  CHECK(sol.tables.Share(c, 0, 3, 0) == 0.0);

  const std::vector<double> oracle = FinalRoundByEnumeration(kExample, 20);
  for (int i = 0; i < 5; ++i) {
    CHECK(sol.first_round_values[i] == doctest::Approx(oracle[i]).epsilon(1e-12));
  }
}

TEST_CASE("final round matches enumeration on random boards") {
  Rng rng(3);
  for (int trial = 0; trial < 50; ++trial) {
    const Board board = testing::RandomIntegerBoard(rng, 2 + rng.UniformInt(5));
    const int reward = 10 + rng.UniformInt(20);
    const NashSolution sol = SolveBackwardInduction(board, reward, 1);
    const std::vector<double> oracle = FinalRoundByEnumeration(board, reward);
    for (int i = 0; i < board.n(); ++i) {
      CHECK(sol.first_round_values[i] == doctest::Approx(oracle[i]).epsilon(1e-12));
    }
  }
}

TEST_CASE("ten round example reproduces the reported utilities") {
  const NashSolution sol = SolveBackwardInduction(kExample, 20, 10);
  const double big[] = {6.29, 6.29, 2.473, 2.473, 2.473};
  const double share[] = {0.315, 0.315, 0.124, 0.124, 0.124};
  for (int i = 0; i < 5; ++i) {
    CHECK(std::abs(sol.expected_utilities[i] - big[i]) <= 0.01);
    CHECK(std::abs(sol.normalized[i] - share[i]) <= 0.001);
  }
  const double total =
      std::accumulate(sol.expected_utilities.begin(), sol.expected_utilities.end(), 0.0);
  CHECK(std::abs(total - 20.0) <= 1e-6);
}

TEST_CASE("equilibrium allocates the full reward and treats equal weights alike") {
  Rng rng(5);
  for (int trial = 0; trial < 60; ++trial) {
    const Board board = testing::RandomIntegerBoard(rng, 2 + rng.UniformInt(5), 9);
    const int reward = 5 + rng.UniformInt(30);
    const int rounds = 2 + rng.UniformInt(11);
    const NashSolution sol = SolveBackwardInduction(board, reward, rounds);
    CAPTURE(board.ToString());
    const double total =
        std::accumulate(sol.expected_utilities.begin(), sol.expected_utilities.end(), 0.0);
    CHECK(std::abs(total - reward) <= 1e-6);
    const double first =
        std::accumulate(sol.first_round_values.begin(), sol.first_round_values.end(), 0.0);
    CHECK(std::abs(first - reward) <= 1e-6);
    for (int i = 0; i < board.n(); ++i) {
      for (int j = 0; j < board.n(); ++j) {
        if (board.weight(i) == board.weight(j)) {
          CHECK(sol.expected_utilities[i] ==
                doctest::Approx(sol.expected_utilities[j]).epsilon(1e-9));
        }
      }
      for (std::size_t t = 0; t < sol.tables.rounds.size(); ++t) {
        const NashRound& round = sol.tables.rounds[t];
        CHECK(round.proposer_payoff[i] == reward - round.min_payment[i]);
        for (Coalition c : round.best_coalitions[i]) {
          CHECK(c.Contains(i));
          CHECK(Value(board, c) == 1);
        }
      }
    }
  }
}

TEST_CASE("integer threshold variant keeps thresholds integral") {
  const NashSolution sol =
      SolveBackwardInduction(kExample, 20, 10, NashOptions{.integer_thresholds = true});
  for (const NashRound& round : sol.tables.rounds) {
    for (double a : round.acceptance) CHECK(a == std::floor(a));
  }
}

TEST_CASE("single round game has zero continuation utility") {
  const NashSolution sol = SolveBackwardInduction(kExample, 20, 1);
  for (double v : sol.expected_utilities) CHECK(v == 0.0);
  for (double u : sol.normalized) CHECK(u == 0.0);
  CHECK_THROWS_AS(SolveBackwardInduction(kExample, 20, 0), Error);
}

}  // namespace
}  // namespace negolab
