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

#include "negolab/coopgame.h"

#include <algorithm>
#include <numeric>

#include "doctest.h"
#include "negolab/error.h"
#include "test_util.h"

namespace negolab {
namespace {

using testing::RandomIntegerBoard;
using testing::SubsetFormulaShapley;

const Board kPaBoard({5, 6, 7, 5, 4}, 15);
const Board kParliament({49, 49, 2}, 50);
const Board kDictator({16, 1, 1, 1, 1}, 15);
const Board kNashExample({0.4, 0.4, 0.2, 0.2, 0.2}, 1.0);

ErrorCode CodeOf(auto&& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.code();
  }
  FAIL("expected an error");
  return ErrorCode::kContract;
}

TEST_CASE("board validation") {
  CHECK(CodeOf([] { Board({}, 1); }) == ErrorCode::kInvalidBoard);
  CHECK(CodeOf([] { Board({1, -1}, 1); }) == ErrorCode::kInvalidBoard);
  CHECK(CodeOf([] { Board({1, 2}, 0); }) == ErrorCode::kInvalidBoard);
  CHECK(CodeOf([] { Board({1, 2}, 4); }) == ErrorCode::kInvalidBoard);
  CHECK(Board({1, 2}, 3).n() == 2);
  CHECK(kPaBoard.integral());
  CHECK_FALSE(kNashExample.integral());
}

TEST_CASE("value") {
  CHECK(Value(kPaBoard, Coalition::FromMembers({0, 1, 2})) == 1);
  CHECK(Value(kPaBoard, Coalition()) == 0);
  CHECK(Value(kParliament, Coalition::FromMembers({0, 2})) == 1);
  CHECK(Value(kParliament, Coalition::FromMembers({0})) == 0);
  CHECK(CodeOf([] { Value(kParliament, Coalition::FromMembers({0, 3})); }) ==
        ErrorCode::kInvalidCoalition);
  CHECK(CodeOf([] { Coalition::FromMembers({1, 1}); }) == ErrorCode::kInvalidCoalition);
}

TEST_CASE("decimal weights compare exactly") {
  // 0.4 + 0.2 + 0.2 + 0.2 does not equal 1.0 in binary floating point.
  CHECK(Value(kNashExample, Coalition::FromMembers({0, 2, 3, 4})) == 1);
  CHECK(Value(kNashExample, Coalition::FromMembers({0, 1, 2})) == 1);
  CHECK(Value(kNashExample, Coalition::FromMembers({2, 3, 4})) == 0);
  CHECK(Value(kNashExample, Coalition::FromMembers({0, 1})) == 0);
}

TEST_CASE("is_pivotal") {
  CHECK_FALSE(IsPivotal(kParliament, Coalition::FromMembers({0, 1, 2}), 2));
  CHECK(IsPivotal(kParliament, Coalition::FromMembers({0, 2}), 2));
  CHECK_FALSE(IsPivotal(kPaBoard, Coalition::FromMembers({3, 4}), 3));
  CHECK(CodeOf([] { IsPivotal(kParliament, Coalition::FromMembers({0, 1}), 2); }) ==
        ErrorCode::kPrecondition);
}

TEST_CASE("shapley_permutations examples") {
  const ShapleyVector third = ShapleyPermutations(kParliament);
  for (double v : third.values) CHECK(v == 1.0 / 3.0);

  const ShapleyVector nash = ShapleyPermutations(kNashExample);
  CHECK(nash[0] == doctest::Approx(0.3).epsilon(1e-12));
  CHECK(nash[1] == doctest::Approx(0.3).epsilon(1e-12));
  for (int i = 2; i < 5; ++i) CHECK(nash[i] == doctest::Approx(2.0 / 15.0).epsilon(1e-12));

  const ShapleyVector null_player = ShapleyPermutations(Board({3, 3, 1}, 5));
  CHECK(null_player[0] == 0.5);
  CHECK(null_player[1] == 0.5);
  CHECK(null_player[2] == 0.0);

  CHECK(CodeOf([] { ShapleyPermutations(Board(std::vector<double>(11, 1.0), 6)); }) ==
        ErrorCode::kBudgetExceeded);
}

TEST_CASE("shapley_dp examples") {
  for (double v : ShapleyDp(kParliament).values) CHECK(v == 1.0 / 3.0);
  const ShapleyVector dict = ShapleyDp(kDictator);
  CHECK(dict.values == std::vector<double>{1, 0, 0, 0, 0});
  CHECK(CodeOf([] { ShapleyDp(kNashExample); }) == ErrorCode::kUnsupportedWeights);
  // Larger boards stay within the dynamic program's budget.
  const ShapleyVector big = ShapleyDp(Board(std::vector<double>(20, 3.0), 31));
  CHECK(big.Sum() == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(big[0] == doctest::Approx(0.05).epsilon(1e-12));
}

TEST_CASE("all_equal_power") {
  CHECK(AllEqualPower(kParliament));
  CHECK_FALSE(AllEqualPower(kDictator));
  CHECK(AllEqualPower(Board({6, 6, 6, 6, 6}, 15)));
}

TEST_CASE("dp matches permutations and the subset formula on random boards") {
  Rng rng(7);
  for (int trial = 0; trial < 300; ++trial) {
    const int n = 1 + rng.UniformInt(8);
    const Board board = RandomIntegerBoard(rng, n);
    const ShapleyVector dp = ShapleyDp(board);
    const ShapleyVector perm = ShapleyPermutations(board);
    const std::vector<double> subset = SubsetFormulaShapley(board);
    CAPTURE(board.ToString());
    for (int i = 0; i < n; ++i) {
      CHECK(std::abs(dp[i] - perm[i]) <= 1e-12);
      CHECK(std::abs(dp[i] - subset[i]) <= 1e-12);
    }
  }
}

TEST_CASE("shapley axioms hold on random boards") {
  Rng rng(11);
  for (int trial = 0; trial < 200; ++trial) {
    const int n = 2 + rng.UniformInt(6);
    const Board board = RandomIntegerBoard(rng, n);
    const ShapleyVector phi = Shapley(board);
    CAPTURE(board.ToString());

    // Efficiency and range.
    CHECK(phi.Sum() == doctest::Approx(1.0).epsilon(1e-9));
    for (double v : phi.values) CHECK((v >= 0.0 && v <= 1.0));

    // Symmetry under relabelling.
    std::vector<int> perm(n);
    std::iota(perm.begin(), perm.end(), 0);
    std::shuffle(perm.begin(), perm.end(), rng.engine());
    std::vector<double> permuted(n);
    for (int i = 0; i < n; ++i) permuted[i] = board.weight(perm[i]);
    const ShapleyVector phi_perm = Shapley(Board(permuted, board.quota()));
    for (int i = 0; i < n; ++i) CHECK(phi_perm[i] == doctest::Approx(phi[perm[i]]).epsilon(1e-12));

    // Equivalence and null player.
    for (int i = 0; i < n; ++i) {
      for (int j = 0; j < n; ++j) {
        if (board.weight(i) == board.weight(j)) CHECK(phi[i] == phi[j]);
      }
      bool ever_pivotal = false;
      for (std::uint32_t mask = 0; mask < (1u << n); ++mask) {
        const Coalition c(mask);
        if (c.Contains(i) && IsPivotal(board, c, i)) ever_pivotal = true;
      }
      if (!ever_pivotal) CHECK(phi[i] == 0.0);
    }

    // Scaling weights and quota together changes nothing.
    std::vector<double> scaled(board.weights());
    for (double& w : scaled) w *= 2.5;
    const Board big(scaled, board.quota() * 2.5);
    const ShapleyVector phi_big = ShapleyPermutations(big);
    for (int i = 0; i < n; ++i) CHECK(phi_big[i] == doctest::Approx(phi[i]).epsilon(1e-12));
    for (std::uint32_t mask = 0; mask < (1u << n); ++mask) {
      CHECK(Value(big, Coalition(mask)) == Value(board, Coalition(mask)));
    }
  }
}

}  // namespace
}  // namespace negolab
