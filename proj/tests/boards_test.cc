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

#include "negolab/boards.h"

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <set>

#include "doctest.h"
#include "negolab/error.h"

namespace negolab {
namespace {

std::string TempPath(const std::string& name) {
  return (std::filesystem::temp_directory_path() / ("negolab_" + name)).string();
}

TEST_CASE("sampled boards satisfy the distribution D") {
  const BoardDistribution d;
  Rng rng(42);
  for (int k = 0; k < 500; ++k) {
    const Board b = SampleBoard(d, rng);
    CHECK(b.n() == 5);
    CHECK(b.quota() == 15.0);
    for (double w : b.weights()) {
      CHECK(w >= 1.0);
      CHECK(w == std::floor(w));
    }
    CHECK(b.TotalWeight() >= b.quota());
    CHECK_FALSE(AllEqualPower(b));
  }
}

TEST_CASE("degenerate distribution is infeasible") {
  BoardDistribution d;
  d.weight_std = 1e-9;
  Rng rng(1);
  try {
    SampleBoard(d, rng);
    FAIL("expected infeasible");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::kDistributionInfeasible);
  }
  d.weight_std = 0.0;
  CHECK_THROWS_AS(SampleBoard(d, rng), Error);
}

TEST_CASE("reduced-variance stream replays D with equal-power boards kept") {
  BoardDistribution d;
  BoardDistribution d_prime = d;
  d_prime.exclude_equal_power = false;
  Rng r1(9), r2(9);
  std::vector<Board> from_d, filtered;
  for (int k = 0; k < 200; ++k) from_d.push_back(SampleBoard(d, r1));
  int equal_power = 0;
  while (filtered.size() < from_d.size()) {
    Board b = SampleBoard(d_prime, r2);
    if (AllEqualPower(b)) {
      ++equal_power;
    } else {
      filtered.push_back(b);
    }
  }
  CHECK(filtered == from_d);
  CHECK(equal_power > 0);
}

TEST_CASE("generate_split sizes, uniqueness, disjointness, determinism") {
  const BoardDistribution d;
  auto [train, test] = GenerateSplit(d, 5, 150, 50);
  CHECK(train.boards.size() == 150);
  CHECK(test.boards.size() == 50);
  CHECK(train.label == "train");
  CHECK(test.label == "test");
  std::set<Board> all(train.boards.begin(), train.boards.end());
  all.insert(test.boards.begin(), test.boards.end());
  CHECK(all.size() == 200);
  auto [train2, test2] = GenerateSplit(d, 5, 150, 50);
  CHECK(train == train2);
  CHECK(test == test2);

  auto [one, other] = GenerateSplit(d, 6, 1, 1);
  CHECK(!(one.boards[0] == other.boards[0]));
  CHECK_THROWS_AS(GenerateSplit(d, 6, 0, 1), Error);
}

TEST_CASE("weight spread of D is reported") {
  Rng rng(123);
  std::vector<Board> boards;
  for (int k = 0; k < 10000; ++k) boards.push_back(SampleBoard(BoardDistribution{}, rng));
  const double std_d = WeightStd(boards);
  MESSAGE("empirical weight std under D over 10000 boards: " << std_d);
  CHECK(std_d > 0.8);
  CHECK(std_d < 2.0);
}

TEST_CASE("board files round-trip and report parse errors") {
  BoardSet set;
  set.seed = 77;
  set.label = "test";
  set.boards = {Board({5, 6, 7, 5, 4}, 15), Board({0.1, 0.7, 1.0 / 3.0, 2, 9}, 2.5)};
  const std::string path = TempPath("boards.txt");
  SaveBoards(set, path);
  CHECK(LoadBoards(path) == set);

  CHECK(ParseBoardLine("5 6 7 5 4 ; 15", 5, 1) == Board({5, 6, 7, 5, 4}, 15));
  try {
    ParseBoardLine("5 6 ; 15", 5, 4);
    FAIL("expected parse error");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::kParse);
    CHECK(std::string(e.what()).find("line 4") != std::string::npos);
  }
  CHECK_THROWS_AS(ParseBoardLine("5 6 x ; 15", -1, 1), Error);
  CHECK_THROWS_AS(ParseBoardLine("5 6 7", -1, 1), Error);
  CHECK_THROWS_AS(ParseBoardLine("1 1 ; 15", -1, 1), Error);

  {
    std::ofstream bad(path);
    bad << "# seed=1\n# label=train\n# n=5\n5 6 7 5 4 ; 15\n5 6 ; 15\n";
  }
  try {
    LoadBoards(path);
    FAIL("expected parse error");
  } catch (const Error& e) {
    CHECK(std::string(e.what()).find("line 5") != std::string::npos);
  }
  std::remove(path.c_str());
}

}  // namespace
}  // namespace negolab
