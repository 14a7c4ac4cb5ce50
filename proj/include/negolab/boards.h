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

#ifndef NEGOLAB_BOARDS_H_
#define NEGOLAB_BOARDS_H_

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "negolab/coopgame.h"
#include "negolab/rng.h"

namespace negolab {

// Gaussian weight model. With exclude_equal_power this is the experiment
// distribution D; without it, the reduced-variance variant D'.
struct BoardDistribution {
  int n = 5;
  double quota = 15.0;
  double weight_mean = 6.0;
  double weight_std = 1.0;
  bool exclude_equal_power = true;
  bool integer_weights = true;

  void Validate() const;
};

inline constexpr int kMaxConsecutiveRejections = 10000;

struct BoardSet {
  std::vector<Board> boards;
  std::string label;
  std::uint64_t seed = 0;

  bool operator==(const BoardSet&) const = default;
};

// Draws w_i ~ N(mean, std^2), rounds (if integer_weights) and clamps to >= 1,
// and resamples until q <= sum(w) and the exclusion rule holds.
Board SampleBoard(const BoardDistribution& dist, Rng& rng);

// Disjoint, internally unique train/test sets. Uniqueness is exact and
// order-sensitive on (weights, quota).
std::pair<BoardSet, BoardSet> GenerateSplit(const BoardDistribution& dist,
                                            std::uint64_t seed, int n_train,
                                            int n_test);

// `count` unique boards drawn from one stream.
std::vector<Board> SampleUniqueBoards(const BoardDistribution& dist, Rng& rng,
                                      int count);

// Population standard deviation of all weights across the given boards.
double WeightStd(const std::vector<Board>& boards);

// Text format: header comments "# seed=", "# label=", "# n=", then one board
// per line as "w_1 w_2 ... w_n ; q". Values round-trip bit-exactly.
void SaveBoards(const BoardSet& set, const std::string& path);
BoardSet LoadBoards(const std::string& path);

std::string FormatBoardLine(const Board& board);
// `expected_n` < 0 disables the arity check.
Board ParseBoardLine(const std::string& line, int expected_n, int line_number);

}  // namespace negolab

#endif  // NEGOLAB_BOARDS_H_
