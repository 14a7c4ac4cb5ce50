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

#ifndef NEGOLAB_NASH_SOLVER_H_
#define NEGOLAB_NASH_SOLVER_H_

// Backward induction for the fixed-horizon Propose-Accept game. Rounds are
// indexed by t = number of rounds remaining after the current one, so t = 0
// is the final round.

#include <vector>

#include "negolab/coopgame.h"

namespace negolab {

struct NashRound {
  std::vector<double> acceptance;       // a^t_i: minimal accepted offer
  std::vector<double> min_payment;      // g^t_i: cheapest outgoing payment
  std::vector<double> proposer_payoff;  // d^t_i = r - g^t_i
  // C^t_i: every winning coalition containing i that attains g^t_i, ordered
  // by bitmask.
  std::vector<std::vector<Coalition>> best_coalitions;
};

struct NashTables {
  std::vector<NashRound> rounds;  // rounds[t]

  // S(C_x, j, i, t): what `target` receives when `proposer` offers C_x in
  // round t.
  double Share(Coalition proposal, int proposer, int target, int t) const;
};

struct NashSolution {
  NashTables tables;
  // v^T_i = a^{T-1}_i - 1.
  std::vector<double> expected_utilities;
  // u^T_i = v^T_i / sum_j v^T_j (all zero when the sum is zero, i.e. T = 1).
  std::vector<double> normalized;
  // Expected payoff over a uniformly drawn proposer in round t = T-1, i.e.
  // (1/n) d^{T-1}_i + sum_{j != i} avg_{C_x in C^{T-1}_j} S(C_x, j, i, T-1).
  std::vector<double> first_round_values;
};

struct NashOptions {
  // Thresholds a = floor(E) + 1 (smallest integer strictly above the
  // continuation value) instead of a = 1 + E.
  bool integer_thresholds = false;
  // Relative tolerance used when collecting tied minimum-payment coalitions.
  double tie_tolerance = 1e-9;
};

struct MinPayment {
  double payment = 0.0;
  std::vector<Coalition> coalitions;
};

// g = min over winning coalitions C containing `agent` of sum_{j in C, j !=
// agent} thresholds[j], with the full argmin set.
MinPayment MinPaymentCoalitions(const Board& board, int agent,
                                const std::vector<double>& thresholds,
                                double tie_tolerance = 1e-9);

// Expected payoff of each player when a round described by `round` is played
// with a uniformly random proposer.
std::vector<double> ExpectedRoundPayoff(const NashRound& round);

NashSolution SolveBackwardInduction(const Board& board, int reward, int rounds,
                                    const NashOptions& options = {});

}  // namespace negolab

#endif  // NEGOLAB_NASH_SOLVER_H_
