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
#include <limits>
#include <numeric>

#include "negolab/error.h"

namespace negolab {

double NashTables::Share(Coalition proposal, int proposer, int target, int t) const {
  const NashRound& round = rounds.at(t);
  if (!proposal.Contains(target)) return 0.0;
  if (target == proposer) return round.proposer_payoff[proposer];
  return round.acceptance[target];
}

MinPayment MinPaymentCoalitions(const Board& board, int agent,
                                const std::vector<double>& thresholds,
                                double tie_tolerance) {
  const int n = board.n();
  Require(agent >= 0 && agent < n, ErrorCode::kPrecondition, "agent out of range");
  Require(static_cast<int>(thresholds.size()) == n, ErrorCode::kContract,
          "one threshold per agent required");
  for (double a : thresholds) {
    Require(std::isfinite(a) && a > 0.0, ErrorCode::kPrecondition,
            "thresholds must be finite and positive");
  }
  MinPayment best;
  best.payment = std::numeric_limits<double>::infinity();
  const std::uint32_t full = Coalition::Grand(n).mask();
  for (std::uint32_t mask = 0; mask <= full; ++mask) {
    const Coalition c(mask);
    if (!c.Contains(agent) || !board.Wins(c)) continue;
    double payment = 0.0;
    for (int j = 0; j < n; ++j) {
      if (j != agent && c.Contains(j)) payment += thresholds[j];
    }
    if (best.coalitions.empty()) {
      best.payment = payment;
      best.coalitions.push_back(c);
      continue;
    }
    const double slack = tie_tolerance * std::max(1.0, std::abs(best.payment));
    if (payment < best.payment - slack) {
      best.payment = payment;
      best.coalitions.assign(1, c);
    } else if (std::abs(payment - best.payment) <= slack) {
      best.coalitions.push_back(c);
    }
  }
  // The grand coalition always wins, so the set is never empty.
  Require(!best.coalitions.empty(), ErrorCode::kContract, "no winning coalition");
  return best;
}

namespace {

NashRound FillRound(const Board& board, int reward, std::vector<double> acceptance,
                    double tie_tolerance) {
  const int n = board.n();
  NashRound round;
  round.acceptance = std::move(acceptance);
  for (int i = 0; i < n; ++i) {
    MinPayment mp = MinPaymentCoalitions(board, i, round.acceptance, tie_tolerance);
    round.min_payment.push_back(mp.payment);
    round.proposer_payoff.push_back(reward - mp.payment);
    round.best_coalitions.push_back(std::move(mp.coalitions));
  }
  return round;
}

}  // namespace

std::vector<double> ExpectedRoundPayoff(const NashRound& round) {
  const int n = static_cast<int>(round.acceptance.size());
  std::vector<double> out(n, 0.0);
  for (int i = 0; i < n; ++i) {
    double e = round.proposer_payoff[i] / n;
    for (int j = 0; j < n; ++j) {
      if (j == i) continue;
      const auto& options = round.best_coalitions[j];
      const double weight = 1.0 / (n * static_cast<double>(options.size()));
      for (Coalition c : options) {
        if (c.Contains(i)) e += weight * round.acceptance[i];
      }
    }
    out[i] = e;
  }
  return out;
}

NashSolution SolveBackwardInduction(const Board& board, int reward, int rounds,
                                    const NashOptions& options) {
  Require(rounds >= 1, ErrorCode::kPrecondition, "need at least one round");
  Require(reward >= 1, ErrorCode::kPrecondition, "reward must be a positive integer");
  const int n = board.n();
  NashSolution sol;
  std::vector<double> acceptance(n, 1.0);
  for (int t = 0; t < rounds; ++t) {
    if (t > 0) {
      const std::vector<double> cont = ExpectedRoundPayoff(sol.tables.rounds.back());
      for (int i = 0; i < n; ++i) {
        acceptance[i] = options.integer_thresholds ? std::floor(cont[i]) + 1.0
                                                   : 1.0 + cont[i];
      }
    }
    sol.tables.rounds.push_back(
        FillRound(board, reward, acceptance, options.tie_tolerance));
  }
  const NashRound& last = sol.tables.rounds.back();
  for (int i = 0; i < n; ++i) sol.expected_utilities.push_back(last.acceptance[i] - 1.0);
  const double total =
      std::accumulate(sol.expected_utilities.begin(), sol.expected_utilities.end(), 0.0);
  for (double v : sol.expected_utilities) {
    sol.normalized.push_back(total > 0.0 ? v / total : 0.0);
  }
  sol.first_round_values = ExpectedRoundPayoff(last);
  return sol;
}

}  // namespace negolab
