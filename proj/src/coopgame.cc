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
#include <bit>
#include <cmath>
#include <numeric>
#include <sstream>

#include "negolab/error.h"

namespace negolab {

Coalition Coalition::FromMembers(std::span<const int> members) {
  std::uint32_t mask = 0;
  for (int m : members) {
    Require(m >= 0 && m < kMaxAgents, ErrorCode::kInvalidCoalition,
            "member index " + std::to_string(m) + " out of range");
    Require(((mask >> m) & 1u) == 0, ErrorCode::kInvalidCoalition,
            "duplicate member " + std::to_string(m));
    mask |= 1u << m;
  }
  return Coalition(mask);
}

int Coalition::Size() const { return std::popcount(mask_); }

std::vector<int> Coalition::Members() const {
  std::vector<int> out;
  for (int i = 0; i < 32; ++i) {
    if (Contains(i)) out.push_back(i);
  }
  return out;
}

std::string Coalition::ToString() const {
  std::ostringstream out;
  out << '{';
  bool first = true;
  for (int m : Members()) {
    if (!first) out << ',';
    out << m;
    first = false;
  }
  out << '}';
  return out.str();
}

namespace {

bool IsWhole(double x) { return std::floor(x) == x; }

// Finds the smallest power of ten (up to 1e6) that turns every value into an
// integer, within a relative 1e-9 representation slack.
bool ScaleToIntegers(const std::vector<double>& weights, double quota,
                     std::vector<std::int64_t>& scaled_weights,
                     std::int64_t& scaled_quota) {
  double scale = 1.0;
  for (int digits = 0; digits <= 6; ++digits, scale *= 10.0) {
    auto fits = [scale](double x) {
      const double y = x * scale;
      if (std::abs(y) > 1e15) return false;
      return std::abs(y - std::round(y)) <= 1e-9 * std::max(1.0, std::abs(y));
    };
    if (!fits(quota) || !std::all_of(weights.begin(), weights.end(), fits)) continue;
    scaled_weights.clear();
    for (double w : weights) {
      scaled_weights.push_back(static_cast<std::int64_t>(std::llround(w * scale)));
    }
    scaled_quota = static_cast<std::int64_t>(std::llround(quota * scale));
    return true;
  }
  return false;
}

}  // namespace

Board::Board(std::vector<double> weights, double quota)
    : weights_(std::move(weights)), quota_(quota) {
  Require(!weights_.empty(), ErrorCode::kInvalidBoard, "board needs at least one agent");
  Require(n() <= kMaxAgents, ErrorCode::kInvalidBoard,
          "at most " + std::to_string(kMaxAgents) + " agents supported");
  for (double w : weights_) {
    Require(std::isfinite(w) && w >= 0.0, ErrorCode::kInvalidBoard,
            "weights must be finite and nonnegative");
  }
  Require(std::isfinite(quota_) && quota_ > 0.0, ErrorCode::kInvalidBoard,
          "quota must be positive");
  integral_ = IsWhole(quota_) &&
              std::all_of(weights_.begin(), weights_.end(), IsWhole);
  scaled_ = ScaleToIntegers(weights_, quota_, scaled_weights_, scaled_quota_);
  Require(Wins(Coalition::Grand(n())), ErrorCode::kInvalidBoard,
          "quota exceeds total weight: " + ToString());
}

double Board::TotalWeight() const {
  return std::accumulate(weights_.begin(), weights_.end(), 0.0);
}

double Board::CoalitionWeight(Coalition coalition) const {
  double total = 0.0;
  for (int i = 0; i < n(); ++i) {
    if (coalition.Contains(i)) total += weights_[i];
  }
  return total;
}

bool Board::Wins(Coalition coalition) const {
  if (scaled_) {
    std::int64_t total = 0;
    for (int i = 0; i < n(); ++i) {
      if (coalition.Contains(i)) total += scaled_weights_[i];
    }
    return total >= scaled_quota_;
  }
  return CoalitionWeight(coalition) >= quota_;
}

void Board::CheckCoalition(Coalition coalition) const {
  Require((coalition.mask() & ~Coalition::Grand(n()).mask()) == 0,
          ErrorCode::kInvalidCoalition,
          "coalition " + coalition.ToString() + " has members outside [0, " +
              std::to_string(n()) + ")");
}

std::string Board::ToString() const {
  std::ostringstream out;
  out.precision(17);
  out << '[';
  for (int i = 0; i < n(); ++i) {
    if (i > 0) out << ' ';
    out << weights_[i];
  }
  out << "; " << quota_ << ']';
  return out.str();
}

double ShapleyVector::Sum() const {
  return std::accumulate(values.begin(), values.end(), 0.0);
}

int Value(const Board& board, Coalition coalition) {
  board.CheckCoalition(coalition);
  return board.Wins(coalition) ? 1 : 0;
}

bool IsPivotal(const Board& board, Coalition coalition, int agent) {
  board.CheckCoalition(coalition);
  Require(coalition.Contains(agent), ErrorCode::kPrecondition,
          "agent " + std::to_string(agent) + " is not in coalition " +
              coalition.ToString());
  return board.Wins(coalition) && !board.Wins(coalition.Without(agent));
}

namespace {

std::uint64_t Factorial(int k) {
  std::uint64_t f = 1;
  for (int i = 2; i <= k; ++i) f *= static_cast<std::uint64_t>(i);
  return f;
}

ShapleyVector FromCounts(const std::vector<std::uint64_t>& counts, int n) {
  const double total = static_cast<double>(Factorial(n));
  ShapleyVector out;
  out.values.reserve(counts.size());
  for (std::uint64_t c : counts) out.values.push_back(static_cast<double>(c) / total);
  return out;
}

}  // namespace

ShapleyVector ShapleyPermutations(const Board& board) {
  const int n = board.n();
  Require(n <= kMaxPermutationAgents, ErrorCode::kBudgetExceeded,
          "permutation enumeration limited to " +
              std::to_string(kMaxPermutationAgents) + " agents; use ShapleyDp");
  std::vector<int> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::vector<std::uint64_t> pivots(n, 0);
  do {
    Coalition prefix;
    for (int agent : order) {
      const Coalition next = prefix.With(agent);
      if (board.Wins(next)) {
        // The prefix was losing, otherwise the loop would have stopped.
        ++pivots[agent];
        break;
      }
      prefix = next;
    }
  } while (std::next_permutation(order.begin(), order.end()));
  return FromCounts(pivots, n);
}

ShapleyVector ShapleyDp(const Board& board) {
  const int n = board.n();
  Require(board.integral(), ErrorCode::kUnsupportedWeights,
          "dynamic-program Shapley needs integer weights and quota: " +
              board.ToString());
  Require(n <= kMaxDpAgents, ErrorCode::kBudgetExceeded,
          "dynamic-program Shapley limited to " + std::to_string(kMaxDpAgents) +
              " agents");
  Require(board.quota() <= 1e7, ErrorCode::kBudgetExceeded, "quota too large for DP table");
  const int quota = static_cast<int>(board.quota());
  std::vector<std::uint64_t> swing(n, 0);
  // counts[s * quota + t]: coalitions of the other agents with s members and
  // total weight t < quota. Winning coalitions are dropped since no agent can
  // swing them.
  std::vector<std::uint64_t> counts(static_cast<std::size_t>(n) * quota);
  for (int agent = 0; agent < n; ++agent) {
    std::fill(counts.begin(), counts.end(), 0);
    counts[0] = 1;
    int members = 0;
    for (int other = 0; other < n; ++other) {
      if (other == agent) continue;
      const double w = board.weight(other);
      ++members;
      if (w >= quota) continue;
      const int wi = static_cast<int>(w);
      for (int s = members - 1; s >= 0; --s) {
        for (int t = quota - 1 - wi; t >= 0; --t) {
          counts[(s + 1) * quota + t + wi] += counts[s * quota + t];
        }
      }
    }
    const double w_agent = board.weight(agent);
    const int lo = w_agent >= quota ? 0 : quota - static_cast<int>(w_agent);
    std::uint64_t numerator = 0;
    for (int s = 0; s < n; ++s) {
      std::uint64_t coalitions = 0;
      for (int t = lo; t < quota; ++t) coalitions += counts[s * quota + t];
      numerator += coalitions * Factorial(s) * Factorial(n - 1 - s);
    }
    swing[agent] = numerator;
  }
  return FromCounts(swing, n);
}

ShapleyVector Shapley(const Board& board) {
  if (board.integral() && board.n() <= kMaxDpAgents && board.quota() <= 1e7) {
    return ShapleyDp(board);
  }
  return ShapleyPermutations(board);
}

bool AllEqualPower(const Board& board) {
  const ShapleyVector phi = Shapley(board);
  const auto [lo, hi] = std::minmax_element(phi.values.begin(), phi.values.end());
  return *hi - *lo <= kEqualPowerTolerance;
}

}  // namespace negolab
