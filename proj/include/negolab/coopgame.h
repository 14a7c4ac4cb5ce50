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

#ifndef NEGOLAB_COOPGAME_H_
#define NEGOLAB_COOPGAME_H_

// Weighted voting games: characteristic function, pivotality and exact
// Shapley values.

#include <compare>
#include <cstdint>
#include <initializer_list>
#include <span>
#include <string>
#include <vector>

namespace negolab {

inline constexpr int kMaxAgents = 30;

// A set of agent indices stored as a bitmask. Range checks against a board's
// agent count happen where the coalition meets the board.
class Coalition {
 public:
  constexpr Coalition() = default;
  constexpr explicit Coalition(std::uint32_t mask) : mask_(mask) {}

  // Throws kInvalidCoalition on duplicate or negative/too-large indices.
  static Coalition FromMembers(std::span<const int> members);
  static Coalition FromMembers(std::initializer_list<int> members) {
    return FromMembers(std::span<const int>(members.begin(), members.size()));
  }
  static constexpr Coalition Grand(int n) {
    return Coalition(n >= 32 ? ~0u : ((1u << n) - 1u));
  }

  constexpr bool Contains(int agent) const {
    return agent >= 0 && agent < 32 && ((mask_ >> agent) & 1u) != 0;
  }
  constexpr Coalition With(int agent) const { return Coalition(mask_ | (1u << agent)); }
  constexpr Coalition Without(int agent) const { return Coalition(mask_ & ~(1u << agent)); }
  int Size() const;
  constexpr bool Empty() const { return mask_ == 0; }
  constexpr std::uint32_t mask() const { return mask_; }
  std::vector<int> Members() const;
  std::string ToString() const;  // "{0,2}"

  constexpr auto operator<=>(const Coalition&) const = default;

 private:
  std::uint32_t mask_ = 0;
};

// Weighted voting game [w_1..w_n; q]. Invariants (checked on construction):
// 1 <= n <= kMaxAgents, every w_i >= 0 and finite, q > 0, q <= sum(w).
//
// Weights given as short decimals (0.4, 0.2, ...) are compared through an
// exact integer rescaling, so v(C) uses an exact ">=" with no epsilon.
class Board {
 public:
  Board(std::vector<double> weights, double quota);

  int n() const { return static_cast<int>(weights_.size()); }
  const std::vector<double>& weights() const { return weights_; }
  double weight(int agent) const { return weights_[agent]; }
  double quota() const { return quota_; }
  double TotalWeight() const;

  // True iff every weight and the quota are whole numbers.
  bool integral() const { return integral_; }

  double CoalitionWeight(Coalition coalition) const;
  // Exact comparison sum_{i in C} w_i >= q. Does not range-check.
  bool Wins(Coalition coalition) const;

  // Throws kInvalidCoalition if any member is >= n.
  void CheckCoalition(Coalition coalition) const;

  std::string ToString() const;  // "[5 6 7 5 4; 15]"

  bool operator==(const Board& other) const {
    return weights_ == other.weights_ && quota_ == other.quota_;
  }
  auto operator<=>(const Board& other) const {
    if (auto c = weights_ <=> other.weights_; c != 0) return c;
    return quota_ <=> other.quota_;
  }

 private:
  std::vector<double> weights_;
  double quota_;
  bool integral_ = false;
  // Present when all values are decimals with at most six fractional digits.
  bool scaled_ = false;
  std::vector<std::int64_t> scaled_weights_;
  std::int64_t scaled_quota_ = 0;
};

struct ShapleyVector {
  std::vector<double> values;

  int size() const { return static_cast<int>(values.size()); }
  double operator[](int i) const { return values[i]; }
  double Sum() const;
};

// v(C) in {0, 1}.
int Value(const Board& board, Coalition coalition);

// True iff v(C) = 1 and v(C \ {agent}) = 0. Requires agent in C.
bool IsPivotal(const Board& board, Coalition coalition, int agent);

inline constexpr int kMaxPermutationAgents = 10;
inline constexpr int kMaxDpAgents = 20;

// Exact Shapley value by enumerating all n! orderings; n <= 10.
ShapleyVector ShapleyPermutations(const Board& board);

// Exact Shapley value by counting, per agent, coalitions of the others by
// (size, weight) and weighting swing coalitions by s!(n-1-s)!/n!.
// Requires integer weights and quota; n <= 20.
ShapleyVector ShapleyDp(const Board& board);

// Dispatches to the dynamic program on integer boards, otherwise enumerates.
ShapleyVector Shapley(const Board& board);

inline constexpr double kEqualPowerTolerance = 1e-9;

// max_i phi_i - min_i phi_i <= 1e-9.
bool AllEqualPower(const Board& board);

}  // namespace negolab

#endif  // NEGOLAB_COOPGAME_H_
