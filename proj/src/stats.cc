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

#include "negolab/stats.h"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdint>
#include <numeric>

#include "negolab/error.h"

namespace negolab {

std::vector<double> AverageRanks(std::span<const double> values) {
  const std::size_t n = values.size();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t i, std::size_t j) { return values[i] < values[j]; });
  std::vector<double> ranks(n);
  for (std::size_t lo = 0; lo < n;) {
    std::size_t hi = lo + 1;
    while (hi < n && values[order[hi]] == values[order[lo]]) ++hi;
    const double rank = 0.5 * static_cast<double>(lo + 1 + hi);
    for (std::size_t k = lo; k < hi; ++k) ranks[order[k]] = rank;
    lo = hi;
  }
  return ranks;
}

MannWhitneyResult MannWhitneyU(std::span<const double> a, std::span<const double> b,
                               MannWhitneyMode mode) {
  Require(!a.empty() && !b.empty(), ErrorCode::kContract,
          "Mann-Whitney needs two nonempty samples");
  MannWhitneyResult res;
  res.n_a = static_cast<int>(a.size());
  res.n_b = static_cast<int>(b.size());
  const int total = res.n_a + res.n_b;
  std::vector<double> pooled(a.begin(), a.end());
  pooled.insert(pooled.end(), b.begin(), b.end());
  const std::vector<double> ranks = AverageRanks(pooled);
  const double rank_sum_a = std::accumulate(ranks.begin(), ranks.begin() + res.n_a, 0.0);
  const double na = res.n_a, nb = res.n_b;
  res.u = rank_sum_a - na * (na + 1.0) / 2.0;
  const double mean_u = na * nb / 2.0;

  res.exact = mode == MannWhitneyMode::kExact ||
              (mode == MannWhitneyMode::kAuto && total <= kMannWhitneyExactLimit);
  if (res.exact) {
    Require(total <= 30, ErrorCode::kBudgetExceeded, "exact Mann-Whitney limited to 30 values");
    // Work with doubled ranks so mid-ranks stay integral.
    std::vector<std::int64_t> twice(total);
    for (int k = 0; k < total; ++k) twice[k] = std::llround(2.0 * ranks[k]);
    const std::int64_t twice_mean = static_cast<std::int64_t>(res.n_a) * (total + 1);
    const std::int64_t observed = std::llabs(std::llround(2.0 * rank_sum_a) - twice_mean);
    std::uint64_t extreme = 0, count = 0;
    const std::uint32_t limit = total >= 32 ? ~0u : (1u << total) - 1u;
    for (std::uint32_t mask = 0;; ++mask) {
      if (std::popcount(mask) == res.n_a) {
        std::int64_t s = 0;
        for (int k = 0; k < total; ++k) {
          if ((mask >> k) & 1u) s += twice[k];
        }
        ++count;
        if (std::llabs(s - twice_mean) >= observed) ++extreme;
      }
      if (mask == limit) break;
    }
    res.p_value = static_cast<double>(extreme) / static_cast<double>(count);
    return res;
  }

  // Tie correction: sum over tie groups of (t^3 - t).
  std::vector<double> sorted = pooled;
  std::sort(sorted.begin(), sorted.end());
  double tie_term = 0.0;
  for (std::size_t lo = 0; lo < sorted.size();) {
    std::size_t hi = lo + 1;
    while (hi < sorted.size() && sorted[hi] == sorted[lo]) ++hi;
    const double t = static_cast<double>(hi - lo);
    tie_term += t * t * t - t;
    lo = hi;
  }
  const double n = total;
  const double variance = na * nb / 12.0 * ((n + 1.0) - tie_term / (n * (n - 1.0)));
  if (variance <= 0.0) {
    res.p_value = 1.0;
    return res;
  }
  const double deviation = std::max(0.0, std::abs(res.u - mean_u) - 0.5);
  const double z = deviation / std::sqrt(variance);
  res.p_value = std::min(1.0, std::erfc(z / std::sqrt(2.0)));
  return res;
}

double Mean(std::span<const double> x) {
  if (x.empty()) return 0.0;
  return std::accumulate(x.begin(), x.end(), 0.0) / static_cast<double>(x.size());
}

double Pearson(std::span<const double> x, std::span<const double> y) {
  Require(x.size() == y.size(), ErrorCode::kContract, "Pearson needs equal lengths");
  Require(x.size() >= 2, ErrorCode::kContract, "Pearson needs at least two points");
  const double mx = Mean(x), my = Mean(y);
  double sxy = 0.0, sxx = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double dx = x[i] - mx, dy = y[i] - my;
    sxy += dx * dy;
    sxx += dx * dx;
    syy += dy * dy;
  }
  if (sxx <= 0.0 || syy <= 0.0) return 0.0;
  return sxy / std::sqrt(sxx * syy);
}

double Spearman(std::span<const double> x, std::span<const double> y) {
  Require(x.size() == y.size(), ErrorCode::kContract, "Spearman needs equal lengths");
  const std::vector<double> rx = AverageRanks(x), ry = AverageRanks(y);
  return Pearson(rx, ry);
}

}  // namespace negolab
