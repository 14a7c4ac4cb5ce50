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

#ifndef NEGOLAB_STATS_H_
#define NEGOLAB_STATS_H_

#include <span>
#include <vector>

namespace negolab {

enum class MannWhitneyMode { kAuto, kExact, kNormal };

struct MannWhitneyResult {
  double u = 0.0;        // U statistic of the first sample
  double p_value = 1.0;  // two-sided
  int n_a = 0;
  int n_b = 0;
  bool exact = false;
};

// Largest pooled size for which kAuto enumerates the exact null distribution.
inline constexpr int kMannWhitneyExactLimit = 20;

// Rank-sum test with mid-ranks for ties. The exact mode enumerates every
// assignment of the pooled ranks to the first sample; the normal mode uses the
// tie-corrected variance with a 0.5 continuity correction.
MannWhitneyResult MannWhitneyU(std::span<const double> a, std::span<const double> b,
                               MannWhitneyMode mode = MannWhitneyMode::kAuto);

// 1-based ranks, ties get the average rank.
std::vector<double> AverageRanks(std::span<const double> values);

// Returns 0 when either input has zero variance.
double Pearson(std::span<const double> x, std::span<const double> y);
double Spearman(std::span<const double> x, std::span<const double> y);

double Mean(std::span<const double> x);

}  // namespace negolab

#endif  // NEGOLAB_STATS_H_
