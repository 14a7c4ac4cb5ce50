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

#include <charconv>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#include "negolab/error.h"

namespace negolab {

void BoardDistribution::Validate() const {
  Require(n >= 2, ErrorCode::kConfig, "board distribution needs n >= 2");
  Require(weight_std > 0.0, ErrorCode::kConfig, "weight std must be positive");
  Require(quota > 0.0, ErrorCode::kConfig, "quota must be positive");
}

Board SampleBoard(const BoardDistribution& dist, Rng& rng) {
  dist.Validate();
  std::vector<double> weights(dist.n);
  for (int attempt = 0; attempt < kMaxConsecutiveRejections; ++attempt) {
    double total = 0.0;
    for (double& w : weights) {
      double x = rng.Normal(dist.weight_mean, dist.weight_std);
      if (dist.integer_weights) x = std::round(x);
      w = std::max(1.0, x);
      total += w;
    }
    if (total < dist.quota) continue;
    Board board(weights, dist.quota);
    if (dist.exclude_equal_power && AllEqualPower(board)) continue;
    return board;
  }
  Fail(ErrorCode::kDistributionInfeasible,
       std::to_string(kMaxConsecutiveRejections) + " consecutive rejections");
}

std::vector<Board> SampleUniqueBoards(const BoardDistribution& dist, Rng& rng,
                                      int count) {
  std::vector<Board> out;
  std::set<Board> seen;
  int duplicates = 0;
  while (static_cast<int>(out.size()) < count) {
    Board board = SampleBoard(dist, rng);
    if (seen.insert(board).second) {
      out.push_back(std::move(board));
      duplicates = 0;
    } else if (++duplicates >= kMaxConsecutiveRejections) {
      Fail(ErrorCode::kDistributionInfeasible,
           "could not find " + std::to_string(count) + " unique boards");
    }
  }
  return out;
}

std::pair<BoardSet, BoardSet> GenerateSplit(const BoardDistribution& dist,
                                            std::uint64_t seed, int n_train,
                                            int n_test) {
  Require(n_train >= 1 && n_test >= 1, ErrorCode::kPrecondition,
          "train and test sizes must be >= 1");
  Rng rng(seed);
  std::vector<Board> all = SampleUniqueBoards(dist, rng, n_train + n_test);
  BoardSet train{{all.begin(), all.begin() + n_train}, "train", seed};
  BoardSet test{{all.begin() + n_train, all.end()}, "test", seed};
  return {std::move(train), std::move(test)};
}

double WeightStd(const std::vector<Board>& boards) {
  double sum = 0.0, sum_sq = 0.0;
  long count = 0;
  for (const Board& b : boards) {
    for (double w : b.weights()) {
      sum += w;
      sum_sq += w * w;
      ++count;
    }
  }
  if (count == 0) return 0.0;
  const double mean = sum / count;
  return std::sqrt(std::max(0.0, sum_sq / count - mean * mean));
}

namespace {

std::string FormatNumber(double x) {
  char buf[64];
  auto [end, ec] = std::to_chars(buf, buf + sizeof(buf), x);
  return std::string(buf, end);
}

double ParseNumber(const std::string& token, int line_number) {
  double value = 0.0;
  auto [ptr, ec] = std::from_chars(token.data(), token.data() + token.size(), value);
  Require(ec == std::errc() && ptr == token.data() + token.size(), ErrorCode::kParse,
          "line " + std::to_string(line_number) + ": bad number '" + token + "'");
  return value;
}

}  // namespace

std::string FormatBoardLine(const Board& board) {
  std::string out;
  for (int i = 0; i < board.n(); ++i) {
    if (i > 0) out += ' ';
    out += FormatNumber(board.weight(i));
  }
  out += " ; ";
  out += FormatNumber(board.quota());
  return out;
}

Board ParseBoardLine(const std::string& line, int expected_n, int line_number) {
  const auto where = "line " + std::to_string(line_number) + ": ";
  const auto semi = line.find(';');
  Require(semi != std::string::npos, ErrorCode::kParse, where + "missing ';'");
  Require(line.find(';', semi + 1) == std::string::npos, ErrorCode::kParse,
          where + "more than one ';'");
  std::istringstream lhs(line.substr(0, semi));
  std::vector<double> weights;
  std::string token;
  while (lhs >> token) weights.push_back(ParseNumber(token, line_number));
  std::istringstream rhs(line.substr(semi + 1));
  Require(static_cast<bool>(rhs >> token), ErrorCode::kParse, where + "missing quota");
  const double quota = ParseNumber(token, line_number);
  Require(!(rhs >> token), ErrorCode::kParse, where + "trailing tokens after quota");
  Require(!weights.empty(), ErrorCode::kParse, where + "no weights");
  Require(expected_n < 0 || static_cast<int>(weights.size()) == expected_n,
          ErrorCode::kParse,
          where + "expected " + std::to_string(expected_n) + " weights, got " +
              std::to_string(weights.size()));
  try {
    return Board(std::move(weights), quota);
  } catch (const Error& e) {
    Fail(ErrorCode::kParse, where + e.what());
  }
}

void SaveBoards(const BoardSet& set, const std::string& path) {
  std::ofstream out(path);
  Require(static_cast<bool>(out), ErrorCode::kIo, "cannot write " + path);
  out << "# seed=" << set.seed << '\n';
  out << "# label=" << set.label << '\n';
  if (!set.boards.empty()) out << "# n=" << set.boards.front().n() << '\n';
  for (const Board& b : set.boards) out << FormatBoardLine(b) << '\n';
  Require(static_cast<bool>(out), ErrorCode::kIo, "write failed for " + path);
}

BoardSet LoadBoards(const std::string& path) {
  std::ifstream in(path);
  Require(static_cast<bool>(in), ErrorCode::kIo, "cannot read " + path);
  BoardSet set;
  int expected_n = -1;
  std::string line;
  int line_number = 0;
  while (std::getline(in, line)) {
    ++line_number;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.find_first_not_of(" \t") == std::string::npos) continue;
    if (line[0] == '#') {
      const auto eq = line.find('=');
      if (eq == std::string::npos) continue;
      std::string key = line.substr(1, eq - 1);
      key.erase(0, key.find_first_not_of(' '));
      const std::string value = line.substr(eq + 1);
      if (key == "seed") {
        auto [p, ec] = std::from_chars(value.data(), value.data() + value.size(), set.seed);
        Require(ec == std::errc(), ErrorCode::kParse,
                "line " + std::to_string(line_number) + ": bad seed");
      } else if (key == "label") {
        set.label = value;
      } else if (key == "n") {
        expected_n = static_cast<int>(ParseNumber(value, line_number));
      }
      continue;
    }
    set.boards.push_back(ParseBoardLine(line, expected_n, line_number));
  }
  return set;
}

}  // namespace negolab
