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


#ifndef NEGOLAB_HARNESS_H_
#define NEGOLAB_HARNESS_H_

// Experiment orchestration: configs, board sets, population training and
// evaluation, and the analyses that pair empirical rewards with Shapley
// values or equilibrium payoffs. Every experiment is reproducible from its
// config (which carries the seed) and writes CSVs plus a manifest.

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "negolab/boards.h"
#include "negolab/bots.h"
#include "negolab/learner.h"
#include "negolab/propose_accept.h"
#include "negolab/stats.h"
#include "negolab/team_patches.h"

namespace negolab {

enum class EnvKind { kProposeAccept, kTeamPatches };
const char* EnvKindName(EnvKind kind);
EnvKind ParseEnvKind(const std::string& name);

struct PopulationSpec {
  EnvKind env = EnvKind::kProposeAccept;
  pa::Config propose_accept;
  tp::Config team_patches;
  RLConfig rl;
  int seeds = 3;             // independent populations per setting
  int eval_episodes = 2000;  // per (population, board)
};

struct BotComparisonSpec {
  BotMode bot = BotMode::kRandom;
  // Set: train against `bot`, evaluate against this mode instead.
  std::optional<BotMode> eval_bot;
  std::vector<int> seats;  // empty = every seat
};

struct PerturbationSpec {
  std::vector<double> weights{4, 5, 6, 7, 8};
  double quota = 15;
  int max_offset = 10;
};

struct RegressionSpec {
  int boards = 3000;
  double train_fraction = 0.8;
  int hidden_size = 20;
  int hidden_layers = 2;
  nn::Activation activation = nn::Activation::kTanh;
  double learning_rate = 3e-3;
  int batch_size = 64;
  int epochs = 3000;
};

struct NashSpec {
  int reward = 20;
  int rounds = 10;
  bool integer_thresholds = false;
  int boards = 20;
};

struct ExperimentConfig {
  std::uint64_t seed = 1;
  BoardDistribution boards;
  int n_train = 150;
  int n_test = 10;
  PopulationSpec population;
  BotComparisonSpec bot_comparison;
  PerturbationSpec perturbation;
  RegressionSpec regression;
  NashSpec nash;

  void Validate() const;
};

// JSON with one object per section; unknown keys are rejected. See README.
ExperimentConfig ParseConfig(const std::string& text);
ExperimentConfig LoadConfig(const std::string& path);
std::string ConfigToJson(const ExperimentConfig& config);

// Train/test board sets for the config's distribution and seed.
std::pair<BoardSet, BoardSet> MakeBoardSets(const ExperimentConfig& config);

// ---------------------------------------------------------------------------

struct CorrespondencePair {
  int board = 0;
  int seat = 0;
  double shapley = 0;
  double share = 0;  // s_i / r
};

struct CorrespondenceResult {
  std::vector<CorrespondencePair> pairs;
  double pearson = 0;
  double mean_abs_deviation = 0;  // mean |share - shapley|, distance from identity
  double mean_signed_deviation = 0;
};

// Trains `spec.seeds` populations on `train`, evaluates each frozen on every
// test board, and pairs the averaged normalized shares with Shapley values.
CorrespondenceResult ShapleyCorrespondence(const PopulationSpec& spec,
                                           const std::vector<Board>& train,
                                           const std::vector<Board>& test,
                                           std::uint64_t seed);

struct ComparisonResult {
  double rl_mean_share = 0;
  double bot_mean_share = 0;
  double difference = 0;  // rl - bot
  MannWhitneyResult test;
  // One sample per (test board, seat, population seed): the mean share of
  // the seat's occupant in the all-learner and single-bot groups.
  std::vector<double> rl_samples;
  std::vector<double> bot_samples;
};

// Propose-Accept only. The all-learner group and, per swept seat, a group
// with the bot in that seat are trained on `train` and evaluated on `test`.
ComparisonResult BotComparison(const PopulationSpec& spec, const BotComparisonSpec& bots,
                               const std::vector<Board>& train, const std::vector<Board>& test,
                               std::uint64_t seed);

struct PerturbationRow {
  int offset = 0;
  double perturbed_share = 0;
  double unperturbed_share = 0;
};

struct PerturbationResult {
  int agent = 0;  // max-weight seat
  std::vector<PerturbationRow> rows;
  double spearman = 0;  // offset vs perturbed share
};

// Team Patches on the two-patch layout; the max-weight agent spawns
// `offset` steps from the nearest patch.
PerturbationResult SpatialPerturbation(const PopulationSpec& spec,
                                       const PerturbationSpec& perturbation,
                                       std::uint64_t seed);

struct RegressionPrediction {
  int board = 0;
  int seat = 0;
  double target = 0;
  double prediction = 0;
};

struct RegressionReport {
  int train_size = 0;
  int test_size = 0;
  double train_mse = 0;
  double test_mse = 0;
  double test_r2 = 0;
  std::vector<RegressionPrediction> test_predictions;
};

// Fits weights + quota -> Shapley vector with a small MLP on a train/test
// partition of `boards` (in order: the first train_fraction are train).
RegressionReport FitShapleyRegressor(const std::vector<Board>& boards,
                                     const RegressionSpec& spec, std::uint64_t seed);
// Draws `spec.boards` unique boards from `dist` and fits.
RegressionReport ShapleyRegression(const BoardDistribution& dist, const RegressionSpec& spec,
                                   std::uint64_t seed);

struct NashPair {
  int board = 0;
  int seat = 0;
  double shapley = 0;
  double equilibrium = 0;  // u_i
};

struct NashCorrelationResult {
  std::vector<NashPair> pairs;
  double pearson = 0;
};

NashCorrelationResult NashShapleyCorrelation(const std::vector<Board>& boards,
                                             const NashSpec& spec);

// ---------------------------------------------------------------------------
// Output files. Numbers use shortest round-trip formatting so reruns are
// byte-identical.

std::string FormatNumber(double value);
void WriteCorrespondenceCsv(std::ostream& out, const std::vector<CorrespondencePair>& pairs);
void WriteComparisonCsv(std::ostream& out, const ComparisonResult& result);
void WritePerturbationCsv(std::ostream& out, const PerturbationResult& result);
void WriteRegressionCsv(std::ostream& out, const RegressionReport& report);
void WriteNashPairsCsv(std::ostream& out, const std::vector<NashPair>& pairs);

// Manifest recording the command, config and seed of a run plus the files it
// produced and its summary statistics.
struct Manifest {
  std::string command;
  ExperimentConfig config;
  std::vector<std::string> outputs;
  std::vector<std::pair<std::string, double>> summary;
};
void WriteManifest(const std::string& path, const Manifest& manifest);

}  // namespace negolab

#endif  // NEGOLAB_HARNESS_H_
