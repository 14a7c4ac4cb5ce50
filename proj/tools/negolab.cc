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


// Command-line front end for board generation, solvers, training and the
// experiment pipelines.

#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "negolab/boards.h"
#include "negolab/coopgame.h"
#include "negolab/error.h"
#include "negolab/harness.h"
#include "negolab/learner.h"
#include "negolab/nash_solver.h"

namespace fs = std::filesystem;
using namespace negolab;

namespace {

struct Common {
  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::string out_dir = "out";
};

void AddCommon(CLI::App* cmd, Common& c, bool with_out_dir = true) {
  cmd->add_option("--config", c.config_path, "JSON config file (defaults when omitted)");
  cmd->add_option("--seed", c.seed, "Override the config seed");
  if (with_out_dir) cmd->add_option("--out-dir", c.out_dir, "Output directory");
}

ExperimentConfig Resolve(const Common& c) {
  ExperimentConfig config = c.config_path.empty() ? ParseConfig("{}") : LoadConfig(c.config_path);
  if (c.seed) config.seed = *c.seed;
  return config;
}

std::string Join(const std::vector<std::string>& argv) {
  std::string out;
  for (const auto& a : argv) out += (out.empty() ? "" : " ") + a;
  return out;
}

std::ofstream OpenOut(const std::string& path) {
  if (fs::path(path).has_parent_path()) fs::create_directories(fs::path(path).parent_path());
  std::ofstream out(path);
  Require(out.good(), ErrorCode::kIo, "cannot write '" + path + "'");
  return out;
}

// A path to a board file, or a literal "w1 ... wn ; q".
std::vector<Board> BoardsArg(const std::string& arg) {
  if (fs::exists(arg)) return LoadBoards(arg).boards;
  return {ParseBoardLine(arg, -1, 1)};
}

void PrintSummary(const std::vector<std::pair<std::string, double>>& summary) {
  for (const auto& [key, value] : summary) std::cout << key << " = " << FormatNumber(value) << "\n";
}

void Finish(const Common& c, const ExperimentConfig& config, const std::string& command,
            std::vector<std::string> outputs,
            std::vector<std::pair<std::string, double>> summary) {
  outputs.push_back("manifest.json");
  WriteManifest((fs::path(c.out_dir) / "manifest.json").string(),
                Manifest{command, config, outputs, summary});
  PrintSummary(summary);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"negolab: cooperative-game negotiation experiments"};
  app.require_subcommand(1);
  const std::string command = Join(std::vector<std::string>(argv, argv + argc));

  // gen-boards
  Common gen;
  std::optional<int> gen_train, gen_test;
  bool reduced_variance = false;
  auto* gen_cmd = app.add_subcommand("gen-boards", "Sample train/test board sets");
  AddCommon(gen_cmd, gen);
  gen_cmd->add_option("--n-train", gen_train, "Train set size");
  gen_cmd->add_option("--n-test", gen_test, "Test set size");
  gen_cmd->add_flag("--reduced-variance", reduced_variance,
                    "Keep equal-power boards (reduced-variance distribution)");

  // shapley
  std::vector<std::string> shapley_boards;
  std::string shapley_out;
  auto* shapley_cmd = app.add_subcommand("shapley", "Shapley values of boards");
  shapley_cmd->add_option("--board", shapley_boards, "Board file or \"w1 ... wn ; q\"")
      ->required();
  shapley_cmd->add_option("--out", shapley_out, "CSV output (stdout when omitted)");

  // solve-nash
  std::string nash_board, nash_out;
  int nash_reward = 20, nash_rounds = 10;
  bool nash_integer = false;
  auto* nash_cmd = app.add_subcommand("solve-nash", "Backward-induction equilibrium");
  nash_cmd->add_option("--board", nash_board, "Board file or \"w1 ... wn ; q\"")->required();
  nash_cmd->add_option("--reward", nash_reward, "Total reward r");
  nash_cmd->add_option("--rounds", nash_rounds, "Number of rounds T");
  nash_cmd->add_flag("--integer-thresholds", nash_integer, "Integer acceptance thresholds");
  nash_cmd->add_option("--out", nash_out, "CSV output (stdout when omitted)");

  // train
  Common train;
  std::string train_boards, checkpoint = "checkpoint.txt", curve_path;
  std::optional<int> bot_seat;
  std::string bot_mode = "weight";
  auto* train_cmd = app.add_subcommand("train", "Train one population");
  AddCommon(train_cmd, train, false);
  train_cmd->add_option("--boards", train_boards, "Training boards (default: generated train set)");
  train_cmd->add_option("--checkpoint", checkpoint, "Checkpoint output");
  train_cmd->add_option("--curve", curve_path, "Learning-curve CSV output");
  train_cmd->add_option("--bot-seat", bot_seat, "Seat played by a fixed bot (propose-accept)");
  train_cmd->add_option("--bot", bot_mode, "Bot mode: random|weight|shapley");

  // evaluate
  Common eval;
  std::string eval_boards, eval_checkpoint = "checkpoint.txt", eval_out;
  std::optional<int> eval_episodes;
  std::optional<int> eval_bot_seat;
  std::string eval_bot_mode = "weight";
  auto* eval_cmd = app.add_subcommand("evaluate", "Frozen evaluation of a checkpoint");
  AddCommon(eval_cmd, eval, false);
  eval_cmd->add_option("--checkpoint", eval_checkpoint, "Checkpoint to load");
  eval_cmd->add_option("--boards", eval_boards, "Evaluation boards (default: generated test set)");
  eval_cmd->add_option("--episodes", eval_episodes, "Episodes per board");
  eval_cmd->add_option("--bot-seat", eval_bot_seat, "Seat played by a fixed bot");
  eval_cmd->add_option("--bot", eval_bot_mode, "Bot mode for --bot-seat");
  eval_cmd->add_option("--out", eval_out, "CSV output (stdout when omitted)");

  // experiments
  Common corr, bots, pert, reg, nashc;
  bool corr_reduced = false, corr_aware = false;
  std::string corr_env;
  auto* corr_cmd = app.add_subcommand("correspondence", "Shapley value vs empirical share");
  AddCommon(corr_cmd, corr);
  corr_cmd->add_flag("--reduced-variance", corr_reduced, "Use the reduced-variance board set");
  corr_cmd->add_flag("--shapley-aware", corr_aware, "Give agents their Shapley values");
  corr_cmd->add_option("--env", corr_env, "propose-accept|team-patches");

  auto* bots_cmd = app.add_subcommand("compare-bots", "Learners vs a hand-crafted bot");
  AddCommon(bots_cmd, bots);
  auto* pert_cmd = app.add_subcommand("perturb", "Spatial spawn perturbation sweep");
  AddCommon(pert_cmd, pert);
  auto* reg_cmd = app.add_subcommand("regress", "Supervised Shapley regression");
  AddCommon(reg_cmd, reg);
  std::string nashc_boards;
  auto* nashc_cmd = app.add_subcommand("nash-corr", "Shapley value vs equilibrium payoff");
  AddCommon(nashc_cmd, nashc);
  nashc_cmd->add_option("--boards", nashc_boards, "Board file (default: generated set)");

  CLI11_PARSE(app, argc, argv);

  try {
    if (*gen_cmd) {
      ExperimentConfig config = Resolve(gen);
      if (gen_train) config.n_train = *gen_train;
      if (gen_test) config.n_test = *gen_test;
      if (reduced_variance) config.boards.exclude_equal_power = false;
      config.Validate();
      const auto [tr, te] = MakeBoardSets(config);
      fs::create_directories(gen.out_dir);
      SaveBoards(tr, (fs::path(gen.out_dir) / "train.txt").string());
      SaveBoards(te, (fs::path(gen.out_dir) / "test.txt").string());
      std::vector<Board> all = tr.boards;
      all.insert(all.end(), te.boards.begin(), te.boards.end());
      Finish(gen, config, command, {"train.txt", "test.txt"},
             {{"train_boards", tr.boards.size()},
              {"test_boards", te.boards.size()},
              {"weight_std", WeightStd(all)}});
    } else if (*shapley_cmd) {
      std::vector<Board> boards;
      for (const auto& b : shapley_boards) {
        const auto more = BoardsArg(b);
        boards.insert(boards.end(), more.begin(), more.end());
      }
      std::ofstream file;
      if (!shapley_out.empty()) file = OpenOut(shapley_out);
      std::ostream& out = shapley_out.empty() ? std::cout : file;
      out << "board,seat,shapley\n";
      for (std::size_t j = 0; j < boards.size(); ++j) {
        const ShapleyVector phi = Shapley(boards[j]);
        for (int i = 0; i < boards[j].n(); ++i) {
          out << j << ',' << i << ',' << FormatNumber(phi.values[i]) << '\n';
        }
      }
    } else if (*nash_cmd) {
      NashOptions options;
      options.integer_thresholds = nash_integer;
      std::ofstream file;
      if (!nash_out.empty()) file = OpenOut(nash_out);
      std::ostream& out = nash_out.empty() ? std::cout : file;
      out << "board,seat,v,u\n";
      const auto boards = BoardsArg(nash_board);
      for (std::size_t j = 0; j < boards.size(); ++j) {
        const NashSolution sol = SolveBackwardInduction(boards[j], nash_reward, nash_rounds, options);
        for (int i = 0; i < boards[j].n(); ++i) {
          out << j << ',' << i << ',' << FormatNumber(sol.expected_utilities[i]) << ','
              << FormatNumber(sol.normalized[i]) << '\n';
        }
      }
    } else if (*train_cmd) {
      const ExperimentConfig config = Resolve(train);
      const std::vector<Board> boards =
          train_boards.empty() ? MakeBoardSets(config).first.boards : BoardsArg(train_boards);
      const PopulationSpec& spec = config.population;
      std::vector<CurvePoint> curve;
      std::ofstream ckpt = OpenOut(checkpoint);
      const Rng rng(config.seed);
      if (spec.env == EnvKind::kProposeAccept) {
        std::vector<std::optional<BotParams>> seat_bots;
        if (bot_seat) {
          seat_bots.resize(boards.front().n());
          seat_bots.at(*bot_seat) = BotParams{ParseBotMode(bot_mode)};
        }
        const PaTrainResult r = TrainPa(boards, spec.propose_accept, spec.rl, seat_bots, config.seed);
        SaveCheckpoint(ckpt, r.population, rng);
        curve = r.curve;
      } else {
        const TpTrainResult r = TrainTp(boards, spec.team_patches, spec.rl, config.seed);
        SaveCheckpoint(ckpt, r.population, rng);
        curve = r.curve;
      }
      if (!curve_path.empty()) {
        std::ofstream out = OpenOut(curve_path);
        WriteLearningCurve(out, curve);
      }
      std::cout << "wrote " << checkpoint << "\n";
    } else if (*eval_cmd) {
      const ExperimentConfig config = Resolve(eval);
      const std::vector<Board> boards =
          eval_boards.empty() ? MakeBoardSets(config).second.boards : BoardsArg(eval_boards);
      const PopulationSpec& spec = config.population;
      const int episodes = eval_episodes.value_or(spec.eval_episodes);
      const int n = boards.front().n();
      std::ifstream in(eval_checkpoint);
      Require(in.good(), ErrorCode::kIo, "cannot open checkpoint '" + eval_checkpoint + "'");
      Rng rng(0);
      std::ofstream file;
      if (!eval_out.empty()) file = OpenOut(eval_out);
      std::ostream& out = eval_out.empty() ? std::cout : file;
      out << "board,seat,mean_reward,share\n";
      const double r = spec.env == EnvKind::kProposeAccept ? spec.propose_accept.total_reward
                                                           : spec.team_patches.total_reward;
      std::optional<PaPopulation> pa_pop;
      std::optional<TpPopulation> tp_pop;
      if (spec.env == EnvKind::kProposeAccept) {
        std::vector<std::optional<BotParams>> seat_bots;
        if (eval_bot_seat) {
          seat_bots.resize(n);
          seat_bots.at(*eval_bot_seat) = BotParams{ParseBotMode(eval_bot_mode)};
        }
        pa_pop = MakePaPopulation(n, spec.propose_accept, spec.rl, seat_bots, config.seed);
        LoadCheckpoint(in, *pa_pop, rng);
      } else {
        tp_pop = MakeTpPopulation(n, spec.team_patches, spec.rl, config.seed);
        LoadCheckpoint(in, *tp_pop, rng);
      }
      for (std::size_t j = 0; j < boards.size(); ++j) {
        Rng board_rng(DeriveSeed(config.seed, 0xe7a1, j));
        const EvalResult res = pa_pop ? EvaluatePa(*pa_pop, boards[j], episodes, board_rng)
                                      : EvaluateTp(*tp_pop, boards[j], episodes, board_rng);
        for (int i = 0; i < n; ++i) {
          out << j << ',' << i << ',' << FormatNumber(res.mean_rewards[i]) << ','
              << FormatNumber(res.mean_rewards[i] / r) << '\n';
        }
      }
    } else if (*corr_cmd) {
      ExperimentConfig config = Resolve(corr);
      if (corr_reduced) config.boards.exclude_equal_power = false;
      if (corr_aware) config.population.propose_accept.shapley_aware = true;
      if (!corr_env.empty()) {
        config.population.env = ParseEnvKind(corr_env);
        if (config.population.env == EnvKind::kTeamPatches) {
          config.population.rl.algorithm = Algorithm::kActorCritic;
        }
      }
      config.Validate();
      const auto [tr, te] = MakeBoardSets(config);
      const CorrespondenceResult res =
          ShapleyCorrespondence(config.population, tr.boards, te.boards, config.seed);
      fs::create_directories(corr.out_dir);
      std::ofstream out = OpenOut((fs::path(corr.out_dir) / "pairs.csv").string());
      WriteCorrespondenceCsv(out, res.pairs);
      Finish(corr, config, command, {"pairs.csv"},
             {{"pearson", res.pearson},
              {"mean_abs_deviation", res.mean_abs_deviation},
              {"mean_signed_deviation", res.mean_signed_deviation}});
    } else if (*bots_cmd) {
      const ExperimentConfig config = Resolve(bots);
      const auto [tr, te] = MakeBoardSets(config);
      const ComparisonResult res =
          BotComparison(config.population, config.bot_comparison, tr.boards, te.boards, config.seed);
      fs::create_directories(bots.out_dir);
      std::ofstream out = OpenOut((fs::path(bots.out_dir) / "samples.csv").string());
      WriteComparisonCsv(out, res);
      Finish(bots, config, command, {"samples.csv"},
             {{"rl_mean_share", res.rl_mean_share},
              {"bot_mean_share", res.bot_mean_share},
              {"difference", res.difference},
              {"u", res.test.u},
              {"p_value", res.test.p_value},
              {"n_rl", res.test.n_a},
              {"n_bot", res.test.n_b}});
    } else if (*pert_cmd) {
      ExperimentConfig config = Resolve(pert);
      config.population.env = EnvKind::kTeamPatches;
      config.population.rl.algorithm = Algorithm::kActorCritic;
      const PerturbationResult res =
          SpatialPerturbation(config.population, config.perturbation, config.seed);
      fs::create_directories(pert.out_dir);
      std::ofstream out = OpenOut((fs::path(pert.out_dir) / "perturbation.csv").string());
      WritePerturbationCsv(out, res);
      Finish(pert, config, command, {"perturbation.csv"},
             {{"agent", res.agent}, {"spearman", res.spearman}});
    } else if (*reg_cmd) {
      const ExperimentConfig config = Resolve(reg);
      const RegressionReport res = ShapleyRegression(config.boards, config.regression, config.seed);
      fs::create_directories(reg.out_dir);
      std::ofstream out = OpenOut((fs::path(reg.out_dir) / "predictions.csv").string());
      WriteRegressionCsv(out, res);
      Finish(reg, config, command, {"predictions.csv"},
             {{"train_size", res.train_size},
              {"test_size", res.test_size},
              {"train_mse", res.train_mse},
              {"test_mse", res.test_mse},
              {"test_r2", res.test_r2}});
    } else if (*nashc_cmd) {
      const ExperimentConfig config = Resolve(nashc);
      std::vector<Board> boards;
      if (nashc_boards.empty()) {
        ExperimentConfig split = config;
        split.n_test = config.nash.boards;
        boards = MakeBoardSets(split).second.boards;
      } else {
        boards = BoardsArg(nashc_boards);
      }
      const NashCorrelationResult res = NashShapleyCorrelation(boards, config.nash);
      fs::create_directories(nashc.out_dir);
      std::ofstream out = OpenOut((fs::path(nashc.out_dir) / "nash_pairs.csv").string());
      WriteNashPairsCsv(out, res.pairs);
      Finish(nashc, config, command, {"nash_pairs.csv"},
             {{"boards", boards.size()}, {"pearson", res.pearson}});
    }
  } catch (const Error& e) {
    std::cerr << "error [" << ErrorCodeName(e.code()) << "]: " << e.what() << "\n";
    return 2;
  }
  return 0;
}
