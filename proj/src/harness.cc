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


#include "negolab/harness.h"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <numeric>
#include <ostream>
#include <set>
#include <sstream>

#include "json.hpp"
#include "negolab/error.h"
#include "negolab/nash_solver.h"

namespace negolab {

using json = nlohmann::ordered_json;

const char* EnvKindName(EnvKind kind) {
  return kind == EnvKind::kProposeAccept ? "propose-accept" : "team-patches";
}

EnvKind ParseEnvKind(const std::string& name) {
  if (name == "propose-accept") return EnvKind::kProposeAccept;
  if (name == "team-patches") return EnvKind::kTeamPatches;
  Fail(ErrorCode::kConfig, "unknown environment '" + name + "'");
}

void ExperimentConfig::Validate() const {
  boards.Validate();
  Require(n_train >= 1 && n_test >= 1, ErrorCode::kConfig, "n_train and n_test must be >= 1");
  population.propose_accept.Validate();
  population.team_patches.Validate(boards.n);
  population.rl.Validate();
  Require(population.seeds >= 1 && population.eval_episodes >= 1, ErrorCode::kConfig,
          "population seeds and eval episodes must be >= 1");
  for (int s : bot_comparison.seats) {
    Require(s >= 0 && s < boards.n, ErrorCode::kConfig, "bot seat out of range");
  }
  Require(static_cast<int>(perturbation.weights.size()) == boards.n, ErrorCode::kConfig,
          "perturbation board must have n weights");
  Require(perturbation.max_offset >= 0, ErrorCode::kConfig, "max_offset must be >= 0");
  Require(regression.boards >= 2 && regression.train_fraction > 0 &&
              regression.train_fraction < 1 && regression.hidden_size > 0 &&
              regression.hidden_layers >= 1 && regression.learning_rate > 0 &&
              regression.batch_size >= 1 && regression.epochs >= 0,
          ErrorCode::kConfig, "invalid regression settings");
  Require(nash.reward >= 1 && nash.rounds >= 1 && nash.boards >= 1, ErrorCode::kConfig,
          "invalid nash settings");
}

// ---------------------------------------------------------------------------
// Config parsing.

namespace {

// Reads known keys from one JSON object and rejects the rest.
class Section {
 public:
  Section(const json& root, const std::string& name) : name_(name) {
    if (!root.contains(name)) return;
    obj_ = &root.at(name);
    Require(obj_->is_object(), ErrorCode::kConfig, "section '" + name + "' must be an object");
  }

  template <typename T>
  void Read(const std::string& key, T& field) {
    used_.insert(key);
    if (obj_ == nullptr || !obj_->contains(key)) return;
    try {
      field = obj_->at(key).get<T>();
    } catch (const json::exception& e) {
      Fail(ErrorCode::kConfig, name_ + "." + key + ": " + e.what());
    }
  }

  template <typename T>
  void ReadOptional(const std::string& key, std::optional<T>& field) {
    used_.insert(key);
    if (obj_ == nullptr || !obj_->contains(key)) return;
    if (obj_->at(key).is_null()) {
      field.reset();
      return;
    }
    T value{};
    Read(key, value);
    field = value;
  }

  // Enumerations given as strings.
  template <typename T, typename Parse>
  void ReadEnum(const std::string& key, T& field, Parse parse) {
    std::optional<std::string> text;
    ReadOptional(key, text);
    if (text) field = parse(*text);
  }

  void Finish() const {
    if (obj_ == nullptr) return;
    for (const auto& [key, value] : obj_->items()) {
      Require(used_.count(key) > 0, ErrorCode::kConfig,
              "unknown key '" + name_ + "." + key + "'");
    }
  }

 private:
  std::string name_;
  const json* obj_ = nullptr;
  std::set<std::string> used_;
};

nn::OptimizerKind ParseOptimizer(const std::string& s) {
  if (s == "adam") return nn::OptimizerKind::kAdam;
  if (s == "sgd") return nn::OptimizerKind::kSgd;
  Fail(ErrorCode::kConfig, "unknown optimizer '" + s + "'");
}

Algorithm ParseAlgorithm(const std::string& s) {
  if (s == "sarsa") return Algorithm::kSarsa;
  if (s == "actor-critic") return Algorithm::kActorCritic;
  Fail(ErrorCode::kConfig, "unknown algorithm '" + s + "'");
}

nn::Activation ParseActivation(const std::string& s) {
  if (s == "relu") return nn::Activation::kRelu;
  if (s == "tanh") return nn::Activation::kTanh;
  Fail(ErrorCode::kConfig, "unknown activation '" + s + "'");
}

std::vector<tp::Patch> ParseLayout(const std::string& s) {
  if (s == "three") return tp::DefaultPatches();
  if (s == "two") return tp::TwoPatches();
  Fail(ErrorCode::kConfig, "unknown patch layout '" + s + "' (three|two)");
}

std::string LayoutName(const std::vector<tp::Patch>& patches) {
  return patches.size() == 2 ? "two" : "three";
}

}  // namespace

ExperimentConfig ParseConfig(const std::string& text) {
  json root;
  try {
    root = json::parse(text);
  } catch (const json::exception& e) {
    Fail(ErrorCode::kParse, std::string("config is not valid JSON: ") + e.what());
  }
  Require(root.is_object(), ErrorCode::kConfig, "config must be a JSON object");
  static const std::set<std::string> kSections{
      "seed", "boards", "population", "propose_accept", "team_patches", "rl",
      "bot_comparison", "perturbation", "regression", "nash"};
  for (const auto& [key, value] : root.items()) {
    Require(kSections.count(key) > 0, ErrorCode::kConfig, "unknown section '" + key + "'");
  }
  ExperimentConfig c;
  if (root.contains("seed")) c.seed = root.at("seed").get<std::uint64_t>();

  Section boards(root, "boards");
  boards.Read("n", c.boards.n);
  boards.Read("quota", c.boards.quota);
  boards.Read("weight_mean", c.boards.weight_mean);
  boards.Read("weight_std", c.boards.weight_std);
  boards.Read("exclude_equal_power", c.boards.exclude_equal_power);
  boards.Read("integer_weights", c.boards.integer_weights);
  boards.Read("n_train", c.n_train);
  boards.Read("n_test", c.n_test);
  boards.Finish();

  Section pop(root, "population");
  pop.ReadEnum("env", c.population.env, ParseEnvKind);
  pop.Read("seeds", c.population.seeds);
  pop.Read("eval_episodes", c.population.eval_episodes);
  pop.Finish();

  pa::Config& pac = c.population.propose_accept;
  Section pas(root, "propose_accept");
  pas.Read("total_reward", pac.total_reward);
  pas.Read("continue_prob", pac.continue_prob);
  pas.Read("shapley_aware", pac.shapley_aware);
  pas.ReadOptional("max_rounds", pac.max_rounds);
  pas.Finish();

  tp::Config& tpc = c.population.team_patches;
  Section tps(root, "team_patches");
  tps.ReadEnum("layout", tpc.patches, ParseLayout);
  tps.Read("total_reward", tpc.total_reward);
  tps.Read("max_steps", tpc.max_steps);
  std::vector<int> center{tpc.spawn_center.row, tpc.spawn_center.col};
  tps.Read("spawn_center", center);
  Require(center.size() == 2, ErrorCode::kConfig, "team_patches.spawn_center must be [row, col]");
  tpc.spawn_center = {center[0], center[1]};
  tps.Read("spawn_radius", tpc.spawn_radius);
  tps.Read("view_size", tpc.view_size);
  tps.Finish();

  RLConfig& rl = c.population.rl;
  Section rls(root, "rl");
  rls.ReadEnum("algorithm", rl.algorithm, ParseAlgorithm);
  rls.Read("lambda", rl.lambda);
  rls.Read("gamma", rl.gamma);
  rls.Read("learning_rate", rl.learning_rate);
  rls.ReadEnum("optimizer", rl.optimizer, ParseOptimizer);
  rls.Read("adam_beta1", rl.adam_beta1);
  rls.Read("adam_beta2", rl.adam_beta2);
  rls.Read("adam_epsilon", rl.adam_epsilon);
  rls.Read("epsilon_start", rl.epsilon_start);
  rls.Read("epsilon_end", rl.epsilon_end);
  rls.Read("epsilon_decay_fraction", rl.epsilon_decay_fraction);
  rls.Read("hidden_layers", rl.hidden_layers);
  rls.Read("hidden_size", rl.hidden_size);
  rls.Read("q_init", rl.q_init);
  rls.Read("n_parallel_envs", rl.n_parallel_envs);
  rls.Read("unroll_length", rl.unroll_length);
  rls.Read("entropy_cost", rl.entropy_cost);
  rls.Read("value_cost", rl.value_cost);
  rls.Read("rho_bar", rl.rho_bar);
  rls.Read("c_bar", rl.c_bar);
  rls.Read("conv_channels", rl.conv_channels);
  rls.Read("conv_kernel", rl.conv_kernel);
  rls.Read("conv_stride", rl.conv_stride);
  rls.Read("ac_hidden_size", rl.ac_hidden_size);
  rls.Read("greedy_eval", rl.greedy_eval);
  rls.Read("episodes", rl.episodes);
  rls.Read("curve_window", rl.curve_window);
  rls.Finish();

  Section bots(root, "bot_comparison");
  bots.ReadEnum("bot", c.bot_comparison.bot, ParseBotMode);
  std::optional<std::string> eval_bot;
  bots.ReadOptional("eval_bot", eval_bot);
  if (eval_bot) c.bot_comparison.eval_bot = ParseBotMode(*eval_bot);
  bots.Read("seats", c.bot_comparison.seats);
  bots.Finish();

  Section pert(root, "perturbation");
  pert.Read("weights", c.perturbation.weights);
  pert.Read("quota", c.perturbation.quota);
  pert.Read("max_offset", c.perturbation.max_offset);
  pert.Finish();

  Section reg(root, "regression");
  reg.Read("boards", c.regression.boards);
  reg.Read("train_fraction", c.regression.train_fraction);
  reg.Read("hidden_size", c.regression.hidden_size);
  reg.Read("hidden_layers", c.regression.hidden_layers);
  reg.ReadEnum("activation", c.regression.activation, ParseActivation);
  reg.Read("learning_rate", c.regression.learning_rate);
  reg.Read("batch_size", c.regression.batch_size);
  reg.Read("epochs", c.regression.epochs);
  reg.Finish();

  Section nash(root, "nash");
  nash.Read("reward", c.nash.reward);
  nash.Read("rounds", c.nash.rounds);
  nash.Read("integer_thresholds", c.nash.integer_thresholds);
  nash.Read("boards", c.nash.boards);
  nash.Finish();

  c.Validate();
  return c;
}

ExperimentConfig LoadConfig(const std::string& path) {
  std::ifstream in(path);
  Require(in.good(), ErrorCode::kIo, "cannot open config '" + path + "'");
  std::stringstream buf;
  buf << in.rdbuf();
  return ParseConfig(buf.str());
}

namespace {

json ConfigJson(const ExperimentConfig& c) {
  const RLConfig& rl = c.population.rl;
  const pa::Config& pac = c.population.propose_accept;
  const tp::Config& tpc = c.population.team_patches;
  json j;
  j["seed"] = c.seed;
  j["boards"] = {{"n", c.boards.n},
                 {"quota", c.boards.quota},
                 {"weight_mean", c.boards.weight_mean},
                 {"weight_std", c.boards.weight_std},
                 {"exclude_equal_power", c.boards.exclude_equal_power},
                 {"integer_weights", c.boards.integer_weights},
                 {"n_train", c.n_train},
                 {"n_test", c.n_test}};
  j["population"] = {{"env", EnvKindName(c.population.env)},
                     {"seeds", c.population.seeds},
                     {"eval_episodes", c.population.eval_episodes}};
  j["propose_accept"] = {{"total_reward", pac.total_reward},
                         {"continue_prob", pac.continue_prob},
                         {"shapley_aware", pac.shapley_aware},
                         {"max_rounds", pac.max_rounds ? json(*pac.max_rounds) : json(nullptr)}};
  j["team_patches"] = {{"layout", LayoutName(tpc.patches)},
                       {"total_reward", tpc.total_reward},
                       {"max_steps", tpc.max_steps},
                       {"spawn_center", json::array({tpc.spawn_center.row, tpc.spawn_center.col})},
                       {"spawn_radius", tpc.spawn_radius},
                       {"view_size", tpc.view_size}};
  j["rl"] = {{"algorithm", AlgorithmName(rl.algorithm)},
             {"lambda", rl.lambda},
             {"gamma", rl.gamma},
             {"learning_rate", rl.learning_rate},
             {"optimizer", rl.optimizer == nn::OptimizerKind::kAdam ? "adam" : "sgd"},
             {"adam_beta1", rl.adam_beta1},
             {"adam_beta2", rl.adam_beta2},
             {"adam_epsilon", rl.adam_epsilon},
             {"epsilon_start", rl.epsilon_start},
             {"epsilon_end", rl.epsilon_end},
             {"epsilon_decay_fraction", rl.epsilon_decay_fraction},
             {"hidden_layers", rl.hidden_layers},
             {"hidden_size", rl.hidden_size},
             {"q_init", rl.q_init},
             {"n_parallel_envs", rl.n_parallel_envs},
             {"unroll_length", rl.unroll_length},
             {"entropy_cost", rl.entropy_cost},
             {"value_cost", rl.value_cost},
             {"rho_bar", rl.rho_bar},
             {"c_bar", rl.c_bar},
             {"conv_channels", rl.conv_channels},
             {"conv_kernel", rl.conv_kernel},
             {"conv_stride", rl.conv_stride},
             {"ac_hidden_size", rl.ac_hidden_size},
             {"greedy_eval", rl.greedy_eval},
             {"episodes", rl.episodes},
             {"curve_window", rl.curve_window}};
  j["bot_comparison"] = {
      {"bot", BotModeName(c.bot_comparison.bot)},
      {"eval_bot",
       c.bot_comparison.eval_bot ? json(BotModeName(*c.bot_comparison.eval_bot)) : json(nullptr)},
      {"seats", c.bot_comparison.seats}};
  j["perturbation"] = {{"weights", c.perturbation.weights},
                       {"quota", c.perturbation.quota},
                       {"max_offset", c.perturbation.max_offset}};
  j["regression"] = {
      {"boards", c.regression.boards},
      {"train_fraction", c.regression.train_fraction},
      {"hidden_size", c.regression.hidden_size},
      {"hidden_layers", c.regression.hidden_layers},
      {"activation", c.regression.activation == nn::Activation::kTanh ? "tanh" : "relu"},
      {"learning_rate", c.regression.learning_rate},
      {"batch_size", c.regression.batch_size},
      {"epochs", c.regression.epochs}};
  j["nash"] = {{"reward", c.nash.reward},
               {"rounds", c.nash.rounds},
               {"integer_thresholds", c.nash.integer_thresholds},
               {"boards", c.nash.boards}};
  return j;
}

}  // namespace

std::string ConfigToJson(const ExperimentConfig& config) { return ConfigJson(config).dump(2); }

std::pair<BoardSet, BoardSet> MakeBoardSets(const ExperimentConfig& config) {
  return GenerateSplit(config.boards, config.seed, config.n_train, config.n_test);
}

// ---------------------------------------------------------------------------
// Experiments.

namespace {

int RewardOf(const PopulationSpec& spec) {
  return spec.env == EnvKind::kProposeAccept ? spec.propose_accept.total_reward
                                             : spec.team_patches.total_reward;
}

// Mean per-seat rewards of one trained population on each test board.
std::vector<std::vector<double>> EvaluateOnBoards(const PaPopulation* pa_pop,
                                                  const TpPopulation* tp_pop,
                                                  const std::vector<Board>& test,
                                                  int episodes, std::uint64_t seed) {
  std::vector<std::vector<double>> out;
  for (std::size_t j = 0; j < test.size(); ++j) {
    Rng rng(DeriveSeed(seed, 0xe7a1, j));
    out.push_back(pa_pop != nullptr ? EvaluatePa(*pa_pop, test[j], episodes, rng).mean_rewards
                                    : EvaluateTp(*tp_pop, test[j], episodes, rng).mean_rewards);
  }
  return out;
}

std::vector<std::vector<double>> TrainAndEvaluate(
    const PopulationSpec& spec, const std::vector<Board>& train, const std::vector<Board>& test,
    const std::vector<std::optional<BotParams>>& bots, std::optional<BotMode> eval_bot,
    std::uint64_t seed) {
  if (spec.env == EnvKind::kProposeAccept) {
    PaTrainResult trained = TrainPa(train, spec.propose_accept, spec.rl, bots, seed);
    if (eval_bot) {
      for (PaSeat& seat : trained.population.seats) {
        if (seat.bot) seat.bot->mode = *eval_bot;
      }
    }
    return EvaluateOnBoards(&trained.population, nullptr, test, spec.eval_episodes, seed);
  }
  Require(bots.empty(), ErrorCode::kConfig, "bots exist only in propose-accept");
  const TpTrainResult trained = TrainTp(train, spec.team_patches, spec.rl, seed);
  return EvaluateOnBoards(nullptr, &trained.population, test, spec.eval_episodes, seed);
}

}  // namespace

CorrespondenceResult ShapleyCorrespondence(const PopulationSpec& spec,
                                           const std::vector<Board>& train,
                                           const std::vector<Board>& test,
                                           std::uint64_t seed) {
  Require(!test.empty(), ErrorCode::kPrecondition, "no test boards");
  const int n = test.front().n();
  std::vector<std::vector<double>> sums(test.size(), std::vector<double>(n, 0.0));
  for (int k = 0; k < spec.seeds; ++k) {
    const auto means = TrainAndEvaluate(spec, train, test, {}, std::nullopt,
                                        DeriveSeed(seed, 0xc044, k));
    for (std::size_t j = 0; j < test.size(); ++j) {
      for (int i = 0; i < n; ++i) sums[j][i] += means[j][i];
    }
  }
  const double r = RewardOf(spec);
  CorrespondenceResult out;
  std::vector<double> xs, ys;
  for (std::size_t j = 0; j < test.size(); ++j) {
    const ShapleyVector phi = Shapley(test[j]);
    for (int i = 0; i < n; ++i) {
      const double share = sums[j][i] / spec.seeds / r;
      out.pairs.push_back({static_cast<int>(j), i, phi.values[i], share});
      xs.push_back(phi.values[i]);
      ys.push_back(share);
      out.mean_abs_deviation += std::abs(share - phi.values[i]);
      out.mean_signed_deviation += share - phi.values[i];
    }
  }
  out.pearson = Pearson(xs, ys);
  out.mean_abs_deviation /= xs.size();
  out.mean_signed_deviation /= xs.size();
  return out;
}

ComparisonResult BotComparison(const PopulationSpec& spec, const BotComparisonSpec& bots,
                               const std::vector<Board>& train, const std::vector<Board>& test,
                               std::uint64_t seed) {
  Require(spec.env == EnvKind::kProposeAccept, ErrorCode::kConfig,
          "bot comparison runs on propose-accept");
  Require(!test.empty(), ErrorCode::kPrecondition, "no test boards");
  const int n = test.front().n();
  std::vector<int> seats = bots.seats;
  if (seats.empty()) {
    seats.resize(n);
    std::iota(seats.begin(), seats.end(), 0);
  }
  const double r = RewardOf(spec);
  ComparisonResult out;
  for (int k = 0; k < spec.seeds; ++k) {
    const std::uint64_t s = DeriveSeed(seed, 0xb07, k);
    const auto all_rl = TrainAndEvaluate(spec, train, test, {}, std::nullopt, s);
    for (int seat : seats) {
      std::vector<std::optional<BotParams>> seat_bots(n);
      seat_bots[seat] = BotParams{bots.bot};
      const auto mixed = TrainAndEvaluate(spec, train, test, seat_bots, bots.eval_bot,
                                          DeriveSeed(s, 0x5ea7, seat));
      for (std::size_t j = 0; j < test.size(); ++j) {
        out.rl_samples.push_back(all_rl[j][seat] / r);
        out.bot_samples.push_back(mixed[j][seat] / r);
      }
    }
  }
  out.rl_mean_share = Mean(out.rl_samples);
  out.bot_mean_share = Mean(out.bot_samples);
  out.difference = out.rl_mean_share - out.bot_mean_share;
  out.test = MannWhitneyU(out.rl_samples, out.bot_samples);
  return out;
}

PerturbationResult SpatialPerturbation(const PopulationSpec& spec,
                                       const PerturbationSpec& perturbation,
                                       std::uint64_t seed) {
  const Board board(perturbation.weights, perturbation.quota);
  const std::vector<Board> boards{board};
  PerturbationResult out;
  out.agent = static_cast<int>(std::max_element(perturbation.weights.begin(),
                                                perturbation.weights.end()) -
                               perturbation.weights.begin());
  PopulationSpec base = spec;
  base.env = EnvKind::kTeamPatches;
  base.rl.algorithm = Algorithm::kActorCritic;
  base.team_patches.patches = tp::TwoPatches();
  base.team_patches.spawn_overrides.clear();
  const double r = base.team_patches.total_reward;

  auto mean_share = [&](const PopulationSpec& s, std::uint64_t tag) {
    double total = 0;
    for (int k = 0; k < s.seeds; ++k) {
      const auto means =
          TrainAndEvaluate(s, boards, boards, {}, std::nullopt, DeriveSeed(seed, tag, k));
      total += means[0][out.agent];
    }
    return total / s.seeds / r;
  };

  const double unperturbed = mean_share(base, 0x0ff);
  std::vector<double> offsets, shares;
  for (int offset = 0; offset <= perturbation.max_offset; ++offset) {
    PopulationSpec s = base;
    s.team_patches.spawn_overrides = {{out.agent, tp::CellAtPatchDistance(s.team_patches, offset)}};
    s.team_patches.allow_spawn_in_patch = offset == 0;
    const double share = mean_share(s, 0x100 + offset);
    out.rows.push_back({offset, share, unperturbed});
    offsets.push_back(offset);
    shares.push_back(share);
  }
  out.spearman = Spearman(offsets, shares);
  return out;
}

RegressionReport FitShapleyRegressor(const std::vector<Board>& boards,
                                     const RegressionSpec& spec, std::uint64_t seed) {
  Require(boards.size() >= 2, ErrorCode::kPrecondition, "need at least two boards");
  const int n = boards.front().n();
  const int total = static_cast<int>(boards.size());
  const int n_train =
      std::clamp(static_cast<int>(std::lround(spec.train_fraction * total)), 1, total - 1);
  const int inputs = n + 1;

  nn::Mat<double> x(inputs, total), y(n, total);
  for (int b = 0; b < total; ++b) {
    Require(boards[b].n() == n, ErrorCode::kPrecondition, "boards differ in size");
    for (int i = 0; i < n; ++i) x(i, b) = boards[b].weights()[i];
    x(n, b) = boards[b].quota();
    const ShapleyVector phi = Shapley(boards[b]);
    for (int i = 0; i < n; ++i) y(i, b) = phi.values[i];
  }
  // Standardize inputs with train-set statistics.
  for (int f = 0; f < inputs; ++f) {
    const auto row = x.row(f).head(n_train);
    const double mean = row.mean();
    const double sd = std::sqrt((row.array() - mean).square().mean());
    x.row(f) = (x.row(f).array() - mean) / (sd > 0 ? sd : 1.0);
  }

  std::vector<int> sizes{inputs};
  for (int l = 0; l < spec.hidden_layers; ++l) sizes.push_back(spec.hidden_size);
  sizes.push_back(n);
  const nn::MlpLayout layout(sizes, spec.activation);
  Rng rng(seed);
  nn::Vec<double> params(layout.num_params());
  layout.Initialize<double>(params.data(), rng);
  nn::Optimizer<double> adam(nn::OptimizerKind::kAdam, layout.num_params(), spec.learning_rate);

  std::vector<int> order(n_train);
  std::iota(order.begin(), order.end(), 0);
  nn::Vec<double> grad(layout.num_params());
  nn::MlpLayout::Cache<double> cache;
  for (int epoch = 0; epoch < spec.epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), rng.engine());
    for (int start = 0; start < n_train; start += spec.batch_size) {
      const int count = std::min(spec.batch_size, n_train - start);
      nn::Mat<double> bx(inputs, count), by(n, count);
      for (int k = 0; k < count; ++k) {
        bx.col(k) = x.col(order[start + k]);
        by.col(k) = y.col(order[start + k]);
      }
      const nn::Mat<double> pred = layout.Forward<double>(params.data(), bx, &cache);
      const nn::Mat<double> dout = (pred - by) * (2.0 / (count * n));
      grad.setZero();
      layout.Backward<double>(params.data(), cache, dout, grad.data(), nullptr);
      adam.Step(params, grad);
    }
  }

  const nn::Mat<double> pred = layout.Forward<double>(params.data(), x, nullptr);
  RegressionReport out;
  out.train_size = n_train;
  out.test_size = total - n_train;
  const nn::Mat<double> err = pred - y;
  out.train_mse = err.leftCols(n_train).array().square().mean();
  out.test_mse = err.rightCols(out.test_size).array().square().mean();
  // Pooled R^2: residual over total sum of squares, each output centered on
  // its own test mean.
  const nn::Mat<double> yt = y.rightCols(out.test_size);
  const nn::Vec<double> means = yt.rowwise().mean();
  const double ss_tot = (yt.colwise() - means).array().square().sum();
  const double ss_res = err.rightCols(out.test_size).array().square().sum();
  out.test_r2 = ss_tot > 0 ? 1.0 - ss_res / ss_tot : (ss_res == 0 ? 1.0 : 0.0);
  for (int b = n_train; b < total; ++b) {
    for (int i = 0; i < n; ++i) out.test_predictions.push_back({b, i, y(i, b), pred(i, b)});
  }
  return out;
}

RegressionReport ShapleyRegression(const BoardDistribution& dist, const RegressionSpec& spec,
                                   std::uint64_t seed) {
  Rng rng(seed);
  const std::vector<Board> boards = SampleUniqueBoards(dist, rng, spec.boards);
  return FitShapleyRegressor(boards, spec, DeriveSeed(seed, 0x4e6));
}

NashCorrelationResult NashShapleyCorrelation(const std::vector<Board>& boards,
                                             const NashSpec& spec) {
  NashOptions options;
  options.integer_thresholds = spec.integer_thresholds;
  NashCorrelationResult out;
  std::vector<double> xs, ys;
  for (std::size_t j = 0; j < boards.size(); ++j) {
    const NashSolution sol = SolveBackwardInduction(boards[j], spec.reward, spec.rounds, options);
    const ShapleyVector phi = Shapley(boards[j]);
    for (int i = 0; i < boards[j].n(); ++i) {
      out.pairs.push_back({static_cast<int>(j), i, phi.values[i], sol.normalized[i]});
      xs.push_back(phi.values[i]);
      ys.push_back(sol.normalized[i]);
    }
  }
  out.pearson = Pearson(xs, ys);
  return out;
}

// ---------------------------------------------------------------------------
// Output.

std::string FormatNumber(double value) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof(buf), value);
  return std::string(buf, res.ptr);
}

void WriteCorrespondenceCsv(std::ostream& out, const std::vector<CorrespondencePair>& pairs) {
  out << "board,seat,shapley,share\n";
  for (const auto& p : pairs) {
    out << p.board << ',' << p.seat << ',' << FormatNumber(p.shapley) << ','
        << FormatNumber(p.share) << '\n';
  }
}

void WriteComparisonCsv(std::ostream& out, const ComparisonResult& result) {
  out << "group,sample,share\n";
  for (std::size_t k = 0; k < result.rl_samples.size(); ++k) {
    out << "rl," << k << ',' << FormatNumber(result.rl_samples[k]) << '\n';
  }
  for (std::size_t k = 0; k < result.bot_samples.size(); ++k) {
    out << "bot," << k << ',' << FormatNumber(result.bot_samples[k]) << '\n';
  }
}

void WritePerturbationCsv(std::ostream& out, const PerturbationResult& result) {
  out << "offset,perturbed_share,unperturbed_share\n";
  for (const auto& row : result.rows) {
    out << row.offset << ',' << FormatNumber(row.perturbed_share) << ','
        << FormatNumber(row.unperturbed_share) << '\n';
  }
}

void WriteRegressionCsv(std::ostream& out, const RegressionReport& report) {
  out << "board,seat,target,prediction\n";
  for (const auto& p : report.test_predictions) {
    out << p.board << ',' << p.seat << ',' << FormatNumber(p.target) << ','
        << FormatNumber(p.prediction) << '\n';
  }
}

void WriteNashPairsCsv(std::ostream& out, const std::vector<NashPair>& pairs) {
  out << "board,seat,shapley,equilibrium\n";
  for (const auto& p : pairs) {
    out << p.board << ',' << p.seat << ',' << FormatNumber(p.shapley) << ','
        << FormatNumber(p.equilibrium) << '\n';
  }
}

void WriteManifest(const std::string& path, const Manifest& manifest) {
  json j;
  j["command"] = manifest.command;
  j["seed"] = manifest.config.seed;
  j["config"] = ConfigJson(manifest.config);
  j["outputs"] = manifest.outputs;
  json summary = json::object();
  for (const auto& [key, value] : manifest.summary) summary[key] = value;
  j["summary"] = summary;
  std::ofstream out(path);
  Require(out.good(), ErrorCode::kIo, "cannot write manifest '" + path + "'");
  out << j.dump(2) << '\n';
}

}  // namespace negolab
