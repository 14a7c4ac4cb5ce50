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


#ifndef NEGOLAB_LEARNER_H_
#define NEGOLAB_LEARNER_H_

// Independent multi-agent learners. Propose-Accept seats run SARSA(lambda)
// over an MLP action-value function; Team Patches seats run a synchronous
// advantage actor-critic with V-trace targets over a conv network. Every seat
// owns its parameters; no update reads another seat's state.

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "negolab/bots.h"
#include "negolab/coopgame.h"
#include "negolab/nn.h"
#include "negolab/propose_accept.h"
#include "negolab/rng.h"
#include "negolab/team_patches.h"

namespace negolab {

enum class Algorithm { kSarsa, kActorCritic };
const char* AlgorithmName(Algorithm algorithm);

struct RLConfig {
  Algorithm algorithm = Algorithm::kSarsa;
  double lambda = 0.1;
  double gamma = 1.0;
  double learning_rate = 1e-4;
  nn::OptimizerKind optimizer = nn::OptimizerKind::kAdam;
  double adam_beta1 = 0.9;
  double adam_beta2 = 0.999;
  double adam_epsilon = 1e-8;
  // Linear from epsilon_start to epsilon_end over the first
  // epsilon_decay_fraction of training, then flat.
  double epsilon_start = 0.2;
  double epsilon_end = 0.01;
  double epsilon_decay_fraction = 0.5;
  int hidden_layers = 3;
  int hidden_size = 64;
  // Initial bias of every action-value output, in units of r.
  double q_init = 0.0;
  // Actor-critic.
  int n_parallel_envs = 16;
  int unroll_length = 20;
  double entropy_cost = 0.01;
  double value_cost = 0.5;
  double rho_bar = 1.0;
  double c_bar = 1.0;
  int conv_channels = 6;
  int conv_kernel = 3;
  int conv_stride = 1;
  int ac_hidden_size = 32;
  // Evaluation picks the greedy / mode action when true, samples otherwise.
  bool greedy_eval = true;
  long episodes = 50000;
  int curve_window = 1000;

  void Validate() const;
  double Epsilon(long episode) const;
};

// ---------------------------------------------------------------------------
// Networks.

// Q(o, .) network: input -> hidden_layers x hidden_size ReLU -> one output per
// flat action.
nn::MlpLayout MakeQLayout(int input_size, int num_actions, const RLConfig& config);

template <typename T>
T ValueForward(const nn::MlpLayout& layout, const T* params, std::span<const T> observation,
               int action);

// Q values for the listed actions, sharing one trunk evaluation.
template <typename T>
void ActionValues(const nn::MlpLayout& layout, const T* params, std::span<const T> observation,
                  std::span<const int> actions, std::span<T> out);

// Conv trunk over the ego view, concatenated with the vector features, then
// two ReLU layers and a joint linear head: rows [0, A) are policy logits and
// row A is the state value.
class ConvAcLayout {
 public:
  ConvAcLayout() = default;
  ConvAcLayout(int view_channels, int view_size, int vector_size, int num_actions,
               const RLConfig& config);

  int num_params() const { return conv_.num_params() + mlp_.num_params(); }
  int view_input_size() const { return conv_.input_size(); }
  int vector_input_size() const { return vector_size_; }
  int num_actions() const { return num_actions_; }
  const nn::ConvLayout& conv() const { return conv_; }
  const nn::MlpLayout& mlp() const { return mlp_; }

  template <typename T>
  struct Cache {
    typename nn::ConvLayout::Cache<T> conv;
    typename nn::MlpLayout::Cache<T> mlp;
  };

  // views: view_input_size x B; vectors: vector_input_size x B. Writes
  // logits (A x B) and values (B).
  template <typename T>
  void Forward(const T* params, const nn::Mat<T>& views, const nn::Mat<T>& vectors,
               nn::Mat<T>& logits, nn::Vec<T>& values, Cache<T>* cache) const;
  template <typename T>
  void Backward(const T* params, const Cache<T>& cache, const nn::Mat<T>& dlogits,
                const nn::Vec<T>& dvalues, T* grad) const;
  template <typename T>
  void Initialize(T* params, Rng& rng) const;

 private:
  nn::ConvLayout conv_;
  nn::MlpLayout mlp_;
  int vector_size_ = 0;
  int num_actions_ = 0;
};

struct PolicyValue {
  std::vector<double> probs;
  double value = 0;
};

template <typename T>
PolicyValue PolicyValueForward(const ConvAcLayout& layout, const T* params,
                               std::span<const T> view, std::span<const T> vector,
                               std::span<const std::uint8_t> mask = {});

// ---------------------------------------------------------------------------
// Updates.

template <typename T>
struct SarsaTransition {
  std::span<const T> observation;
  int action = 0;
  double reward = 0;
  std::span<const T> next_observation;  // ignored when done
  int next_action = -1;
  bool done = false;
};

// One online SARSA(lambda) step with accumulating traces:
//   delta = r + gamma * Q(o', a') * (1 - done) - Q(o, a)
//   e <- gamma * lambda * e + grad Q(o, a)
//   optimizer descends along -delta * e (skipped when delta == 0).
// Returns delta.
template <typename T>
double SarsaLambdaUpdate(const nn::MlpLayout& layout, nn::Vec<T>& params, nn::Vec<T>& trace,
                         nn::Optimizer<T>& optimizer, const SarsaTransition<T>& transition,
                         double gamma, double lambda);

struct VTraceResult {
  std::vector<double> vs;
  std::vector<double> advantages;  // rho_s * (r_s + discount_s * v_{s+1} - V(x_s))
};

// V-trace targets for one unroll. discounts[s] multiplies everything after
// step s (gamma, or 0 at an episode end).
VTraceResult VTraceTargets(std::span<const double> behavior_log_probs,
                           std::span<const double> target_log_probs,
                           std::span<const double> rewards, std::span<const double> values,
                           double bootstrap_value, std::span<const double> discounts,
                           double rho_bar, double c_bar);
VTraceResult VTraceTargets(std::span<const double> behavior_log_probs,
                           std::span<const double> target_log_probs,
                           std::span<const double> rewards, std::span<const double> values,
                           double bootstrap_value, double gamma, double rho_bar, double c_bar);

// Mean actor-critic loss over a batch, with vs and advantages held fixed:
//   -adv * log pi(a) + value_cost * 0.5 * (V - vs)^2 - entropy_cost * H(pi).
// Accumulates the gradient into `grad` and returns the loss.
template <typename T>
double ActorCriticLoss(const ConvAcLayout& layout, const T* params, const nn::Mat<T>& views,
                       const nn::Mat<T>& vectors, std::span<const int> actions,
                       std::span<const double> vs, std::span<const double> advantages,
                       double value_cost, double entropy_cost, T* grad);

// ---------------------------------------------------------------------------
// Agents and populations.

class SarsaAgent {
 public:
  SarsaAgent(int input_size, int num_actions, const RLConfig& config, Rng& init_rng);

  // Epsilon-greedy over `legal`; greedy ties go to the earliest entry.
  int SelectAction(std::span<const float> features, std::span<const int> legal, double epsilon,
                   Rng& rng) const;
  void BeginEpisode();
  // Records that the agent took `action` from `features`, updating on the
  // previous pending transition with zero reward.
  void Act(std::span<const float> features, int action);
  // Terminal update for the pending transition, if any.
  void EndEpisode(double reward);

  const nn::MlpLayout& layout() const { return layout_; }
  nn::Vec<float>& params() { return params_; }
  const nn::Vec<float>& params() const { return params_; }
  nn::Optimizer<float>& optimizer() { return optimizer_; }
  const nn::Optimizer<float>& optimizer() const { return optimizer_; }
  double last_td_error() const { return last_delta_; }

 private:
  nn::MlpLayout layout_;
  nn::Vec<float> params_;
  nn::Vec<float> trace_;
  nn::Optimizer<float> optimizer_;
  double gamma_, lambda_;
  std::vector<float> pending_features_;
  int pending_action_ = -1;
  double last_delta_ = 0;
};

struct CurvePoint {
  long episode = 0;  // episodes completed when the window closed
  int seat = 0;
  double mean_reward = 0;
};

void WriteLearningCurve(std::ostream& out, const std::vector<CurvePoint>& curve);

struct EvalRecord {
  int board = 0;
  int episode = 0;
  std::vector<double> rewards;
};

struct EvalResult {
  std::vector<double> mean_rewards;  // per seat, unscaled
  std::vector<EvalRecord> episodes;
};

struct PaSeat {
  std::optional<BotParams> bot;
  std::optional<SarsaAgent> agent;
};

struct PaPopulation {
  pa::Config env;
  RLConfig rl;
  int n = 0;
  std::vector<PaSeat> seats;
  long episodes_trained = 0;
  std::vector<double> mean_train_reward;  // per seat, over all training
};

// `seat_bots[i]` set puts a fixed bot in seat i; empty means all learners.
PaPopulation MakePaPopulation(int n, const pa::Config& env, const RLConfig& rl,
                              const std::vector<std::optional<BotParams>>& seat_bots,
                              std::uint64_t seed);

struct PaTrainResult {
  PaPopulation population;
  std::vector<CurvePoint> curve;
};

// Each episode draws a board uniformly from `boards`. Throws kTrainingFailure
// naming the seat and episode when a learner's parameters stop being finite.
PaTrainResult TrainPa(const std::vector<Board>& boards, const pa::Config& env,
                      const RLConfig& rl,
                      const std::vector<std::optional<BotParams>>& seat_bots,
                      std::uint64_t seed);

// Frozen play on one board: no updates, greedy learners.
EvalResult EvaluatePa(const PaPopulation& population, const Board& board, int episodes,
                      Rng& rng);

struct AcAgent {
  ConvAcLayout layout;
  nn::Vec<float> params;
  nn::Optimizer<float> optimizer;
};

struct TpPopulation {
  tp::Config env;
  RLConfig rl;
  int n = 0;
  std::vector<AcAgent> seats;
  long episodes_trained = 0;
  std::vector<double> mean_train_reward;
};

TpPopulation MakeTpPopulation(int n, const tp::Config& env, const RLConfig& rl,
                              std::uint64_t seed);

struct TpTrainResult {
  TpPopulation population;
  std::vector<CurvePoint> curve;
};

// Steps n_parallel_envs environment copies in lockstep on one thread, then
// updates every seat from its unroll. Training stops at the first unroll
// boundary after `rl.episodes` episodes have finished.
TpTrainResult TrainTp(const std::vector<Board>& boards, const tp::Config& env,
                      const RLConfig& rl, std::uint64_t seed);

EvalResult EvaluateTp(const TpPopulation& population, const Board& board, int episodes,
                      Rng& rng);

// Text checkpoints: every parameter, optimizer moment and step count, plus
// the caller's RNG state. Floats are written in shortest round-trip form.
void SaveCheckpoint(std::ostream& out, const PaPopulation& population, const Rng& rng);
void LoadCheckpoint(std::istream& in, PaPopulation& population, Rng& rng);
void SaveCheckpoint(std::ostream& out, const TpPopulation& population, const Rng& rng);
void LoadCheckpoint(std::istream& in, TpPopulation& population, Rng& rng);

}  // namespace negolab

#endif  // NEGOLAB_LEARNER_H_
