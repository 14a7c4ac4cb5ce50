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


#include "negolab/learner.h"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <istream>
#include <map>
#include <ostream>
#include <sstream>

#include "negolab/error.h"

namespace negolab {

using nn::Mat;
using nn::Vec;

const char* AlgorithmName(Algorithm algorithm) {
  return algorithm == Algorithm::kSarsa ? "sarsa" : "actor-critic";
}

void RLConfig::Validate() const {
  Require(lambda >= 0 && lambda <= 1, ErrorCode::kConfig, "lambda must be in [0, 1]");
  Require(gamma >= 0 && gamma <= 1, ErrorCode::kConfig, "gamma must be in [0, 1]");
  Require(learning_rate > 0, ErrorCode::kConfig, "learning_rate must be positive");
  Require(adam_beta1 >= 0 && adam_beta1 < 1 && adam_beta2 >= 0 && adam_beta2 < 1 &&
              adam_epsilon > 0,
          ErrorCode::kConfig, "invalid Adam constants");
  Require(epsilon_start >= 0 && epsilon_start <= 1 && epsilon_end >= 0 && epsilon_end <= 1,
          ErrorCode::kConfig, "exploration rates must be in [0, 1]");
  Require(epsilon_decay_fraction >= 0, ErrorCode::kConfig, "negative decay fraction");
  Require(hidden_layers >= 0 && hidden_size > 0 && ac_hidden_size > 0, ErrorCode::kConfig,
          "invalid hidden sizes");
  Require(n_parallel_envs > 0 && unroll_length > 0, ErrorCode::kConfig,
          "parallel envs and unroll length must be positive");
  Require(entropy_cost >= 0 && value_cost >= 0, ErrorCode::kConfig, "negative loss weight");
  Require(rho_bar > 0 && c_bar > 0, ErrorCode::kConfig, "clip thresholds must be positive");
  Require(conv_channels > 0 && conv_kernel > 0 && conv_stride > 0, ErrorCode::kConfig,
          "invalid conv shape");
  Require(episodes >= 0, ErrorCode::kConfig, "negative episode budget");
  Require(curve_window > 0, ErrorCode::kConfig, "curve_window must be positive");
}

double RLConfig::Epsilon(long episode) const {
  const double horizon = epsilon_decay_fraction * static_cast<double>(episodes);
  if (horizon <= 0) return epsilon_end;
  const double frac = std::min(1.0, static_cast<double>(episode) / horizon);
  return epsilon_start + (epsilon_end - epsilon_start) * frac;
}

// ---------------------------------------------------------------------------
// Networks.

nn::MlpLayout MakeQLayout(int input_size, int num_actions, const RLConfig& config) {
  std::vector<int> sizes{input_size};
  for (int l = 0; l < config.hidden_layers; ++l) sizes.push_back(config.hidden_size);
  sizes.push_back(num_actions);
  return nn::MlpLayout(sizes, nn::Activation::kRelu);
}

namespace {

// Last hidden activation (the head's input) for a single observation.
template <typename T>
Vec<T> Trunk(const nn::MlpLayout& layout, const T* params, std::span<const T> observation,
             typename nn::MlpLayout::Cache<T>* cache) {
  Require(static_cast<int>(observation.size()) == layout.input_size(), ErrorCode::kContract,
          "observation size does not match the network");
  const Mat<T> x = Eigen::Map<const Mat<T>>(observation.data(), layout.input_size(), 1);
  return layout.Forward<T>(params, x, cache, 0, layout.num_layers() - 1);
}

template <typename T>
T HeadRow(const nn::MlpLayout& layout, const T* params, const Vec<T>& h, int action) {
  const int l = layout.num_layers() - 1;
  Eigen::Map<const Mat<T>> w(params + layout.weight_offset(l), layout.layer_out(l),
                             layout.layer_in(l));
  T q = w.row(action).dot(h);
  if (layout.bias()) q += params[layout.bias_offset(l) + action];
  return q;
}

}  // namespace

template <typename T>
T ValueForward(const nn::MlpLayout& layout, const T* params, std::span<const T> observation,
               int action) {
  Require(action >= 0 && action < layout.output_size(), ErrorCode::kContract,
          "action index out of range");
  return HeadRow(layout, params, Trunk<T>(layout, params, observation, nullptr), action);
}

template <typename T>
void ActionValues(const nn::MlpLayout& layout, const T* params, std::span<const T> observation,
                  std::span<const int> actions, std::span<T> out) {
  Require(out.size() == actions.size(), ErrorCode::kContract, "output size mismatch");
  const Vec<T> h = Trunk<T>(layout, params, observation, nullptr);
  const int l = layout.num_layers() - 1;
  if (actions.size() > 32) {
    Eigen::Map<const Mat<T>> w(params + layout.weight_offset(l), layout.layer_out(l),
                               layout.layer_in(l));
    Vec<T> all = w * h;
    if (layout.bias()) {
      all += Eigen::Map<const Vec<T>>(params + layout.bias_offset(l), layout.layer_out(l));
    }
    for (std::size_t k = 0; k < actions.size(); ++k) out[k] = all(actions[k]);
  } else {
    for (std::size_t k = 0; k < actions.size(); ++k) {
      out[k] = HeadRow(layout, params, h, actions[k]);
    }
  }
}

ConvAcLayout::ConvAcLayout(int view_channels, int view_size, int vector_size, int num_actions,
                           const RLConfig& config)
    : conv_(view_channels, view_size, view_size, config.conv_channels, config.conv_kernel,
            config.conv_stride),
      vector_size_(vector_size),
      num_actions_(num_actions) {
  mlp_ = nn::MlpLayout({conv_.output_size() + vector_size, config.ac_hidden_size,
                        config.ac_hidden_size, num_actions + 1},
                       nn::Activation::kRelu);
}

template <typename T>
void ConvAcLayout::Forward(const T* params, const Mat<T>& views, const Mat<T>& vectors,
                           Mat<T>& logits, Vec<T>& values, Cache<T>* cache) const {
  Require(views.cols() == vectors.cols() && vectors.rows() == vector_size_,
          ErrorCode::kContract, "actor-critic input shape mismatch");
  const Mat<T> features = conv_.Forward<T>(params, views, cache ? &cache->conv : nullptr);
  Mat<T> joint(features.rows() + vector_size_, views.cols());
  joint.topRows(features.rows()) = features;
  joint.bottomRows(vector_size_) = vectors;
  const Mat<T> out = mlp_.Forward<T>(params + conv_.num_params(), joint,
                                     cache ? &cache->mlp : nullptr);
  logits = out.topRows(num_actions_);
  values = out.row(num_actions_).transpose();
}

template <typename T>
void ConvAcLayout::Backward(const T* params, const Cache<T>& cache, const Mat<T>& dlogits,
                            const Vec<T>& dvalues, T* grad) const {
  Mat<T> dout(num_actions_ + 1, dlogits.cols());
  dout.topRows(num_actions_) = dlogits;
  dout.row(num_actions_) = dvalues.transpose();
  Mat<T> djoint;
  mlp_.Backward<T>(params + conv_.num_params(), cache.mlp, dout, grad + conv_.num_params(),
                   &djoint);
  const Mat<T> dfeatures = djoint.topRows(conv_.output_size());
  conv_.Backward<T>(params, cache.conv, dfeatures, grad, nullptr);
}

template <typename T>
void ConvAcLayout::Initialize(T* params, Rng& rng) const {
  conv_.Initialize<T>(params, rng);
  mlp_.Initialize<T>(params + conv_.num_params(), rng, 0.1);
}

template <typename T>
PolicyValue PolicyValueForward(const ConvAcLayout& layout, const T* params,
                               std::span<const T> view, std::span<const T> vector,
                               std::span<const std::uint8_t> mask) {
  Require(static_cast<int>(view.size()) == layout.view_input_size() &&
              static_cast<int>(vector.size()) == layout.vector_input_size(),
          ErrorCode::kContract, "observation size does not match the network");
  const Mat<T> v = Eigen::Map<const Mat<T>>(view.data(), view.size(), 1);
  const Mat<T> f = Eigen::Map<const Mat<T>>(vector.data(), vector.size(), 1);
  Mat<T> logits;
  Vec<T> values;
  layout.Forward<T>(params, v, f, logits, values, nullptr);
  std::vector<T> probs(layout.num_actions());
  nn::Softmax<T>(std::span<const T>(logits.data(), layout.num_actions()), mask, probs);
  PolicyValue out;
  out.probs.assign(probs.begin(), probs.end());
  out.value = static_cast<double>(values(0));
  return out;
}

// ---------------------------------------------------------------------------
// Updates.

template <typename T>
double SarsaLambdaUpdate(const nn::MlpLayout& layout, Vec<T>& params, Vec<T>& trace,
                         nn::Optimizer<T>& optimizer, const SarsaTransition<T>& transition,
                         double gamma, double lambda) {
  Require(trace.size() == params.size(), ErrorCode::kContract, "trace size mismatch");
  Require(transition.done || transition.next_action >= 0, ErrorCode::kPrecondition,
          "next action required for a non-terminal transition");
  typename nn::MlpLayout::Cache<T> cache;
  const Vec<T> h = Trunk<T>(layout, params.data(), transition.observation, &cache);
  const double q = HeadRow(layout, params.data(), h, transition.action);
  double q_next = 0;
  if (!transition.done) {
    q_next = ValueForward<T>(layout, params.data(), transition.next_observation,
                             transition.next_action);
  }
  const double delta = transition.reward + gamma * q_next - q;

  // e <- gamma * lambda * e + grad Q(o, a), accumulating the gradient (one
  // head row plus the trunk) straight into the trace.
  trace *= static_cast<T>(gamma * lambda);
  const int l = layout.num_layers() - 1;
  Eigen::Map<const Mat<T>> w(params.data() + layout.weight_offset(l), layout.layer_out(l),
                             layout.layer_in(l));
  Eigen::Map<Mat<T>> ew(trace.data() + layout.weight_offset(l), layout.layer_out(l),
                        layout.layer_in(l));
  ew.row(transition.action) += h.transpose();
  if (layout.bias()) trace[layout.bias_offset(l) + transition.action] += T(1);
  if (l > 0) {
    const Mat<T> dh = w.row(transition.action).transpose();
    layout.Backward<T>(params.data(), cache, dh, trace.data(), nullptr, 0, l);
  }
  if (delta != 0.0) optimizer.Step(params, trace, static_cast<T>(-delta));
  return delta;
}

VTraceResult VTraceTargets(std::span<const double> behavior_log_probs,
                           std::span<const double> target_log_probs,
                           std::span<const double> rewards, std::span<const double> values,
                           double bootstrap_value, std::span<const double> discounts,
                           double rho_bar, double c_bar) {
  const std::size_t len = rewards.size();
  Require(behavior_log_probs.size() == len && target_log_probs.size() == len &&
              values.size() == len && discounts.size() == len,
          ErrorCode::kContract, "v-trace sequences must have equal length");
  VTraceResult out;
  out.vs.assign(len, 0.0);
  out.advantages.assign(len, 0.0);
  double acc = 0;  // v_{s+1} - V(x_{s+1})
  for (std::size_t k = len; k-- > 0;) {
    const double ratio = std::exp(target_log_probs[k] - behavior_log_probs[k]);
    const double rho = std::min(rho_bar, ratio);
    const double c = std::min(c_bar, ratio);
    const double next_value = k + 1 < len ? values[k + 1] : bootstrap_value;
    const double delta = rho * (rewards[k] + discounts[k] * next_value - values[k]);
    acc = delta + discounts[k] * c * acc;
    out.vs[k] = values[k] + acc;
  }
  for (std::size_t k = 0; k < len; ++k) {
    const double ratio = std::exp(target_log_probs[k] - behavior_log_probs[k]);
    const double next_vs = k + 1 < len ? out.vs[k + 1] : bootstrap_value;
    out.advantages[k] =
        std::min(rho_bar, ratio) * (rewards[k] + discounts[k] * next_vs - values[k]);
  }
  return out;
}

VTraceResult VTraceTargets(std::span<const double> behavior_log_probs,
                           std::span<const double> target_log_probs,
                           std::span<const double> rewards, std::span<const double> values,
                           double bootstrap_value, double gamma, double rho_bar, double c_bar) {
  const std::vector<double> discounts(rewards.size(), gamma);
  return VTraceTargets(behavior_log_probs, target_log_probs, rewards, values, bootstrap_value,
                       discounts, rho_bar, c_bar);
}

namespace {

// Loss and output gradients given the network outputs.
template <typename T>
double LossFromOutputs(const Mat<T>& logits, const Vec<T>& values, std::span<const int> actions,
                       std::span<const double> vs, std::span<const double> advantages,
                       double value_cost, double entropy_cost, Mat<T>& dlogits,
                       Vec<T>& dvalues) {
  const int batch = static_cast<int>(logits.cols());
  const int a_count = static_cast<int>(logits.rows());
  Require(static_cast<int>(actions.size()) == batch && static_cast<int>(vs.size()) == batch &&
              static_cast<int>(advantages.size()) == batch,
          ErrorCode::kContract, "loss batch size mismatch");
  dlogits.resize(a_count, batch);
  dvalues.resize(batch);
  const double scale = 1.0 / batch;
  double loss = 0;
  std::vector<double> logp(a_count);
  for (int b = 0; b < batch; ++b) {
    double max_logit = logits(0, b);
    for (int k = 1; k < a_count; ++k) max_logit = std::max(max_logit, double(logits(k, b)));
    double z = 0;
    for (int k = 0; k < a_count; ++k) z += std::exp(double(logits(k, b)) - max_logit);
    const double log_z = max_logit + std::log(z);
    double entropy = 0;
    for (int k = 0; k < a_count; ++k) {
      logp[k] = double(logits(k, b)) - log_z;
      entropy -= std::exp(logp[k]) * logp[k];
    }
    const int a = actions[b];
    const double adv = advantages[b];
    const double diff = double(values(b)) - vs[b];
    loss += -adv * logp[a] + value_cost * 0.5 * diff * diff - entropy_cost * entropy;
    for (int k = 0; k < a_count; ++k) {
      const double p = std::exp(logp[k]);
      double g = adv * p + entropy_cost * p * (logp[k] + entropy);
      if (k == a) g -= adv;
      dlogits(k, b) = static_cast<T>(g * scale);
    }
    dvalues(b) = static_cast<T>(value_cost * diff * scale);
  }
  return loss * scale;
}

}  // namespace

template <typename T>
double ActorCriticLoss(const ConvAcLayout& layout, const T* params, const Mat<T>& views,
                       const Mat<T>& vectors, std::span<const int> actions,
                       std::span<const double> vs, std::span<const double> advantages,
                       double value_cost, double entropy_cost, T* grad) {
  typename ConvAcLayout::Cache<T> cache;
  Mat<T> logits;
  Vec<T> values;
  layout.Forward<T>(params, views, vectors, logits, values, &cache);
  Mat<T> dlogits;
  Vec<T> dvalues;
  const double loss = LossFromOutputs<T>(logits, values, actions, vs, advantages, value_cost,
                                         entropy_cost, dlogits, dvalues);
  layout.Backward<T>(params, cache, dlogits, dvalues, grad);
  return loss;
}

// ---------------------------------------------------------------------------
// SARSA agent.

SarsaAgent::SarsaAgent(int input_size, int num_actions, const RLConfig& config, Rng& init_rng)
    : layout_(MakeQLayout(input_size, num_actions, config)),
      params_(Vec<float>::Zero(layout_.num_params())),
      trace_(Vec<float>::Zero(layout_.num_params())),
      optimizer_(config.optimizer, layout_.num_params(), config.learning_rate,
                 config.adam_beta1, config.adam_beta2, config.adam_epsilon),
      gamma_(config.gamma),
      lambda_(config.lambda) {
  layout_.Initialize<float>(params_.data(), init_rng, 0.1);
  const int head = layout_.num_layers() - 1;
  for (int k = 0; k < num_actions; ++k) {
    params_[layout_.bias_offset(head) + k] = static_cast<float>(config.q_init);
  }
}

int SarsaAgent::SelectAction(std::span<const float> features, std::span<const int> legal,
                             double epsilon, Rng& rng) const {
  Require(!legal.empty(), ErrorCode::kContract, "no legal action");
  if (epsilon > 0 && rng.Uniform() < epsilon) {
    return legal[rng.UniformInt(static_cast<int>(legal.size()))];
  }
  std::vector<float> q(legal.size());
  ActionValues<float>(layout_, params_.data(), features, legal, q);
  const auto best = std::max_element(q.begin(), q.end());
  return legal[best - q.begin()];
}

void SarsaAgent::BeginEpisode() {
  trace_.setZero();
  pending_action_ = -1;
}

void SarsaAgent::Act(std::span<const float> features, int action) {
  if (pending_action_ >= 0) {
    SarsaTransition<float> t;
    t.observation = pending_features_;
    t.action = pending_action_;
    t.reward = 0;
    t.next_observation = features;
    t.next_action = action;
    t.done = false;
    last_delta_ = SarsaLambdaUpdate<float>(layout_, params_, trace_, optimizer_, t, gamma_,
                                           lambda_);
  }
  pending_features_.assign(features.begin(), features.end());
  pending_action_ = action;
}

void SarsaAgent::EndEpisode(double reward) {
  if (pending_action_ >= 0) {
    SarsaTransition<float> t;
    t.observation = pending_features_;
    t.action = pending_action_;
    t.reward = reward;
    t.done = true;
    last_delta_ = SarsaLambdaUpdate<float>(layout_, params_, trace_, optimizer_, t, gamma_,
                                           lambda_);
  }
  pending_action_ = -1;
}

void WriteLearningCurve(std::ostream& out, const std::vector<CurvePoint>& curve) {
  out << "episode,seat,mean_reward\n";
  for (const CurvePoint& p : curve) {
    char buf[64];
    const auto res = std::to_chars(buf, buf + sizeof(buf), p.mean_reward);
    out << p.episode << ',' << p.seat << ',' << std::string_view(buf, res.ptr - buf) << '\n';
  }
}

namespace {

// Per-seat windowed reward means for learning curves.
class CurveRecorder {
 public:
  CurveRecorder(int n, int window) : window_(window), sums_(n, 0.0), totals_(n, 0.0) {}

  void Add(long episodes_done, const std::vector<double>& rewards,
           std::vector<CurvePoint>& curve) {
    for (std::size_t i = 0; i < sums_.size(); ++i) {
      sums_[i] += rewards[i];
      totals_[i] += rewards[i];
    }
    if (++count_ == window_) {
      for (std::size_t i = 0; i < sums_.size(); ++i) {
        curve.push_back({episodes_done, static_cast<int>(i), sums_[i] / window_});
        sums_[i] = 0;
      }
      count_ = 0;
    }
  }

  std::vector<double> Means(long episodes) const {
    std::vector<double> out(totals_.size(), 0.0);
    if (episodes > 0) {
      for (std::size_t i = 0; i < out.size(); ++i) out[i] = totals_[i] / episodes;
    }
    return out;
  }

 private:
  int window_;
  int count_ = 0;
  std::vector<double> sums_;
  std::vector<double> totals_;
};

[[noreturn]] void Diverged(int seat, long episode) {
  Fail(ErrorCode::kTrainingFailure, "seat " + std::to_string(seat) +
                                        " parameters became non-finite at episode " +
                                        std::to_string(episode));
}


// Legal flat proposal indices per (board, proposer), built on first use.
class LegalCache {
 public:
  explicit LegalCache(const pa::AllocationSpace& space) : space_(&space) {}

  const std::vector<int>& Proposals(const Board& board, int proposer) {
    auto it = cache_.find(board);
    if (it == cache_.end()) {
      std::vector<std::vector<int>> per(board.n());
      for (int i = 0; i < board.n(); ++i) {
        const auto mask = space_->ProposalMask(board, i);
        for (int k = 0; k < space_->size(); ++k) {
          if (mask[k]) per[i].push_back(k);
        }
      }
      it = cache_.emplace(board, std::move(per)).first;
    }
    return it->second[proposer];
  }

 private:
  const pa::AllocationSpace* space_;
  std::map<Board, std::vector<std::vector<int>>> cache_;
};

std::vector<Bot> MakeBots(const PaPopulation& population) {
  std::vector<Bot> bots;
  for (const PaSeat& seat : population.seats) {
    bots.emplace_back(seat.bot.value_or(BotParams{}));
  }
  return bots;
}

// Plays one Propose-Accept episode. `learn` toggles SARSA updates; with
// learn false the agents are read only.
template <bool kLearn>
std::vector<double> PlayPaEpisode(std::vector<PaSeat>& seats, std::vector<Bot>& bots,
                                  const Board& board, const pa::Config& env,
                                  const pa::AllocationSpace& space, LegalCache& legal,
                                  double epsilon, Rng& env_rng, std::vector<Rng*>& seat_rngs,
                                  long episode) {
  const int n = board.n();
  const int r = env.total_reward;
  const std::vector<int> respond_actions{space.accept_action(), space.decline_action()};
  pa::State state = pa::Reset(board, env, env_rng);
  if constexpr (kLearn) {
    for (PaSeat& seat : seats) {
      if (seat.agent) seat.agent->BeginEpisode();
    }
  }
  std::vector<double> buffer(pa::FeatureSize(n, env.shapley_aware));
  std::vector<float> features(buffer.size());
  auto encode = [&](int agent) {
    pa::EncodeFeatures(pa::Observe(state, agent, env), r, buffer);
    std::copy(buffer.begin(), buffer.end(), features.begin());
  };
  auto learner_act = [&](int agent, std::span<const int> actions) {
    encode(agent);
    SarsaAgent& learner = *seats[agent].agent;
    const int a = learner.SelectAction(features, actions, epsilon, *seat_rngs[agent]);
    if constexpr (kLearn) {
      learner.Act(features, a);
      if (!std::isfinite(learner.last_td_error())) Diverged(agent, episode);
    }
    return a;
  };
  pa::StepResult result;
  while (state.phase != pa::Phase::kTerminal) {
    if (state.phase == pa::Phase::kPropose) {
      const int i = state.proposer;
      pa::Allocation proposal;
      if (seats[i].bot) {
        proposal = bots[i].Propose(pa::Observe(state, i, env), r, *seat_rngs[i]);
      } else {
        proposal = space.at(learner_act(i, legal.Proposals(board, i)));
      }
      result = pa::Step(state, env, proposal, env_rng);
    } else {
      pa::Responses responses(n, pa::Response::kNone);
      for (int i : state.Proposees()) {
        if (seats[i].bot) {
          responses[i] = bots[i].Respond(pa::Observe(state, i, env), r, *seat_rngs[i]);
        } else {
          responses[i] = learner_act(i, respond_actions) == space.accept_action()
                             ? pa::Response::kAccept
                             : pa::Response::kDecline;
        }
      }
      result = pa::Step(state, env, responses, env_rng);
    }
  }
  if constexpr (kLearn) {
    for (int i = 0; i < n; ++i) {
      if (!seats[i].agent) continue;
      seats[i].agent->EndEpisode(result.rewards[i] / r);
      if (!std::isfinite(seats[i].agent->last_td_error())) Diverged(i, episode);
    }
  }
  return result.rewards;
}

}  // namespace

PaPopulation MakePaPopulation(int n, const pa::Config& env, const RLConfig& rl,
                              const std::vector<std::optional<BotParams>>& seat_bots,
                              std::uint64_t seed) {
  env.Validate();
  rl.Validate();
  Require(seat_bots.empty() || static_cast<int>(seat_bots.size()) == n, ErrorCode::kConfig,
          "seat_bots must be empty or have one entry per seat");
  PaPopulation pop;
  pop.env = env;
  pop.rl = rl;
  pop.n = n;
  pop.mean_train_reward.assign(n, 0.0);
  const int input = pa::FeatureSize(n, env.shapley_aware);
  const pa::AllocationSpace space(n, env.total_reward);
  for (int i = 0; i < n; ++i) {
    PaSeat seat;
    if (!seat_bots.empty() && seat_bots[i]) {
      seat.bot = seat_bots[i];
    } else {
      Rng init(DeriveSeed(seed, 0x5ea7, i));
      seat.agent.emplace(input, space.num_actions(), rl, init);
    }
    pop.seats.push_back(std::move(seat));
  }
  return pop;
}

PaTrainResult TrainPa(const std::vector<Board>& boards, const pa::Config& env,
                      const RLConfig& rl,
                      const std::vector<std::optional<BotParams>>& seat_bots,
                      std::uint64_t seed) {
  Require(!boards.empty(), ErrorCode::kPrecondition, "training needs at least one board");
  const int n = boards.front().n();
  for (const Board& b : boards) {
    Require(b.n() == n, ErrorCode::kPrecondition, "training boards differ in size");
  }
  PaTrainResult result{MakePaPopulation(n, env, rl, seat_bots, seed), {}};
  PaPopulation& pop = result.population;
  const pa::AllocationSpace space(n, env.total_reward);
  LegalCache legal(space);
  std::vector<Bot> bots = MakeBots(pop);
  Rng env_rng(DeriveSeed(seed, 0xe17));
  std::vector<Rng> rngs;
  for (int i = 0; i < n; ++i) rngs.emplace_back(DeriveSeed(seed, 0xa9e17, i));
  std::vector<Rng*> seat_rngs;
  for (Rng& r : rngs) seat_rngs.push_back(&r);
  CurveRecorder recorder(n, rl.curve_window);

  for (long episode = 0; episode < rl.episodes; ++episode) {
    const Board& board = boards[env_rng.UniformInt(static_cast<int>(boards.size()))];
    const std::vector<double> rewards =
        PlayPaEpisode<true>(pop.seats, bots, board, env, space, legal, rl.Epsilon(episode),
                            env_rng, seat_rngs, episode);
    recorder.Add(episode + 1, rewards, result.curve);
    if ((episode + 1) % rl.curve_window == 0 || episode + 1 == rl.episodes) {
      for (int i = 0; i < n; ++i) {
        if (pop.seats[i].agent && !pop.seats[i].agent->params().allFinite()) {
          Diverged(i, episode);
        }
      }
    }
  }
  pop.episodes_trained = rl.episodes;
  pop.mean_train_reward = recorder.Means(rl.episodes);
  return result;
}

EvalResult EvaluatePa(const PaPopulation& population, const Board& board, int episodes,
                      Rng& rng) {
  Require(board.n() == population.n, ErrorCode::kPrecondition,
          "board size does not match the population");
  const pa::AllocationSpace space(population.n, population.env.total_reward);
  LegalCache legal(space);
  std::vector<PaSeat> seats = population.seats;  // frozen copy
  std::vector<Bot> bots = MakeBots(population);
  std::vector<Rng*> seat_rngs(population.n, &rng);
  const double epsilon = population.rl.greedy_eval ? 0.0 : population.rl.epsilon_end;
  EvalResult out;
  out.mean_rewards.assign(population.n, 0.0);
  for (int e = 0; e < episodes; ++e) {
    std::vector<double> rewards = PlayPaEpisode<false>(seats, bots, board, population.env,
                                                       space, legal, epsilon, rng, seat_rngs, e);
    for (int i = 0; i < population.n; ++i) out.mean_rewards[i] += rewards[i];
    out.episodes.push_back({0, e, std::move(rewards)});
  }
  if (episodes > 0) {
    for (double& m : out.mean_rewards) m /= episodes;
  }
  return out;
}

// ---------------------------------------------------------------------------
// Team Patches actor-critic.

namespace {

ConvAcLayout MakeTpLayout(int n, const tp::Config& env, const RLConfig& rl) {
  return ConvAcLayout(tp::NumViewChannels(n), env.view_size, tp::VectorFeatureSize(n),
                      tp::NumActions(env.total_reward), rl);
}

// Writes agent observations for a set of states as matrix columns.
class TpEncoder {
 public:
  TpEncoder(int n, const tp::Config& env)
      : env_(&env),
        view_(tp::NumViewChannels(n) * env.view_size * env.view_size),
        vec_(tp::VectorFeatureSize(n)) {}

  int view_size() const { return static_cast<int>(view_.size()); }
  int vector_size() const { return static_cast<int>(vec_.size()); }

  void Encode(const tp::State& state, int agent, float* view_col, float* vec_col) {
    tp::EncodeView(state, *env_, agent, view_);
    tp::EncodeVectorFeatures(state, *env_, agent, vec_);
    std::copy(view_.begin(), view_.end(), view_col);
    std::copy(vec_.begin(), vec_.end(), vec_col);
  }

 private:
  const tp::Config* env_;
  std::vector<double> view_;
  std::vector<double> vec_;
};

int PickAction(std::span<const float> logits, bool greedy, Rng& rng, double* log_prob) {
  std::vector<float> probs(logits.size());
  nn::Softmax<float>(logits, {}, probs);
  int a;
  if (greedy) {
    a = static_cast<int>(std::max_element(logits.begin(), logits.end()) - logits.begin());
  } else {
    a = nn::SampleCategorical<float>(probs, rng);
  }
  if (log_prob != nullptr) {
    float max_logit = *std::max_element(logits.begin(), logits.end());
    double z = 0;
    for (float l : logits) z += std::exp(double(l) - max_logit);
    *log_prob = double(logits[a]) - max_logit - std::log(z);
  }
  return a;
}

}  // namespace

TpPopulation MakeTpPopulation(int n, const tp::Config& env, const RLConfig& rl,
                              std::uint64_t seed) {
  env.Validate(n);
  rl.Validate();
  TpPopulation pop;
  pop.env = env;
  pop.rl = rl;
  pop.n = n;
  pop.mean_train_reward.assign(n, 0.0);
  for (int i = 0; i < n; ++i) {
    AcAgent agent;
    agent.layout = MakeTpLayout(n, env, rl);
    agent.params = Vec<float>::Zero(agent.layout.num_params());
    Rng init(DeriveSeed(seed, 0x5ea7, i));
    agent.layout.Initialize<float>(agent.params.data(), init);
    agent.optimizer = nn::Optimizer<float>(rl.optimizer, agent.layout.num_params(),
                                           rl.learning_rate, rl.adam_beta1, rl.adam_beta2,
                                           rl.adam_epsilon);
    pop.seats.push_back(std::move(agent));
  }
  return pop;
}

TpTrainResult TrainTp(const std::vector<Board>& boards, const tp::Config& env,
                      const RLConfig& rl, std::uint64_t seed) {
  Require(!boards.empty(), ErrorCode::kPrecondition, "training needs at least one board");
  const int n = boards.front().n();
  for (const Board& b : boards) {
    Require(b.n() == n, ErrorCode::kPrecondition, "training boards differ in size");
  }
  TpTrainResult result{MakeTpPopulation(n, env, rl, seed), {}};
  TpPopulation& pop = result.population;
  const int num_envs = rl.n_parallel_envs;
  const int unroll = rl.unroll_length;
  const int batch = num_envs * unroll;
  const int num_actions = tp::NumActions(env.total_reward);
  const double reward_scale = 1.0 / env.total_reward;
  TpEncoder encoder(n, env);
  Rng env_rng(DeriveSeed(seed, 0xe17));
  std::vector<Rng> seat_rngs;
  for (int i = 0; i < n; ++i) seat_rngs.emplace_back(DeriveSeed(seed, 0xa9e17, i));

  std::vector<tp::State> states;
  for (int e = 0; e < num_envs; ++e) {
    states.push_back(
        tp::Reset(boards[env_rng.UniformInt(static_cast<int>(boards.size()))], env, env_rng));
  }

  struct SeatBuffer {
    Mat<float> views, vectors;
    std::vector<int> actions;
    std::vector<double> behavior_log_probs, rewards, discounts;
  };
  std::vector<SeatBuffer> buffers(n);
  for (SeatBuffer& b : buffers) {
    b.views.resize(encoder.view_size(), batch);
    b.vectors.resize(encoder.vector_size(), batch);
    b.actions.resize(batch);
    b.behavior_log_probs.resize(batch);
    b.rewards.resize(batch);
    b.discounts.resize(batch);
  }
  CurveRecorder recorder(n, rl.curve_window);
  long episodes_done = 0;
  Mat<float> logits, step_views(encoder.view_size(), num_envs),
      step_vectors(encoder.vector_size(), num_envs);
  Vec<float> values;
  std::vector<std::vector<int>> joint(num_envs, std::vector<int>(n));
  // Per-seat update buffers, reused so the im2col columns keep their storage.
  std::vector<ConvAcLayout::Cache<float>> caches(n);
  Mat<float> batch_logits;
  Vec<float> batch_values;

  while (episodes_done < rl.episodes) {
    for (int u = 0; u < unroll; ++u) {
      for (int i = 0; i < n; ++i) {
        SeatBuffer& buf = buffers[i];
        for (int e = 0; e < num_envs; ++e) {
          const int col = u * num_envs + e;
          encoder.Encode(states[e], i, buf.views.col(col).data(), buf.vectors.col(col).data());
        }
        step_views = buf.views.middleCols(u * num_envs, num_envs);
        step_vectors = buf.vectors.middleCols(u * num_envs, num_envs);
        pop.seats[i].layout.Forward<float>(pop.seats[i].params.data(), step_views,
                                           step_vectors, logits, values, nullptr);
        for (int e = 0; e < num_envs; ++e) {
          const int col = u * num_envs + e;
          double logp;
          joint[e][i] = PickAction(std::span<const float>(logits.col(e).data(), num_actions),
                                   false, seat_rngs[i], &logp);
          buf.actions[col] = joint[e][i];
          buf.behavior_log_probs[col] = logp;
        }
      }
      for (int e = 0; e < num_envs; ++e) {
        const tp::StepResult r = tp::Step(states[e], env, joint[e]);
        const int col = u * num_envs + e;
        for (int i = 0; i < n; ++i) {
          buffers[i].rewards[col] = r.rewards[i] * reward_scale;
          buffers[i].discounts[col] = r.done ? 0.0 : rl.gamma;
        }
        if (r.done) {
          ++episodes_done;
          recorder.Add(episodes_done, r.rewards, result.curve);
          states[e] = tp::Reset(boards[env_rng.UniformInt(static_cast<int>(boards.size()))],
                                env, env_rng);
        }
      }
    }

    for (int i = 0; i < n; ++i) {
      AcAgent& agent = pop.seats[i];
      SeatBuffer& buf = buffers[i];
      for (int e = 0; e < num_envs; ++e) {
        encoder.Encode(states[e], i, step_views.col(e).data(), step_vectors.col(e).data());
      }
      Vec<float> bootstrap;
      agent.layout.Forward<float>(agent.params.data(), step_views, step_vectors, logits,
                                  bootstrap, nullptr);

      ConvAcLayout::Cache<float>& cache = caches[i];
      agent.layout.Forward<float>(agent.params.data(), buf.views, buf.vectors, batch_logits,
                                  batch_values, &cache);
      std::vector<double> target_logp(batch);
      for (int col = 0; col < batch; ++col) {
        const auto l = batch_logits.col(col);
        const double m = l.maxCoeff();
        const double z = (l.cast<double>().array() - m).exp().sum();
        target_logp[col] = double(l(buf.actions[col])) - m - std::log(z);
      }
      std::vector<double> vs(batch), adv(batch);
      std::vector<double> s_beh(unroll), s_tgt(unroll), s_rew(unroll), s_val(unroll),
          s_disc(unroll);
      for (int e = 0; e < num_envs; ++e) {
        for (int u = 0; u < unroll; ++u) {
          const int col = u * num_envs + e;
          s_beh[u] = buf.behavior_log_probs[col];
          s_tgt[u] = target_logp[col];
          s_rew[u] = buf.rewards[col];
          s_val[u] = batch_values(col);
          s_disc[u] = buf.discounts[col];
        }
        const VTraceResult vt = VTraceTargets(s_beh, s_tgt, s_rew, s_val, bootstrap(e), s_disc,
                                              rl.rho_bar, rl.c_bar);
        for (int u = 0; u < unroll; ++u) {
          vs[u * num_envs + e] = vt.vs[u];
          adv[u * num_envs + e] = vt.advantages[u];
        }
      }
      Mat<float> dlogits;
      Vec<float> dvalues;
      LossFromOutputs<float>(batch_logits, batch_values, buf.actions, vs, adv, rl.value_cost,
                             rl.entropy_cost, dlogits, dvalues);
      Vec<float> grad = Vec<float>::Zero(agent.params.size());
      agent.layout.Backward<float>(agent.params.data(), cache, dlogits, dvalues, grad.data());
      agent.optimizer.Step(agent.params, grad);
      if (!agent.params.allFinite()) Diverged(i, episodes_done);
    }
  }
  pop.episodes_trained = episodes_done;
  pop.mean_train_reward = recorder.Means(episodes_done);
  return result;
}

EvalResult EvaluateTp(const TpPopulation& population, const Board& board, int episodes,
                      Rng& rng) {
  const int n = population.n;
  Require(board.n() == n, ErrorCode::kPrecondition, "board size does not match the population");
  const tp::Config& env = population.env;
  const int num_actions = tp::NumActions(env.total_reward);
  const int lanes = std::max(1, std::min(episodes, population.rl.n_parallel_envs));
  const std::uint64_t base = rng.engine()();
  TpEncoder encoder(n, env);
  EvalResult out;
  out.mean_rewards.assign(n, 0.0);
  out.episodes.resize(episodes);

  struct Lane {
    int episode = -1;
    Rng rng;
    tp::State state;
  };
  std::vector<Lane> active;
  int next_episode = 0;
  auto start = [&](Lane& lane) {
    lane.episode = next_episode++;
    lane.rng = Rng(DeriveSeed(base, lane.episode));
    lane.state = tp::Reset(board, env, lane.rng);
  };
  for (int k = 0; k < lanes && next_episode < episodes; ++k) {
    Lane lane{-1, Rng(0), tp::Reset(board, env, rng)};
    start(lane);
    active.push_back(std::move(lane));
  }
  Mat<float> views(encoder.view_size(), lanes), vectors(encoder.vector_size(), lanes);
  Mat<float> logits;
  Vec<float> values;
  std::vector<std::vector<int>> joint(lanes, std::vector<int>(n));
  while (!active.empty()) {
    const int width = static_cast<int>(active.size());
    for (int i = 0; i < n; ++i) {
      views.resize(encoder.view_size(), width);
      vectors.resize(encoder.vector_size(), width);
      for (int k = 0; k < width; ++k) {
        encoder.Encode(active[k].state, i, views.col(k).data(), vectors.col(k).data());
      }
      population.seats[i].layout.Forward<float>(population.seats[i].params.data(), views,
                                                vectors, logits, values, nullptr);
      for (int k = 0; k < width; ++k) {
        joint[k][i] = PickAction(std::span<const float>(logits.col(k).data(), num_actions),
                                 population.rl.greedy_eval, active[k].rng, nullptr);
      }
    }
    std::vector<Lane> still;
    for (int k = 0; k < width; ++k) {
      Lane& lane = active[k];
      const tp::StepResult r = tp::Step(lane.state, env, joint[k]);
      if (!r.done) {
        still.push_back(std::move(lane));
        continue;
      }
      out.episodes[lane.episode] = {0, lane.episode, r.rewards};
      if (next_episode < episodes) {
        start(lane);
        still.push_back(std::move(lane));
      }
    }
    active = std::move(still);
  }
  for (const EvalRecord& rec : out.episodes) {
    for (int i = 0; i < n; ++i) out.mean_rewards[i] += rec.rewards[i];
  }
  if (episodes > 0) {
    for (double& m : out.mean_rewards) m /= episodes;
  }
  return out;
}

// ---------------------------------------------------------------------------
// Checkpoints.

namespace {

constexpr const char* kCheckpointMagic = "negolab-checkpoint";
constexpr int kCheckpointVersion = 1;

void WriteVector(std::ostream& out, const char* tag, const Vec<float>& v) {
  out << tag << ' ' << v.size();
  char buf[32];
  for (Eigen::Index k = 0; k < v.size(); ++k) {
    const auto res = std::to_chars(buf, buf + sizeof(buf), v[k]);
    out << ' ' << std::string_view(buf, res.ptr - buf);
  }
  out << '\n';
}

void ReadVector(std::istream& in, const char* tag, Vec<float>& v) {
  std::string line;
  Require(static_cast<bool>(std::getline(in, line)), ErrorCode::kParse,
          std::string("checkpoint truncated before ") + tag);
  std::istringstream fields(line);
  std::string got;
  long size = -1;
  fields >> got >> size;
  Require(got == tag && size == v.size(), ErrorCode::kParse,
          std::string("checkpoint field mismatch at ") + tag);
  for (long k = 0; k < size; ++k) {
    std::string token;
    fields >> token;
    float value = 0;
    const auto res = std::from_chars(token.data(), token.data() + token.size(), value);
    Require(res.ec == std::errc() && res.ptr == token.data() + token.size(), ErrorCode::kParse,
            std::string("bad number in checkpoint field ") + tag);
    v[k] = value;
  }
}

void WriteOptimizer(std::ostream& out, const nn::Optimizer<float>& opt) {
  out << "steps " << opt.steps() << '\n';
  if (opt.kind() == nn::OptimizerKind::kAdam) {
    WriteVector(out, "m", opt.first_moment());
    WriteVector(out, "v", opt.second_moment());
  }
}

void ReadOptimizer(std::istream& in, nn::Optimizer<float>& opt) {
  std::string tag;
  long steps = -1;
  in >> tag >> steps;
  in.ignore(1);
  Require(tag == "steps" && steps >= 0, ErrorCode::kParse, "checkpoint missing optimizer steps");
  opt.set_steps(steps);
  if (opt.kind() == nn::OptimizerKind::kAdam) {
    ReadVector(in, "m", opt.first_moment());
    ReadVector(in, "v", opt.second_moment());
  }
}

void WriteHeader(std::ostream& out, const char* kind, int n, long episodes) {
  out << kCheckpointMagic << ' ' << kCheckpointVersion << '\n'
      << "kind " << kind << '\n'
      << "seats " << n << '\n'
      << "episodes " << episodes << '\n';
}

long ReadHeader(std::istream& in, const char* kind, int n) {
  std::string magic, tag, got_kind;
  int version = 0, seats = 0;
  long episodes = 0;
  in >> magic >> version;
  Require(magic == kCheckpointMagic, ErrorCode::kParse, "not a checkpoint file");
  Require(version == kCheckpointVersion, ErrorCode::kParse, "unsupported checkpoint version");
  in >> tag >> got_kind;
  Require(tag == "kind" && got_kind == kind, ErrorCode::kParse, "checkpoint kind mismatch");
  in >> tag >> seats;
  Require(tag == "seats" && seats == n, ErrorCode::kParse, "checkpoint seat count mismatch");
  in >> tag >> episodes;
  Require(tag == "episodes", ErrorCode::kParse, "checkpoint missing episode count");
  in.ignore(1);
  return episodes;
}

void WriteRng(std::ostream& out, const Rng& rng) { out << "rng " << rng.SaveState() << '\n'; }

void ReadRng(std::istream& in, Rng& rng) {
  std::string tag;
  in >> tag;
  Require(tag == "rng", ErrorCode::kParse, "checkpoint missing rng state");
  std::string state;
  std::getline(in, state);
  rng.LoadState(state);
}

}  // namespace

void SaveCheckpoint(std::ostream& out, const PaPopulation& population, const Rng& rng) {
  WriteHeader(out, "propose-accept", population.n, population.episodes_trained);
  for (int i = 0; i < population.n; ++i) {
    const PaSeat& seat = population.seats[i];
    if (seat.bot) {
      out << "seat " << i << " bot " << BotModeName(seat.bot->mode) << ' '
          << seat.bot->acceptance_scale << '\n';
      continue;
    }
    out << "seat " << i << " sarsa\n";
    WriteVector(out, "params", seat.agent->params());
    WriteOptimizer(out, seat.agent->optimizer());
  }
  WriteRng(out, rng);
}

void LoadCheckpoint(std::istream& in, PaPopulation& population, Rng& rng) {
  population.episodes_trained = ReadHeader(in, "propose-accept", population.n);
  for (int i = 0; i < population.n; ++i) {
    std::string line;
    std::getline(in, line);
    std::istringstream fields(line);
    std::string tag, kind;
    int index = -1;
    fields >> tag >> index >> kind;
    Require(tag == "seat" && index == i, ErrorCode::kParse, "checkpoint seat out of order");
    PaSeat& seat = population.seats[i];
    Require((kind == "bot") == seat.bot.has_value(), ErrorCode::kParse,
            "checkpoint seat kind does not match the population");
    if (kind == "bot") continue;
    ReadVector(in, "params", seat.agent->params());
    ReadOptimizer(in, seat.agent->optimizer());
  }
  ReadRng(in, rng);
}

void SaveCheckpoint(std::ostream& out, const TpPopulation& population, const Rng& rng) {
  WriteHeader(out, "team-patches", population.n, population.episodes_trained);
  for (int i = 0; i < population.n; ++i) {
    out << "seat " << i << " actor-critic\n";
    WriteVector(out, "params", population.seats[i].params);
    WriteOptimizer(out, population.seats[i].optimizer);
  }
  WriteRng(out, rng);
}

void LoadCheckpoint(std::istream& in, TpPopulation& population, Rng& rng) {
  population.episodes_trained = ReadHeader(in, "team-patches", population.n);
  for (int i = 0; i < population.n; ++i) {
    std::string line;
    std::getline(in, line);
    std::istringstream fields(line);
    std::string tag;
    int index = -1;
    fields >> tag >> index;
    Require(tag == "seat" && index == i, ErrorCode::kParse, "checkpoint seat out of order");
    ReadVector(in, "params", population.seats[i].params);
    ReadOptimizer(in, population.seats[i].optimizer);
  }
  ReadRng(in, rng);
}

#define NEGOLAB_LEARNER_INSTANTIATE(T)                                                     \
  template T ValueForward<T>(const nn::MlpLayout&, const T*, std::span<const T>, int);     \
  template void ActionValues<T>(const nn::MlpLayout&, const T*, std::span<const T>,        \
                                std::span<const int>, std::span<T>);                       \
  template void ConvAcLayout::Forward<T>(const T*, const Mat<T>&, const Mat<T>&, Mat<T>&, \
                                         Vec<T>&, Cache<T>*) const;                        \
  template void ConvAcLayout::Backward<T>(const T*, const Cache<T>&, const Mat<T>&,        \
                                          const Vec<T>&, T*) const;                        \
  template void ConvAcLayout::Initialize<T>(T*, Rng&) const;                               \
  template PolicyValue PolicyValueForward<T>(const ConvAcLayout&, const T*,                \
                                             std::span<const T>, std::span<const T>,       \
                                             std::span<const std::uint8_t>);               \
  template double SarsaLambdaUpdate<T>(const nn::MlpLayout&, Vec<T>&, Vec<T>&,             \
                                       nn::Optimizer<T>&, const SarsaTransition<T>&,       \
                                       double, double);                                    \
  template double ActorCriticLoss<T>(const ConvAcLayout&, const T*, const Mat<T>&,         \
                                     const Mat<T>&, std::span<const int>,                  \
                                     std::span<const double>, std::span<const double>,     \
                                     double, double, T*);

NEGOLAB_LEARNER_INSTANTIATE(float)
NEGOLAB_LEARNER_INSTANTIATE(double)

#undef NEGOLAB_LEARNER_INSTANTIATE

}  // namespace negolab
