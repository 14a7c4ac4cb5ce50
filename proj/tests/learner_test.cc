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

#include <cmath>
#include <sstream>

#include "doctest.h"
#include "negolab/error.h"

namespace negolab {
namespace {

using nn::Mat;
using nn::Vec;

const Board kPaBoard({5, 6, 7, 5, 4}, 15);

TEST_CASE("zero parameters give zero values and a uniform policy") {
  RLConfig cfg;
  const nn::MlpLayout q = MakeQLayout(7, 5, cfg);
  const std::vector<double> zeros(q.num_params(), 0.0);
  const std::vector<double> obs{1, 2, 3, 4, 5, 6, 7};
  for (int a = 0; a < 5; ++a) CHECK(ValueForward<double>(q, zeros.data(), obs, a) == 0.0);

  const ConvAcLayout ac(3, 5, 2, 4, cfg);
  const std::vector<double> zac(ac.num_params(), 0.0);
  const std::vector<double> view(ac.view_input_size(), 1.0), vec{1.0, -1.0};
  const PolicyValue pv = PolicyValueForward<double>(ac, zac.data(), view, vec);
  CHECK(pv.value == 0.0);
  for (double p : pv.probs) CHECK(p == doctest::Approx(0.25));

  const std::vector<std::uint8_t> mask{0, 1, 1, 0};
  const PolicyValue masked = PolicyValueForward<double>(ac, zac.data(), view, vec, mask);
  CHECK(masked.probs == std::vector<double>{0.0, 0.5, 0.5, 0.0});
  CHECK_THROWS_AS(ValueForward<double>(q, zeros.data(), std::vector<double>(3, 0.0), 0), Error);
}

// One-hot tabular Q: a single bias-free linear layer, so Q(s, a) = W[a, s].
struct Tabular {
  nn::MlpLayout layout{{2, 2}, nn::Activation::kRelu, false};
  Vec<double> params = Vec<double>::Zero(4);
  Vec<double> trace = Vec<double>::Zero(4);
  double Q(int s, int a) const { return params[a + 2 * s]; }
};

const std::vector<double> kState0{1, 0}, kState1{0, 1};

TEST_CASE("tabular SARSA update matches the classical rule") {
  Tabular t;
  t.params << 0.5, -1.0, 2.0, 0.25;  // Q(0,0)=.5 Q(0,1)=-1 Q(1,0)=2 Q(1,1)=.25
  nn::Optimizer<double> sgd(nn::OptimizerKind::kSgd, 4, 0.1);
  SarsaTransition<double> tr{kState0, 1, 0.3, kState1, 0, false};
  const double delta = SarsaLambdaUpdate<double>(t.layout, t.params, t.trace, sgd, tr, 0.9, 0.0);
  // delta = 0.3 + 0.9 * 2 - (-1) = 3.1; Q(0,1) += 0.1 * 3.1.
  CHECK(delta == doctest::Approx(3.1));
  CHECK(t.Q(0, 1) == doctest::Approx(-1.0 + 0.31));
  CHECK(t.Q(0, 0) == 0.5);
  CHECK(t.Q(1, 0) == 2.0);
  CHECK(t.Q(1, 1) == 0.25);

  // Terminal step from state 1.
  SarsaTransition<double> end{kState1, 0, 1.0, {}, -1, true};
  t.trace.setZero();
  const double d2 = SarsaLambdaUpdate<double>(t.layout, t.params, t.trace, sgd, end, 0.9, 0.0);
  CHECK(d2 == doctest::Approx(-1.0));
  CHECK(t.Q(1, 0) == doctest::Approx(1.9));
}

TEST_CASE("eligibility traces carry credit back") {
  Tabular t;
  nn::Optimizer<double> sgd(nn::OptimizerKind::kSgd, 4, 0.5);
  const double gamma = 0.9, lambda = 0.5;
  SarsaLambdaUpdate<double>(t.layout, t.params, t.trace, sgd,
                            {kState0, 0, 0.0, kState1, 1, false}, gamma, lambda);
  CHECK(t.params.isZero());  // delta = 0: no step
  const double delta = SarsaLambdaUpdate<double>(t.layout, t.params, t.trace, sgd,
                                                 {kState1, 1, 2.0, {}, -1, true}, gamma, lambda);
  CHECK(delta == doctest::Approx(2.0));
  CHECK(t.Q(1, 1) == doctest::Approx(0.5 * 2.0));
  CHECK(t.Q(0, 0) == doctest::Approx(0.5 * 2.0 * gamma * lambda));
}

TEST_CASE("zero learning rate and zero TD error leave parameters alone") {
  RLConfig cfg;
  Rng rng(3);
  const nn::MlpLayout layout = MakeQLayout(6, 4, cfg);
  Vec<double> params(layout.num_params());
  layout.Initialize<double>(params.data(), rng);
  Vec<double> trace = Vec<double>::Zero(params.size());
  const std::vector<double> o{1, 0, 0.5, 0.2, 0.1, 1}, o2{0, 1, 0.3, 0.2, 0.9, 0};
  const Vec<double> before = params;

  nn::Optimizer<double> frozen(nn::OptimizerKind::kAdam, params.size(), 0.0);
  SarsaLambdaUpdate<double>(layout, params, trace, frozen, {o, 1, 1.0, o2, 2, false}, 1.0, 0.1);
  CHECK(params == before);

  nn::Optimizer<double> adam(nn::OptimizerKind::kAdam, params.size(), 1e-2);
  const double q = ValueForward<double>(layout, params.data(), o, 3);
  trace.setZero();
  const double delta = SarsaLambdaUpdate<double>(layout, params, trace, adam,
                                                 {o, 3, q, {}, -1, true}, 1.0, 0.1);
  CHECK(delta == 0.0);
  CHECK(params == before);
}

TEST_CASE("SARSA step follows the analytic Q gradient") {
  Rng rng(4);
  for (int trial = 0; trial < 20; ++trial) {
    RLConfig cfg;
    cfg.hidden_layers = 1 + rng.UniformInt(3);
    cfg.hidden_size = 2 + rng.UniformInt(6);
    const int in = 1 + rng.UniformInt(5), actions = 2 + rng.UniformInt(4);
    const nn::MlpLayout layout = MakeQLayout(in, actions, cfg);
    Vec<double> params(layout.num_params());
    layout.Initialize<double>(params.data(), rng);
    for (double& p : params) p += rng.Normal(0, 0.1);
    std::vector<double> o(in);
    for (double& x : o) x = rng.Normal(0, 1);
    const int a = rng.UniformInt(actions);

    // With SGD step size alpha and a fresh trace, dtheta = alpha * delta * grad Q.
    const double alpha = 1e-3;
    Vec<double> updated = params, trace = Vec<double>::Zero(params.size());
    nn::Optimizer<double> sgd(nn::OptimizerKind::kSgd, params.size(), alpha);
    const double delta = SarsaLambdaUpdate<double>(layout, updated, trace, sgd,
                                                   {o, a, 1.0, {}, -1, true}, 1.0, 0.1);
    const Vec<double> analytic = (updated - params) / (alpha * delta);
    double worst = 0;
    const double h = 1e-5;
    for (Eigen::Index k = 0; k < params.size(); ++k) {
      Vec<double> p = params;
      p[k] += h;
      const double up = ValueForward<double>(layout, p.data(), o, a);
      p[k] -= 2 * h;
      const double down = ValueForward<double>(layout, p.data(), o, a);
      const double fd = (up - down) / (2 * h);
      worst = std::max(worst, std::abs(fd - analytic[k]) /
                                  std::max({std::abs(fd), std::abs(analytic[k]), 1e-6}));
    }
    CHECK(worst < 1e-4);
  }
}

// Direct evaluation of the unrolled V-trace sum.
std::vector<double> BruteVs(const std::vector<double>& mu, const std::vector<double>& pi,
                            const std::vector<double>& r, const std::vector<double>& v,
                            double boot, const std::vector<double>& disc, double rho_bar,
                            double c_bar) {
  const std::size_t n = r.size();
  std::vector<double> out(n);
  for (std::size_t s = 0; s < n; ++s) {
    double total = v[s];
    for (std::size_t t = s; t < n; ++t) {
      double weight = 1;
      for (std::size_t i = s; i < t; ++i) {
        weight *= disc[i] * std::min(c_bar, std::exp(pi[i] - mu[i]));
      }
      const double next = t + 1 < n ? v[t + 1] : boot;
      const double rho = std::min(rho_bar, std::exp(pi[t] - mu[t]));
      total += weight * rho * (r[t] + disc[t] * next - v[t]);
    }
    out[s] = total;
  }
  return out;
}

TEST_CASE("v-trace matches the unrolled sum") {
  Rng rng(5);
  for (int trial = 0; trial < 50; ++trial) {
    const int n = 6;
    std::vector<double> mu(n), pi(n), r(n), v(n), disc(n);
    for (int k = 0; k < n; ++k) {
      mu[k] = std::log(0.05 + rng.Uniform());
      pi[k] = std::log(0.05 + rng.Uniform());
      r[k] = rng.Normal(0, 1);
      v[k] = rng.Normal(0, 1);
      disc[k] = rng.Bernoulli(0.2) ? 0.0 : 0.95;
    }
    const double boot = rng.Normal(0, 1);
    const double rho_bar = 0.5 + rng.Uniform(), c_bar = 0.5 + rng.Uniform();
    const VTraceResult got = VTraceTargets(mu, pi, r, v, boot, disc, rho_bar, c_bar);
    const auto want = BruteVs(mu, pi, r, v, boot, disc, rho_bar, c_bar);
    for (int k = 0; k < n; ++k) {
      CHECK(std::abs(got.vs[k] - want[k]) <= 1e-10);
      const double next = k + 1 < n ? want[k + 1] : boot;
      const double adv = std::min(rho_bar, std::exp(pi[k] - mu[k])) * (r[k] + disc[k] * next - v[k]);
      CHECK(std::abs(got.advantages[k] - adv) <= 1e-10);
    }
  }
}

TEST_CASE("on-policy v-trace is the n-step return") {
  Rng rng(6);
  for (int len = 1; len <= 20; ++len) {
    std::vector<double> logp(len), r(len), v(len);
    for (int k = 0; k < len; ++k) {
      logp[k] = std::log(0.1 + rng.Uniform());
      r[k] = rng.Normal(0, 1);
      v[k] = rng.Normal(0, 1);
    }
    const double boot = rng.Normal(0, 1), gamma = 0.97;
    const VTraceResult got = VTraceTargets(logp, logp, r, v, boot, gamma, 1.0, 1.0);
    for (int s = 0; s < len; ++s) {
      double ret = 0, g = 1;
      for (int t = s; t < len; ++t) {
        ret += g * r[t];
        g *= gamma;
      }
      ret += g * boot;
      CHECK(std::abs(got.vs[s] - ret) <= 1e-10);
    }
  }
}

TEST_CASE("v-trace with zero discount") {
  const std::vector<double> mu{std::log(0.5), std::log(0.2)}, pi{std::log(0.25), std::log(0.6)};
  const std::vector<double> r{1.0, -2.0}, v{0.4, 0.1};
  const VTraceResult got = VTraceTargets(mu, pi, r, v, 3.0, 0.0, 1.0, 1.0);
  CHECK(got.vs[0] == doctest::Approx(0.4 + 0.5 * (1.0 - 0.4)));
  CHECK(got.vs[1] == doctest::Approx(0.1 + 1.0 * (-2.0 - 0.1)));
  CHECK_THROWS_AS(VTraceTargets(mu, pi, r, std::vector<double>{0.0}, 0.0, 1.0, 1.0, 1.0), Error);
}

RLConfig SmallSarsa() {
  RLConfig cfg;
  cfg.episodes = 300;
  cfg.curve_window = 100;
  cfg.learning_rate = 1e-3;
  return cfg;
}

bool SamePopulation(const PaPopulation& a, const PaPopulation& b) {
  for (int i = 0; i < a.n; ++i) {
    if (a.seats[i].agent.has_value() != b.seats[i].agent.has_value()) return false;
    if (a.seats[i].agent && a.seats[i].agent->params() != b.seats[i].agent->params()) return false;
  }
  return true;
}

TEST_CASE("propose-accept population training") {
  pa::Config env;
  env.total_reward = 6;
  RLConfig cfg = SmallSarsa();
  const std::vector<Board> boards{kPaBoard, Board({6, 7, 5, 6, 8}, 15)};

  SUBCASE("zero episodes returns the initialization") {
    cfg.episodes = 0;
    const PaTrainResult r = TrainPa(boards, env, cfg, {}, 11);
    CHECK(SamePopulation(r.population, MakePaPopulation(5, env, cfg, {}, 11)));
    CHECK(r.curve.empty());
  }
  SUBCASE("training is deterministic and changes parameters") {
    const PaTrainResult a = TrainPa(boards, env, cfg, {}, 11);
    const PaTrainResult b = TrainPa(boards, env, cfg, {}, 11);
    std::ostringstream ca, cb;
    WriteLearningCurve(ca, a.curve);
    WriteLearningCurve(cb, b.curve);
    CHECK(ca.str() == cb.str());
    CHECK(a.curve.size() == 15);
    CHECK(SamePopulation(a.population, b.population));
    CHECK_FALSE(SamePopulation(a.population, MakePaPopulation(5, env, cfg, {}, 11)));

    Rng e1(3), e2(3);
    const EvalResult r1 = EvaluatePa(a.population, kPaBoard, 200, e1);
    const EvalResult r2 = EvaluatePa(a.population, kPaBoard, 200, e2);
    CHECK(r1.mean_rewards == r2.mean_rewards);
    for (const EvalRecord& rec : r1.episodes) {
      double total = 0;
      for (double x : rec.rewards) total += x;
      CHECK((total == 0.0 || total == 6.0));
    }
    for (double s : r1.mean_rewards) {
      CHECK(s >= 0.0);
      CHECK(s <= 6.0);
    }
    // Evaluation leaves the population untouched.
    CHECK(SamePopulation(a.population, b.population));
  }
  SUBCASE("mixed population keeps the bot seat") {
    std::vector<std::optional<BotParams>> bots(5);
    bots[2] = BotParams{BotMode::kWeight};
    const PaTrainResult r = TrainPa(boards, env, cfg, bots, 12);
    CHECK(r.population.seats[2].bot.has_value());
    CHECK_FALSE(r.population.seats[2].agent.has_value());
    Rng rng(1);
    CHECK(EvaluatePa(r.population, kPaBoard, 50, rng).mean_rewards.size() == 5);
  }
  SUBCASE("checkpoint round trip") {
    const PaTrainResult r = TrainPa(boards, env, cfg, {}, 13);
    Rng rng(77);
    rng.Uniform();
    std::stringstream buf;
    SaveCheckpoint(buf, r.population, rng);
    PaPopulation loaded = MakePaPopulation(5, env, cfg, {}, 999);
    Rng restored(0);
    LoadCheckpoint(buf, loaded, restored);
    CHECK(SamePopulation(loaded, r.population));
    CHECK(loaded.episodes_trained == 300);
    CHECK(loaded.seats[0].agent->optimizer().first_moment() ==
          r.population.seats[0].agent->optimizer().first_moment());
    CHECK(restored.Uniform() == rng.Uniform());
  }
  SUBCASE("divergence is reported") {
    cfg.learning_rate = 1e30;
    try {
      TrainPa(boards, env, cfg, {}, 14);
      FAIL("expected a training failure");
    } catch (const Error& e) {
      CHECK(e.code() == ErrorCode::kTrainingFailure);
      CHECK(std::string(e.what()).find("seat") != std::string::npos);
    }
  }
  SUBCASE("bad inputs") {
    CHECK_THROWS_AS(TrainPa({}, env, cfg, {}, 1), Error);
    cfg.lambda = 1.5;
    CHECK_THROWS_AS(TrainPa(boards, env, cfg, {}, 1), Error);
  }
}

TEST_CASE("team patches population training") {
  tp::Config env;
  RLConfig cfg;
  cfg.algorithm = Algorithm::kActorCritic;
  cfg.n_parallel_envs = 4;
  cfg.unroll_length = 10;
  cfg.episodes = 8;
  cfg.curve_window = 4;
  cfg.learning_rate = 1e-3;
  const std::vector<Board> boards{kPaBoard};
  const TpTrainResult a = TrainTp(boards, env, cfg, 21);
  const TpTrainResult b = TrainTp(boards, env, cfg, 21);
  CHECK(a.population.episodes_trained >= 8);
  for (int i = 0; i < 5; ++i) {
    CHECK(a.population.seats[i].params == b.population.seats[i].params);
    CHECK(a.population.seats[i].params != MakeTpPopulation(5, env, cfg, 21).seats[i].params);
  }
  std::ostringstream ca, cb;
  WriteLearningCurve(ca, a.curve);
  WriteLearningCurve(cb, b.curve);
  CHECK(ca.str() == cb.str());

  for (bool greedy : {true, false}) {
    TpPopulation pop = a.population;
    pop.rl.greedy_eval = greedy;
    Rng e1(5), e2(5);
    const EvalResult r1 = EvaluateTp(pop, kPaBoard, 10, e1);
    const EvalResult r2 = EvaluateTp(pop, kPaBoard, 10, e2);
    CHECK(r1.mean_rewards == r2.mean_rewards);
    CHECK(r1.episodes.size() == 10);
    for (const EvalRecord& rec : r1.episodes) {
      double total = 0;
      for (double x : rec.rewards) total += x;
      CHECK(total <= env.total_reward);
    }
  }

  cfg.episodes = 0;
  const TpTrainResult zero = TrainTp(boards, env, cfg, 21);
  CHECK(zero.population.seats[3].params == MakeTpPopulation(5, env, cfg, 21).seats[3].params);

  Rng rng(8);
  std::stringstream buf;
  SaveCheckpoint(buf, a.population, rng);
  TpPopulation loaded = MakeTpPopulation(5, env, cfg, 1);
  Rng restored(0);
  LoadCheckpoint(buf, loaded, restored);
  CHECK(loaded.seats[4].params == a.population.seats[4].params);
}

}  // namespace
}  // namespace negolab
