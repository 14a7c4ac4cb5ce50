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

#ifndef NEGOLAB_RNG_H_
#define NEGOLAB_RNG_H_

#include <cstdint>
#include <random>
#include <string>

namespace negolab {

// Seeded random stream. Every stochastic component takes one of these by
// reference so runs are reproducible from a single seed.
class Rng {
 public:
  explicit Rng(std::uint64_t seed = 0) : engine_(seed) {}

  // Uniform integer in [0, n).
  int UniformInt(int n) {
    return std::uniform_int_distribution<int>(0, n - 1)(engine_);
  }
  double Uniform() {
    return std::uniform_real_distribution<double>(0.0, 1.0)(engine_);
  }
  bool Bernoulli(double p) { return Uniform() < p; }
  double Normal(double mean, double stddev) {
    return std::normal_distribution<double>(mean, stddev)(engine_);
  }

  // Independent child stream; deterministic given this stream's state.
  Rng Split() {
    std::uint64_t a = engine_();
    std::uint64_t b = engine_();
    std::seed_seq seq{static_cast<std::uint32_t>(a), static_cast<std::uint32_t>(a >> 32),
                      static_cast<std::uint32_t>(b), static_cast<std::uint32_t>(b >> 32)};
    Rng child;
    child.engine_.seed(seq);
    return child;
  }

  std::mt19937_64& engine() { return engine_; }

  std::string SaveState() const;
  void LoadState(const std::string& state);

 private:
  std::mt19937_64 engine_;
};

// Stable seed derivation for (base seed, tag...) combinations.
std::uint64_t DeriveSeed(std::uint64_t base, std::uint64_t a, std::uint64_t b = 0);

}  // namespace negolab

#endif  // NEGOLAB_RNG_H_
