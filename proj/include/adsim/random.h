//
// Copyright 2026 The adsim Authors
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
//

#ifndef ADSIM_RANDOM_H_
#define ADSIM_RANDOM_H_

#include <cstdint>
#include <initializer_list>
#include <random>
#include <span>
#include <utility>

namespace adsim {

// Counter-based seed derivation. Each id is folded in with one splitmix64
// finalizer round, so DeriveSeed(s, {r, 0}) and DeriveSeed(s, {r, 1}) give
// independent streams for replication r.
uint64_t SplitMix64(uint64_t x);
uint64_t DeriveSeed(uint64_t master, std::initializer_list<uint64_t> ids);

// Random stream with samplers built directly on the mt19937_64 output
// sequence. The standard library's distribution objects are implementation
// defined, which would break cross-toolchain reproducibility of the logs.
class Rng {
 public:
  explicit Rng(uint64_t seed) : engine_(seed) {}

  uint64_t NextU64() { return engine_(); }

  // Uniform on the open interval (0, 1).
  double Uniform01();
  // Uniform integer in [0, n). n must be positive.
  uint64_t UniformInt(uint64_t n);
  bool Bernoulli(double p);
  double Exponential(double rate);
  double Normal();
  double LogNormal(double mu, double sigma);
  // Laplace(0, scale).
  double Laplace(double scale);

  template <typename T>
  void Shuffle(std::span<T> values) {
    for (size_t i = values.size(); i > 1; --i) {
      const size_t j = static_cast<size_t>(UniformInt(i));
      std::swap(values[i - 1], values[j]);
    }
  }

 private:
  std::mt19937_64 engine_;
};

}  // namespace adsim

#endif  // ADSIM_RANDOM_H_
