// Copyright 2026 The weakmil Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <cstdint>
#include <random>
#include <string_view>
#include <vector>

#include "weakmil/tensor.hpp"

namespace weakmil {

/// Mixes a seed with a stream tag into an independent 64-bit seed.
std::uint64_t DeriveSeed(std::uint64_t seed, std::string_view tag);
std::uint64_t DeriveSeed(std::uint64_t seed, std::uint64_t index);

/// Seeded generator. The distribution helpers are implemented here rather
/// than with <random> distributions so streams are identical across
/// standard-library implementations.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  std::uint64_t NextU64() { return engine_(); }
  /// Uniform in [0, 1).
  double Uniform();
  double Uniform(double lo, double hi) { return lo + (hi - lo) * Uniform(); }
  /// Uniform integer in [0, n).
  std::uint64_t Below(std::uint64_t n);
  bool Bernoulli(double p) { return Uniform() < p; }
  double Normal();

  template <typename T>
  void Shuffle(std::vector<T>& v) {
    for (std::size_t i = v.size(); i > 1; --i) {
      std::swap(v[i - 1], v[Below(i)]);
    }
  }

 private:
  std::mt19937_64 engine_;
};

/// Uniform in +-sqrt(6 / (fan_in + fan_out)).
Tensor GlorotUniform(Shape shape, std::size_t fan_in, std::size_t fan_out,
                     Rng& rng);

/// Uniform in +-sqrt(6 / fan_in), variance 2 / fan_in, for layers followed
/// by a ReLU.
Tensor HeUniform(Shape shape, std::size_t fan_in, Rng& rng);

}  // namespace weakmil
