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

#include <cmath>

#include "weakmil/random.hpp"
#include "weakmil/tensor.hpp"

namespace weakmil::testing {

inline Tensor RandomTensor(Shape shape, Rng& rng, double scale = 1.0) {
  Tensor t(std::move(shape));
  for (double& v : t.data()) v = scale * rng.Normal();
  return t;
}

inline Tensor UnitRows(std::size_t n, std::size_t d, Rng& rng) {
  Tensor t = RandomTensor({n, d}, rng);
  for (std::size_t r = 0; r < n; ++r) {
    double s = 0.0;
    for (std::size_t c = 0; c < d; ++c) s += t.at(r, c) * t.at(r, c);
    s = std::sqrt(s);
    for (std::size_t c = 0; c < d; ++c) t.at(r, c) /= s;
  }
  return t;
}

}  // namespace weakmil::testing
