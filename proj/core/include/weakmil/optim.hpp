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

#include "weakmil/param_set.hpp"

namespace weakmil {

struct SgdConfig {
  double learning_rate = 1e-3;
  double weight_decay = 0.0;
  /// Classical (heavy-ball) momentum; 0 disables the velocity buffer.
  double momentum = 0.0;

  void Validate() const;
};

/// One SGD step with L2 weight decay:
///   v <- momentum * v + (g + weight_decay * p)
///   p <- p - learning_rate * v
/// With momentum == 0 this is p - lr * (g + wd * p). `velocity` may be null
/// when momentum is 0; otherwise it is created on first use.
ParamSet SgdStep(const ParamSet& params, const ParamSet& grads,
                 const SgdConfig& cfg, ParamSet* velocity = nullptr);

/// In-place variant used by the training loops.
void SgdStepInPlace(ParamSet& params, const ParamSet& grads,
                    const SgdConfig& cfg, ParamSet* velocity = nullptr);

}  // namespace weakmil
