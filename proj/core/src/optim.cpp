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

#include "weakmil/optim.hpp"

#include "weakmil/error.hpp"

namespace weakmil {

void SgdConfig::Validate() const {
  if (!(learning_rate >= 0.0)) {
    throw ConfigError("sgd learning_rate must be nonnegative");
  }
  if (!(weight_decay >= 0.0)) {
    throw ConfigError("sgd weight_decay must be nonnegative");
  }
  if (!(momentum >= 0.0 && momentum < 1.0)) {
    throw ConfigError("sgd momentum must lie in [0, 1)");
  }
}

void SgdStepInPlace(ParamSet& params, const ParamSet& grads,
                    const SgdConfig& cfg, ParamSet* velocity) {
  cfg.Validate();
  const bool use_momentum = cfg.momentum > 0.0;
  if (use_momentum && velocity == nullptr) {
    throw ConfigError("sgd momentum > 0 requires a velocity buffer");
  }
  if (use_momentum && velocity->empty()) *velocity = params.ZerosLike();
  for (auto& [name, p] : params) {
    if (!grads.Contains(name)) {
      throw ConfigError("missing gradient for parameter '" + name + "'");
    }
    const Tensor& g = grads.at(name);
    if (g.shape() != p.shape()) {
      throw DimensionError("gradient for '" + name + "' has shape " +
                           ShapeString(g.shape()) + ", parameter has " +
                           ShapeString(p.shape()));
    }
    auto pd = p.data();
    auto gd = g.data();
    if (use_momentum) {
      auto vd = velocity->at(name).data();
      for (std::size_t i = 0; i < pd.size(); ++i) {
        vd[i] = cfg.momentum * vd[i] + (gd[i] + cfg.weight_decay * pd[i]);
        pd[i] -= cfg.learning_rate * vd[i];
      }
    } else {
      for (std::size_t i = 0; i < pd.size(); ++i)
        pd[i] -= cfg.learning_rate * (gd[i] + cfg.weight_decay * pd[i]);
    }
  }
}

ParamSet SgdStep(const ParamSet& params, const ParamSet& grads,
                 const SgdConfig& cfg, ParamSet* velocity) {
  ParamSet out = params;
  SgdStepInPlace(out, grads, cfg, velocity);
  return out;
}

}  // namespace weakmil
