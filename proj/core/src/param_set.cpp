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

#include "weakmil/param_set.hpp"

#include "weakmil/error.hpp"

namespace weakmil {

void ParamSet::Add(const std::string& name, Tensor value) {
  if (!params_.emplace(name, std::move(value)).second) {
    throw ConfigError("duplicate parameter name '" + name + "'");
  }
}

void ParamSet::Set(const std::string& name, Tensor value) {
  Tensor& slot = at(name);
  if (slot.shape() != value.shape()) {
    throw DimensionError("parameter '" + name + "' has shape " +
                         ShapeString(slot.shape()) + ", cannot assign " +
                         ShapeString(value.shape()));
  }
  slot = std::move(value);
}

bool ParamSet::Contains(const std::string& name) const {
  return params_.count(name) != 0;
}

const Tensor& ParamSet::at(const std::string& name) const {
  auto it = params_.find(name);
  if (it == params_.end()) throw ConfigError("no parameter named '" + name + "'");
  return it->second;
}

Tensor& ParamSet::at(const std::string& name) {
  auto it = params_.find(name);
  if (it == params_.end()) throw ConfigError("no parameter named '" + name + "'");
  return it->second;
}

std::size_t ParamSet::ParameterCount() const {
  std::size_t n = 0;
  for (const auto& [_, t] : params_) n += t.size();
  return n;
}

ParamSet ParamSet::ZerosLike() const {
  ParamSet out;
  for (const auto& [name, t] : params_) out.Add(name, Tensor(t.shape()));
  return out;
}

bool ParamSet::CongruentWith(const ParamSet& other) const {
  if (params_.size() != other.params_.size()) return false;
  auto a = params_.begin();
  auto b = other.params_.begin();
  for (; a != params_.end(); ++a, ++b) {
    if (a->first != b->first || a->second.shape() != b->second.shape())
      return false;
  }
  return true;
}

bool ParamSet::AllFinite() const {
  for (const auto& [_, t] : params_)
    if (!t.AllFinite()) return false;
  return true;
}

BoundParams::BoundParams(ag::Tape& tape, const ParamSet& params) : tape_(&tape) {
  for (const auto& [name, t] : params) vars_.emplace(name, tape.Parameter(t));
}

ag::Var BoundParams::operator[](const std::string& name) const {
  auto it = vars_.find(name);
  if (it == vars_.end()) throw ConfigError("no bound parameter '" + name + "'");
  return it->second;
}

ParamSet BoundParams::Grads() const {
  ParamSet out;
  for (const auto& [name, v] : vars_) out.Add(name, tape_->grad(v.id()));
  return out;
}

}  // namespace weakmil
