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

#include <map>
#include <string>

#include "weakmil/autodiff.hpp"
#include "weakmil/tensor.hpp"

namespace weakmil {

/// Named parameters with deterministic (lexicographic) iteration order.
/// A parameter's shape is fixed once added; Set() enforces it.
class ParamSet {
 public:
  using Map = std::map<std::string, Tensor>;

  void Add(const std::string& name, Tensor value);
  void Set(const std::string& name, Tensor value);
  bool Contains(const std::string& name) const;
  const Tensor& at(const std::string& name) const;
  Tensor& at(const std::string& name);

  std::size_t size() const { return params_.size(); }
  bool empty() const { return params_.empty(); }
  std::size_t ParameterCount() const;

  Map::const_iterator begin() const { return params_.begin(); }
  Map::const_iterator end() const { return params_.end(); }
  Map::iterator begin() { return params_.begin(); }
  Map::iterator end() { return params_.end(); }

  /// Zero tensors with this set's names and shapes.
  ParamSet ZerosLike() const;
  /// Same names and shapes as `other`.
  bool CongruentWith(const ParamSet& other) const;
  bool AllFinite() const;

  bool operator==(const ParamSet& other) const = default;

 private:
  Map params_;
};

/// Parameters placed on a tape as differentiable leaves.
class BoundParams {
 public:
  BoundParams(ag::Tape& tape, const ParamSet& params);

  ag::Var operator[](const std::string& name) const;
  /// Gradients of every bound parameter after Tape::Backward().
  ParamSet Grads() const;

 private:
  ag::Tape* tape_;
  std::map<std::string, ag::Var> vars_;
};

}  // namespace weakmil
