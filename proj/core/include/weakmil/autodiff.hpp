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

// Tape-based reverse-mode differentiation.
//
// A Tape records every operation applied to its variables in evaluation
// order. Backward() walks the record in reverse and accumulates gradients
// into every node that (transitively) depends on a parameter. Tapes are
// single-use: build one per forward pass.

#pragma once

#include <cstddef>
#include <functional>
#include <span>
#include <vector>

#include "weakmil/tensor.hpp"

namespace weakmil::ag {

class Tape;

/// Handle to a node on a tape. Cheap to copy; only valid while the tape lives.
class Var {
 public:
  Var() = default;
  Var(Tape* tape, std::size_t id) : tape_(tape), id_(id) {}

  Tape* tape() const { return tape_; }
  std::size_t id() const { return id_; }
  const Tensor& value() const;
  const Tensor& grad() const;
  const Shape& shape() const { return value().shape(); }

 private:
  Tape* tape_ = nullptr;
  std::size_t id_ = 0;
};

class Tape {
 public:
  using BackwardFn = std::function<void(Tape&, std::size_t self)>;

  Tape() = default;
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  /// Leaf that never receives a gradient.
  Var Constant(Tensor value);
  /// Leaf whose gradient is accumulated by Backward().
  Var Parameter(Tensor value);

  /// Records an op result. `inputs` decide whether the node needs a gradient.
  Var Record(Tensor value, std::span<const Var> inputs, BackwardFn backward);

  /// Seeds d(loss)/d(loss) = 1 and propagates. `loss` must be a scalar.
  void Backward(Var loss);

  const Tensor& value(std::size_t id) const { return nodes_[id].value; }
  const Tensor& grad(std::size_t id) const;
  bool requires_grad(std::size_t id) const { return nodes_[id].requires_grad; }

  /// Adds `g` into the gradient of node `id` (allocating it on first use).
  void Accumulate(std::size_t id, const Tensor& g);
  /// Mutable gradient buffer for `id`, zero-initialized on first use.
  Tensor& GradBuffer(std::size_t id);

  std::size_t size() const { return nodes_.size(); }

 private:
  struct Node {
    Tensor value;
    Tensor grad;
    bool has_grad = false;
    bool requires_grad = false;
    BackwardFn backward;
  };
  std::vector<Node> nodes_;
};

// Linear algebra.
Var Matmul(Var a, Var b);
Var Transpose(Var a);
Var Reshape(Var a, Shape shape);

// Elementwise.
Var Add(Var a, Var b);
Var Sub(Var a, Var b);
Var Mul(Var a, Var b);
Var Scale(Var a, double s);
/// x[N,M] + b[M] broadcast over rows.
Var AddRowBias(Var x, Var b);
Var Relu(Var x);
Var Tanh(Var x);
Var Sigmoid(Var x);

// Reductions.
Var Sum(Var x);
Var Mean(Var x);
/// Row-wise dot product of two [N,D] tensors, giving [N,1].
Var RowDot(Var a, Var b);
/// Each row of x[N,D] divided by its L2 norm.
Var L2NormalizeRows(Var x);
/// Column concatenation of [N,A] and [N,B].
Var ConcatCols(Var a, Var b);
/// Softmax of a rank-2 tensor along `axis` (0 = down columns, 1 = along rows).
Var Softmax(Var x, std::size_t axis);
/// Mean over rows of -log softmax(logits[i])[labels[i]].
Var CrossEntropyRows(Var logits, std::span<const std::size_t> labels);

// Convolution (NCHW).
/// Stride-1, "same" zero padding, odd square kernel. w: [O,C,k,k], b: [O].
Var Conv2dSame(Var x, Var w, Var b);
/// 2x2 average pooling with stride 2. H and W must be even.
Var AvgPool2(Var x);
/// Mean over H,W giving [N,C].
Var GlobalAvgPool(Var x);

}  // namespace weakmil::ag
