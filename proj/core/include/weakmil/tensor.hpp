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

#include <cstddef>
#include <initializer_list>
#include <span>
#include <string>
#include <vector>

namespace weakmil {

using Shape = std::vector<std::size_t>;

std::size_t ShapeSize(const Shape& shape);
std::string ShapeString(const Shape& shape);

/// Dense row-major tensor of doubles. The element count always equals the
/// product of the shape; a rank-0 tensor holds one scalar.
class Tensor {
 public:
  Tensor() : shape_{}, data_(1, 0.0) {}
  explicit Tensor(Shape shape, double fill = 0.0);
  Tensor(Shape shape, std::vector<double> data);

  static Tensor Scalar(double v) { return Tensor(Shape{}, {v}); }
  /// Rank-2 tensor from nested rows; every row must have the same length.
  static Tensor Matrix(std::initializer_list<std::initializer_list<double>> rows);
  static Tensor Vector(std::initializer_list<double> values);
  static Tensor Identity(std::size_t n);

  const Shape& shape() const { return shape_; }
  std::size_t rank() const { return shape_.size(); }
  std::size_t dim(std::size_t axis) const;
  std::size_t size() const { return data_.size(); }

  std::span<double> data() { return data_; }
  std::span<const double> data() const { return data_; }
  const std::vector<double>& values() const { return data_; }

  double& operator[](std::size_t i) { return data_[i]; }
  double operator[](std::size_t i) const { return data_[i]; }

  /// Rank-2 element access.
  double& at(std::size_t r, std::size_t c) { return data_[r * shape_[1] + c]; }
  double at(std::size_t r, std::size_t c) const {
    return data_[r * shape_[1] + c];
  }

  double item() const;

  /// Same data, new shape of equal element count.
  Tensor Reshaped(Shape shape) const;

  void Fill(double v);
  bool AllFinite() const;

  bool operator==(const Tensor& other) const = default;

 private:
  Shape shape_;
  std::vector<double> data_;
};

/// Standard matrix product of rank-2 tensors.
Tensor Matmul(const Tensor& a, const Tensor& b);
Tensor Transpose(const Tensor& a);

/// Numerically stable softmax along `axis` (max subtracted first).
Tensor Softmax(const Tensor& x, std::size_t axis = 0);

/// log(sum(exp(x))) over all elements, computed stably.
double LogSumExp(std::span<const double> x);

/// -log softmax(logits)[label] for a single logits vector.
double CrossEntropy(std::span<const double> logits, std::size_t label);

double MaxAbsDiff(const Tensor& a, const Tensor& b);

}  // namespace weakmil
