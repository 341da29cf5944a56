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

// Small convolutional patch encoder.
//
//   3 x [conv3x3 (same) -> ReLU -> avgpool 2x2]
//   -> global average pool
//   -> linear -> ReLU -> linear
//   -> L2 normalize
//
// The feature is the L2-normalized output of the final linear layer.

#pragma once

#include <array>
#include <span>
#include <vector>

#include "weakmil/autodiff.hpp"
#include "weakmil/image.hpp"
#include "weakmil/param_set.hpp"
#include "weakmil/random.hpp"

namespace weakmil::ssl {

struct EncoderConfig {
  /// Side the patch is downsampled to before the first convolution.
  /// Must be divisible by 8.
  std::size_t input_px = 32;
  std::array<std::size_t, 3> channels = {8, 16, 32};
  std::size_t head_hidden = 64;
  std::size_t feature_dim = 64;

  void Validate() const;
};

ParamSet InitEncoder(const EncoderConfig& cfg, Rng& rng);

/// Recovers the architecture (all but input_px) from parameter shapes.
EncoderConfig InferEncoderConfig(const ParamSet& params, std::size_t input_px);

/// [N, 3, H, W] tensor with values v / 255 - 0.5. All images must share one
/// size.
Tensor ImagesToTensor(std::span<const RgbImage> images);

/// Patch at any size, brought to cfg.input_px (area downsample when the
/// factor is integral, bilinear otherwise).
RgbImage PrepareEncoderInput(const RgbImage& patch, const EncoderConfig& cfg);

/// Differentiable forward pass on a tape. Returns unit-norm rows [N, D].
ag::Var EncodeOnTape(const BoundParams& params, ag::Var batch);

/// Inference-only forward pass.
Tensor Encode(const ParamSet& params, const Tensor& batch);
Tensor Encode(const ParamSet& params, std::span<const RgbImage> images);

}  // namespace weakmil::ssl
