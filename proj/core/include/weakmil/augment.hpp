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

#include <utility>

#include "weakmil/image.hpp"
#include "weakmil/random.hpp"

namespace weakmil::ssl {

struct AugmentationConfig {
  /// Rotate by a uniformly drawn multiple of 90 degrees.
  bool rotate90 = true;
  double hflip_probability = 0.5;
  double vflip_probability = 0.5;
  double brightness = 0.4;
  double contrast = 0.4;
  double saturation = 0.4;
  double blur_probability = 0.5;
  double blur_sigma_min = 0.1;
  double blur_sigma_max = 2.0;
  /// Side length the blur sigmas are expressed at. Images of another size
  /// get sigma scaled by side / blur_reference_px.
  std::size_t blur_reference_px = 224;

  void Validate() const;
  /// Every transform disabled.
  static AugmentationConfig Identity();
};

/// One random view: rotation, flips, colour jitter, Gaussian blur, in that
/// order. Output is clamped to [0, 255].
RgbImage Augment(const RgbImage& patch, const AugmentationConfig& cfg, Rng& rng);

/// Two independently sampled views of the same patch.
std::pair<RgbImage, RgbImage> AugmentPair(const RgbImage& patch,
                                          const AugmentationConfig& cfg,
                                          Rng& rng);

// Individual transforms, exposed for testing.
RgbImage Rotate90(const RgbImage& img, int quarter_turns);
RgbImage FlipHorizontal(const RgbImage& img);
RgbImage FlipVertical(const RgbImage& img);
RgbImage ColorJitter(const RgbImage& img, double brightness_factor,
                     double contrast_factor, double saturation_factor);
RgbImage GaussianBlur(const RgbImage& img, double sigma);

}  // namespace weakmil::ssl
