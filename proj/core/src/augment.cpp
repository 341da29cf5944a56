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

#include "weakmil/augment.hpp"

#include <algorithm>
#include <cmath>
#include <vector>

#include "weakmil/error.hpp"

namespace weakmil::ssl {

namespace {

std::uint8_t Round8(double v) {
  return static_cast<std::uint8_t>(std::clamp(std::lround(v), 0L, 255L));
}

bool InUnit(double p) { return p >= 0.0 && p <= 1.0; }

}  // namespace

void AugmentationConfig::Validate() const {
  if (!InUnit(hflip_probability) || !InUnit(vflip_probability) ||
      !InUnit(blur_probability)) {
    throw ConfigError("augmentation probabilities must lie in [0, 1]");
  }
  if (brightness < 0 || contrast < 0 || saturation < 0 || brightness > 1 ||
      contrast > 1 || saturation > 1) {
    throw ConfigError("colour jitter strengths must lie in [0, 1]");
  }
  if (!(blur_sigma_min > 0.0 && blur_sigma_min <= blur_sigma_max)) {
    throw ConfigError("blur sigma range must satisfy 0 < min <= max");
  }
  if (blur_reference_px == 0) throw ConfigError("blur_reference_px must be positive");
}

AugmentationConfig AugmentationConfig::Identity() {
  AugmentationConfig c;
  c.rotate90 = false;
  c.hflip_probability = 0.0;
  c.vflip_probability = 0.0;
  c.brightness = 0.0;
  c.contrast = 0.0;
  c.saturation = 0.0;
  c.blur_probability = 0.0;
  return c;
}

RgbImage Rotate90(const RgbImage& img, int quarter_turns) {
  const int k = ((quarter_turns % 4) + 4) % 4;
  if (k == 0) return img;
  const std::size_t w = img.width(), h = img.height();
  RgbImage out = (k == 2) ? RgbImage(w, h) : RgbImage(h, w);
  for (std::size_t y = 0; y < h; ++y)
    for (std::size_t x = 0; x < w; ++x) {
      std::size_t nx, ny;
      switch (k) {
        case 1: nx = h - 1 - y; ny = x; break;          // clockwise
        case 2: nx = w - 1 - x; ny = h - 1 - y; break;
        default: nx = y; ny = w - 1 - x; break;         // counter-clockwise
      }
      out.Set(nx, ny, img.Get(x, y));
    }
  return out;
}

RgbImage FlipHorizontal(const RgbImage& img) {
  RgbImage out(img.width(), img.height());
  for (std::size_t y = 0; y < img.height(); ++y)
    for (std::size_t x = 0; x < img.width(); ++x)
      out.Set(img.width() - 1 - x, y, img.Get(x, y));
  return out;
}

RgbImage FlipVertical(const RgbImage& img) {
  RgbImage out(img.width(), img.height());
  for (std::size_t y = 0; y < img.height(); ++y)
    for (std::size_t x = 0; x < img.width(); ++x)
      out.Set(x, img.height() - 1 - y, img.Get(x, y));
  return out;
}

RgbImage ColorJitter(const RgbImage& img, double brightness_factor,
                     double contrast_factor, double saturation_factor) {
  const std::size_t n = img.width() * img.height();
  std::vector<double> v(3 * n);
  for (std::size_t i = 0; i < 3 * n; ++i)
    v[i] = static_cast<double>(img.bytes()[i]) * brightness_factor;
  // Contrast pivots around the mean grey level of the brightened image.
  double mean = 0.0;
  for (std::size_t i = 0; i < n; ++i)
    mean += 0.299 * v[3 * i] + 0.587 * v[3 * i + 1] + 0.114 * v[3 * i + 2];
  mean /= static_cast<double>(std::max<std::size_t>(n, 1));
  for (double& x : v) x = (x - mean) * contrast_factor + mean;
  for (std::size_t i = 0; i < n; ++i) {
    const double gray =
        0.299 * v[3 * i] + 0.587 * v[3 * i + 1] + 0.114 * v[3 * i + 2];
    for (int c = 0; c < 3; ++c)
      v[3 * i + c] = gray + (v[3 * i + c] - gray) * saturation_factor;
  }
  RgbImage out(img.width(), img.height());
  for (std::size_t i = 0; i < 3 * n; ++i) out.bytes()[i] = Round8(v[i]);
  return out;
}

RgbImage GaussianBlur(const RgbImage& img, double sigma) {
  const int radius = static_cast<int>(std::ceil(3.0 * sigma));
  if (radius <= 0) return img;
  std::vector<double> kernel(2 * radius + 1);
  double z = 0.0;
  for (int i = -radius; i <= radius; ++i) {
    kernel[i + radius] = std::exp(-0.5 * i * i / (sigma * sigma));
    z += kernel[i + radius];
  }
  for (double& k : kernel) k /= z;

  const long w = static_cast<long>(img.width()), h = static_cast<long>(img.height());
  auto reflect = [](long i, long n) {
    if (n == 1) return 0L;
    while (i < 0 || i >= n) {
      if (i < 0) i = -i - 1;
      if (i >= n) i = 2 * n - i - 1;
    }
    return i;
  };
  std::vector<double> tmp(3 * w * h);
  for (long y = 0; y < h; ++y)
    for (long x = 0; x < w; ++x)
      for (int c = 0; c < 3; ++c) {
        double acc = 0.0;
        for (int i = -radius; i <= radius; ++i)
          acc += kernel[i + radius] * img.px(reflect(x + i, w), y)[c];
        tmp[3 * (y * w + x) + c] = acc;
      }
  RgbImage out(img.width(), img.height());
  for (long y = 0; y < h; ++y)
    for (long x = 0; x < w; ++x)
      for (int c = 0; c < 3; ++c) {
        double acc = 0.0;
        for (int i = -radius; i <= radius; ++i)
          acc += kernel[i + radius] * tmp[3 * (reflect(y + i, h) * w + x) + c];
        out.px(x, y)[c] = Round8(acc);
      }
  return out;
}

RgbImage Augment(const RgbImage& patch, const AugmentationConfig& cfg, Rng& rng) {
  // Every draw happens unconditionally so the stream advances identically
  // whatever the configuration.
  const int turns = static_cast<int>(rng.Below(4));
  const bool hflip = rng.Bernoulli(cfg.hflip_probability);
  const bool vflip = rng.Bernoulli(cfg.vflip_probability);
  const double fb = rng.Uniform(1.0 - cfg.brightness, 1.0 + cfg.brightness);
  const double fc = rng.Uniform(1.0 - cfg.contrast, 1.0 + cfg.contrast);
  const double fs = rng.Uniform(1.0 - cfg.saturation, 1.0 + cfg.saturation);
  const bool blur = rng.Bernoulli(cfg.blur_probability);
  const double sigma = rng.Uniform(cfg.blur_sigma_min, cfg.blur_sigma_max);

  RgbImage out = cfg.rotate90 ? Rotate90(patch, turns) : patch;
  if (hflip) out = FlipHorizontal(out);
  if (vflip) out = FlipVertical(out);
  if (cfg.brightness > 0 || cfg.contrast > 0 || cfg.saturation > 0) {
    out = ColorJitter(out, fb, fc, fs);
  }
  if (blur) {
    const double scale = static_cast<double>(out.width()) /
                         static_cast<double>(cfg.blur_reference_px);
    out = GaussianBlur(out, sigma * scale);
  }
  return out;
}

std::pair<RgbImage, RgbImage> AugmentPair(const RgbImage& patch,
                                          const AugmentationConfig& cfg,
                                          Rng& rng) {
  RgbImage q = Augment(patch, cfg, rng);
  RgbImage k = Augment(patch, cfg, rng);
  return {std::move(q), std::move(k)};
}

}  // namespace weakmil::ssl
