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

#include <array>
#include <cstdint>
#include <filesystem>
#include <vector>

namespace weakmil {

using Rgb = std::array<std::uint8_t, 3>;

/// Interleaved 8-bit RGB raster, row-major.
class RgbImage {
 public:
  RgbImage() = default;
  RgbImage(std::size_t width, std::size_t height, Rgb fill = {0, 0, 0});

  std::size_t width() const { return width_; }
  std::size_t height() const { return height_; }
  bool empty() const { return pixels_.empty(); }

  std::uint8_t* px(std::size_t x, std::size_t y) {
    return pixels_.data() + 3 * (y * width_ + x);
  }
  const std::uint8_t* px(std::size_t x, std::size_t y) const {
    return pixels_.data() + 3 * (y * width_ + x);
  }
  void Set(std::size_t x, std::size_t y, Rgb c) {
    std::uint8_t* p = px(x, y);
    p[0] = c[0];
    p[1] = c[1];
    p[2] = c[2];
  }
  Rgb Get(std::size_t x, std::size_t y) const {
    const std::uint8_t* p = px(x, y);
    return {p[0], p[1], p[2]};
  }

  std::vector<std::uint8_t>& bytes() { return pixels_; }
  const std::vector<std::uint8_t>& bytes() const { return pixels_; }

  /// Copy of the axis-aligned square/rectangle at (x0, y0).
  RgbImage Crop(std::size_t x0, std::size_t y0, std::size_t w,
                std::size_t h) const;

  bool operator==(const RgbImage& other) const = default;

 private:
  std::size_t width_ = 0;
  std::size_t height_ = 0;
  std::vector<std::uint8_t> pixels_;
};

/// round(0.299 R + 0.587 G + 0.114 B), evaluated in exact integer
/// arithmetic so the histogram is bit-stable.
std::uint8_t Luminance(const std::uint8_t* rgb);

/// 8-bit RGB PNG. Compression level is fixed so output is byte-stable.
void WritePng(const std::filesystem::path& path, const RgbImage& image);
RgbImage ReadPng(const std::filesystem::path& path);

}  // namespace weakmil
