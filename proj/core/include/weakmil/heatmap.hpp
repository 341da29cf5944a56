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

// Per-class attention heatmaps over slide thumbnails.

#pragma once

#include <array>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "weakmil/features.hpp"
#include "weakmil/image.hpp"
#include "weakmil/param_set.hpp"

namespace weakmil::heatmap {

/// Thumbnail pixels per grid cell side.
inline constexpr std::size_t kCellPx = 8;

struct NormalizeConfig {
  bool percentile_clip = true;
  double low_percentile = 1.0;
  double high_percentile = 99.0;
  /// Clipping applies only to bags at least this large.
  std::size_t clip_min_count = 100;
};

/// Min-max normalization to [0, 1], after optional percentile clipping.
/// Constant input (including a singleton) maps to 0.5 everywhere.
std::vector<double> NormalizeAttention(std::span<const double> scores,
                                       const NormalizeConfig& cfg = {});

/// Linear-interpolated percentile (0..100) of unsorted values.
double Percentile(std::span<const double> values, double pct);

struct AttentionMap {
  std::string slide_id;
  int class_id = 0;
  std::size_t rows = 0;
  std::size_t cols = 0;
  /// Row-major; empty for cells without a kept patch.
  std::vector<std::optional<double>> cells;

  const std::optional<double>& At(std::size_t row, std::size_t col) const {
    return cells[row * cols + col];
  }
};

AttentionMap BuildMap(const std::string& slide_id, int class_id,
                      std::size_t grid_rows, std::size_t grid_cols,
                      const FeatureBag& bag, std::span<const double> normalized);

/// Blue (0) to red (1): red rises and blue falls monotonically.
Rgb Colormap(double v);

/// Slide area-downsampled so every grid cell spans kCellPx pixels.
RgbImage Thumbnail(const RgbImage& slide, std::size_t grid_rows,
                   std::size_t grid_cols);

/// Blends the colormap at `alpha` over cells that have a value; other
/// pixels are copied unchanged. The thumbnail must be
/// (cols * kCellPx) x (rows * kCellPx).
RgbImage RenderOverlay(const RgbImage& thumbnail, const AttentionMap& map,
                       double alpha = 0.5);

struct ClassHeatmap {
  std::filesystem::path path;
  AttentionMap map;
  double min_raw = 0.0;
  double max_raw = 0.0;
};

/// Writes `{slide_id}_class0.png` and `{slide_id}_class1.png` into
/// `out_dir`, one per attention branch.
std::array<ClassHeatmap, 2> EmitClassPair(const RgbImage& slide,
                                          std::size_t grid_rows,
                                          std::size_t grid_cols,
                                          const ParamSet& model,
                                          const FeatureBag& bag,
                                          const std::filesystem::path& out_dir,
                                          const NormalizeConfig& cfg = {},
                                          double alpha = 0.5);

struct HeatmapIndexRow {
  std::string slide_id;
  int class_id = 0;
  std::filesystem::path path;
  double min_raw = 0.0;
  double max_raw = 0.0;
};

/// CSV `slide_id,class,path,min_raw,max_raw`.
void WriteHeatmapIndex(const std::filesystem::path& path,
                       const std::vector<HeatmapIndexRow>& rows);

}  // namespace weakmil::heatmap
