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

#include "weakmil/heatmap.hpp"

#include <algorithm>
#include <cmath>

#include "weakmil/csv.hpp"
#include "weakmil/error.hpp"
#include "weakmil/mil.hpp"
#include "weakmil/preprocess.hpp"

namespace weakmil::heatmap {

double Percentile(std::span<const double> values, double pct) {
  if (values.empty()) throw ContractError("percentile of an empty set");
  std::vector<double> v(values.begin(), values.end());
  std::sort(v.begin(), v.end());
  const double pos = std::clamp(pct, 0.0, 100.0) / 100.0 * (v.size() - 1);
  const std::size_t lo = static_cast<std::size_t>(std::floor(pos));
  const std::size_t hi = std::min(lo + 1, v.size() - 1);
  return v[lo] + (pos - lo) * (v[hi] - v[lo]);
}

std::vector<double> NormalizeAttention(std::span<const double> scores,
                                       const NormalizeConfig& cfg) {
  if (scores.empty()) throw ContractError("cannot normalize an empty score set");
  std::vector<double> v(scores.begin(), scores.end());
  if (cfg.percentile_clip && v.size() >= cfg.clip_min_count) {
    const double lo = Percentile(v, cfg.low_percentile);
    const double hi = Percentile(v, cfg.high_percentile);
    for (double& x : v) x = std::clamp(x, lo, hi);
  }
  const auto [mn, mx] = std::minmax_element(v.begin(), v.end());
  const double lo = *mn, range = *mx - *mn;
  if (!(range > 0.0)) return std::vector<double>(v.size(), 0.5);
  for (double& x : v) x = std::clamp((x - lo) / range, 0.0, 1.0);
  return v;
}

AttentionMap BuildMap(const std::string& slide_id, int class_id,
                      std::size_t grid_rows, std::size_t grid_cols,
                      const FeatureBag& bag, std::span<const double> normalized) {
  if (normalized.size() != bag.size()) {
    throw DimensionError("one normalized value per bag row is required");
  }
  AttentionMap m;
  m.slide_id = slide_id;
  m.class_id = class_id;
  m.rows = grid_rows;
  m.cols = grid_cols;
  m.cells.assign(grid_rows * grid_cols, std::nullopt);
  for (std::size_t i = 0; i < bag.size(); ++i) {
    const auto [r, c] = bag.coords[i];
    if (r >= grid_rows || c >= grid_cols) {
      throw IndexError("bag coordinate outside the heatmap grid");
    }
    m.cells[r * grid_cols + c] = normalized[i];
  }
  return m;
}

Rgb Colormap(double v) {
  v = std::clamp(v, 0.0, 1.0);
  const auto u8 = [](double x) {
    return static_cast<std::uint8_t>(std::lround(std::clamp(x, 0.0, 255.0)));
  };
  // Green peaks mid-scale so middling values read as purple-grey rather
  // than black.
  return {u8(255.0 * v), u8(160.0 * v * (1.0 - v)), u8(255.0 * (1.0 - v))};
}

RgbImage Thumbnail(const RgbImage& slide, std::size_t grid_rows,
                   std::size_t grid_cols) {
  if (grid_rows != grid_cols || slide.width() != slide.height()) {
    throw DimensionError("thumbnails need a square slide and grid");
  }
  return prep::DownsampleArea(slide, grid_cols * kCellPx);
}

RgbImage RenderOverlay(const RgbImage& thumbnail, const AttentionMap& map,
                       double alpha) {
  if (thumbnail.width() != map.cols * kCellPx ||
      thumbnail.height() != map.rows * kCellPx) {
    throw DimensionError("thumbnail does not match the " + std::to_string(map.rows) +
                         "x" + std::to_string(map.cols) + " attention grid");
  }
  if (!(alpha >= 0.0 && alpha <= 1.0)) throw ContractError("alpha must lie in [0, 1]");
  RgbImage out = thumbnail;
  for (std::size_t r = 0; r < map.rows; ++r)
    for (std::size_t c = 0; c < map.cols; ++c) {
      const auto& v = map.At(r, c);
      if (!v) continue;
      const Rgb tint = Colormap(*v);
      for (std::size_t y = r * kCellPx; y < (r + 1) * kCellPx; ++y)
        for (std::size_t x = c * kCellPx; x < (c + 1) * kCellPx; ++x) {
          std::uint8_t* p = out.px(x, y);
          for (int k = 0; k < 3; ++k)
            p[k] = static_cast<std::uint8_t>(
                std::lround((1.0 - alpha) * p[k] + alpha * tint[k]));
        }
    }
  return out;
}

std::array<ClassHeatmap, 2> EmitClassPair(const RgbImage& slide,
                                          std::size_t grid_rows,
                                          std::size_t grid_cols,
                                          const ParamSet& model,
                                          const FeatureBag& bag,
                                          const std::filesystem::path& out_dir,
                                          const NormalizeConfig& cfg,
                                          double alpha) {
  const mil::MilOutput out = mil::MilForward(model, bag);
  const RgbImage thumb = Thumbnail(slide, grid_rows, grid_cols);
  std::array<ClassHeatmap, 2> result;
  for (int c = 0; c < 2; ++c) {
    const auto& a = out.attention[c];
    const auto [mn, mx] = std::minmax_element(a.begin(), a.end());
    ClassHeatmap& h = result[c];
    h.min_raw = *mn;
    h.max_raw = *mx;
    h.map = BuildMap(bag.slide_id, c, grid_rows, grid_cols, bag,
                     NormalizeAttention(a, cfg));
    h.path = out_dir / (bag.slide_id + "_class" + std::to_string(c) + ".png");
    WritePng(h.path, RenderOverlay(thumb, h.map, alpha));
  }
  return result;
}

void WriteHeatmapIndex(const std::filesystem::path& path,
                       const std::vector<HeatmapIndexRow>& rows) {
  CsvTable t;
  t.header = {"slide_id", "class", "path", "min_raw", "max_raw"};
  for (const auto& r : rows) {
    t.rows.push_back({r.slide_id, std::to_string(r.class_id),
                      r.path.generic_string(), FormatDouble(r.min_raw),
                      FormatDouble(r.max_raw)});
  }
  WriteCsv(path, t);
}

}  // namespace weakmil::heatmap
