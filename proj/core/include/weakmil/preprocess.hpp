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

// Tissue segmentation and patch tiling.
//
// A slide's luminance histogram is split with Otsu's method; pixels darker
// than the threshold are tissue. The slide is then tiled from the origin
// into non-overlapping square patches (partial edge tiles discarded) and
// each tile passes or fails three quality checks.

#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "weakmil/image.hpp"

namespace weakmil::prep {

struct GrayHistogram {
  std::array<std::uint64_t, 256> bins{};

  std::uint64_t Total() const;
};

GrayHistogram LuminanceHistogram(const RgbImage& image);

/// Threshold t maximizing between-class variance of [0..t] vs [t+1..255].
/// Ties (a plateau of maximizers) resolve to the plateau midpoint, rounded
/// down, where the plateau is the run of consecutive maximizers starting at
/// the smallest one. Throws DegenerateHistogramError when the histogram is
/// empty or all mass sits in one bin.
int OtsuThreshold(const GrayHistogram& hist);

/// Between-class variance w0 * w1 * (mu0 - mu1)^2 of the split at t
/// (0 when either side is empty).
double BetweenClassVariance(const GrayHistogram& hist, int t);

/// Row-major binary mask; 1 marks tissue (luminance < t).
struct TissueMask {
  std::size_t width = 0;
  std::size_t height = 0;
  std::vector<std::uint8_t> bits;

  std::size_t Count() const;
};

TissueMask ComputeTissueMask(const RgbImage& slide, int threshold);

struct QcThresholds {
  std::uint8_t min_channel_median = 20;
  std::uint8_t white_mean_center = 245;
  std::uint8_t white_mean_halfwidth = 10;
  double min_tissue_fraction = 0.5;

  void Validate() const;
};

struct MicronsConfig {
  double patch_microns = 360.0;
  double microns_per_pixel = 0.25;

  void Validate() const;
};

/// round(patch_microns / microns_per_pixel).
std::size_t PatchSidePixels(const MicronsConfig& cfg);

enum class DropReason { kNone, kNearWhite, kLowChannelMedian, kLowTissue };

const char* DropReasonName(DropReason r);
DropReason ParseDropReason(const std::string& s);

struct PatchRecord {
  std::size_t row = 0;
  std::size_t col = 0;
  bool kept = false;
  DropReason drop_reason = DropReason::kNone;

  // Measurements behind the decision.
  double tissue_fraction = 0.0;
  double mean_intensity = 0.0;
  std::array<std::uint8_t, 3> channel_medians{};
};

struct PatchGrid {
  std::string slide_id;
  std::size_t patch_px_source = 0;
  std::size_t output_px = 224;
  std::vector<PatchRecord> records;  // row-major

  std::size_t KeptCount() const;
  std::vector<const PatchRecord*> Kept() const;
};

/// Quality verdict for a single tile. Checks in order: near-white mean
/// (mean in [center - halfwidth, 255]), channel medians, tissue fraction.
PatchRecord EvaluateTile(const RgbImage& slide, const TissueMask& mask,
                         std::size_t row, std::size_t col,
                         std::size_t patch_px, const QcThresholds& qc);

PatchGrid GridPatches(const std::string& slide_id, const RgbImage& slide,
                      const TissueMask& mask, std::size_t patch_px_source,
                      const QcThresholds& qc, std::size_t output_px = 224);

/// Bilinear resize of a square patch (pixel-centre aligned). Same size is
/// an exact copy.
RgbImage ResizePatch(const RgbImage& patch, std::size_t output_px);

/// Box-filter downsample by an integer factor; falls back to bilinear when
/// the sizes do not divide.
RgbImage DownsampleArea(const RgbImage& patch, std::size_t output_px);

/// Full per-slide pipeline: histogram, Otsu, mask, grid. A degenerate
/// histogram yields an all-dropped grid.
struct SlidePreprocessResult {
  int threshold = -1;  // -1 when the histogram was degenerate
  PatchGrid grid;
};

SlidePreprocessResult PreprocessSlide(const std::string& slide_id,
                                      const RgbImage& slide,
                                      std::size_t patch_px_source,
                                      const QcThresholds& qc,
                                      std::size_t output_px = 224);

/// CSV `slide_id,row,col,kept,drop_reason`, grids concatenated in order.
void WritePatchGridCsv(const std::filesystem::path& path,
                       const std::vector<PatchGrid>& grids);
std::vector<PatchGrid> ReadPatchGridCsv(const std::filesystem::path& path);

}  // namespace weakmil::prep
