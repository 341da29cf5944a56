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

// Synthetic slide corpus.
//
// Each slide is a grid of patch cells. A connected blob of cells is filled
// with a low-frequency pink/purple "tissue" texture on a near-white
// background; some background cells next to the blob get a partial
// semicircular tissue bump (fringe). On positive slides a fixed fraction of
// the full tissue cells is overwritten with the marker: a two-tone checker,
// chroma-shifted from the tissue palette but with a similar mean luminance.

#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include "weakmil/image.hpp"

namespace weakmil::synth {

struct SynthSpec {
  std::size_t n_slides = 60;
  double positive_fraction = 0.5;
  std::size_t slide_px = 2240;
  std::size_t patch_px = 224;
  double marker_fraction = 0.2;
  std::uint8_t background_intensity = 248;
  /// Range for the fraction of grid cells that are full tissue.
  double tissue_fraction_min = 0.45;
  double tissue_fraction_max = 0.70;
  std::uint64_t seed = 7;

  void Validate() const;
  std::size_t grid() const { return slide_px / patch_px; }
};

using Cell = std::pair<std::size_t, std::size_t>;  // (row, col)

struct SlideRecord {
  std::string slide_id;
  /// Image path. Relative paths are resolved against the manifest directory.
  std::filesystem::path path;
  int label = 0;
};

struct SlideManifest {
  std::vector<SlideRecord> rows;
  /// Directory relative paths are resolved against.
  std::filesystem::path base_dir;

  std::filesystem::path ImagePath(const SlideRecord& r) const;
  const SlideRecord& Find(const std::string& slide_id) const;
};

/// Generator bookkeeping for one slide.
struct PlantedSlide {
  std::string slide_id;
  int label = 0;
  std::size_t grid = 0;
  std::vector<Cell> tissue_cells;  // fully covered, row-major order
  std::vector<Cell> fringe_cells;  // partially covered background cells
  std::vector<Cell> marker_cells;  // subset of tissue_cells, row-major order
  std::size_t tissue_pixels = 0;

  /// Cells with no tissue pixels at all.
  std::vector<Cell> BackgroundCells() const;
};

struct PlantedIndex {
  std::size_t patch_px = 0;
  std::map<std::string, PlantedSlide> slides;
};

struct GeneratedSlide {
  RgbImage image;
  PlantedSlide planted;
};

/// Renders one slide. Output depends only on (spec, slide_id, label).
GeneratedSlide GenerateSlide(const SynthSpec& spec, const std::string& slide_id,
                             int label);

/// Label assignment: round(n * positive_fraction) positives, placed by a
/// seeded permutation.
std::vector<int> AssignLabels(const SynthSpec& spec);

std::string SlideId(std::size_t index);

/// Writes `{slide_id}.png`, `manifest.csv` and `markers.json` into `out_dir`.
SlideManifest GenerateCorpus(const SynthSpec& spec,
                             const std::filesystem::path& out_dir,
                             std::size_t threads = 1);

void WriteManifest(const std::filesystem::path& path, const SlideManifest& m);
SlideManifest ReadManifest(const std::filesystem::path& path);

void WritePlantedIndex(const std::filesystem::path& path, const PlantedIndex& p);
PlantedIndex ReadPlantedIndex(const std::filesystem::path& path);

/// Checker response of one cell: |mean(sign * luminance)| where sign
/// alternates on squares of side patch_px / 16 anchored at the cell origin.
double CheckerResponse(const RgbImage& slide, const Cell& cell,
                       std::size_t patch_px);
/// Marker detector used to cross-check generator bookkeeping.
bool DetectMarker(const RgbImage& slide, const Cell& cell, std::size_t patch_px);
std::vector<Cell> DetectMarkerCells(const RgbImage& slide, std::size_t patch_px);

struct CorpusStats {
  std::map<int, std::size_t> label_counts;
  std::map<std::string, double> tissue_fraction;
};

/// Pixels with luminance below this are counted as tissue by CorpusStats.
inline constexpr std::uint8_t kStatsTissueLuminance = 220;

CorpusStats ComputeCorpusStats(const SlideManifest& manifest);

}  // namespace weakmil::synth
