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

// Per-slide feature bags and their binary store.
//
// WBAG layout (little-endian):
//   "WBAG", version u16,
//   slide_id: u16 length + bytes, label u8, N u32, D u32,
//   coords: N x (row u32, col u32),
//   features: N x D f32, row-major.

#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <utility>
#include <vector>

#include "weakmil/encoder.hpp"
#include "weakmil/preprocess.hpp"

namespace weakmil {

inline constexpr std::uint16_t kBagVersion = 1;

struct FeatureBag {
  std::string slide_id;
  int label = 0;
  /// [N, D]. Values are exactly representable in f32.
  Tensor features;
  /// (row, col) per feature row, row-major grid order.
  std::vector<std::pair<std::size_t, std::size_t>> coords;

  std::size_t size() const { return coords.size(); }
  std::size_t dim() const { return features.rank() == 2 ? features.dim(1) : 0; }
  bool operator==(const FeatureBag&) const = default;
};

/// Source tile at (row, col) of the grid, resized to grid.output_px.
RgbImage ExtractPatch(const RgbImage& slide, const prep::PatchGrid& grid,
                      std::size_t row, std::size_t col);

/// One feature row per kept patch, encoded with `query` and no
/// augmentation, rounded to f32. Throws DatasetError when no patch is kept.
FeatureBag ExtractFeatures(const ParamSet& query, const ssl::EncoderConfig& cfg,
                           const RgbImage& slide, const prep::PatchGrid& grid,
                           int label, std::size_t threads = 1);

std::vector<std::uint8_t> EncodeBag(const FeatureBag& bag);
/// FormatError (with byte offset) on bad magic, version, or truncation.
FeatureBag DecodeBag(const std::vector<std::uint8_t>& bytes);

void SaveBag(const FeatureBag& bag, const std::filesystem::path& path);
FeatureBag LoadBag(const std::filesystem::path& path);

struct BagIndexRow {
  std::string slide_id;
  int label = 0;
  std::size_t n_patches = 0;
  /// Relative paths resolve against the index file's directory.
  std::filesystem::path bag_path;
};

/// CSV `slide_id,label,n_patches,bag_path`.
void WriteBagIndex(const std::filesystem::path& path,
                   const std::vector<BagIndexRow>& rows);
std::vector<BagIndexRow> ReadBagIndex(const std::filesystem::path& path);

/// Loads every bag listed in an index, in index order.
std::vector<FeatureBag> LoadBagsFromIndex(const std::filesystem::path& index);

}  // namespace weakmil
