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

#include "weakmil/features.hpp"

#include <algorithm>

#include "weakmil/checkpoint.hpp"
#include "weakmil/csv.hpp"
#include "weakmil/error.hpp"
#include "weakmil/parallel.hpp"

namespace weakmil {

namespace {

constexpr std::string_view kBagMagic = "WBAG";
constexpr std::size_t kExtractChunk = 32;

std::uint32_t ToU32(std::size_t v, const char* what) {
  if (v > UINT32_MAX) throw ContractError(std::string(what) + " exceeds u32");
  return static_cast<std::uint32_t>(v);
}

}  // namespace

RgbImage ExtractPatch(const RgbImage& slide, const prep::PatchGrid& grid,
                      std::size_t row, std::size_t col) {
  const std::size_t s = grid.patch_px_source;
  if ((col + 1) * s > slide.width() || (row + 1) * s > slide.height()) {
    throw IndexError("patch (" + std::to_string(row) + ", " +
                     std::to_string(col) + ") lies outside the slide");
  }
  return prep::ResizePatch(slide.Crop(col * s, row * s, s, s), grid.output_px);
}

FeatureBag ExtractFeatures(const ParamSet& query, const ssl::EncoderConfig& cfg,
                           const RgbImage& slide, const prep::PatchGrid& grid,
                           int label, std::size_t threads) {
  const auto kept = grid.Kept();
  if (kept.empty()) {
    throw DatasetError("slide '" + grid.slide_id + "' has no kept patches");
  }
  FeatureBag bag;
  bag.slide_id = grid.slide_id;
  bag.label = label;
  for (const auto* r : kept) bag.coords.emplace_back(r->row, r->col);

  const std::size_t n = kept.size(), d = cfg.feature_dim;
  bag.features = Tensor({n, d});
  const std::size_t chunks = (n + kExtractChunk - 1) / kExtractChunk;
  ParallelFor(chunks, threads, [&](std::size_t c) {
    const std::size_t lo = c * kExtractChunk, hi = std::min(n, lo + kExtractChunk);
    std::vector<RgbImage> inputs;
    inputs.reserve(hi - lo);
    for (std::size_t i = lo; i < hi; ++i) {
      inputs.push_back(ssl::PrepareEncoderInput(
          ExtractPatch(slide, grid, kept[i]->row, kept[i]->col), cfg));
    }
    const Tensor f = ssl::Encode(query, inputs);
    if (f.dim(1) != d) {
      throw DimensionError("encoder output width " + std::to_string(f.dim(1)) +
                           " differs from feature_dim " + std::to_string(d));
    }
    auto dst = bag.features.data();
    for (std::size_t i = 0; i < f.size(); ++i)
      dst[lo * d + i] = static_cast<double>(static_cast<float>(f[i]));
  });
  return bag;
}

std::vector<std::uint8_t> EncodeBag(const FeatureBag& bag) {
  if (bag.features.rank() != 2 || bag.features.dim(0) != bag.coords.size()) {
    throw DimensionError("bag features must be [N, D] with N coordinates");
  }
  if (bag.slide_id.size() > UINT16_MAX) throw ContractError("slide_id too long");
  if (bag.label != 0 && bag.label != 1) throw ContractError("bag label must be 0 or 1");
  std::vector<std::uint8_t> out(kBagMagic.begin(), kBagMagic.end());
  le::PutU16(out, kBagVersion);
  le::PutU16(out, static_cast<std::uint16_t>(bag.slide_id.size()));
  out.insert(out.end(), bag.slide_id.begin(), bag.slide_id.end());
  le::PutU8(out, static_cast<std::uint8_t>(bag.label));
  le::PutU32(out, ToU32(bag.size(), "bag size"));
  le::PutU32(out, ToU32(bag.dim(), "feature dimension"));
  for (const auto& [r, c] : bag.coords) {
    le::PutU32(out, ToU32(r, "row"));
    le::PutU32(out, ToU32(c, "col"));
  }
  for (double v : bag.features.data()) le::PutF32(out, static_cast<float>(v));
  return out;
}

FeatureBag DecodeBag(const std::vector<std::uint8_t>& bytes) {
  le::Reader r(bytes);
  if (r.Bytes(4) != kBagMagic) throw FormatError("bad bag magic", 0);
  const std::uint16_t version = r.U16();
  if (version != kBagVersion) {
    throw FormatError("unsupported bag version " + std::to_string(version), 4);
  }
  FeatureBag bag;
  bag.slide_id = r.Bytes(r.U16());
  const std::size_t label_at = r.offset();
  const std::uint8_t label = r.U8();
  if (label > 1) throw FormatError("bag label must be 0 or 1", label_at);
  bag.label = label;
  const std::size_t dims_at = r.offset();
  const std::size_t n = r.U32(), d = r.U32();
  if (n == 0 || d == 0) throw FormatError("bag has an empty dimension", dims_at);
  // Size check before allocating so a corrupt header cannot request
  // gigabytes.
  const std::size_t remaining = bytes.size() - r.offset();
  if (n * 8 > remaining || n * d > (remaining - n * 8) / 4) {
    throw FormatError("bag payload truncated", r.offset());
  }
  bag.coords.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t row = r.U32();
    bag.coords.emplace_back(row, r.U32());
  }
  std::vector<double> data(n * d);
  for (auto& v : data) v = r.F32();
  bag.features = Tensor({n, d}, std::move(data));
  if (!r.AtEnd()) throw FormatError("trailing bytes after bag payload", r.offset());
  return bag;
}

void SaveBag(const FeatureBag& bag, const std::filesystem::path& path) {
  le::WriteFile(path, EncodeBag(bag));
}

FeatureBag LoadBag(const std::filesystem::path& path) {
  return DecodeBag(le::ReadFile(path));
}

void WriteBagIndex(const std::filesystem::path& path,
                   const std::vector<BagIndexRow>& rows) {
  CsvTable t;
  t.header = {"slide_id", "label", "n_patches", "bag_path"};
  for (const auto& r : rows) {
    t.rows.push_back({r.slide_id, std::to_string(r.label),
                      std::to_string(r.n_patches), r.bag_path.generic_string()});
  }
  WriteCsv(path, t);
}

std::vector<BagIndexRow> ReadBagIndex(const std::filesystem::path& path) {
  const CsvTable t = ReadCsv(path, {"slide_id", "label", "n_patches", "bag_path"});
  std::vector<BagIndexRow> rows;
  for (const auto& f : t.rows) {
    BagIndexRow r;
    r.slide_id = f[0];
    try {
      r.label = std::stoi(f[1]);
      r.n_patches = std::stoul(f[2]);
    } catch (const std::exception&) {
      throw FormatError("bad numeric field in bag index row for '" + f[0] + "'", 0);
    }
    r.bag_path = f[3];
    rows.push_back(std::move(r));
  }
  return rows;
}

std::vector<FeatureBag> LoadBagsFromIndex(const std::filesystem::path& index) {
  std::vector<FeatureBag> bags;
  for (const auto& row : ReadBagIndex(index)) {
    const auto p = row.bag_path.is_absolute() ? row.bag_path
                                              : index.parent_path() / row.bag_path;
    if (!std::filesystem::exists(p)) {
      throw DependencyError("missing feature bag '" + p.string() + "'");
    }
    bags.push_back(LoadBag(p));
  }
  return bags;
}

}  // namespace weakmil
