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

#include "weakmil/preprocess.hpp"

#include <algorithm>
#include <cmath>

#include "weakmil/csv.hpp"
#include "weakmil/error.hpp"

namespace weakmil::prep {

namespace {

using u128 = unsigned __int128;

// Split statistics: n0 pixels at or below t with luminance sum s0.
struct Split {
  std::uint64_t n0 = 0, n1 = 0;
  // |N * S0 - n0 * S| = |n1 * S0 - n0 * S1|.
  std::uint64_t d = 0;
};

// 192-bit product of a 128-bit and a 64-bit unsigned value, as (hi, lo).
struct Wide {
  std::uint64_t hi;
  u128 lo;
  auto operator<=>(const Wide&) const = default;
};

Wide MulWide(u128 a, std::uint64_t b) {
  const u128 p0 = static_cast<u128>(static_cast<std::uint64_t>(a)) * b;
  const u128 p1 = static_cast<u128>(static_cast<std::uint64_t>(a >> 64)) * b;
  const u128 shifted = p1 << 64;
  const u128 lo = p0 + shifted;
  const std::uint64_t carry = lo < p0 ? 1 : 0;
  return {static_cast<std::uint64_t>(p1 >> 64) + carry, lo};
}

// Exact comparison of d_a^2 / (n0_a n1_a) against d_b^2 / (n0_b n1_b).
// Both denominators are nonzero.
int CompareScores(const Split& a, const Split& b) {
  const u128 da2 = static_cast<u128>(a.d) * a.d;
  const u128 db2 = static_cast<u128>(b.d) * b.d;
  const u128 dena = static_cast<u128>(a.n0) * a.n1;
  const u128 denb = static_cast<u128>(b.n0) * b.n1;
  const Wide lhs = MulWide(da2, static_cast<std::uint64_t>(denb));
  const Wide rhs = MulWide(db2, static_cast<std::uint64_t>(dena));
  if (lhs < rhs) return -1;
  if (lhs > rhs) return 1;
  return 0;
}

std::uint8_t LowerMedian(const std::array<std::uint64_t, 256>& counts,
                         std::uint64_t n) {
  const std::uint64_t target = (n - 1) / 2;  // zero-based rank
  std::uint64_t seen = 0;
  for (int v = 0; v < 256; ++v) {
    seen += counts[v];
    if (seen > target) return static_cast<std::uint8_t>(v);
  }
  return 255;
}

}  // namespace

std::uint64_t GrayHistogram::Total() const {
  std::uint64_t n = 0;
  for (auto c : bins) n += c;
  return n;
}

GrayHistogram LuminanceHistogram(const RgbImage& image) {
  GrayHistogram h;
  const std::uint8_t* p = image.bytes().data();
  const std::size_t n = image.width() * image.height();
  for (std::size_t i = 0; i < n; ++i) ++h.bins[Luminance(p + 3 * i)];
  return h;
}

double BetweenClassVariance(const GrayHistogram& hist, int t) {
  const double total = static_cast<double>(hist.Total());
  double n0 = 0, s0 = 0, s = 0;
  for (int i = 0; i < 256; ++i) {
    s += static_cast<double>(i) * static_cast<double>(hist.bins[i]);
    if (i <= t) {
      n0 += static_cast<double>(hist.bins[i]);
      s0 += static_cast<double>(i) * static_cast<double>(hist.bins[i]);
    }
  }
  const double n1 = total - n0;
  if (n0 == 0 || n1 == 0) return 0.0;
  const double mu0 = s0 / n0, mu1 = (s - s0) / n1;
  const double w0 = n0 / total, w1 = n1 / total;
  return w0 * w1 * (mu0 - mu1) * (mu0 - mu1);
}

int OtsuThreshold(const GrayHistogram& hist) {
  const std::uint64_t total = hist.Total();
  if (total == 0) throw DegenerateHistogramError("empty histogram");
  // Keeps |n1*S0 - n0*S1| and n0*n1 within 64 bits.
  if (total >= (std::uint64_t{1} << 28)) {
    throw ContractError("histogram too large for exact Otsu (>= 2^28 pixels)");
  }
  std::uint64_t sum = 0;
  for (int i = 0; i < 256; ++i) sum += static_cast<std::uint64_t>(i) * hist.bins[i];

  std::vector<Split> splits(255);
  std::vector<bool> valid(255, false);
  std::uint64_t n0 = 0, s0 = 0;
  for (int t = 0; t < 255; ++t) {
    n0 += hist.bins[t];
    s0 += static_cast<std::uint64_t>(t) * hist.bins[t];
    const std::uint64_t n1 = total - n0;
    if (n0 == 0 || n1 == 0) continue;
    const std::uint64_t s1 = sum - s0;
    const u128 a = static_cast<u128>(n1) * s0, b = static_cast<u128>(n0) * s1;
    const u128 diff = a > b ? a - b : b - a;
    splits[t] = {n0, n1, static_cast<std::uint64_t>(diff)};
    valid[t] = true;
  }

  int best = -1;
  for (int t = 0; t < 255; ++t) {
    if (!valid[t]) continue;
    if (best < 0 || CompareScores(splits[t], splits[best]) > 0) best = t;
  }
  if (best < 0 || splits[best].d == 0) {
    throw DegenerateHistogramError(
        "all histogram mass lies in a single luminance bin");
  }
  int end = best;
  while (end + 1 < 255 && valid[end + 1] &&
         CompareScores(splits[end + 1], splits[best]) == 0) {
    ++end;
  }
  return (best + end) / 2;
}

std::size_t TissueMask::Count() const {
  return static_cast<std::size_t>(std::count(bits.begin(), bits.end(), 1));
}

TissueMask ComputeTissueMask(const RgbImage& slide, int threshold) {
  TissueMask m;
  m.width = slide.width();
  m.height = slide.height();
  m.bits.resize(m.width * m.height);
  const std::uint8_t* p = slide.bytes().data();
  for (std::size_t i = 0; i < m.bits.size(); ++i)
    m.bits[i] = Luminance(p + 3 * i) < threshold ? 1 : 0;
  return m;
}

void QcThresholds::Validate() const {
  if (!(min_tissue_fraction >= 0.0 && min_tissue_fraction <= 1.0)) {
    throw ConfigError("qc.min_tissue_fraction must lie in [0, 1]");
  }
  if (white_mean_halfwidth > white_mean_center) {
    throw ConfigError("qc.white_mean_halfwidth exceeds white_mean_center");
  }
}

void MicronsConfig::Validate() const {
  if (!(patch_microns > 0.0)) throw ConfigError("microns.patch_microns must be positive");
  if (!(microns_per_pixel > 0.0)) {
    throw ConfigError("microns.microns_per_pixel must be positive");
  }
}

std::size_t PatchSidePixels(const MicronsConfig& cfg) {
  cfg.Validate();
  return static_cast<std::size_t>(
      std::llround(cfg.patch_microns / cfg.microns_per_pixel));
}

const char* DropReasonName(DropReason r) {
  switch (r) {
    case DropReason::kNone: return "";
    case DropReason::kNearWhite: return "near_white";
    case DropReason::kLowChannelMedian: return "low_channel_median";
    case DropReason::kLowTissue: return "low_tissue";
  }
  return "";
}

DropReason ParseDropReason(const std::string& s) {
  if (s.empty()) return DropReason::kNone;
  if (s == "near_white") return DropReason::kNearWhite;
  if (s == "low_channel_median") return DropReason::kLowChannelMedian;
  if (s == "low_tissue") return DropReason::kLowTissue;
  throw FormatError("unknown drop_reason '" + s + "'", 0);
}

std::size_t PatchGrid::KeptCount() const {
  return static_cast<std::size_t>(std::count_if(
      records.begin(), records.end(), [](const PatchRecord& r) { return r.kept; }));
}

std::vector<const PatchRecord*> PatchGrid::Kept() const {
  std::vector<const PatchRecord*> out;
  for (const auto& r : records)
    if (r.kept) out.push_back(&r);
  return out;
}

PatchRecord EvaluateTile(const RgbImage& slide, const TissueMask& mask,
                         std::size_t row, std::size_t col, std::size_t patch_px,
                         const QcThresholds& qc) {
  PatchRecord rec;
  rec.row = row;
  rec.col = col;
  std::array<std::array<std::uint64_t, 256>, 3> counts{};
  std::uint64_t tissue = 0, channel_sum = 0;
  const std::size_t x0 = col * patch_px, y0 = row * patch_px;
  for (std::size_t y = y0; y < y0 + patch_px; ++y) {
    const std::uint8_t* p = slide.px(x0, y);
    const std::uint8_t* m = mask.bits.data() + y * mask.width + x0;
    for (std::size_t x = 0; x < patch_px; ++x) {
      ++counts[0][p[3 * x]];
      ++counts[1][p[3 * x + 1]];
      ++counts[2][p[3 * x + 2]];
      channel_sum += p[3 * x] + p[3 * x + 1] + p[3 * x + 2];
      tissue += m[x];
    }
  }
  const std::uint64_t n = static_cast<std::uint64_t>(patch_px) * patch_px;
  rec.tissue_fraction = static_cast<double>(tissue) / static_cast<double>(n);
  rec.mean_intensity =
      static_cast<double>(channel_sum) / static_cast<double>(3 * n);
  for (int c = 0; c < 3; ++c) rec.channel_medians[c] = LowerMedian(counts[c], n);

  const double white_lo = static_cast<double>(qc.white_mean_center) -
                          static_cast<double>(qc.white_mean_halfwidth);
  if (rec.mean_intensity >= white_lo) {
    rec.drop_reason = DropReason::kNearWhite;
  } else if (*std::min_element(rec.channel_medians.begin(),
                               rec.channel_medians.end()) <
             qc.min_channel_median) {
    rec.drop_reason = DropReason::kLowChannelMedian;
  } else if (rec.tissue_fraction < qc.min_tissue_fraction) {
    rec.drop_reason = DropReason::kLowTissue;
  } else {
    rec.kept = true;
  }
  return rec;
}

PatchGrid GridPatches(const std::string& slide_id, const RgbImage& slide,
                      const TissueMask& mask, std::size_t patch_px_source,
                      const QcThresholds& qc, std::size_t output_px) {
  qc.Validate();
  if (patch_px_source == 0 || patch_px_source > slide.width() ||
      patch_px_source > slide.height()) {
    throw DimensionError("patch side " + std::to_string(patch_px_source) +
                         " does not fit slide " + std::to_string(slide.width()) +
                         "x" + std::to_string(slide.height()));
  }
  if (mask.width != slide.width() || mask.height != slide.height()) {
    throw DimensionError("tissue mask size does not match slide");
  }
  PatchGrid grid;
  grid.slide_id = slide_id;
  grid.patch_px_source = patch_px_source;
  grid.output_px = output_px;
  const std::size_t rows = slide.height() / patch_px_source;
  const std::size_t cols = slide.width() / patch_px_source;
  grid.records.reserve(rows * cols);
  for (std::size_t r = 0; r < rows; ++r)
    for (std::size_t c = 0; c < cols; ++c)
      grid.records.push_back(EvaluateTile(slide, mask, r, c, patch_px_source, qc));
  return grid;
}

RgbImage ResizePatch(const RgbImage& patch, std::size_t output_px) {
  if (patch.width() != patch.height()) {
    throw DimensionError("resize_patch needs a square patch, got " +
                         std::to_string(patch.width()) + "x" +
                         std::to_string(patch.height()));
  }
  if (output_px == 0) throw DimensionError("resize_patch output side is zero");
  const std::size_t in = patch.width();
  if (in == output_px) return patch;
  RgbImage out(output_px, output_px);
  const double scale = static_cast<double>(in) / static_cast<double>(output_px);
  const double max_coord = static_cast<double>(in - 1);
  for (std::size_t y = 0; y < output_px; ++y) {
    const double sy =
        std::clamp((static_cast<double>(y) + 0.5) * scale - 0.5, 0.0, max_coord);
    const std::size_t y0 = static_cast<std::size_t>(sy);
    const std::size_t y1 = std::min(y0 + 1, in - 1);
    const double fy = sy - static_cast<double>(y0);
    for (std::size_t x = 0; x < output_px; ++x) {
      const double sx =
          std::clamp((static_cast<double>(x) + 0.5) * scale - 0.5, 0.0, max_coord);
      const std::size_t x0 = static_cast<std::size_t>(sx);
      const std::size_t x1 = std::min(x0 + 1, in - 1);
      const double fx = sx - static_cast<double>(x0);
      for (int c = 0; c < 3; ++c) {
        const double top = patch.px(x0, y0)[c] * (1 - fx) + patch.px(x1, y0)[c] * fx;
        const double bot = patch.px(x0, y1)[c] * (1 - fx) + patch.px(x1, y1)[c] * fx;
        const double v = top * (1 - fy) + bot * fy;
        out.px(x, y)[c] =
            static_cast<std::uint8_t>(std::clamp(std::lround(v), 0L, 255L));
      }
    }
  }
  return out;
}

RgbImage DownsampleArea(const RgbImage& patch, std::size_t output_px) {
  if (patch.width() != patch.height()) {
    throw DimensionError("downsample needs a square patch");
  }
  const std::size_t in = patch.width();
  if (output_px == 0 || in % output_px != 0) return ResizePatch(patch, output_px);
  const std::size_t f = in / output_px;
  if (f == 1) return patch;
  RgbImage out(output_px, output_px);
  const std::size_t area = f * f;
  for (std::size_t y = 0; y < output_px; ++y)
    for (std::size_t x = 0; x < output_px; ++x) {
      std::array<std::size_t, 3> acc{};
      for (std::size_t dy = 0; dy < f; ++dy) {
        const std::uint8_t* p = patch.px(x * f, y * f + dy);
        for (std::size_t dx = 0; dx < f; ++dx)
          for (int c = 0; c < 3; ++c) acc[c] += p[3 * dx + c];
      }
      for (int c = 0; c < 3; ++c)
        out.px(x, y)[c] = static_cast<std::uint8_t>((acc[c] + area / 2) / area);
    }
  return out;
}

SlidePreprocessResult PreprocessSlide(const std::string& slide_id,
                                      const RgbImage& slide,
                                      std::size_t patch_px_source,
                                      const QcThresholds& qc,
                                      std::size_t output_px) {
  SlidePreprocessResult res;
  TissueMask mask;
  try {
    res.threshold = OtsuThreshold(LuminanceHistogram(slide));
    mask = ComputeTissueMask(slide, res.threshold);
  } catch (const DegenerateHistogramError&) {
    res.threshold = -1;
    mask.width = slide.width();
    mask.height = slide.height();
    mask.bits.assign(mask.width * mask.height, 0);
  }
  res.grid = GridPatches(slide_id, slide, mask, patch_px_source, qc, output_px);
  return res;
}

void WritePatchGridCsv(const std::filesystem::path& path,
                       const std::vector<PatchGrid>& grids) {
  CsvTable t;
  t.header = {"slide_id", "row", "col", "kept", "drop_reason"};
  for (const auto& g : grids)
    for (const auto& r : g.records)
      t.rows.push_back({g.slide_id, std::to_string(r.row), std::to_string(r.col),
                        r.kept ? "1" : "0", DropReasonName(r.drop_reason)});
  WriteCsv(path, t);
}

std::vector<PatchGrid> ReadPatchGridCsv(const std::filesystem::path& path) {
  const CsvTable t =
      ReadCsv(path, {"slide_id", "row", "col", "kept", "drop_reason"});
  std::vector<PatchGrid> grids;
  for (const auto& row : t.rows) {
    if (grids.empty() || grids.back().slide_id != row[0]) {
      grids.emplace_back();
      grids.back().slide_id = row[0];
    }
    PatchRecord r;
    try {
      r.row = std::stoul(row[1]);
      r.col = std::stoul(row[2]);
    } catch (const std::exception&) {
      throw FormatError("bad row/col in patch grid '" + path.string() + "'", 0);
    }
    r.kept = row[3] == "1";
    r.drop_reason = ParseDropReason(row[4]);
    grids.back().records.push_back(r);
  }
  return grids;
}

}  // namespace weakmil::prep
