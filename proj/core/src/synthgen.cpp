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

#include "weakmil/synthgen.hpp"

#include <algorithm>
#include <cmath>
#include <set>

#include "json.hpp"
#include "weakmil/csv.hpp"
#include "weakmil/error.hpp"
#include "weakmil/parallel.hpp"
#include "weakmil/random.hpp"

namespace weakmil::synth {

namespace {

using Json = nlohmann::json;

constexpr Rgb kTissueLight = {222, 140, 190};
constexpr Rgb kTissueDark = {140, 80, 160};
constexpr Rgb kMarkerA = {205, 120, 110};
constexpr Rgb kMarkerB = {150, 80, 95};
constexpr int kTissueJitter = 6;
constexpr int kBackgroundJitter = 5;
constexpr double kFringeRadius = 0.35;   // in patch sides
constexpr double kFringeProbability = 0.5;
constexpr double kCheckerThreshold = 8.0;

std::uint8_t Clamp8(int v) {
  return static_cast<std::uint8_t>(std::clamp(v, 0, 255));
}

int Jitter(Rng& rng, int amplitude) {
  return static_cast<int>(rng.Below(2 * amplitude + 1)) - amplitude;
}

double SmoothStep(double t) { return t * t * (3.0 - 2.0 * t); }

// Bilinear value noise on a coarse lattice, in [0, 1].
class ValueNoise {
 public:
  ValueNoise(std::size_t extent, std::size_t spacing, Rng& rng)
      : spacing_(static_cast<double>(spacing)),
        n_(extent / spacing + 2),
        lattice_(n_ * n_) {
    for (double& v : lattice_) v = rng.Uniform();
  }

  double At(std::size_t x, std::size_t y) const {
    const double fx = static_cast<double>(x) / spacing_;
    const double fy = static_cast<double>(y) / spacing_;
    const std::size_t ix = static_cast<std::size_t>(fx);
    const std::size_t iy = static_cast<std::size_t>(fy);
    const double tx = SmoothStep(fx - static_cast<double>(ix));
    const double ty = SmoothStep(fy - static_cast<double>(iy));
    const double a = lattice_[iy * n_ + ix], b = lattice_[iy * n_ + ix + 1];
    const double c = lattice_[(iy + 1) * n_ + ix];
    const double d = lattice_[(iy + 1) * n_ + ix + 1];
    return (a * (1 - tx) + b * tx) * (1 - ty) + (c * (1 - tx) + d * tx) * ty;
  }

 private:
  double spacing_;
  std::size_t n_;
  std::vector<double> lattice_;
};

std::vector<std::vector<bool>> GrowBlob(std::size_t g, std::size_t target,
                                        Rng& rng) {
  std::vector<std::vector<bool>> tissue(g, std::vector<bool>(g, false));
  const std::size_t lo = g / 4, span = std::max<std::size_t>(1, g - 2 * lo);
  std::size_t r0 = lo + rng.Below(span), c0 = lo + rng.Below(span);
  if (r0 >= g) r0 = g - 1;
  if (c0 >= g) c0 = g - 1;
  tissue[r0][c0] = true;
  std::size_t count = 1;
  while (count < target) {
    // Frontier in row-major order so selection is deterministic.
    std::vector<Cell> frontier;
    for (std::size_t r = 0; r < g; ++r)
      for (std::size_t c = 0; c < g; ++c) {
        if (tissue[r][c]) continue;
        const bool adj = (r > 0 && tissue[r - 1][c]) ||
                         (r + 1 < g && tissue[r + 1][c]) ||
                         (c > 0 && tissue[r][c - 1]) ||
                         (c + 1 < g && tissue[r][c + 1]);
        if (adj) frontier.emplace_back(r, c);
      }
    if (frontier.empty()) break;
    const Cell pick = frontier[rng.Below(frontier.size())];
    tissue[pick.first][pick.second] = true;
    ++count;
  }
  return tissue;
}

Json CellsToJson(const std::vector<Cell>& cells) {
  Json arr = Json::array();
  for (const auto& [r, c] : cells) arr.push_back({r, c});
  return arr;
}

std::vector<Cell> CellsFromJson(const Json& j) {
  std::vector<Cell> out;
  for (const auto& e : j) {
    out.emplace_back(e.at(0).get<std::size_t>(), e.at(1).get<std::size_t>());
  }
  return out;
}

}  // namespace

void SynthSpec::Validate() const {
  if (n_slides == 0) throw ConfigError("synth.n_slides must be positive");
  if (!(positive_fraction >= 0.0 && positive_fraction <= 1.0)) {
    throw ConfigError("synth.positive_fraction must lie in [0, 1]");
  }
  if (patch_px == 0 || slide_px == 0 || slide_px % patch_px != 0) {
    throw ConfigError("synth.slide_px must be a positive multiple of patch_px");
  }
  if (!(marker_fraction > 0.0 && marker_fraction <= 1.0)) {
    throw ConfigError("synth.marker_fraction must lie in (0, 1]");
  }
  if (!(tissue_fraction_min > 0.0 && tissue_fraction_min <= tissue_fraction_max &&
        tissue_fraction_max <= 1.0)) {
    throw ConfigError(
        "synth tissue fractions must satisfy 0 < min <= max <= 1");
  }
  if (background_intensity < kBackgroundJitter ||
      background_intensity > 255 - kBackgroundJitter) {
    throw ConfigError("synth.background_intensity must leave room for +-5 noise");
  }
}

std::filesystem::path SlideManifest::ImagePath(const SlideRecord& r) const {
  return r.path.is_absolute() ? r.path : base_dir / r.path;
}

const SlideRecord& SlideManifest::Find(const std::string& slide_id) const {
  for (const auto& r : rows)
    if (r.slide_id == slide_id) return r;
  throw DatasetError("slide '" + slide_id + "' not in manifest");
}

std::vector<Cell> PlantedSlide::BackgroundCells() const {
  std::set<Cell> occupied(tissue_cells.begin(), tissue_cells.end());
  occupied.insert(fringe_cells.begin(), fringe_cells.end());
  std::vector<Cell> out;
  for (std::size_t r = 0; r < grid; ++r)
    for (std::size_t c = 0; c < grid; ++c)
      if (!occupied.count({r, c})) out.emplace_back(r, c);
  return out;
}

std::string SlideId(std::size_t index) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "slide_%03zu", index);
  return buf;
}

std::vector<int> AssignLabels(const SynthSpec& spec) {
  const auto n_pos = static_cast<std::size_t>(
      std::llround(spec.positive_fraction * static_cast<double>(spec.n_slides)));
  std::vector<int> labels(spec.n_slides, 0);
  for (std::size_t i = 0; i < n_pos; ++i) labels[i] = 1;
  Rng rng(DeriveSeed(spec.seed, "labels"));
  rng.Shuffle(labels);
  return labels;
}

GeneratedSlide GenerateSlide(const SynthSpec& spec, const std::string& slide_id,
                             int label) {
  spec.Validate();
  const std::size_t g = spec.grid();
  const std::size_t p = spec.patch_px;
  const std::uint64_t slide_seed = DeriveSeed(spec.seed, "slide:" + slide_id);
  Rng layout_rng(DeriveSeed(slide_seed, "layout"));
  Rng pixel_rng(DeriveSeed(slide_seed, "pixels"));
  Rng marker_rng(DeriveSeed(slide_seed, "markers"));

  const double cells = static_cast<double>(g * g);
  const double frac =
      layout_rng.Uniform(spec.tissue_fraction_min, spec.tissue_fraction_max);
  const std::size_t target = std::clamp<std::size_t>(
      static_cast<std::size_t>(std::ceil(frac * cells)), 1, g * g);
  const auto tissue = GrowBlob(g, target, layout_rng);

  GeneratedSlide out;
  PlantedSlide& planted = out.planted;
  planted.slide_id = slide_id;
  planted.label = label;
  planted.grid = g;
  for (std::size_t r = 0; r < g; ++r)
    for (std::size_t c = 0; c < g; ++c)
      if (tissue[r][c]) planted.tissue_cells.emplace_back(r, c);

  // Fringe bumps: a semicircle centred on the shared edge, clipped to the
  // background cell. At most one per background cell.
  struct Bump {
    double cx, cy;
    std::size_t r, c;
  };
  std::vector<Bump> bumps;
  for (std::size_t r = 0; r < g; ++r)
    for (std::size_t c = 0; c < g; ++c) {
      if (tissue[r][c]) continue;
      std::vector<int> sides;  // 0 up, 1 down, 2 left, 3 right
      if (r > 0 && tissue[r - 1][c]) sides.push_back(0);
      if (r + 1 < g && tissue[r + 1][c]) sides.push_back(1);
      if (c > 0 && tissue[r][c - 1]) sides.push_back(2);
      if (c + 1 < g && tissue[r][c + 1]) sides.push_back(3);
      if (sides.empty()) continue;
      const bool add = layout_rng.Bernoulli(kFringeProbability);
      const int side = sides[layout_rng.Below(sides.size())];
      if (!add) continue;
      const double x0 = static_cast<double>(c * p), y0 = static_cast<double>(r * p);
      const double half = static_cast<double>(p) / 2.0, full = static_cast<double>(p);
      Bump b{0, 0, r, c};
      switch (side) {
        case 0: b = {x0 + half, y0, r, c}; break;
        case 1: b = {x0 + half, y0 + full, r, c}; break;
        case 2: b = {x0, y0 + half, r, c}; break;
        default: b = {x0 + full, y0 + half, r, c}; break;
      }
      bumps.push_back(b);
      planted.fringe_cells.emplace_back(r, c);
    }

  std::set<Cell> markers;
  if (label == 1) {
    const auto n_markers = static_cast<std::size_t>(std::llround(
        spec.marker_fraction * static_cast<double>(planted.tissue_cells.size())));
    std::vector<Cell> pool = planted.tissue_cells;
    marker_rng.Shuffle(pool);
    markers.insert(pool.begin(), pool.begin() + std::min(n_markers, pool.size()));
  }
  planted.marker_cells.assign(markers.begin(), markers.end());

  // Pixel-level tissue mask.
  const std::size_t side = spec.slide_px;
  std::vector<std::uint8_t> mask(side * side, 0);
  for (const auto& [r, c] : planted.tissue_cells)
    for (std::size_t y = r * p; y < (r + 1) * p; ++y)
      std::fill_n(mask.begin() + y * side + c * p, p, 1);
  const double radius = kFringeRadius * static_cast<double>(p);
  for (const Bump& b : bumps) {
    for (std::size_t y = b.r * p; y < (b.r + 1) * p; ++y)
      for (std::size_t x = b.c * p; x < (b.c + 1) * p; ++x) {
        const double dx = static_cast<double>(x) + 0.5 - b.cx;
        const double dy = static_cast<double>(y) + 0.5 - b.cy;
        if (dx * dx + dy * dy < radius * radius) mask[y * side + x] = 1;
      }
  }

  ValueNoise noise(side, std::max<std::size_t>(4, p / 6), layout_rng);
  const std::size_t checker = std::max<std::size_t>(1, p / 16);
  out.image = RgbImage(side, side);
  const int bg = spec.background_intensity;
  for (std::size_t y = 0; y < side; ++y) {
    for (std::size_t x = 0; x < side; ++x) {
      std::uint8_t* px = out.image.px(x, y);
      if (!mask[y * side + x]) {
        for (int ch = 0; ch < 3; ++ch)
          px[ch] = Clamp8(bg + Jitter(pixel_rng, kBackgroundJitter));
        continue;
      }
      ++planted.tissue_pixels;
      const Cell cell{y / p, x / p};
      if (markers.count(cell)) {
        const std::size_t lx = (x % p) / checker, ly = (y % p) / checker;
        const Rgb& tone = ((lx + ly) % 2 == 0) ? kMarkerA : kMarkerB;
        for (int ch = 0; ch < 3; ++ch)
          px[ch] = Clamp8(tone[ch] + Jitter(pixel_rng, kTissueJitter));
      } else {
        const double t = noise.At(x, y);
        for (int ch = 0; ch < 3; ++ch) {
          const double v = kTissueLight[ch] * (1.0 - t) + kTissueDark[ch] * t;
          px[ch] = Clamp8(static_cast<int>(std::lround(v)) +
                          Jitter(pixel_rng, kTissueJitter));
        }
      }
    }
  }
  return out;
}

double CheckerResponse(const RgbImage& slide, const Cell& cell,
                       std::size_t patch_px) {
  const std::size_t checker = std::max<std::size_t>(1, patch_px / 16);
  const std::size_t x0 = cell.second * patch_px, y0 = cell.first * patch_px;
  double acc = 0.0;
  for (std::size_t y = 0; y < patch_px; ++y)
    for (std::size_t x = 0; x < patch_px; ++x) {
      const double l = Luminance(slide.px(x0 + x, y0 + y));
      acc += ((x / checker + y / checker) % 2 == 0) ? l : -l;
    }
  return std::abs(acc) / static_cast<double>(patch_px * patch_px);
}

bool DetectMarker(const RgbImage& slide, const Cell& cell, std::size_t patch_px) {
  return CheckerResponse(slide, cell, patch_px) > kCheckerThreshold;
}

std::vector<Cell> DetectMarkerCells(const RgbImage& slide, std::size_t patch_px) {
  std::vector<Cell> out;
  const std::size_t rows = slide.height() / patch_px;
  const std::size_t cols = slide.width() / patch_px;
  for (std::size_t r = 0; r < rows; ++r)
    for (std::size_t c = 0; c < cols; ++c)
      if (DetectMarker(slide, {r, c}, patch_px)) out.emplace_back(r, c);
  return out;
}

void WriteManifest(const std::filesystem::path& path, const SlideManifest& m) {
  CsvTable t;
  t.header = {"slide_id", "path", "label"};
  for (const auto& r : m.rows)
    t.rows.push_back({r.slide_id, r.path.generic_string(), std::to_string(r.label)});
  WriteCsv(path, t);
}

SlideManifest ReadManifest(const std::filesystem::path& path) {
  const CsvTable t = ReadCsv(path, {"slide_id", "path", "label"});
  SlideManifest m;
  m.base_dir = path.parent_path();
  std::set<std::string> seen;
  for (const auto& row : t.rows) {
    SlideRecord r;
    r.slide_id = row[0];
    r.path = row[1];
    if (row[2] != "0" && row[2] != "1") {
      throw FormatError("manifest '" + path.string() + "' has label '" + row[2] +
                            "' for slide " + row[0],
                        0);
    }
    r.label = row[2] == "1" ? 1 : 0;
    if (!seen.insert(r.slide_id).second) {
      throw DatasetError("duplicate slide_id '" + r.slide_id + "' in manifest");
    }
    m.rows.push_back(std::move(r));
  }
  return m;
}

void WritePlantedIndex(const std::filesystem::path& path, const PlantedIndex& p) {
  Json j;
  j["patch_px"] = p.patch_px;
  Json slides = Json::array();
  for (const auto& [id, s] : p.slides) {
    slides.push_back({{"slide_id", id},
                      {"label", s.label},
                      {"grid", s.grid},
                      {"tissue_pixels", s.tissue_pixels},
                      {"tissue_cells", CellsToJson(s.tissue_cells)},
                      {"fringe_cells", CellsToJson(s.fringe_cells)},
                      {"marker_cells", CellsToJson(s.marker_cells)}});
  }
  j["slides"] = std::move(slides);
  WriteTextFile(path, j.dump(1) + "\n");
}

PlantedIndex ReadPlantedIndex(const std::filesystem::path& path) {
  PlantedIndex p;
  try {
    const Json j = Json::parse(ReadTextFile(path));
    p.patch_px = j.at("patch_px").get<std::size_t>();
    for (const auto& s : j.at("slides")) {
      PlantedSlide ps;
      ps.slide_id = s.at("slide_id").get<std::string>();
      ps.label = s.at("label").get<int>();
      ps.grid = s.at("grid").get<std::size_t>();
      ps.tissue_pixels = s.at("tissue_pixels").get<std::size_t>();
      ps.tissue_cells = CellsFromJson(s.at("tissue_cells"));
      ps.fringe_cells = CellsFromJson(s.at("fringe_cells"));
      ps.marker_cells = CellsFromJson(s.at("marker_cells"));
      p.slides.emplace(ps.slide_id, std::move(ps));
    }
  } catch (const nlohmann::json::exception& e) {
    throw FormatError("marker index '" + path.string() + "': " + e.what(), 0);
  }
  return p;
}

SlideManifest GenerateCorpus(const SynthSpec& spec,
                             const std::filesystem::path& out_dir,
                             std::size_t threads) {
  spec.Validate();
  std::error_code ec;
  std::filesystem::create_directories(out_dir, ec);
  if (ec || !std::filesystem::is_directory(out_dir)) {
    throw IoError("cannot create output directory '" + out_dir.string() + "'");
  }
  const auto labels = AssignLabels(spec);
  std::vector<PlantedSlide> planted(spec.n_slides);
  ParallelFor(spec.n_slides, threads, [&](std::size_t i) {
    const std::string id = SlideId(i);
    GeneratedSlide s = GenerateSlide(spec, id, labels[i]);
    WritePng(out_dir / (id + ".png"), s.image);
    planted[i] = std::move(s.planted);
  });

  SlideManifest m;
  m.base_dir = out_dir;
  PlantedIndex index;
  index.patch_px = spec.patch_px;
  for (std::size_t i = 0; i < spec.n_slides; ++i) {
    const std::string id = SlideId(i);
    m.rows.push_back({id, id + ".png", labels[i]});
    index.slides.emplace(id, std::move(planted[i]));
  }
  WriteManifest(out_dir / "manifest.csv", m);
  WritePlantedIndex(out_dir / "markers.json", index);
  return m;
}

CorpusStats ComputeCorpusStats(const SlideManifest& manifest) {
  CorpusStats stats;
  for (const auto& r : manifest.rows) {
    ++stats.label_counts[r.label];
    const auto path = manifest.ImagePath(r);
    if (!std::filesystem::exists(path)) {
      throw IoError("image for slide '" + r.slide_id + "' missing at '" +
                    path.string() + "'");
    }
    const RgbImage img = ReadPng(path);
    std::size_t tissue = 0;
    for (std::size_t y = 0; y < img.height(); ++y)
      for (std::size_t x = 0; x < img.width(); ++x)
        if (Luminance(img.px(x, y)) < kStatsTissueLuminance) ++tissue;
    stats.tissue_fraction[r.slide_id] =
        static_cast<double>(tissue) /
        static_cast<double>(img.width() * img.height());
  }
  return stats;
}

}  // namespace weakmil::synth
