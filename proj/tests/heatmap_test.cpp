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

#include <algorithm>

#include "test_util.hpp"
#include "weakmil/error.hpp"
#include "weakmil/heatmap.hpp"
#include "weakmil/mil.hpp"

namespace weakmil::heatmap {
namespace {

TEST(Normalize, ConstantInputMapsToHalf) {
  EXPECT_EQ(NormalizeAttention(std::vector<double>(5, 0.2), {}), std::vector<double>(5, 0.5));
}

TEST(Normalize, MinMaxWithoutClipForSmallBags) {
  const auto v = NormalizeAttention(std::vector<double>{0.1, 0.3, 0.6}, {});
  EXPECT_NEAR(v[0], 0.0, 1e-15);
  EXPECT_NEAR(v[1], 0.4, 1e-15);
  EXPECT_NEAR(v[2], 1.0, 1e-15);
}

TEST(Normalize, PercentileClipForLargeBags) {
  std::vector<double> s(200);
  for (std::size_t i = 0; i < s.size(); ++i) s[i] = static_cast<double>(i);
  s[199] = 1e6;  // outlier
  const auto v = NormalizeAttention(s, {});
  const double hi = Percentile(s, 99);
  const double lo = Percentile(s, 1);
  for (std::size_t i = 0; i < s.size(); ++i) {
    const double expected = (std::clamp(s[i], lo, hi) - lo) / (hi - lo);
    EXPECT_NEAR(v[i], expected, 1e-12);
  }
  EXPECT_GT(v[100], 0.4);  // outlier does not flatten the rest
  NormalizeConfig off;
  off.percentile_clip = false;
  EXPECT_LT(NormalizeAttention(s, off)[100], 1e-3);
}

TEST(Percentile, LinearInterpolation) {
  const std::vector<double> v = {4, 1, 3, 2};
  EXPECT_EQ(Percentile(v, 0), 1.0);
  EXPECT_EQ(Percentile(v, 100), 4.0);
  EXPECT_NEAR(Percentile(v, 50), 2.5, 1e-15);
}

TEST(Colormap, EndpointsAreDistinct) {
  EXPECT_EQ(Colormap(0.0), (Rgb{0, 0, 255}));
  EXPECT_EQ(Colormap(1.0), (Rgb{255, 0, 0}));
  EXPECT_EQ(Colormap(2.0), Colormap(1.0));
}

FeatureBag Bag(std::vector<std::pair<std::size_t, std::size_t>> coords, Rng& rng) {
  FeatureBag b;
  b.slide_id = "s";
  b.coords = std::move(coords);
  b.features = testing::RandomTensor({b.coords.size(), 4}, rng);
  return b;
}

TEST(Overlay, AlphaBlendsOnlyBagCells) {
  Rng rng(1);
  const FeatureBag bag = Bag({{0, 0}, {1, 1}}, rng);
  const AttentionMap map = BuildMap("s", 1, 2, 2, bag, std::vector<double>{0.0, 1.0});
  const RgbImage thumb(16, 16, {100, 100, 100});
  EXPECT_EQ(RenderOverlay(thumb, map, 0.0), thumb);
  const RgbImage out = RenderOverlay(thumb, map, 0.5);
  EXPECT_EQ(out.Get(0, 0), (Rgb{50, 50, 178}));  // blue-ish at 0
  EXPECT_EQ(out.Get(12, 12), (Rgb{178, 50, 50}));
  EXPECT_EQ(out.Get(12, 0), (Rgb{100, 100, 100}));  // no patch
  EXPECT_THROW(RenderOverlay(RgbImage(8, 8), map, 0.5), DimensionError);
  EXPECT_THROW(RenderOverlay(thumb, map, 1.5), ContractError);
}

TEST(Map, RejectsOutOfGridCoordinates) {
  Rng rng(2);
  const FeatureBag bag = Bag({{0, 3}}, rng);
  EXPECT_THROW(BuildMap("s", 0, 2, 2, bag, std::vector<double>{0.5}), IndexError);
}

TEST(EmitClassPair, WritesTwoDistinctPngs) {
  testing::ScratchDir dir;
  Rng rng(3);
  mil::MilHyper h;
  h.hidden = 4;
  h.attention = 3;
  const ParamSet model = mil::InitMil(4, h, rng);
  const FeatureBag bag = Bag({{0, 0}, {0, 1}, {1, 0}}, rng);
  RgbImage slide(32, 32, {200, 150, 180});
  const auto pair = EmitClassPair(slide, 2, 2, model, bag, dir.path(), {}, 0.5);
  EXPECT_NE(pair[0].path, pair[1].path);
  for (int c = 0; c < 2; ++c) {
    EXPECT_TRUE(std::filesystem::exists(pair[c].path));
    EXPECT_EQ(ReadPng(pair[c].path).width(), 16u);
    EXPECT_LE(pair[c].min_raw, pair[c].max_raw);
    EXPECT_FALSE(pair[c].map.At(1, 1).has_value());
  }
}

}  // namespace
}  // namespace weakmil::heatmap
