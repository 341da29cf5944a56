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

#include <optional>

#include "oracles.hpp"
#include "test_util.hpp"
#include "weakmil/error.hpp"
#include "weakmil/preprocess.hpp"

namespace weakmil::prep {
namespace {

using testing::BruteForceOtsu;
using testing::Compare;
using testing::ExactVariance;
using testing::RandomHistogram;

TEST(Otsu, MatchesExactBruteForce) {
  Rng rng(2024);
  int plateaus = 0;
  for (int trial = 0; trial < 1000; ++trial) {
    const GrayHistogram h = RandomHistogram(rng);
    const auto expected = BruteForceOtsu(h);
    if (!expected) {
      EXPECT_THROW(OtsuThreshold(h), DegenerateHistogramError) << trial;
      continue;
    }
    const int t = OtsuThreshold(h);
    ASSERT_EQ(t, *expected) << "trial " << trial;
    if (Compare(ExactVariance(h, t), ExactVariance(h, t + 1)) == 0) ++plateaus;
  }
  EXPECT_GT(plateaus, 100);
}

TEST(Otsu, TwoSpikePlateauMidpoint) {
  GrayHistogram h;
  h.bins[0] = 50;
  h.bins[255] = 50;
  EXPECT_EQ(OtsuThreshold(h), 127);
}

TEST(Otsu, SingleBinIsDegenerate) {
  GrayHistogram h;
  h.bins[7] = 100;
  EXPECT_THROW(OtsuThreshold(h), DegenerateHistogramError);
  EXPECT_THROW(OtsuThreshold(GrayHistogram{}), DegenerateHistogramError);
}

TEST(Otsu, SeparatesTwoLevels) {
  RgbImage img(20, 10, {240, 240, 240});
  for (std::size_t y = 0; y < 10; ++y)
    for (std::size_t x = 0; x < 8; ++x) img.Set(x, y, {120, 60, 140});
  const int t = OtsuThreshold(LuminanceHistogram(img));
  const TissueMask m = ComputeTissueMask(img, t);
  EXPECT_EQ(m.Count(), 80u);
  EXPECT_EQ(m.bits[0], 1);
  EXPECT_EQ(m.bits[19], 0);
}

TEST(Luminance, Rec601Weights) {
  const std::uint8_t white[3] = {255, 255, 255}, red[3] = {255, 0, 0};
  EXPECT_EQ(Luminance(white), 255);
  EXPECT_EQ(Luminance(red), 76);
}

class TileQc : public ::testing::Test {
 protected:
  static constexpr std::size_t kPx = 16;
  RgbImage slide{4 * kPx, kPx, {248, 248, 248}};
  QcThresholds qc;

  void Paint(std::size_t col, Rgb c, std::size_t rows = kPx) {
    for (std::size_t y = 0; y < rows; ++y)
      for (std::size_t x = col * kPx; x < (col + 1) * kPx; ++x) slide.Set(x, y, c);
  }
  PatchGrid Grid() {
    return GridPatches("s", slide, ComputeTissueMask(slide, 200), kPx, qc, 8);
  }
};

TEST_F(TileQc, ReasonsFollowFilterOrder) {
  Paint(1, {150, 90, 160});          // tissue
  Paint(2, {5, 5, 5});               // ink: dark medians
  Paint(3, {150, 90, 160}, kPx / 4); // mostly background
  const PatchGrid g = Grid();
  ASSERT_EQ(g.records.size(), 4u);
  EXPECT_EQ(g.records[0].drop_reason, DropReason::kNearWhite);
  EXPECT_TRUE(g.records[1].kept);
  EXPECT_EQ(g.records[2].drop_reason, DropReason::kLowChannelMedian);
  EXPECT_EQ(g.records[3].drop_reason, DropReason::kLowTissue);
  EXPECT_EQ(g.KeptCount(), 1u);
}

TEST_F(TileQc, NearWhiteBoundaryIsInclusive) {
  Paint(1, {235, 235, 235});
  Paint(2, {234, 234, 234});
  const PatchGrid g = Grid();
  EXPECT_EQ(g.records[1].drop_reason, DropReason::kNearWhite);
  EXPECT_NE(g.records[2].drop_reason, DropReason::kNearWhite);
}

TEST_F(TileQc, CandidateCountIsFloorOfGrid) {
  const RgbImage odd(70, 50, {100, 100, 100});
  const PatchGrid g = GridPatches("s", odd, ComputeTissueMask(odd, 200), 16, qc, 8);
  EXPECT_EQ(g.records.size(), (70u / 16) * (50u / 16));
  EXPECT_THROW(GridPatches("s", odd, ComputeTissueMask(odd, 200), 80, qc, 8),
               DimensionError);
}

TEST(PatchSide, FromMicrons) {
  EXPECT_EQ(PatchSidePixels({360.0, 0.25}), 1440u);
  EXPECT_EQ(PatchSidePixels({56.0, 0.25}), 224u);
  EXPECT_THROW(PatchSidePixels({0.0, 0.25}), ConfigError);
}

TEST(Resize, IdentityAndConstant) {
  RgbImage img(8, 8, {10, 20, 30});
  EXPECT_EQ(ResizePatch(img, 8), img);
  const RgbImage r = ResizePatch(img, 5);
  for (std::size_t y = 0; y < 5; ++y)
    for (std::size_t x = 0; x < 5; ++x) EXPECT_EQ(r.Get(x, y), (Rgb{10, 20, 30}));
  EXPECT_THROW(ResizePatch(RgbImage(4, 5), 2), DimensionError);
}

TEST(Downsample, AveragesBlocks) {
  RgbImage img(4, 4);
  img.Set(0, 0, {4, 0, 0});
  img.Set(1, 1, {4, 0, 0});
  const RgbImage d = DownsampleArea(img, 2);
  EXPECT_EQ(d.Get(0, 0), (Rgb{2, 0, 0}));
  EXPECT_EQ(d.Get(1, 1), (Rgb{0, 0, 0}));
}

TEST(PatchGridCsv, RoundTrip) {
  testing::ScratchDir dir;
  RgbImage slide(32, 32, {248, 248, 248});
  for (std::size_t y = 0; y < 16; ++y)
    for (std::size_t x = 0; x < 16; ++x) slide.Set(x, y, {150, 90, 160});
  const auto res = PreprocessSlide("a", slide, 16, QcThresholds{}, 16);
  WritePatchGridCsv(dir.path() / "g.csv", {res.grid});
  const auto back = ReadPatchGridCsv(dir.path() / "g.csv");
  ASSERT_EQ(back.size(), 1u);
  ASSERT_EQ(back[0].records.size(), 4u);
  for (std::size_t i = 0; i < 4; ++i) {
    EXPECT_EQ(back[0].records[i].kept, res.grid.records[i].kept);
    EXPECT_EQ(back[0].records[i].drop_reason, res.grid.records[i].drop_reason);
  }
}

TEST(Preprocess, BlankSlideKeepsNothing) {
  const RgbImage blank(32, 32, {248, 248, 248});
  const auto res = PreprocessSlide("b", blank, 16, QcThresholds{}, 16);
  EXPECT_EQ(res.threshold, -1);
  EXPECT_EQ(res.grid.KeptCount(), 0u);
  for (const auto& r : res.grid.records) EXPECT_EQ(r.drop_reason, DropReason::kNearWhite);
}

}  // namespace
}  // namespace weakmil::prep
