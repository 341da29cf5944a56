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

#include "test_util.hpp"
#include "weakmil/checkpoint.hpp"
#include "weakmil/csv.hpp"
#include "weakmil/error.hpp"
#include "weakmil/hashing.hpp"
#include "weakmil/image.hpp"

namespace weakmil {
namespace {

TEST(Png, RoundTripsExactly) {
  testing::ScratchDir dir;
  RgbImage img(13, 7);
  Rng rng(1);
  for (auto& b : img.bytes()) b = static_cast<std::uint8_t>(rng.Below(256));
  WritePng(dir.path() / "a.png", img);
  EXPECT_EQ(ReadPng(dir.path() / "a.png"), img);
}

TEST(Png, MissingFileIsIoError) {
  EXPECT_THROW(ReadPng("/nonexistent/x.png"), IoError);
}

TEST(Image, CropCopiesRegion) {
  RgbImage img(4, 4);
  img.Set(2, 1, {9, 8, 7});
  const RgbImage c = img.Crop(1, 1, 2, 2);
  EXPECT_EQ(c.width(), 2u);
  EXPECT_EQ(c.Get(1, 0), (Rgb{9, 8, 7}));
  EXPECT_THROW(img.Crop(3, 3, 2, 2), DimensionError);
}

TEST(Csv, RoundTripsAndChecksHeader) {
  testing::ScratchDir dir;
  CsvTable t;
  t.header = {"a", "b"};
  t.rows = {{"1", "x"}, {"2", "y"}};
  WriteCsv(dir.path() / "t.csv", t);
  const CsvTable r = ReadCsv(dir.path() / "t.csv", {"a", "b"});
  EXPECT_EQ(r.rows, t.rows);
  EXPECT_EQ(r.Column("b"), 1u);
  EXPECT_THROW(ReadCsv(dir.path() / "t.csv", {"a", "c"}), FormatError);
}

TEST(FormatDouble, RoundTripsBits) {
  for (double v : {0.1, 1.0 / 3.0, 1e-300, -2.5e17}) {
    EXPECT_EQ(std::stod(FormatDouble(v)), v);
  }
}

TEST(Sha256, KnownVectors) {
  EXPECT_EQ(Sha256Hex(""),
            "e3b0c44298fc1c149afbf4c8996fb92427ae41e4649b934ca495991b7852b855");
  EXPECT_EQ(Sha256Hex("abc"),
            "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
}

TEST(Checkpoint, RoundTripsBitwise) {
  ParamSet p;
  Rng rng(5);
  p.Add("b", testing::RandomTensor({3}, rng));
  p.Add("a.w", testing::RandomTensor({2, 4}, rng));
  p.Add("s", Tensor::Scalar(-0.0));
  const auto bytes = EncodeCheckpoint(kMilMagic, p);
  EXPECT_EQ(DecodeCheckpoint(kMilMagic, bytes), p);
  EXPECT_EQ(EncodeCheckpoint(kMilMagic, DecodeCheckpoint(kMilMagic, bytes)), bytes);
}

TEST(Checkpoint, RejectsWrongMagicAndTruncation) {
  ParamSet p;
  p.Add("w", Tensor::Vector({1.0, 2.0}));
  auto bytes = EncodeCheckpoint(kMilMagic, p);
  EXPECT_THROW(DecodeCheckpoint(kEncoderMagic, bytes), FormatError);
  for (std::size_t cut : {std::size_t{0}, std::size_t{5}, bytes.size() - 1}) {
    std::vector<std::uint8_t> t(bytes.begin(), bytes.begin() + cut);
    try {
      DecodeCheckpoint(kMilMagic, t);
      ADD_FAILURE() << "truncation at " << cut << " accepted";
    } catch (const FormatError& e) {
      EXPECT_LE(e.offset(), cut);
    }
  }
  bytes.push_back(0);
  EXPECT_THROW(DecodeCheckpoint(kMilMagic, bytes), FormatError);
}

TEST(LittleEndian, ByteOrderIsFixed) {
  std::vector<std::uint8_t> out;
  le::PutU32(out, 0x01020304u);
  le::PutF32(out, 1.0f);
  EXPECT_EQ(out, (std::vector<std::uint8_t>{4, 3, 2, 1, 0, 0, 0x80, 0x3f}));
  le::Reader r(out);
  EXPECT_EQ(r.U32(), 0x01020304u);
  EXPECT_EQ(r.F32(), 1.0f);
  EXPECT_TRUE(r.AtEnd());
  EXPECT_THROW(r.U8(), FormatError);
}

}  // namespace
}  // namespace weakmil
