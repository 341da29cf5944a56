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

// Parameter checkpoint container.
//
//   magic    4 bytes ("MOCO" for encoders, "WMIL" for MIL models)
//   version  u16
//   records until end of file:
//     name length u16, name bytes,
//     rank u8, dims u32 x rank,
//     payload f64 x product(dims)
//
// All integers and floats are little-endian.

#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "weakmil/param_set.hpp"

namespace weakmil {

inline constexpr std::string_view kEncoderMagic = "MOCO";
inline constexpr std::string_view kMilMagic = "WMIL";
inline constexpr std::uint16_t kCheckpointVersion = 1;

std::vector<std::uint8_t> EncodeCheckpoint(std::string_view magic,
                                           const ParamSet& params);
ParamSet DecodeCheckpoint(std::string_view magic,
                          const std::vector<std::uint8_t>& bytes);

void SaveCheckpoint(const std::filesystem::path& path, std::string_view magic,
                    const ParamSet& params);
ParamSet LoadCheckpoint(const std::filesystem::path& path,
                        std::string_view magic);

// Little-endian primitives shared with the feature-bag format.
namespace le {

void PutU8(std::vector<std::uint8_t>& out, std::uint8_t v);
void PutU16(std::vector<std::uint8_t>& out, std::uint16_t v);
void PutU32(std::vector<std::uint8_t>& out, std::uint32_t v);
void PutF32(std::vector<std::uint8_t>& out, float v);
void PutF64(std::vector<std::uint8_t>& out, double v);

/// Bounds-checked reader; every failure is a FormatError with the offset.
class Reader {
 public:
  explicit Reader(const std::vector<std::uint8_t>& bytes) : bytes_(bytes) {}

  std::uint8_t U8();
  std::uint16_t U16();
  std::uint32_t U32();
  float F32();
  double F64();
  std::string Bytes(std::size_t n);

  std::size_t offset() const { return pos_; }
  bool AtEnd() const { return pos_ == bytes_.size(); }

 private:
  void Need(std::size_t n, const char* what);

  const std::vector<std::uint8_t>& bytes_;
  std::size_t pos_ = 0;
};

std::vector<std::uint8_t> ReadFile(const std::filesystem::path& path);
void WriteFile(const std::filesystem::path& path,
               const std::vector<std::uint8_t>& bytes);

}  // namespace le

}  // namespace weakmil
