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

#include "weakmil/checkpoint.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <iterator>

#include "weakmil/error.hpp"

namespace weakmil {

namespace le {

static_assert(std::endian::native == std::endian::little ||
                  std::endian::native == std::endian::big,
              "mixed-endian platforms are not supported");

namespace {

template <typename U>
void PutUnsigned(std::vector<std::uint8_t>& out, U v) {
  for (std::size_t i = 0; i < sizeof(U); ++i)
    out.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
}

}  // namespace

void PutU8(std::vector<std::uint8_t>& out, std::uint8_t v) { out.push_back(v); }
void PutU16(std::vector<std::uint8_t>& out, std::uint16_t v) { PutUnsigned(out, v); }
void PutU32(std::vector<std::uint8_t>& out, std::uint32_t v) { PutUnsigned(out, v); }
void PutF32(std::vector<std::uint8_t>& out, float v) {
  PutUnsigned(out, std::bit_cast<std::uint32_t>(v));
}
void PutF64(std::vector<std::uint8_t>& out, double v) {
  PutUnsigned(out, std::bit_cast<std::uint64_t>(v));
}

void Reader::Need(std::size_t n, const char* what) {
  if (bytes_.size() - pos_ < n) {
    throw FormatError(std::string("truncated data reading ") + what, pos_);
  }
}

std::uint8_t Reader::U8() {
  Need(1, "u8");
  return bytes_[pos_++];
}

std::uint16_t Reader::U16() {
  Need(2, "u16");
  std::uint16_t v = static_cast<std::uint16_t>(bytes_[pos_] | (bytes_[pos_ + 1] << 8));
  pos_ += 2;
  return v;
}

std::uint32_t Reader::U32() {
  Need(4, "u32");
  std::uint32_t v = 0;
  for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(bytes_[pos_ + i]) << (8 * i);
  pos_ += 4;
  return v;
}

float Reader::F32() { return std::bit_cast<float>(U32()); }

double Reader::F64() {
  Need(8, "f64");
  std::uint64_t v = 0;
  for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(bytes_[pos_ + i]) << (8 * i);
  pos_ += 8;
  return std::bit_cast<double>(v);
}

std::string Reader::Bytes(std::size_t n) {
  Need(n, "bytes");
  std::string s(reinterpret_cast<const char*>(bytes_.data() + pos_), n);
  pos_ += n;
  return s;
}

std::vector<std::uint8_t> ReadFile(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open '" + path.string() + "'");
  return std::vector<std::uint8_t>(std::istreambuf_iterator<char>(in),
                                   std::istreambuf_iterator<char>());
}

void WriteFile(const std::filesystem::path& path,
               const std::vector<std::uint8_t>& bytes) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open '" + path.string() + "' for writing");
  out.write(reinterpret_cast<const char*>(bytes.data()),
            static_cast<std::streamsize>(bytes.size()));
  if (!out) throw IoError("failed writing '" + path.string() + "'");
}

}  // namespace le

std::vector<std::uint8_t> EncodeCheckpoint(std::string_view magic,
                                           const ParamSet& params) {
  if (magic.size() != 4) throw ContractError("checkpoint magic must be 4 bytes");
  std::vector<std::uint8_t> out(magic.begin(), magic.end());
  le::PutU16(out, kCheckpointVersion);
  for (const auto& [name, t] : params) {
    if (name.size() > UINT16_MAX) throw ContractError("parameter name too long");
    if (t.rank() > UINT8_MAX) throw ContractError("parameter rank too large");
    le::PutU16(out, static_cast<std::uint16_t>(name.size()));
    out.insert(out.end(), name.begin(), name.end());
    le::PutU8(out, static_cast<std::uint8_t>(t.rank()));
    for (std::size_t d : t.shape()) le::PutU32(out, static_cast<std::uint32_t>(d));
    for (double v : t.data()) le::PutF64(out, v);
  }
  return out;
}

ParamSet DecodeCheckpoint(std::string_view magic,
                          const std::vector<std::uint8_t>& bytes) {
  le::Reader r(bytes);
  const std::string got = r.Bytes(4);
  if (got != magic) {
    throw FormatError("bad checkpoint magic '" + got + "', expected '" +
                          std::string(magic) + "'",
                      0);
  }
  const std::uint16_t version = r.U16();
  if (version != kCheckpointVersion) {
    throw FormatError("unsupported checkpoint version " + std::to_string(version), 4);
  }
  ParamSet params;
  while (!r.AtEnd()) {
    const std::size_t record_start = r.offset();
    const std::string name = r.Bytes(r.U16());
    const std::uint8_t rank = r.U8();
    Shape shape(rank);
    for (auto& d : shape) d = r.U32();
    const std::size_t n = ShapeSize(shape);
    if (n > (bytes.size() - r.offset()) / 8) {
      throw FormatError("truncated payload for parameter '" + name + "'",
                        r.offset());
    }
    std::vector<double> data(n);
    for (auto& v : data) v = r.F64();
    if (params.Contains(name)) {
      throw FormatError("duplicate parameter '" + name + "'", record_start);
    }
    params.Add(name, Tensor(std::move(shape), std::move(data)));
  }
  return params;
}

void SaveCheckpoint(const std::filesystem::path& path, std::string_view magic,
                    const ParamSet& params) {
  le::WriteFile(path, EncodeCheckpoint(magic, params));
}

ParamSet LoadCheckpoint(const std::filesystem::path& path,
                        std::string_view magic) {
  return DecodeCheckpoint(magic, le::ReadFile(path));
}

}  // namespace weakmil
