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

#pragma once

#include <filesystem>
#include <string>
#include <vector>

namespace weakmil {

/// Minimal comma-separated table: no quoting, fields must not contain commas
/// or newlines. Every artifact this project writes satisfies that.
struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;

  /// Column index for `name`; throws FormatError if absent.
  std::size_t Column(const std::string& name) const;
};

CsvTable ReadCsv(const std::filesystem::path& path);
/// Throws FormatError unless the header equals `expected` exactly.
CsvTable ReadCsv(const std::filesystem::path& path,
                 const std::vector<std::string>& expected_header);
void WriteCsv(const std::filesystem::path& path, const CsvTable& table);

/// Shortest round-trippable decimal for a double.
std::string FormatDouble(double v);

void WriteTextFile(const std::filesystem::path& path, const std::string& text);
std::string ReadTextFile(const std::filesystem::path& path);

}  // namespace weakmil
