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

#include "weakmil/csv.hpp"

#include <charconv>
#include <fstream>
#include <sstream>

#include "weakmil/error.hpp"

namespace weakmil {

namespace {

std::vector<std::string> SplitLine(const std::string& line) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (true) {
    const std::size_t comma = line.find(',', start);
    if (comma == std::string::npos) {
      out.push_back(line.substr(start));
      break;
    }
    out.push_back(line.substr(start, comma - start));
    start = comma + 1;
  }
  return out;
}

std::string JoinLine(const std::vector<std::string>& fields) {
  std::string s;
  for (std::size_t i = 0; i < fields.size(); ++i) {
    if (i) s += ',';
    s += fields[i];
  }
  return s;
}

}  // namespace

std::size_t CsvTable::Column(const std::string& name) const {
  for (std::size_t i = 0; i < header.size(); ++i)
    if (header[i] == name) return i;
  throw FormatError("CSV has no column '" + name + "'", 0);
}

CsvTable ReadCsv(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open CSV '" + path.string() + "'");
  CsvTable table;
  std::string line;
  std::size_t offset = 0;
  bool first = true;
  while (std::getline(in, line)) {
    const std::size_t line_len = line.size() + 1;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) {
      offset += line_len;
      continue;
    }
    auto fields = SplitLine(line);
    if (first) {
      table.header = std::move(fields);
      first = false;
    } else {
      if (fields.size() != table.header.size()) {
        throw FormatError("CSV '" + path.string() + "' row has " +
                              std::to_string(fields.size()) + " fields, expected " +
                              std::to_string(table.header.size()),
                          offset);
      }
      table.rows.push_back(std::move(fields));
    }
    offset += line_len;
  }
  if (first) throw FormatError("CSV '" + path.string() + "' is empty", 0);
  return table;
}

CsvTable ReadCsv(const std::filesystem::path& path,
                 const std::vector<std::string>& expected_header) {
  CsvTable t = ReadCsv(path);
  if (t.header != expected_header) {
    throw FormatError("CSV '" + path.string() + "' has header '" +
                          JoinLine(t.header) + "', expected '" +
                          JoinLine(expected_header) + "'",
                      0);
  }
  return t;
}

void WriteCsv(const std::filesystem::path& path, const CsvTable& table) {
  std::ostringstream os;
  os << JoinLine(table.header) << '\n';
  for (const auto& row : table.rows) os << JoinLine(row) << '\n';
  WriteTextFile(path, os.str());
}

std::string FormatDouble(double v) {
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

void WriteTextFile(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open '" + path.string() + "' for writing");
  out << text;
  if (!out) throw IoError("failed writing '" + path.string() + "'");
}

std::string ReadTextFile(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open '" + path.string() + "'");
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

}  // namespace weakmil
