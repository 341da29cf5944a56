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

#include <stdexcept>
#include <string>

namespace weakmil {

/// Broad failure categories. The CLI maps these onto process exit codes.
enum class ErrorKind {
  kDimension,
  kIndex,
  kConfig,
  kNumeric,
  kIo,
  kFormat,
  kDataset,
  kContract,
  kDependency,
  kDegenerate,
  kUndefinedMetric,
};

const char* ErrorKindName(ErrorKind kind);

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& message);

  ErrorKind kind() const { return kind_; }

 private:
  ErrorKind kind_;
};

#define WEAKMIL_DEFINE_ERROR(Name, Kind) \
  class Name : public Error {            \
   public:                               \
    explicit Name(const std::string& m)  \
        : Error(ErrorKind::Kind, m) {}   \
  };

WEAKMIL_DEFINE_ERROR(DimensionError, kDimension)
WEAKMIL_DEFINE_ERROR(IndexError, kIndex)
WEAKMIL_DEFINE_ERROR(ConfigError, kConfig)
WEAKMIL_DEFINE_ERROR(NumericError, kNumeric)
WEAKMIL_DEFINE_ERROR(IoError, kIo)
WEAKMIL_DEFINE_ERROR(DatasetError, kDataset)
WEAKMIL_DEFINE_ERROR(ContractError, kContract)
WEAKMIL_DEFINE_ERROR(DependencyError, kDependency)
WEAKMIL_DEFINE_ERROR(DegenerateHistogramError, kDegenerate)
WEAKMIL_DEFINE_ERROR(UndefinedMetricError, kUndefinedMetric)

#undef WEAKMIL_DEFINE_ERROR

/// Malformed binary or text file. Carries the byte offset where decoding
/// stopped.
class FormatError : public Error {
 public:
  FormatError(const std::string& message, std::size_t offset);

  std::size_t offset() const { return offset_; }

 private:
  std::size_t offset_;
};

}  // namespace weakmil
