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

#include "weakmil/error.hpp"

namespace weakmil {

const char* ErrorKindName(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::kDimension: return "dimension_error";
    case ErrorKind::kIndex: return "index_error";
    case ErrorKind::kConfig: return "config_error";
    case ErrorKind::kNumeric: return "numeric_error";
    case ErrorKind::kIo: return "io_error";
    case ErrorKind::kFormat: return "format_error";
    case ErrorKind::kDataset: return "dataset_error";
    case ErrorKind::kContract: return "contract_error";
    case ErrorKind::kDependency: return "dependency_error";
    case ErrorKind::kDegenerate: return "degenerate_histogram";
    case ErrorKind::kUndefinedMetric: return "undefined_metric";
  }
  return "error";
}

Error::Error(ErrorKind kind, const std::string& message)
    : std::runtime_error(message), kind_(kind) {}

FormatError::FormatError(const std::string& message, std::size_t offset)
    : Error(ErrorKind::kFormat,
            message + " (at byte offset " + std::to_string(offset) + ")"),
      offset_(offset) {}

}  // namespace weakmil
