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

// Fold construction and slide-level metrics.

#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace weakmil::eval {

struct FoldSplit {
  std::size_t fold_id = 0;
  std::vector<std::string> train_ids;  // cohort order
  std::vector<std::string> test_ids;   // cohort order
};

/// Stratified folds. The cohort is shuffled per class (seeded) and merged
/// into one sequence that keeps the class ratio in every prefix. With
/// test_size == 0 the sequence is cut into k contiguous blocks whose sizes
/// differ by at most one (the first n % k blocks are larger). Otherwise fold
/// f tests the test_size items starting at position f * test_size, wrapping
/// around; these are disjoint while k * test_size <= n.
std::vector<FoldSplit> MakeFolds(const std::vector<std::string>& ids,
                                 const std::vector<int>& labels, std::size_t k,
                                 std::uint64_t seed, std::size_t test_size = 0);

/// Trapezoidal ROC area. Tied scores form one ROC segment, so the result is
/// exactly P(s+ > s-) + P(s+ == s-) / 2. UndefinedMetricError unless both
/// labels are present.
double RocAuc(std::span<const double> scores, std::span<const int> labels);

struct RocPoint {
  double fpr = 0.0;
  double tpr = 0.0;
};

/// ROC vertices from (0, 0) to (1, 1), one per distinct score.
std::vector<RocPoint> RocCurve(std::span<const double> scores,
                               std::span<const int> labels);

struct ConfusionMatrix {
  std::size_t tp = 0, fp = 0, tn = 0, fn = 0;
  std::size_t Total() const { return tp + fp + tn + fn; }
  ConfusionMatrix& operator+=(const ConfusionMatrix& o);
  bool operator==(const ConfusionMatrix&) const = default;
};

/// Predicts positive iff score >= threshold.
ConfusionMatrix Confusion(std::span<const double> scores,
                          std::span<const int> labels, double threshold = 0.5);

struct PredictiveValues {
  std::optional<double> ppv;  // empty when TP + FP == 0
  std::optional<double> npv;  // empty when TN + FN == 0
};

PredictiveValues PpvNpv(const ConfusionMatrix& cm);

struct MetricsReport {
  std::vector<double> fold_auc;
  double mean_auc = 0.0;
  /// Population standard deviation.
  double std_auc = 0.0;
  double max_auc = 0.0;
};

MetricsReport Aggregate(std::span<const double> fold_auc);

struct FoldMetrics {
  std::size_t fold = 0;
  double auc = 0.0;
  PredictiveValues pv;
  ConfusionMatrix confusion;
};

/// CSV `fold,auc,ppv,npv`; undefined values are written as `NA`.
void WriteMetricsCsv(const std::filesystem::path& path,
                     const std::vector<FoldMetrics>& folds);

void WriteRocCsv(const std::filesystem::path& path,
                 const std::vector<RocPoint>& points);

/// Same layout as the PNG: columns actual, predicted_positive,
/// predicted_negative; rows positive then negative.
void WriteConfusionCsv(const std::filesystem::path& path,
                       const ConfusionMatrix& cm);

/// 2x2 confusion matrix rendered as a PNG: rows are true labels (positive
/// on top), columns predictions, darker blue for larger counts, counts
/// printed in each cell.
void WriteConfusionPng(const std::filesystem::path& path,
                       const ConfusionMatrix& cm);

std::string FormatOptional(const std::optional<double>& v);

}  // namespace weakmil::eval
