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

#include "weakmil/eval.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "weakmil/csv.hpp"
#include "weakmil/error.hpp"
#include "weakmil/image.hpp"
#include "weakmil/random.hpp"

namespace weakmil::eval {

namespace {

void RequireAligned(std::span<const double> scores, std::span<const int> labels) {
  if (scores.size() != labels.size()) {
    throw DimensionError("scores and labels differ in length");
  }
  for (int l : labels)
    if (l != 0 && l != 1) throw IndexError("labels must be 0 or 1");
}

// Indices sorted by descending score, ties kept in input order.
std::vector<std::size_t> DescendingOrder(std::span<const double> scores) {
  std::vector<std::size_t> idx(scores.size());
  std::iota(idx.begin(), idx.end(), 0);
  std::stable_sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) {
    return scores[a] > scores[b];
  });
  return idx;
}

// 3x5 digit glyphs, one row per string, '#' marks ink.
constexpr const char* kDigits[10][5] = {
    {"###", "#.#", "#.#", "#.#", "###"}, {".#.", "##.", ".#.", ".#.", "###"},
    {"###", "..#", "###", "#..", "###"}, {"###", "..#", "###", "..#", "###"},
    {"#.#", "#.#", "###", "..#", "..#"}, {"###", "#..", "###", "..#", "###"},
    {"###", "#..", "###", "#.#", "###"}, {"###", "..#", "..#", "..#", "..#"},
    {"###", "#.#", "###", "#.#", "###"}, {"###", "#.#", "###", "..#", "###"},
};

void DrawNumber(RgbImage& img, std::size_t cx, std::size_t cy, std::size_t value,
                Rgb ink) {
  constexpr std::size_t kScale = 4, kAdvance = 4 * kScale;
  const std::string text = std::to_string(value);
  const std::size_t width = text.size() * kAdvance - kScale;
  std::size_t x0 = cx - width / 2;
  const std::size_t y0 = cy - 5 * kScale / 2;
  for (char ch : text) {
    const auto& glyph = kDigits[ch - '0'];
    for (std::size_t gy = 0; gy < 5; ++gy)
      for (std::size_t gx = 0; gx < 3; ++gx) {
        if (glyph[gy][gx] != '#') continue;
        for (std::size_t dy = 0; dy < kScale; ++dy)
          for (std::size_t dx = 0; dx < kScale; ++dx)
            img.Set(x0 + gx * kScale + dx, y0 + gy * kScale + dy, ink);
      }
    x0 += kAdvance;
  }
}

}  // namespace

std::vector<FoldSplit> MakeFolds(const std::vector<std::string>& ids,
                                 const std::vector<int>& labels, std::size_t k,
                                 std::uint64_t seed, std::size_t test_size) {
  if (ids.size() != labels.size()) throw DimensionError("ids and labels differ in length");
  if (k < 2) throw ConfigError("eval.folds must be at least 2");
  const std::size_t n = ids.size();
  if (n < k) throw DatasetError("cohort of " + std::to_string(n) +
                                " slides is smaller than " + std::to_string(k) + " folds");
  if (test_size > n) throw ConfigError("eval.test_size exceeds the cohort size");

  std::vector<std::size_t> members[2];
  for (std::size_t i = 0; i < n; ++i) {
    if (labels[i] != 0 && labels[i] != 1) throw DatasetError("labels must be 0 or 1");
    members[labels[i]].push_back(i);
  }
  if (members[0].empty() || members[1].empty()) {
    throw DatasetError("fold construction needs both classes");
  }
  Rng rng(DeriveSeed(seed, "folds"));
  rng.Shuffle(members[1]);
  rng.Shuffle(members[0]);

  // Merge so that every prefix holds each class in proportion: take next
  // from the class that is furthest behind its share (positives on ties).
  std::vector<std::size_t> sequence;
  std::size_t taken[2] = {0, 0};
  const double total[2] = {static_cast<double>(members[0].size()),
                           static_cast<double>(members[1].size())};
  while (sequence.size() < n) {
    int c;
    if (taken[0] == members[0].size()) {
      c = 1;
    } else if (taken[1] == members[1].size()) {
      c = 0;
    } else {
      const double f0 = (taken[0] + 0.5) / total[0];
      const double f1 = (taken[1] + 0.5) / total[1];
      c = f1 <= f0 ? 1 : 0;
    }
    sequence.push_back(members[c][taken[c]++]);
  }

  std::vector<FoldSplit> folds(k);
  std::size_t start = 0;
  for (std::size_t f = 0; f < k; ++f) {
    std::size_t len;
    if (test_size == 0) {
      len = n / k + (f < n % k ? 1 : 0);
    } else {
      start = (f * test_size) % n;
      len = test_size;
    }
    std::vector<bool> in_test(n, false);
    for (std::size_t i = 0; i < len; ++i) in_test[sequence[(start + i) % n]] = true;
    if (test_size == 0) start += len;
    folds[f].fold_id = f;
    for (std::size_t i = 0; i < n; ++i)
      (in_test[i] ? folds[f].test_ids : folds[f].train_ids).push_back(ids[i]);
  }
  return folds;
}

double RocAuc(std::span<const double> scores, std::span<const int> labels) {
  RequireAligned(scores, labels);
  std::size_t pos = 0;
  for (int l : labels) pos += l;
  const std::size_t neg = labels.size() - pos;
  if (pos == 0 || neg == 0) {
    throw UndefinedMetricError("AUC needs both positive and negative labels");
  }
  // Twice the area in units of (1/P)(1/N); integer-valued so the result
  // equals the pairwise count exactly.
  const auto idx = DescendingOrder(scores);
  std::uint64_t twice_area = 0, tp = 0, fp = 0;
  for (std::size_t i = 0; i < idx.size();) {
    std::uint64_t dtp = 0, dfp = 0;
    std::size_t j = i;
    for (; j < idx.size() && scores[idx[j]] == scores[idx[i]]; ++j)
      (labels[idx[j]] ? dtp : dfp) += 1;
    twice_area += dfp * (2 * tp + dtp);
    tp += dtp;
    fp += dfp;
    i = j;
  }
  return static_cast<double>(twice_area) / (2.0 * static_cast<double>(pos) *
                                            static_cast<double>(neg));
}

std::vector<RocPoint> RocCurve(std::span<const double> scores,
                               std::span<const int> labels) {
  RequireAligned(scores, labels);
  std::size_t pos = 0;
  for (int l : labels) pos += l;
  const std::size_t neg = labels.size() - pos;
  if (pos == 0 || neg == 0) {
    throw UndefinedMetricError("ROC needs both positive and negative labels");
  }
  const auto idx = DescendingOrder(scores);
  std::vector<RocPoint> pts{{0.0, 0.0}};
  std::size_t tp = 0, fp = 0;
  for (std::size_t i = 0; i < idx.size();) {
    std::size_t j = i;
    for (; j < idx.size() && scores[idx[j]] == scores[idx[i]]; ++j)
      (labels[idx[j]] ? tp : fp) += 1;
    pts.push_back({static_cast<double>(fp) / neg, static_cast<double>(tp) / pos});
    i = j;
  }
  return pts;
}

ConfusionMatrix& ConfusionMatrix::operator+=(const ConfusionMatrix& o) {
  tp += o.tp;
  fp += o.fp;
  tn += o.tn;
  fn += o.fn;
  return *this;
}

ConfusionMatrix Confusion(std::span<const double> scores,
                          std::span<const int> labels, double threshold) {
  RequireAligned(scores, labels);
  ConfusionMatrix cm;
  for (std::size_t i = 0; i < scores.size(); ++i) {
    const bool predicted = scores[i] >= threshold;
    if (labels[i]) {
      (predicted ? cm.tp : cm.fn) += 1;
    } else {
      (predicted ? cm.fp : cm.tn) += 1;
    }
  }
  return cm;
}

PredictiveValues PpvNpv(const ConfusionMatrix& cm) {
  PredictiveValues pv;
  if (cm.tp + cm.fp > 0) pv.ppv = static_cast<double>(cm.tp) / (cm.tp + cm.fp);
  if (cm.tn + cm.fn > 0) pv.npv = static_cast<double>(cm.tn) / (cm.tn + cm.fn);
  return pv;
}

MetricsReport Aggregate(std::span<const double> fold_auc) {
  if (fold_auc.empty()) throw ContractError("aggregate needs at least one fold");
  MetricsReport r;
  r.fold_auc.assign(fold_auc.begin(), fold_auc.end());
  const double n = static_cast<double>(fold_auc.size());
  r.mean_auc = std::accumulate(fold_auc.begin(), fold_auc.end(), 0.0) / n;
  double ss = 0.0;
  for (double a : fold_auc) ss += (a - r.mean_auc) * (a - r.mean_auc);
  r.std_auc = std::sqrt(ss / n);
  r.max_auc = *std::max_element(fold_auc.begin(), fold_auc.end());
  return r;
}

std::string FormatOptional(const std::optional<double>& v) {
  return v ? FormatDouble(*v) : "NA";
}

void WriteMetricsCsv(const std::filesystem::path& path,
                     const std::vector<FoldMetrics>& folds) {
  CsvTable t;
  t.header = {"fold", "auc", "ppv", "npv"};
  for (const auto& f : folds) {
    t.rows.push_back({std::to_string(f.fold), FormatDouble(f.auc),
                      FormatOptional(f.pv.ppv), FormatOptional(f.pv.npv)});
  }
  WriteCsv(path, t);
}

void WriteRocCsv(const std::filesystem::path& path,
                 const std::vector<RocPoint>& points) {
  CsvTable t;
  t.header = {"fpr", "tpr"};
  for (const auto& p : points) t.rows.push_back({FormatDouble(p.fpr), FormatDouble(p.tpr)});
  WriteCsv(path, t);
}

void WriteConfusionCsv(const std::filesystem::path& path,
                       const ConfusionMatrix& cm) {
  CsvTable t;
  t.header = {"actual", "predicted_positive", "predicted_negative"};
  t.rows.push_back({"positive", std::to_string(cm.tp), std::to_string(cm.fn)});
  t.rows.push_back({"negative", std::to_string(cm.fp), std::to_string(cm.tn)});
  WriteCsv(path, t);
}

void WriteConfusionPng(const std::filesystem::path& path,
                       const ConfusionMatrix& cm) {
  constexpr std::size_t kCell = 96;
  RgbImage img(2 * kCell, 2 * kCell, {128, 128, 128});
  // Row 0: true positive class; row 1: true negative class.
  // Column 0: predicted positive; column 1: predicted negative.
  const std::size_t counts[2][2] = {{cm.tp, cm.fn}, {cm.fp, cm.tn}};
  const double total = std::max<std::size_t>(cm.Total(), 1);
  for (std::size_t r = 0; r < 2; ++r)
    for (std::size_t c = 0; c < 2; ++c) {
      const double f = counts[r][c] / total;
      const Rgb fill = {static_cast<std::uint8_t>(std::lround(255 - 200 * f)),
                        static_cast<std::uint8_t>(std::lround(255 - 150 * f)),
                        255};
      for (std::size_t y = 1; y + 1 < kCell; ++y)
        for (std::size_t x = 1; x + 1 < kCell; ++x)
          img.Set(c * kCell + x, r * kCell + y, fill);
      const Rgb ink = f > 0.5 ? Rgb{255, 255, 255} : Rgb{0, 0, 0};
      DrawNumber(img, c * kCell + kCell / 2, r * kCell + kCell / 2, counts[r][c], ink);
    }
  WritePng(path, img);
}

}  // namespace weakmil::eval
