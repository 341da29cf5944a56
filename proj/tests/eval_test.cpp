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

#include <algorithm>
#include <cmath>
#include <set>

#include "oracles.hpp"
#include "test_util.hpp"
#include "weakmil/csv.hpp"
#include "weakmil/error.hpp"
#include "weakmil/eval.hpp"
#include "weakmil/image.hpp"

namespace weakmil::eval {
namespace {

using testing::PairwiseAuc;

struct Instance {
  std::vector<double> scores;
  std::vector<int> labels;
};

Instance RandomInstance(Rng& rng) {
  Instance in;
  const std::size_t n = 2 + rng.Below(49);
  // Coarse scores force ties.
  const std::uint64_t levels = 1 + rng.Below(20);
  for (std::size_t i = 0; i < n; ++i) {
    in.scores.push_back(static_cast<double>(rng.Below(levels)) / 7.0);
    in.labels.push_back(static_cast<int>(rng.Below(2)));
  }
  in.labels[0] = 0;
  in.labels[1] = 1;
  return in;
}

TEST(RocAuc, MatchesPairwiseOracle) {
  Rng rng(1);
  for (int trial = 0; trial < 1000; ++trial) {
    const Instance in = RandomInstance(rng);
    ASSERT_NEAR(RocAuc(in.scores, in.labels), PairwiseAuc(in.scores, in.labels), 1e-12)
        << trial;
  }
}

TEST(RocAuc, SymmetryAndMonotoneInvariance) {
  Rng rng(2);
  for (int trial = 0; trial < 200; ++trial) {
    const Instance in = RandomInstance(rng);
    std::vector<double> neg, mono;
    std::vector<int> flipped;
    for (std::size_t i = 0; i < in.scores.size(); ++i) {
      neg.push_back(-in.scores[i]);
      mono.push_back(std::exp(3.0 * in.scores[i]) - 4.0);
      flipped.push_back(1 - in.labels[i]);
    }
    const double auc = RocAuc(in.scores, in.labels);
    EXPECT_NEAR(RocAuc(neg, in.labels), 1.0 - auc, 1e-12);
    EXPECT_NEAR(RocAuc(in.scores, flipped), 1.0 - auc, 1e-12);
    EXPECT_NEAR(RocAuc(mono, in.labels), auc, 1e-12);
  }
}

TEST(RocAuc, Examples) {
  EXPECT_EQ(RocAuc(std::vector<double>{0.9, 0.8, 0.2, 0.1}, std::vector<int>{1, 1, 0, 0}), 1.0);
  EXPECT_EQ(RocAuc(std::vector<double>{0.5, 0.5, 0.5}, std::vector<int>{1, 0, 1}), 0.5);
  EXPECT_NEAR(RocAuc(std::vector<double>{0.8, 0.7, 0.6, 0.5}, std::vector<int>{1, 0, 1, 0}),
              0.75, 1e-15);
  EXPECT_THROW(RocAuc(std::vector<double>{0.1, 0.2}, std::vector<int>{1, 1}),
               UndefinedMetricError);
}

TEST(RocCurve, EndpointsAndTrapezoidArea) {
  Rng rng(3);
  const Instance in = RandomInstance(rng);
  const auto pts = RocCurve(in.scores, in.labels);
  ASSERT_GE(pts.size(), 2u);
  EXPECT_EQ(pts.front().fpr, 0.0);
  EXPECT_EQ(pts.front().tpr, 0.0);
  EXPECT_EQ(pts.back().fpr, 1.0);
  EXPECT_EQ(pts.back().tpr, 1.0);
  double area = 0;
  for (std::size_t i = 1; i < pts.size(); ++i) {
    EXPECT_GE(pts[i].fpr, pts[i - 1].fpr);
    EXPECT_GE(pts[i].tpr, pts[i - 1].tpr);
    area += (pts[i].fpr - pts[i - 1].fpr) * (pts[i].tpr + pts[i - 1].tpr) / 2;
  }
  EXPECT_NEAR(area, RocAuc(in.scores, in.labels), 1e-12);
}

TEST(Confusion, MatchesDirectCount) {
  Rng rng(4);
  for (int trial = 0; trial < 100; ++trial) {
    const Instance in = RandomInstance(rng);
    const double thr = rng.Uniform(0.0, 3.0);
    ConfusionMatrix ref;
    for (std::size_t i = 0; i < in.scores.size(); ++i) {
      const bool pred = in.scores[i] >= thr;
      if (pred && in.labels[i]) ++ref.tp;
      if (pred && !in.labels[i]) ++ref.fp;
      if (!pred && !in.labels[i]) ++ref.tn;
      if (!pred && in.labels[i]) ++ref.fn;
    }
    const ConfusionMatrix cm = Confusion(in.scores, in.labels, thr);
    EXPECT_EQ(cm, ref);
    EXPECT_EQ(cm.Total(), in.scores.size());
  }
  const ConfusionMatrix all = Confusion(std::vector<double>{0.1, 0.9}, std::vector<int>{0, 1}, 0.0);
  EXPECT_EQ(all.tn + all.fn, 0u);
  const ConfusionMatrix at = Confusion(std::vector<double>{0.5}, std::vector<int>{1}, 0.5);
  EXPECT_EQ(at.tp, 1u);
}

TEST(PredictiveValues, ArithmeticAndGuards) {
  const PredictiveValues pv = PpvNpv({21, 4, 10, 3});
  EXPECT_NEAR(*pv.ppv, 0.84, 1e-15);
  EXPECT_NEAR(*pv.npv, 10.0 / 13.0, 1e-15);
  EXPECT_EQ(*PpvNpv({5, 0, 1, 1}).ppv, 1.0);
  EXPECT_FALSE(PpvNpv({0, 0, 3, 1}).ppv.has_value());
  EXPECT_FALSE(PpvNpv({2, 1, 0, 0}).npv.has_value());
  EXPECT_EQ(FormatOptional(std::nullopt), "NA");
}

TEST(Aggregate, PopulationStatistics) {
  const std::vector<double> a = {0.83, 0.85, 0.86, 0.87};
  const MetricsReport r = Aggregate(a);
  EXPECT_NEAR(r.mean_auc, 0.8525, 1e-15);
  EXPECT_EQ(r.max_auc, 0.87);
  double v = 0;
  for (double x : a) v += (x - 0.8525) * (x - 0.8525);
  EXPECT_NEAR(r.std_auc, std::sqrt(v / 4), 1e-15);
  EXPECT_EQ(Aggregate(std::vector<double>{0.7}).std_auc, 0.0);
  const MetricsReport c = Aggregate(std::vector<double>(4, 0.8));
  EXPECT_NEAR(c.mean_auc, 0.8, 1e-15);
  EXPECT_NEAR(c.std_auc, 0.0, 1e-15);
}

std::pair<std::vector<std::string>, std::vector<int>> Cohort(std::size_t pos, std::size_t neg) {
  std::vector<std::string> ids;
  std::vector<int> labels;
  for (std::size_t i = 0; i < pos + neg; ++i) {
    ids.push_back("s" + std::to_string(i));
    labels.push_back(i < pos ? 1 : 0);
  }
  return {ids, labels};
}

TEST(Folds, SixtySlideCrossValidation) {
  const auto [ids, labels] = Cohort(30, 30);
  const auto folds = MakeFolds(ids, labels, 4, 7);
  ASSERT_EQ(folds.size(), 4u);
  std::set<std::string> seen;
  for (const auto& f : folds) {
    EXPECT_EQ(f.test_ids.size(), 15u);
    EXPECT_EQ(f.train_ids.size(), 45u);
    std::size_t pos = 0;
    for (const auto& id : f.test_ids) {
      EXPECT_TRUE(seen.insert(id).second) << "test sets overlap";
      pos += labels[std::stoul(id.substr(1))];
    }
    EXPECT_TRUE(pos == 7 || pos == 8) << pos;
    std::set<std::string> all(f.train_ids.begin(), f.train_ids.end());
    for (const auto& id : f.test_ids) EXPECT_TRUE(all.insert(id).second);
    EXPECT_EQ(all.size(), 60u);
  }
  EXPECT_EQ(seen.size(), 60u);
  EXPECT_EQ(MakeFolds(ids, labels, 4, 7)[2].test_ids, folds[2].test_ids);
}

TEST(Folds, UnevenSizes) {
  const auto [ids, labels] = Cohort(91, 91);
  std::vector<std::size_t> sizes;
  for (const auto& f : MakeFolds(ids, labels, 4, 1)) sizes.push_back(f.test_ids.size());
  EXPECT_EQ(sizes, (std::vector<std::size_t>{46, 46, 45, 45}));
  for (const auto& f : MakeFolds(ids, labels, 4, 1, 22)) {
    EXPECT_EQ(f.test_ids.size(), 22u);
    EXPECT_EQ(f.train_ids.size(), 160u);
  }
}

TEST(Folds, Errors) {
  const auto [ids, labels] = Cohort(3, 3);
  EXPECT_THROW(MakeFolds(ids, std::vector<int>(6, 1), 2, 1), DatasetError);
  EXPECT_THROW(MakeFolds(ids, labels, 1, 1), ConfigError);
  EXPECT_THROW(MakeFolds(ids, labels, 7, 1), DatasetError);
  EXPECT_THROW(MakeFolds(ids, labels, 2, 1, 7), ConfigError);
}

TEST(Writers, CsvAndPng) {
  testing::ScratchDir dir;
  FoldMetrics f;
  f.fold = 0;
  f.auc = 0.75;
  f.pv = PpvNpv({1, 0, 0, 0});
  WriteMetricsCsv(dir.path() / "m.csv", {f});
  const CsvTable t = ReadCsv(dir.path() / "m.csv", {"fold", "auc", "ppv", "npv"});
  ASSERT_EQ(t.rows.size(), 1u);
  EXPECT_EQ(t.rows[0][3], "NA");
  WriteRocCsv(dir.path() / "r.csv", {{0, 0}, {1, 1}});
  EXPECT_EQ(ReadCsv(dir.path() / "r.csv", {"fpr", "tpr"}).rows.size(), 2u);
  WriteConfusionCsv(dir.path() / "c.csv", {12, 3, 9, 4});
  const CsvTable c =
      ReadCsv(dir.path() / "c.csv", {"actual", "predicted_positive", "predicted_negative"});
  ASSERT_EQ(c.rows.size(), 2u);
  EXPECT_EQ(c.rows[0], (std::vector<std::string>{"positive", "12", "4"}));
  EXPECT_EQ(c.rows[1], (std::vector<std::string>{"negative", "3", "9"}));
  WriteConfusionPng(dir.path() / "c.png", {12, 3, 9, 4});
  const RgbImage img = ReadPng(dir.path() / "c.png");
  EXPECT_GT(img.width(), 0u);
}

}  // namespace
}  // namespace weakmil::eval
