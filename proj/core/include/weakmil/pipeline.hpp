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

// Pipeline stages. Each stage reads its inputs from the output tree, writes
// its artifacts into its own directory and records a manifest.json with the
// config hash, seed and SHA-256 of every input and output file.
//
//   corpus/     slide PNGs, manifest.csv, markers.json
//   preprocess/ patch_grid.csv, thresholds.csv
//   ssl/        encoder.moco, train_log.csv
//   features/   {slide_id}.wbag, index.csv
//   mil/        folds.csv, fold{f}.wmil, fold{f}_maxpool.wmil,
//               train_log_fold{f}.csv, selection.csv (grid search only)
//   eval/       metrics.csv, metrics.json, predictions.csv,
//               roc_fold{f}.csv, confusion.png
//   heatmaps/   {slide_id}_class{c}.png, index.csv

#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "weakmil/config.hpp"
#include "weakmil/eval.hpp"

namespace weakmil::pipeline {

struct Layout {
  std::filesystem::path root;

  std::filesystem::path corpus() const { return root / "corpus"; }
  std::filesystem::path preprocess() const { return root / "preprocess"; }
  std::filesystem::path ssl() const { return root / "ssl"; }
  std::filesystem::path features() const { return root / "features"; }
  std::filesystem::path mil() const { return root / "mil"; }
  std::filesystem::path eval() const { return root / "eval"; }
  std::filesystem::path heatmaps() const { return root / "heatmaps"; }

  std::filesystem::path slide_manifest() const { return corpus() / "manifest.csv"; }
  std::filesystem::path markers() const { return corpus() / "markers.json"; }
  std::filesystem::path patch_grid() const { return preprocess() / "patch_grid.csv"; }
  std::filesystem::path encoder() const { return ssl() / "encoder.moco"; }
  std::filesystem::path bag_index() const { return features() / "index.csv"; }
  std::filesystem::path folds() const { return mil() / "folds.csv"; }
  std::filesystem::path fold_model(std::size_t f) const {
    return mil() / ("fold" + std::to_string(f) + ".wmil");
  }
  std::filesystem::path fold_baseline(std::size_t f) const {
    return mil() / ("fold" + std::to_string(f) + "_maxpool.wmil");
  }
  std::filesystem::path metrics_json() const { return eval() / "metrics.json"; }
};

void RunSynth(const PipelineConfig& cfg);
void RunPreprocess(const PipelineConfig& cfg);
void RunSslTrain(const PipelineConfig& cfg);
void RunExtract(const PipelineConfig& cfg);
void RunMilTrain(const PipelineConfig& cfg);

struct ModelMetrics {
  eval::MetricsReport report;
  /// Confusion pooled over all test folds.
  eval::ConfusionMatrix pooled;
  eval::PredictiveValues pooled_pv;
  std::vector<eval::FoldMetrics> folds;
};

struct EvaluationSummary {
  ModelMetrics attention;
  bool has_baseline = false;
  ModelMetrics baseline;
};

/// k-fold evaluation of the models written by RunMilTrain.
EvaluationSummary RunEvaluate(const PipelineConfig& cfg);

/// Trains on the slides of one manifest and tests on another, both drawn
/// from the extracted bags. Writes into eval/external/.
EvaluationSummary RunExternalEvaluate(const PipelineConfig& cfg,
                                      const std::filesystem::path& train_manifest,
                                      const std::filesystem::path& test_manifest);

/// Heatmap pairs for every slide, each drawn with the model of the fold
/// that tests it.
void RunHeatmap(const PipelineConfig& cfg);

EvaluationSummary RunAll(const PipelineConfig& cfg);

std::vector<eval::FoldSplit> ReadFolds(const std::filesystem::path& path);

}  // namespace weakmil::pipeline
