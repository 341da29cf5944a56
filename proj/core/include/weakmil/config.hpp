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

// Pipeline configuration.
//
// Precedence, lowest first: built-in defaults, TOML file, WEAKMIL_* environment
// variables, command-line flags. Each key `section.name` maps to the variable
// WEAKMIL_SECTION_NAME. Unknown keys and unknown WEAKMIL_* variables are
// rejected.

#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>

#include "weakmil/augment.hpp"
#include "weakmil/encoder.hpp"
#include "weakmil/heatmap.hpp"
#include "weakmil/mil.hpp"
#include "weakmil/moco.hpp"
#include "weakmil/preprocess.hpp"
#include "weakmil/synthgen.hpp"

namespace weakmil {

struct EvalConfig {
  std::size_t folds = 4;
  /// 0 selects plain k-fold cross-validation (test size n / k).
  std::size_t test_size = 0;
  double threshold = 0.5;
  /// Also train and score the max-pooling baseline.
  bool baseline = true;
};

struct HeatmapConfig {
  heatmap::NormalizeConfig normalize;
  double alpha = 0.5;
};

struct PipelineConfig {
  // [run]
  std::uint64_t seed = 7;
  std::size_t threads = 1;
  std::filesystem::path out_dir = "weakmil_out";

  synth::SynthSpec synth;
  prep::QcThresholds qc;
  prep::MicronsConfig microns;
  std::size_t output_px = 224;
  ssl::EncoderConfig encoder;
  ssl::MoCoHyper ssl;
  ssl::AugmentationConfig augment;
  mil::MilHyper mil;
  /// Run the lr x weight-decay grid and keep the best mean fold AUC.
  bool grid_search = false;
  EvalConfig eval;
  HeatmapConfig heatmap;

  /// Field-level ConfigError on the first invalid value.
  void Validate() const;

  /// `section.key = value` lines for every setting that affects results
  /// (everything except run.threads and run.out_dir), in a fixed order.
  std::string Canonical() const;
};

PipelineConfig ParseConfigToml(const std::string& text);
PipelineConfig LoadConfigFile(const std::filesystem::path& path);

/// Applies `WEAKMIL_*` entries of `env`; other names are ignored.
void ApplyEnvOverrides(PipelineConfig& cfg,
                       const std::map<std::string, std::string>& env);
/// WEAKMIL_* variables of the current process.
std::map<std::string, std::string> ProcessEnvironment();

/// Sets one key from its string form, e.g. ("ssl.epochs", "5").
void SetConfigValue(PipelineConfig& cfg, const std::string& key,
                    const std::string& value);

}  // namespace weakmil
