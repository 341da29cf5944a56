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

// weakmil command-line driver.
//
// Exit codes: 0 success, 1 other failure, 2 configuration error,
// 3 missing upstream artifact, 4 numeric failure. Failures print a single
// line to stderr:
//
//   error kind=<kind> exit=<code> message="<text>"

#include <cstdlib>
#include <functional>
#include <iostream>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "weakmil/config.hpp"
#include "weakmil/error.hpp"
#include "weakmil/log.hpp"
#include "weakmil/pipeline.hpp"

namespace {

using weakmil::PipelineConfig;

constexpr int kExitOther = 1;
constexpr int kExitConfig = 2;
constexpr int kExitDependency = 3;
constexpr int kExitNumeric = 4;

int ExitCodeFor(weakmil::ErrorKind kind) {
  switch (kind) {
    case weakmil::ErrorKind::kConfig: return kExitConfig;
    case weakmil::ErrorKind::kDependency: return kExitDependency;
    case weakmil::ErrorKind::kNumeric: return kExitNumeric;
    default: return kExitOther;
  }
}

std::string Quote(const std::string& s) {
  std::string out;
  for (char c : s) {
    if (c == '"' || c == '\\') out += '\\';
    out += (c == '\n' || c == '\r') ? ' ' : c;
  }
  return out;
}

int Fail(const std::string& kind, int code, const std::string& message) {
  std::cerr << "error kind=" << kind << " exit=" << code << " message=\""
            << Quote(message) << "\"\n";
  return code;
}

// Flag values are kept as strings and applied through the same key setter
// as TOML and environment overrides, so validation messages match.
struct Overrides {
  std::string config;
  bool quiet = false;
  std::vector<std::string> set;
  std::map<std::string, std::string> values;

  void Bind(CLI::App* app, const std::string& flag, const std::string& key,
            const std::string& help) {
    app->add_option_function<std::string>(
        flag, [this, key](const std::string& v) { values[key] = v; }, help);
  }
};

void AddCommon(CLI::App* app, Overrides& o) {
  app->add_option("--config", o.config, "TOML configuration file");
  o.Bind(app, "--seed", "run.seed", "Master seed");
  o.Bind(app, "--threads", "run.threads", "Worker threads (1 = reproducible mode)");
  o.Bind(app, "--out", "run.out_dir", "Output directory");
  app->add_option("--set", o.set, "Extra override, section.key=value (repeatable)");
  app->add_flag("--quiet", o.quiet, "Suppress progress logging");
}

PipelineConfig Resolve(const Overrides& o) {
  PipelineConfig cfg = o.config.empty() ? PipelineConfig{}
                                        : weakmil::LoadConfigFile(o.config);
  weakmil::ApplyEnvOverrides(cfg, weakmil::ProcessEnvironment());
  for (const auto& [key, value] : o.values) weakmil::SetConfigValue(cfg, key, value);
  for (const auto& kv : o.set) {
    const auto eq = kv.find('=');
    if (eq == std::string::npos) {
      throw weakmil::ConfigError("--set: expected section.key=value, got '" + kv + "'");
    }
    weakmil::SetConfigValue(cfg, kv.substr(0, eq), kv.substr(eq + 1));
  }
  cfg.Validate();
  return cfg;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"weakly supervised attention MIL for synthetic whole-slide images"};
  app.require_subcommand(1);

  Overrides o;
  std::string train_manifest, test_manifest;
  std::function<void(const PipelineConfig&)> action;

  const auto stage = [&](const std::string& name, const std::string& help,
                         std::function<void(const PipelineConfig&)> run) {
    CLI::App* sub = app.add_subcommand(name, help);
    AddCommon(sub, o);
    sub->callback([&action, run] { action = run; });
    return sub;
  };

  namespace p = weakmil::pipeline;
  stage("synth", "Generate the synthetic slide corpus", p::RunSynth);
  stage("preprocess", "Tissue segmentation, tiling and patch QC", p::RunPreprocess);

  CLI::App* ssl = stage("ssl-train", "Contrastive pretraining of the patch encoder",
                        p::RunSslTrain);
  o.Bind(ssl, "--epochs", "ssl.epochs", "Training epochs");
  o.Bind(ssl, "--queue-size", "ssl.queue_size", "Negative queue length");
  o.Bind(ssl, "--lr", "ssl.learning_rate", "Learning rate");
  o.Bind(ssl, "--weight-decay", "ssl.weight_decay", "Weight decay");

  stage("extract", "Encode kept patches into per-slide feature bags", p::RunExtract);

  CLI::App* mil = stage("mil-train", "Train attention MIL and baseline per fold",
                        p::RunMilTrain);
  o.Bind(mil, "--epochs", "mil.epochs", "Training epochs");
  o.Bind(mil, "--lr", "mil.learning_rate", "Learning rate");
  o.Bind(mil, "--weight-decay", "mil.weight_decay", "Weight decay");
  o.Bind(mil, "--folds", "eval.folds", "Number of folds");
  o.Bind(mil, "--test-size", "eval.test_size", "Test slides per fold (0 = n/k)");

  CLI::App* ev = stage("evaluate", "Score held-out folds", [&](const PipelineConfig& cfg) {
    if (train_manifest.empty() != test_manifest.empty()) {
      throw weakmil::ConfigError(
          "--train-manifest and --test-manifest must be given together");
    }
    if (train_manifest.empty()) {
      p::RunEvaluate(cfg);
    } else {
      p::RunExternalEvaluate(cfg, train_manifest, test_manifest);
    }
  });
  ev->add_option("--train-manifest", train_manifest, "Slides to train on (external mode)");
  ev->add_option("--test-manifest", test_manifest, "Slides to test on (external mode)");
  o.Bind(ev, "--epochs", "mil.epochs", "Training epochs (external mode)");
  o.Bind(ev, "--lr", "mil.learning_rate", "Learning rate (external mode)");
  o.Bind(ev, "--weight-decay", "mil.weight_decay", "Weight decay (external mode)");

  stage("heatmap", "Per-class attention heatmaps", p::RunHeatmap);

  CLI::App* all = stage("run-all", "Run every stage in order",
                        [](const PipelineConfig& cfg) { p::RunAll(cfg); });
  o.Bind(all, "--queue-size", "ssl.queue_size", "Negative queue length");
  o.Bind(all, "--weight-decay", "mil.weight_decay", "MIL weight decay");
  o.Bind(all, "--folds", "eval.folds", "Number of folds");
  o.Bind(all, "--test-size", "eval.test_size", "Test slides per fold (0 = n/k)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    return Fail("usage_error", kExitConfig, e.what());
  }

  try {
    const PipelineConfig cfg = Resolve(o);
    weakmil::SetLogEnabled(!o.quiet);
    action(cfg);
  } catch (const weakmil::Error& e) {
    const int code = ExitCodeFor(e.kind());
    return Fail(weakmil::ErrorKindName(e.kind()), code, e.what());
  } catch (const std::exception& e) {
    return Fail("internal_error", kExitOther, e.what());
  }
  return EXIT_SUCCESS;
}
