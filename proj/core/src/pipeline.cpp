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

#include "weakmil/pipeline.hpp"

#include <algorithm>
#include <chrono>
#include <map>
#include <optional>
#include <set>

#include "json.hpp"
#include "weakmil/checkpoint.hpp"
#include "weakmil/csv.hpp"
#include "weakmil/error.hpp"
#include "weakmil/features.hpp"
#include "weakmil/hashing.hpp"
#include "weakmil/heatmap.hpp"
#include "weakmil/log.hpp"
#include "weakmil/mil.hpp"
#include "weakmil/moco.hpp"
#include "weakmil/parallel.hpp"
#include "weakmil/random.hpp"
#include "weakmil/synthgen.hpp"

namespace weakmil::pipeline {

namespace fs = std::filesystem;
using Json = nlohmann::json;

namespace {

void Require(const fs::path& p, const std::string& producer) {
  if (!fs::exists(p)) {
    throw DependencyError("missing upstream artifact '" + p.string() +
                          "' (produced by the " + producer + " stage)");
  }
}

class StageManifest {
 public:
  StageManifest(const PipelineConfig& cfg, const Layout& layout, std::string stage)
      : cfg_(cfg), layout_(layout), stage_(std::move(stage)) {}

  void Input(const fs::path& p) { inputs_.push_back(p); }
  void Output(const fs::path& p) { outputs_.push_back(p); }

  void Write(const fs::path& dir) const {
    Json j;
    j["stage"] = stage_;
    j["seed"] = cfg_.seed;
    j["config_sha256"] = Sha256Hex(cfg_.Canonical());
    j["inputs"] = Hashes(inputs_);
    j["outputs"] = Hashes(outputs_);
    WriteTextFile(dir / "manifest.json", j.dump(2) + "\n");
  }

 private:
  Json Hashes(const std::vector<fs::path>& files) const {
    Json out = Json::object();
    for (const auto& f : files)
      out[f.lexically_relative(layout_.root).generic_string()] = Sha256File(f);
    return out;
  }

  const PipelineConfig& cfg_;
  const Layout& layout_;
  std::string stage_;
  std::vector<fs::path> inputs_;
  std::vector<fs::path> outputs_;
};

class StageTimer {
 public:
  explicit StageTimer(std::string name)
      : name_(std::move(name)), start_(std::chrono::steady_clock::now()) {
    LogInfo("stage " + name_ + " started");
  }
  ~StageTimer() {
    const auto s = std::chrono::duration<double>(std::chrono::steady_clock::now() - start_);
    LogInfo("stage " + name_ + " finished in " + std::to_string(s.count()) + " s");
  }

 private:
  std::string name_;
  std::chrono::steady_clock::time_point start_;
};

Layout MakeLayout(const PipelineConfig& cfg) { return Layout{cfg.out_dir}; }

std::map<std::string, prep::PatchGrid> LoadGrids(const PipelineConfig& cfg,
                                                 const Layout& layout) {
  std::map<std::string, prep::PatchGrid> out;
  const std::size_t src = prep::PatchSidePixels(cfg.microns);
  for (auto& g : prep::ReadPatchGridCsv(layout.patch_grid())) {
    g.patch_px_source = src;
    g.output_px = cfg.output_px;
    const std::string id = g.slide_id;
    out.emplace(id, std::move(g));
  }
  return out;
}

const prep::PatchGrid& GridFor(const std::map<std::string, prep::PatchGrid>& grids,
                               const std::string& id) {
  const auto it = grids.find(id);
  if (it == grids.end()) {
    throw DependencyError("patch grid has no entry for slide '" + id + "'");
  }
  return it->second;
}

std::string MilLog(const std::vector<double>& losses) {
  CsvTable t;
  t.header = {"epoch", "mean_loss"};
  for (std::size_t e = 0; e < losses.size(); ++e)
    t.rows.push_back({std::to_string(e + 1), FormatDouble(losses[e])});
  std::string s;
  for (std::size_t i = 0; i < t.header.size(); ++i) s += (i ? "," : "") + t.header[i];
  s += "\n";
  for (const auto& r : t.rows) s += r[0] + "," + r[1] + "\n";
  return s;
}

struct FoldModels {
  std::vector<ParamSet> attention;
  std::vector<ParamSet> baseline;
  std::vector<std::vector<double>> attention_logs;
  std::vector<std::vector<double>> baseline_logs;
};

std::vector<const FeatureBag*> Select(const std::vector<FeatureBag>& bags,
                                      const std::vector<std::string>& ids) {
  std::map<std::string, const FeatureBag*> by_id;
  for (const auto& b : bags) by_id[b.slide_id] = &b;
  std::vector<const FeatureBag*> out;
  for (const auto& id : ids) {
    const auto it = by_id.find(id);
    if (it == by_id.end()) throw DependencyError("no feature bag for slide '" + id + "'");
    out.push_back(it->second);
  }
  return out;
}

std::vector<FeatureBag> Copy(const std::vector<const FeatureBag*>& bags) {
  std::vector<FeatureBag> out;
  out.reserve(bags.size());
  for (const auto* b : bags) out.push_back(*b);
  return out;
}

std::uint64_t FoldSeed(std::uint64_t seed, std::size_t fold) {
  return DeriveSeed(DeriveSeed(seed, "mil-fold"), static_cast<std::uint64_t>(fold));
}

FoldModels TrainFolds(const std::vector<FeatureBag>& bags,
                      const std::vector<eval::FoldSplit>& folds,
                      const mil::MilHyper& hyper, bool baseline,
                      std::uint64_t seed, std::size_t threads) {
  FoldModels m;
  const std::size_t k = folds.size();
  m.attention.resize(k);
  m.attention_logs.resize(k);
  m.baseline.resize(baseline ? k : 0);
  m.baseline_logs.resize(baseline ? k : 0);
  ParallelFor(k, threads, [&](std::size_t f) {
    const auto train = Copy(Select(bags, folds[f].train_ids));
    auto r = mil::TrainMil(train, hyper, FoldSeed(seed, f));
    m.attention[f] = std::move(r.model);
    m.attention_logs[f] = std::move(r.epoch_losses);
    if (baseline) {
      auto b = mil::TrainMaxPool(train, hyper, FoldSeed(seed, f));
      m.baseline[f] = std::move(b.model);
      m.baseline_logs[f] = std::move(b.epoch_losses);
    }
  });
  return m;
}

struct Scored {
  std::vector<double> scores;
  std::vector<int> labels;
};

Scored ScoreAttention(const ParamSet& model, const std::vector<const FeatureBag*>& bags) {
  Scored s;
  for (const auto* b : bags) {
    s.scores.push_back(mil::MilForward(model, *b).positive_probability);
    s.labels.push_back(b->label);
  }
  return s;
}

Scored ScoreBaseline(const ParamSet& model, const std::vector<const FeatureBag*>& bags) {
  Scored s;
  for (const auto* b : bags) {
    s.scores.push_back(mil::MaxPoolScore(model, b->features));
    s.labels.push_back(b->label);
  }
  return s;
}

eval::FoldMetrics FoldResult(std::size_t fold, const Scored& s, double threshold) {
  eval::FoldMetrics m;
  m.fold = fold;
  m.auc = eval::RocAuc(s.scores, s.labels);
  m.confusion = eval::Confusion(s.scores, s.labels, threshold);
  m.pv = eval::PpvNpv(m.confusion);
  return m;
}

ModelMetrics Summarize(std::vector<eval::FoldMetrics> folds) {
  ModelMetrics m;
  std::vector<double> aucs;
  for (const auto& f : folds) {
    aucs.push_back(f.auc);
    m.pooled += f.confusion;
  }
  m.report = eval::Aggregate(aucs);
  m.pooled_pv = eval::PpvNpv(m.pooled);
  m.folds = std::move(folds);
  return m;
}

Json OptionalJson(const std::optional<double>& v) { return v ? Json(*v) : Json(nullptr); }

Json MetricsJson(const ModelMetrics& m) {
  Json j;
  j["fold_auc"] = m.report.fold_auc;
  j["mean_auc"] = m.report.mean_auc;
  j["std_auc"] = m.report.std_auc;
  j["max_auc"] = m.report.max_auc;
  j["ppv"] = OptionalJson(m.pooled_pv.ppv);
  j["npv"] = OptionalJson(m.pooled_pv.npv);
  j["confusion"] = {{"tp", m.pooled.tp}, {"fp", m.pooled.fp},
                    {"tn", m.pooled.tn}, {"fn", m.pooled.fn}};
  Json folds = Json::array();
  for (const auto& f : m.folds) {
    folds.push_back({{"fold", f.fold},
                     {"auc", f.auc},
                     {"ppv", OptionalJson(f.pv.ppv)},
                     {"npv", OptionalJson(f.pv.npv)}});
  }
  j["folds"] = folds;
  return j;
}

struct SelectedHyper {
  double learning_rate;
  double weight_decay;
};

void WriteSelectedHyper(const fs::path& path, const SelectedHyper& h) {
  CsvTable t;
  t.header = {"learning_rate", "weight_decay"};
  t.rows.push_back({FormatDouble(h.learning_rate), FormatDouble(h.weight_decay)});
  WriteCsv(path, t);
}

SelectedHyper ReadSelectedHyper(const fs::path& path) {
  const CsvTable t = ReadCsv(path, {"learning_rate", "weight_decay"});
  if (t.rows.size() != 1) throw FormatError("expected one row in '" + path.string() + "'", 0);
  return {std::stod(t.rows[0][0]), std::stod(t.rows[0][1])};
}

void WriteFoldsCsv(const fs::path& path, const std::vector<eval::FoldSplit>& folds) {
  CsvTable t;
  t.header = {"fold", "slide_id", "split"};
  for (const auto& f : folds) {
    for (const auto& id : f.train_ids) t.rows.push_back({std::to_string(f.fold_id), id, "train"});
    for (const auto& id : f.test_ids) t.rows.push_back({std::to_string(f.fold_id), id, "test"});
  }
  WriteCsv(path, t);
}

void WriteEvaluation(const fs::path& dir, const EvaluationSummary& s,
                     const SelectedHyper& hyper, double threshold,
                     std::size_t n_slides, StageManifest& manifest) {
  eval::WriteMetricsCsv(dir / "metrics.csv", s.attention.folds);
  manifest.Output(dir / "metrics.csv");
  Json j;
  j["attention_mil"] = MetricsJson(s.attention);
  if (s.has_baseline) j["max_pool_baseline"] = MetricsJson(s.baseline);
  j["hyperparameters"] = {{"learning_rate", hyper.learning_rate},
                          {"weight_decay", hyper.weight_decay}};
  j["threshold"] = threshold;
  j["n_slides"] = n_slides;
  WriteTextFile(dir / "metrics.json", j.dump(2) + "\n");
  manifest.Output(dir / "metrics.json");
  eval::WriteConfusionCsv(dir / "confusion.csv", s.attention.pooled);
  manifest.Output(dir / "confusion.csv");
  eval::WriteConfusionPng(dir / "confusion.png", s.attention.pooled);
  manifest.Output(dir / "confusion.png");
}

}  // namespace

std::vector<eval::FoldSplit> ReadFolds(const fs::path& path) {
  const CsvTable t = ReadCsv(path, {"fold", "slide_id", "split"});
  std::vector<eval::FoldSplit> folds;
  for (const auto& r : t.rows) {
    std::size_t f = 0;
    try {
      f = std::stoul(r[0]);
    } catch (const std::exception&) {
      throw FormatError("bad fold index in '" + path.string() + "'", 0);
    }
    if (f >= folds.size()) folds.resize(f + 1);
    folds[f].fold_id = f;
    if (r[2] == "train") {
      folds[f].train_ids.push_back(r[1]);
    } else if (r[2] == "test") {
      folds[f].test_ids.push_back(r[1]);
    } else {
      throw FormatError("bad split '" + r[2] + "' in '" + path.string() + "'", 0);
    }
  }
  return folds;
}

void RunSynth(const PipelineConfig& cfg) {
  StageTimer timer("synth");
  cfg.Validate();
  const Layout layout = MakeLayout(cfg);
  fs::create_directories(layout.corpus());
  const synth::SlideManifest m = synth::GenerateCorpus(cfg.synth, layout.corpus(), cfg.threads);
  StageManifest manifest(cfg, layout, "synth");
  for (const auto& r : m.rows) manifest.Output(m.ImagePath(r));
  manifest.Output(layout.slide_manifest());
  manifest.Output(layout.markers());
  manifest.Write(layout.corpus());
}

void RunPreprocess(const PipelineConfig& cfg) {
  StageTimer timer("preprocess");
  cfg.Validate();
  const Layout layout = MakeLayout(cfg);
  Require(layout.slide_manifest(), "synth");
  const synth::SlideManifest m = synth::ReadManifest(layout.slide_manifest());
  const std::size_t src = prep::PatchSidePixels(cfg.microns);

  std::vector<prep::SlidePreprocessResult> results(m.rows.size());
  ParallelFor(m.rows.size(), cfg.threads, [&](std::size_t i) {
    const auto path = m.ImagePath(m.rows[i]);
    Require(path, "synth");
    results[i] = prep::PreprocessSlide(m.rows[i].slide_id, ReadPng(path), src,
                                       cfg.qc, cfg.output_px);
  });

  fs::create_directories(layout.preprocess());
  std::vector<prep::PatchGrid> grids;
  CsvTable thresholds;
  thresholds.header = {"slide_id", "threshold", "kept"};
  std::size_t kept = 0;
  for (auto& r : results) {
    thresholds.rows.push_back({r.grid.slide_id, std::to_string(r.threshold),
                               std::to_string(r.grid.KeptCount())});
    kept += r.grid.KeptCount();
    grids.push_back(std::move(r.grid));
  }
  prep::WritePatchGridCsv(layout.patch_grid(), grids);
  WriteCsv(layout.preprocess() / "thresholds.csv", thresholds);
  LogInfo("preprocess kept " + std::to_string(kept) + " patches over " +
          std::to_string(grids.size()) + " slides");

  StageManifest manifest(cfg, layout, "preprocess");
  manifest.Input(layout.slide_manifest());
  for (const auto& r : m.rows) manifest.Input(m.ImagePath(r));
  manifest.Output(layout.patch_grid());
  manifest.Output(layout.preprocess() / "thresholds.csv");
  manifest.Write(layout.preprocess());
}

void RunSslTrain(const PipelineConfig& cfg) {
  StageTimer timer("ssl-train");
  cfg.Validate();
  const Layout layout = MakeLayout(cfg);
  Require(layout.slide_manifest(), "synth");
  Require(layout.patch_grid(), "preprocess");
  const synth::SlideManifest m = synth::ReadManifest(layout.slide_manifest());
  const auto grid_map = LoadGrids(cfg, layout);

  std::vector<prep::PatchGrid> grids;
  std::vector<int> labels;
  for (const auto& r : m.rows) {
    grids.push_back(GridFor(grid_map, r.slide_id));
    labels.push_back(r.label);
  }
  const auto refs = ssl::SampleSslDataset(grids, labels, cfg.ssl.patches_per_slide,
                                          DeriveSeed(cfg.seed, "ssl-dataset"));

  // Decode each sampled slide once and cut its patches.
  std::vector<std::vector<std::size_t>> per_slide(m.rows.size());
  for (std::size_t i = 0; i < refs.size(); ++i) per_slide[refs[i].slide].push_back(i);
  std::vector<RgbImage> patches(refs.size());
  ParallelFor(m.rows.size(), cfg.threads, [&](std::size_t s) {
    if (per_slide[s].empty()) return;
    const RgbImage slide = ReadPng(m.ImagePath(m.rows[s]));
    for (std::size_t i : per_slide[s]) {
      patches[i] = ssl::PrepareEncoderInput(
          ExtractPatch(slide, grids[s], refs[i].row, refs[i].col), cfg.encoder);
    }
  });
  LogInfo("ssl dataset: " + std::to_string(patches.size()) + " patches");

  const ssl::SslResult result = ssl::TrainSsl(patches, cfg.ssl, cfg.encoder, cfg.augment,
                                              DeriveSeed(cfg.seed, "ssl-train"), cfg.threads);

  fs::create_directories(layout.ssl());
  SaveCheckpoint(layout.encoder(), kEncoderMagic, result.state.query);
  WriteTextFile(layout.ssl() / "train_log.csv", MilLog(result.epoch_losses));

  StageManifest manifest(cfg, layout, "ssl-train");
  manifest.Input(layout.slide_manifest());
  manifest.Input(layout.patch_grid());
  manifest.Output(layout.encoder());
  manifest.Output(layout.ssl() / "train_log.csv");
  manifest.Write(layout.ssl());
}

void RunExtract(const PipelineConfig& cfg) {
  StageTimer timer("extract");
  cfg.Validate();
  const Layout layout = MakeLayout(cfg);
  Require(layout.encoder(), "ssl-train");
  Require(layout.patch_grid(), "preprocess");
  Require(layout.slide_manifest(), "synth");
  const ParamSet encoder = LoadCheckpoint(layout.encoder(), kEncoderMagic);
  const ssl::EncoderConfig enc_cfg = ssl::InferEncoderConfig(encoder, cfg.encoder.input_px);
  const synth::SlideManifest m = synth::ReadManifest(layout.slide_manifest());
  const auto grids = LoadGrids(cfg, layout);

  fs::create_directories(layout.features());
  std::vector<std::optional<BagIndexRow>> rows(m.rows.size());
  ParallelFor(m.rows.size(), cfg.threads, [&](std::size_t i) {
    const auto& r = m.rows[i];
    const auto& grid = GridFor(grids, r.slide_id);
    if (grid.KeptCount() == 0) return;
    const FeatureBag bag = ExtractFeatures(encoder, enc_cfg, ReadPng(m.ImagePath(r)),
                                           grid, r.label);
    const fs::path file = r.slide_id + ".wbag";
    SaveBag(bag, layout.features() / file);
    rows[i] = BagIndexRow{r.slide_id, r.label, bag.size(), file};
  });

  StageManifest manifest(cfg, layout, "extract");
  manifest.Input(layout.encoder());
  manifest.Input(layout.patch_grid());
  std::vector<BagIndexRow> index;
  for (std::size_t i = 0; i < rows.size(); ++i) {
    if (!rows[i]) {
      LogInfo("slide " + m.rows[i].slide_id + " has no kept patches; no bag written");
      continue;
    }
    manifest.Output(layout.features() / rows[i]->bag_path);
    index.push_back(*rows[i]);
  }
  WriteBagIndex(layout.bag_index(), index);
  manifest.Output(layout.bag_index());
  manifest.Write(layout.features());
}

void RunMilTrain(const PipelineConfig& cfg) {
  StageTimer timer("mil-train");
  cfg.Validate();
  const Layout layout = MakeLayout(cfg);
  Require(layout.bag_index(), "extract");
  const std::vector<FeatureBag> bags = LoadBagsFromIndex(layout.bag_index());
  std::vector<std::string> ids;
  std::vector<int> labels;
  for (const auto& b : bags) {
    ids.push_back(b.slide_id);
    labels.push_back(b.label);
  }
  const auto folds = eval::MakeFolds(ids, labels, cfg.eval.folds, cfg.seed, cfg.eval.test_size);
  fs::create_directories(layout.mil());
  WriteFoldsCsv(layout.folds(), folds);

  StageManifest manifest(cfg, layout, "mil-train");
  manifest.Input(layout.bag_index());
  manifest.Output(layout.folds());

  SelectedHyper chosen{cfg.mil.learning_rate, cfg.mil.weight_decay};
  if (cfg.grid_search) {
    CsvTable sel;
    sel.header = {"learning_rate", "weight_decay", "mean_auc"};
    double best = -1.0;
    for (double lr : cfg.mil.lr_grid) {
      for (double wd : cfg.mil.wd_grid) {
        mil::MilHyper h = cfg.mil;
        h.learning_rate = lr;
        h.weight_decay = wd;
        const FoldModels fm = TrainFolds(bags, folds, h, false, cfg.seed, cfg.threads);
        double sum = 0.0;
        for (std::size_t f = 0; f < folds.size(); ++f) {
          const Scored s = ScoreAttention(fm.attention[f], Select(bags, folds[f].test_ids));
          sum += eval::RocAuc(s.scores, s.labels);
        }
        const double mean = sum / static_cast<double>(folds.size());
        sel.rows.push_back({FormatDouble(lr), FormatDouble(wd), FormatDouble(mean)});
        LogInfo("grid lr=" + FormatDouble(lr) + " wd=" + FormatDouble(wd) +
                " mean_auc=" + FormatDouble(mean));
        if (mean > best) {
          best = mean;
          chosen = {lr, wd};
        }
      }
    }
    WriteCsv(layout.mil() / "selection.csv", sel);
    manifest.Output(layout.mil() / "selection.csv");
  }

  mil::MilHyper hyper = cfg.mil;
  hyper.learning_rate = chosen.learning_rate;
  hyper.weight_decay = chosen.weight_decay;
  const FoldModels fm = TrainFolds(bags, folds, hyper, cfg.eval.baseline, cfg.seed, cfg.threads);
  for (std::size_t f = 0; f < folds.size(); ++f) {
    SaveCheckpoint(layout.fold_model(f), kMilMagic, fm.attention[f]);
    manifest.Output(layout.fold_model(f));
    const auto log = layout.mil() / ("train_log_fold" + std::to_string(f) + ".csv");
    WriteTextFile(log, MilLog(fm.attention_logs[f]));
    manifest.Output(log);
    LogInfo("fold " + std::to_string(f) + " final mil loss " +
            FormatDouble(fm.attention_logs[f].empty() ? 0.0 : fm.attention_logs[f].back()));
    if (cfg.eval.baseline) {
      SaveCheckpoint(layout.fold_baseline(f), kMilMagic, fm.baseline[f]);
      manifest.Output(layout.fold_baseline(f));
    }
  }
  WriteSelectedHyper(layout.mil() / "hyper.csv", chosen);
  manifest.Output(layout.mil() / "hyper.csv");
  manifest.Write(layout.mil());
}

EvaluationSummary RunEvaluate(const PipelineConfig& cfg) {
  StageTimer timer("evaluate");
  cfg.Validate();
  const Layout layout = MakeLayout(cfg);
  Require(layout.bag_index(), "extract");
  Require(layout.folds(), "mil-train");
  Require(layout.mil() / "hyper.csv", "mil-train");
  const std::vector<FeatureBag> bags = LoadBagsFromIndex(layout.bag_index());
  const auto folds = ReadFolds(layout.folds());

  StageManifest manifest(cfg, layout, "evaluate");
  manifest.Input(layout.bag_index());
  manifest.Input(layout.folds());
  fs::create_directories(layout.eval());

  CsvTable predictions;
  predictions.header = {"fold", "slide_id", "label", "score", "baseline_score"};
  std::vector<eval::FoldMetrics> attn, base;
  EvaluationSummary summary;
  summary.has_baseline = cfg.eval.baseline;
  for (std::size_t f = 0; f < folds.size(); ++f) {
    Require(layout.fold_model(f), "mil-train");
    manifest.Input(layout.fold_model(f));
    const ParamSet model = LoadCheckpoint(layout.fold_model(f), kMilMagic);
    const auto test = Select(bags, folds[f].test_ids);
    const Scored s = ScoreAttention(model, test);
    attn.push_back(FoldResult(f, s, cfg.eval.threshold));
    const auto roc = layout.eval() / ("roc_fold" + std::to_string(f) + ".csv");
    eval::WriteRocCsv(roc, eval::RocCurve(s.scores, s.labels));
    manifest.Output(roc);

    std::optional<Scored> b;
    if (cfg.eval.baseline) {
      Require(layout.fold_baseline(f), "mil-train");
      manifest.Input(layout.fold_baseline(f));
      b = ScoreBaseline(LoadCheckpoint(layout.fold_baseline(f), kMilMagic), test);
      base.push_back(FoldResult(f, *b, cfg.eval.threshold));
    }
    for (std::size_t i = 0; i < test.size(); ++i) {
      predictions.rows.push_back({std::to_string(f), test[i]->slide_id,
                                  std::to_string(test[i]->label), FormatDouble(s.scores[i]),
                                  b ? FormatDouble(b->scores[i]) : "NA"});
    }
  }
  summary.attention = Summarize(std::move(attn));
  if (summary.has_baseline) summary.baseline = Summarize(std::move(base));

  WriteCsv(layout.eval() / "predictions.csv", predictions);
  manifest.Output(layout.eval() / "predictions.csv");
  const SelectedHyper hyper = ReadSelectedHyper(layout.mil() / "hyper.csv");
  WriteEvaluation(layout.eval(), summary, hyper, cfg.eval.threshold, bags.size(), manifest);
  manifest.Write(layout.eval());

  const auto& r = summary.attention.report;
  LogInfo("attention MIL: mean AUC " + FormatDouble(r.mean_auc) + " +/- " +
          FormatDouble(r.std_auc) + ", PPV " + eval::FormatOptional(summary.attention.pooled_pv.ppv) +
          ", NPV " + eval::FormatOptional(summary.attention.pooled_pv.npv));
  if (summary.has_baseline) {
    LogInfo("max-pool baseline: mean AUC " + FormatDouble(summary.baseline.report.mean_auc));
  }
  return summary;
}

EvaluationSummary RunExternalEvaluate(const PipelineConfig& cfg,
                                      const fs::path& train_manifest,
                                      const fs::path& test_manifest) {
  StageTimer timer("evaluate (external)");
  cfg.Validate();
  const Layout layout = MakeLayout(cfg);
  Require(layout.bag_index(), "extract");
  Require(train_manifest, "user-supplied train manifest");
  Require(test_manifest, "user-supplied test manifest");
  const std::vector<FeatureBag> bags = LoadBagsFromIndex(layout.bag_index());
  const auto ids_of = [](const synth::SlideManifest& m) {
    std::vector<std::string> ids;
    for (const auto& r : m.rows) ids.push_back(r.slide_id);
    return ids;
  };
  const auto train = Select(bags, ids_of(synth::ReadManifest(train_manifest)));
  const auto test = Select(bags, ids_of(synth::ReadManifest(test_manifest)));
  std::set<std::string> train_ids;
  for (const auto* b : train) train_ids.insert(b->slide_id);
  for (const auto* b : test)
    if (train_ids.count(b->slide_id)) {
      throw DatasetError("slide '" + b->slide_id + "' is in both train and test manifests");
    }

  const fs::path dir = layout.eval() / "external";
  fs::create_directories(dir);
  StageManifest manifest(cfg, layout, "evaluate-external");
  manifest.Input(layout.bag_index());
  manifest.Input(train_manifest);
  manifest.Input(test_manifest);

  const std::uint64_t seed = DeriveSeed(cfg.seed, "external");
  const auto train_bags = Copy(train);
  const auto model = mil::TrainMil(train_bags, cfg.mil, seed);
  SaveCheckpoint(dir / "model.wmil", kMilMagic, model.model);
  manifest.Output(dir / "model.wmil");

  EvaluationSummary summary;
  const Scored s = ScoreAttention(model.model, test);
  summary.attention = Summarize({FoldResult(0, s, cfg.eval.threshold)});
  eval::WriteRocCsv(dir / "roc.csv", eval::RocCurve(s.scores, s.labels));
  manifest.Output(dir / "roc.csv");
  if (cfg.eval.baseline) {
    summary.has_baseline = true;
    const auto b = mil::TrainMaxPool(train_bags, cfg.mil, seed);
    summary.baseline = Summarize({FoldResult(0, ScoreBaseline(b.model, test), cfg.eval.threshold)});
  }
  WriteEvaluation(dir, summary, {cfg.mil.learning_rate, cfg.mil.weight_decay},
                  cfg.eval.threshold, train.size() + test.size(), manifest);
  manifest.Write(dir);
  LogInfo("external cohort: AUC " + FormatDouble(summary.attention.report.mean_auc));
  return summary;
}

void RunHeatmap(const PipelineConfig& cfg) {
  StageTimer timer("heatmap");
  cfg.Validate();
  const Layout layout = MakeLayout(cfg);
  Require(layout.bag_index(), "extract");
  Require(layout.folds(), "mil-train");
  Require(layout.slide_manifest(), "synth");
  const std::vector<FeatureBag> bags = LoadBagsFromIndex(layout.bag_index());
  const auto folds = ReadFolds(layout.folds());
  const synth::SlideManifest m = synth::ReadManifest(layout.slide_manifest());
  const std::size_t src = prep::PatchSidePixels(cfg.microns);

  std::vector<ParamSet> models;
  for (std::size_t f = 0; f < folds.size(); ++f) {
    Require(layout.fold_model(f), "mil-train");
    models.push_back(LoadCheckpoint(layout.fold_model(f), kMilMagic));
  }
  // Each slide is drawn by the first fold that tests it.
  std::map<std::string, std::size_t> fold_of;
  for (const auto& f : folds)
    for (const auto& id : f.test_ids) fold_of.emplace(id, f.fold_id);

  fs::create_directories(layout.heatmaps());
  std::vector<std::optional<std::array<heatmap::ClassHeatmap, 2>>> drawn(bags.size());
  ParallelFor(bags.size(), cfg.threads, [&](std::size_t i) {
    const auto it = fold_of.find(bags[i].slide_id);
    if (it == fold_of.end()) return;
    const RgbImage slide = ReadPng(m.ImagePath(m.Find(bags[i].slide_id)));
    const std::size_t rows = slide.height() / src, cols = slide.width() / src;
    drawn[i] = heatmap::EmitClassPair(slide, rows, cols, models[it->second], bags[i],
                                      layout.heatmaps(), cfg.heatmap.normalize,
                                      cfg.heatmap.alpha);
  });

  StageManifest manifest(cfg, layout, "heatmap");
  manifest.Input(layout.bag_index());
  manifest.Input(layout.folds());
  std::vector<heatmap::HeatmapIndexRow> index;
  for (std::size_t i = 0; i < bags.size(); ++i) {
    if (!drawn[i]) continue;
    for (int c = 0; c < 2; ++c) {
      const auto& h = (*drawn[i])[c];
      index.push_back({bags[i].slide_id, c, h.path.filename(), h.min_raw, h.max_raw});
      manifest.Output(h.path);
    }
  }
  heatmap::WriteHeatmapIndex(layout.heatmaps() / "index.csv", index);
  manifest.Output(layout.heatmaps() / "index.csv");

  // Localization summary when generator bookkeeping is available.
  if (fs::exists(layout.markers())) {
    const synth::PlantedIndex planted = synth::ReadPlantedIndex(layout.markers());
    CsvTable loc;
    loc.header = {"slide_id", "marker_mean", "other_mean"};
    for (std::size_t i = 0; i < bags.size(); ++i) {
      const auto it = planted.slides.find(bags[i].slide_id);
      if (!drawn[i] || it == planted.slides.end() || it->second.marker_cells.empty()) continue;
      const std::set<synth::Cell> markers(it->second.marker_cells.begin(),
                                          it->second.marker_cells.end());
      const auto& map = (*drawn[i])[1].map;
      double sm = 0, so = 0;
      std::size_t nm = 0, no = 0;
      for (const auto& [r, c] : bags[i].coords) {
        const double v = *map.At(r, c);
        if (markers.count({r, c})) {
          sm += v;
          ++nm;
        } else {
          so += v;
          ++no;
        }
      }
      if (nm == 0 || no == 0) continue;
      loc.rows.push_back({bags[i].slide_id, FormatDouble(sm / nm), FormatDouble(so / no)});
    }
    WriteCsv(layout.heatmaps() / "localization.csv", loc);
    manifest.Output(layout.heatmaps() / "localization.csv");
  }
  manifest.Write(layout.heatmaps());
}

EvaluationSummary RunAll(const PipelineConfig& cfg) {
  RunSynth(cfg);
  RunPreprocess(cfg);
  RunSslTrain(cfg);
  RunExtract(cfg);
  RunMilTrain(cfg);
  EvaluationSummary s = RunEvaluate(cfg);
  RunHeatmap(cfg);
  return s;
}

}  // namespace weakmil::pipeline
