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

// Seeded training-run assertion on the desk corpus. Slow: it synthesizes
// and tiles 60 full-size slides before five SSL epochs.

#include "test_util.hpp"
#include "weakmil/config.hpp"
#include "weakmil/csv.hpp"
#include "weakmil/log.hpp"
#include "weakmil/pipeline.hpp"

namespace weakmil {
namespace {

TEST(SslDesk, MeanEpochLossFallsOverFiveEpochs) {
  testing::ScratchDir dir;
  PipelineConfig cfg = LoadConfigFile(std::filesystem::path(WEAKMIL_CONFIG_DIR) / "desk.toml");
  cfg.out_dir = dir.path();
  cfg.ssl.epochs = 5;
  SetLogEnabled(false);
  pipeline::RunSynth(cfg);
  pipeline::RunPreprocess(cfg);
  pipeline::RunSslTrain(cfg);

  const CsvTable log = ReadCsv(dir.path() / "ssl/train_log.csv", {"epoch", "mean_loss"});
  ASSERT_EQ(log.rows.size(), 5u);
  std::vector<double> loss;
  for (const auto& r : log.rows) loss.push_back(std::stod(r[1]));
  EXPECT_LT(loss[4], loss[0]) << "epoch losses " << ::testing::PrintToString(loss);
}

}  // namespace
}  // namespace weakmil
