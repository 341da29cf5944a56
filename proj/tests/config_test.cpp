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

#include "test_util.hpp"
#include "weakmil/config.hpp"
#include "weakmil/csv.hpp"
#include "weakmil/error.hpp"

namespace weakmil {
namespace {

TEST(Config, DefaultsValidate) {
  const PipelineConfig cfg;
  EXPECT_NO_THROW(cfg.Validate());
  EXPECT_EQ(cfg.ssl.queue_size, 1024u);
  EXPECT_EQ(cfg.mil.epochs, 100u);
  EXPECT_EQ(cfg.eval.folds, 4u);
}

TEST(Config, ParsesSectionsAndSyncs) {
  const PipelineConfig cfg = ParseConfigToml(R"(
[run]
seed = 99
[ssl]
feature_dim = 32
queue_size = 256
[encoder]
channels = [4, 8, 16]
[mil]
lr_grid = [0.1, 0.01]
grid_search = true
)");
  EXPECT_EQ(cfg.seed, 99u);
  EXPECT_EQ(cfg.synth.seed, 99u);
  EXPECT_EQ(cfg.encoder.feature_dim, 32u);
  EXPECT_EQ(cfg.encoder.channels, (std::array<std::size_t, 3>{4, 8, 16}));
  EXPECT_EQ(cfg.mil.lr_grid, (std::vector<double>{0.1, 0.01}));
  EXPECT_TRUE(cfg.grid_search);
}

TEST(Config, UnknownKeysAreNamed) {
  try {
    ParseConfigToml("[ssl]\ntemprature = 0.1\n");
    ADD_FAILURE();
  } catch (const ConfigError& e) {
    EXPECT_NE(std::string(e.what()).find("ssl.temprature"), std::string::npos);
  }
  EXPECT_THROW(ParseConfigToml("[nosuch]\nx = 1\n"), ConfigError);
  EXPECT_THROW(ParseConfigToml("[ssl\n"), ConfigError);
}

TEST(Config, TypeAndRangeErrorsAreFieldLevel) {
  try {
    ParseConfigToml("[ssl]\nepochs = -3\n");
    ADD_FAILURE();
  } catch (const ConfigError& e) {
    EXPECT_NE(std::string(e.what()).find("ssl.epochs"), std::string::npos);
  }
  EXPECT_THROW(ParseConfigToml("[ssl]\nepochs = \"ten\"\n"), ConfigError);
  PipelineConfig cfg;
  cfg.ssl.temperature = 0.0;
  EXPECT_THROW(cfg.Validate(), ConfigError);
}

TEST(Config, PrecedenceFileThenEnvThenFlags) {
  PipelineConfig cfg = ParseConfigToml("[ssl]\nepochs = 5\nqueue_size = 64\n");
  ApplyEnvOverrides(cfg, {{"WEAKMIL_SSL_EPOCHS", "7"}, {"HOME", "/root"}});
  EXPECT_EQ(cfg.ssl.epochs, 7u);
  EXPECT_EQ(cfg.ssl.queue_size, 64u);
  SetConfigValue(cfg, "ssl.epochs", "9");
  EXPECT_EQ(cfg.ssl.epochs, 9u);
  EXPECT_THROW(ApplyEnvOverrides(cfg, {{"WEAKMIL_SSL_EPOCSH", "1"}}), ConfigError);
  EXPECT_THROW(SetConfigValue(cfg, "ssl.nope", "1"), ConfigError);
}

TEST(Config, CanonicalIgnoresThreadsAndOutput) {
  PipelineConfig a, b;
  b.threads = 8;
  b.out_dir = "/elsewhere";
  EXPECT_EQ(a.Canonical(), b.Canonical());
  b.seed = 8;
  EXPECT_NE(a.Canonical(), b.Canonical());
}

TEST(Config, LoadFileReportsMissingFile) {
  EXPECT_THROW(LoadConfigFile("/nonexistent/weakmil.toml"), ConfigError);
  testing::ScratchDir dir;
  WriteTextFile(dir.path() / "c.toml", "[eval]\nfolds = 3\n");
  EXPECT_EQ(LoadConfigFile(dir.path() / "c.toml").eval.folds, 3u);
}

}  // namespace
}  // namespace weakmil
