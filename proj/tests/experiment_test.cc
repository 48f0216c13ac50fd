/*
 * Copyright 2026 The Dropwatch Authors.
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     https://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#include <gtest/gtest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>

#include "dropwatch/experiment.h"

namespace dropwatch {
namespace {

namespace fs = std::filesystem;

std::map<std::string, std::string> ReadTree(const fs::path& root) {
  std::map<std::string, std::string> files;
  for (const auto& e : fs::recursive_directory_iterator(root)) {
    if (!e.is_regular_file()) continue;
    std::ifstream in(e.path(), std::ios::binary);
    std::ostringstream ss;
    ss << in.rdbuf();
    files[fs::relative(e.path(), root).generic_string()] = ss.str();
  }
  return files;
}

fs::path TempDir(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("dropwatch_test_" + name);
  fs::remove_all(p);
  return p;
}

ExperimentConfig SmallConfig() {
  ExperimentConfig c;
  c.seed = 3;
  synth::GeneratorConfig g = synth::GeneratorConfig::Default();
  g.n_students = 1500;
  c.generator = g;
  c.model_keys = {ModelKey(1, 1, LevelId(7)), ModelKey(1, 2, LevelId(7)),
                  ModelKey(2, 1, LevelId(7))};
  c.treatments = {Treatment::kBaseline, Treatment::kClassWeights, Treatment::kSmote};
  c.learners = {ModelKind::kTree, ModelKind::kGbdt};
  c.learner_configs.gbdt.n_trees = 15;
  c.explain.background = 32;
  c.explain.rows = 20;
  c.jobs = 2;
  return c;
}

TEST(ExperimentConfigTest, JsonRoundTrip) {
  const ExperimentConfig c = SmallConfig();
  const ExperimentConfig back = ExperimentConfig::FromJson(c.ToJson());
  EXPECT_EQ(back.ToJson(), c.ToJson());
  const ExperimentConfig demo = ExperimentConfig::Demo();
  EXPECT_NO_THROW(demo.Validate());
  EXPECT_EQ(ExperimentConfig::FromJson(demo.ToJson()).ToJson(), demo.ToJson());
}

TEST(ExperimentConfigTest, RejectsBadDocuments) {
  nlohmann::json j = SmallConfig().ToJson();
  j["surprise"] = 1;
  EXPECT_THROW(ExperimentConfig::FromJson(j), std::invalid_argument);
  j = SmallConfig().ToJson();
  j["config_version"] = 2;
  EXPECT_THROW(ExperimentConfig::FromJson(j), std::invalid_argument);
  j = SmallConfig().ToJson();
  j["cohort"] = {{"csv", "/nonexistent/cohort.csv"}};
  EXPECT_THROW(ExperimentConfig::FromJson(j).Validate(), std::invalid_argument);
  j = SmallConfig().ToJson();
  j["learners"] = {"svm"};
  EXPECT_THROW(ExperimentConfig::FromJson(j), std::invalid_argument);
}

TEST(ExperimentConfigTest, StreamSeedsDifferByPurpose) {
  EXPECT_EQ(StreamSeed(1, "a/split"), StreamSeed(1, "a/split"));
  EXPECT_NE(StreamSeed(1, "a/split"), StreamSeed(1, "b/split"));
  EXPECT_NE(StreamSeed(1, "a/split"), StreamSeed(2, "a/split"));
}

TEST(ExperimentTest, WritesArtifactsAndIsDeterministic) {
  const fs::path a = TempDir("run_a");
  const fs::path b = TempDir("run_b");
  ExperimentConfig cfg = SmallConfig();
  const ExperimentResult ra = RunExperiment(cfg, a.string());
  EXPECT_EQ(ra.failed_cells(), 0);
  EXPECT_EQ(ra.cells.size(), 3u * 3u * 2u);
  cfg.jobs = 1;
  RunExperiment(cfg, b.string());
  const auto ta = ReadTree(a);
  const auto tb = ReadTree(b);
  EXPECT_EQ(ta.size(), tb.size());
  for (const auto& [path, content] : ta) {
    ASSERT_TRUE(tb.count(path)) << path;
    EXPECT_EQ(content, tb.at(path)) << path;
  }
  for (const char* f : {"config.json", "index.md", "index.json", "log.txt",
                        "rates/dropout_rate_by_level.md", "rates/dropout_rate_by_cycle.svg",
                        "comparison/i1_j1_k7.md", "series/horizon_i1_k7.csv",
                        "series/history_j1_k7.svg", "shap/i1_j1_k7/top_features.json",
                        "cells/i1_j1_k7/smote/gbdt/report.json"}) {
    EXPECT_TRUE(ta.count(f)) << f;
  }
  const auto report = nlohmann::json::parse(ta.at("cells/i1_j1_k7/smote/gbdt/report.json"));
  EXPECT_TRUE(report.contains("macro_f1"));
  EXPECT_NE(ta.at("comparison/i1_j1_k7.md").find("| Technique | Algorithm |"),
            std::string::npos);
  EXPECT_NE(ta.at("index.md").find("<!-- dropwatch seed=3"), std::string::npos);
  fs::remove_all(a);
  fs::remove_all(b);
}

TEST(ExperimentTest, FailingKeyDoesNotStopOthers) {
  const fs::path out = TempDir("partial");
  ExperimentConfig cfg = SmallConfig();
  cfg.model_keys = {ModelKey(1, 1, LevelId(7)), ModelKey(9, 1, LevelId(7))};
  cfg.treatments = {Treatment::kBaseline};
  cfg.learners = {ModelKind::kTree};
  const ExperimentResult r = RunExperiment(cfg, out.string());
  EXPECT_EQ(r.failed_cells(), 1);
  int ok = 0;
  for (const auto& c : r.cells) ok += c.error.empty() && c.report.has_value();
  EXPECT_EQ(ok, 1);
  EXPECT_TRUE(fs::exists(out / "cells/i1_j1_k7/baseline/tree/report.json"));
  fs::remove_all(out);
}

#ifdef DROPWATCH_CLI
int RunCli(const std::string& args) {
  const std::string cmd = std::string(DROPWATCH_CLI) + " " + args + " >/dev/null 2>&1";
  const int status = std::system(cmd.c_str());
  return WEXITSTATUS(status);
}

TEST(CliTest, ExitCodes) {
  const fs::path dir = TempDir("cli");
  fs::create_directories(dir);
  const std::string d = dir.string();
  EXPECT_EQ(RunCli("--help"), 0);
  EXPECT_EQ(RunCli("frobnicate"), 1);
  EXPECT_EQ(RunCli("eval --model " + d + "/missing.json --matrix " + d + "/missing.csv"), 2);
  ASSERT_EQ(RunCli("generate --n-students 400 --seed 2 --out " + d + "/cohort.csv"), 0);
  ASSERT_EQ(RunCli("prep --cohort " + d + "/cohort.csv --key 1,1,7 --out " + d + "/m.csv"), 0);
  EXPECT_EQ(RunCli("prep --cohort " + d + "/cohort.csv --key 8,1,7 --out " + d + "/m2.csv"), 2);
  ASSERT_EQ(RunCli("train --matrix " + d + "/m.csv --learner tree --out " + d + "/model.json"), 0);
  EXPECT_EQ(RunCli("eval --model " + d + "/model.json --matrix " + d + "/m.csv --out " + d +
                "/report.json"),
            0);
  EXPECT_TRUE(fs::exists(dir / "report.json"));
  EXPECT_EQ(RunCli("train --matrix " + d + "/m.csv --learner svm --out " + d + "/x.json"), 1);
  fs::remove_all(dir);
}
#endif

}  // namespace
}  // namespace dropwatch
