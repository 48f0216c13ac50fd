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

#include <cmath>

#include "dropwatch/shap.h"
#include "oracles.h"
#include "test_util.h"

namespace dropwatch {
namespace {

std::vector<std::string> Names(size_t d) {
  std::vector<std::string> n;
  for (size_t f = 0; f < d; ++f) n.push_back("x" + std::to_string(f));
  return n;
}

TrainedModel RandomModel(Rng& rng, ModelKind kind, int d) {
  TrainedModel m;
  m.kind = kind;
  m.feature_names = Names(static_cast<size_t>(d));
  const int n_trees = kind == ModelKind::kTree ? 1 : 1 + static_cast<int>(rng.UniformIndex(4));
  const bool margin = kind == ModelKind::kGbdt;
  for (int t = 0; t < n_trees; ++t) {
    m.trees.push_back(oracle::RandomTree(rng, d, 2 + static_cast<int>(rng.UniformIndex(14)), 4,
                                         margin ? -1.0 : 0.0, 1.0));
  }
  if (margin) m.base_margin = rng.Normal();
  return m;
}

TEST(TreeShapTest, MatchesBruteForceEnumeration) {
  Rng rng(41);
  const ModelKind kinds[] = {ModelKind::kTree, ModelKind::kForest, ModelKind::kGbdt};
  for (int trial = 0; trial < 12; ++trial) {
    const int d = 1 + static_cast<int>(rng.UniformIndex(8));
    const TrainedModel m = RandomModel(rng, kinds[trial % 3], d);
    const DenseMatrix bg = oracle::IntegerMatrix(rng, 6, static_cast<size_t>(d), 4);
    const DenseMatrix rows = oracle::IntegerMatrix(rng, 3, static_cast<size_t>(d), 4);
    for (size_t r = 0; r < rows.rows(); ++r) {
      const ShapVector got = TreeShap(m, rows.row(r), bg);
      const auto want = oracle::BruteForceShap(
          [&](std::span<const double> v) { return ExplainedOutput(m, v); }, rows.row(r), bg);
      for (int f = 0; f < d; ++f) EXPECT_NEAR(got.phi[f], want[f], 1e-9) << trial;
    }
  }
}

TEST(TreeShapTest, LocalAccuracyOnTrainedModels) {
  Rng rng(42);
  const DenseMatrix x = testing::RandomMatrix(rng, 300, 5);
  const auto y = testing::SignalLabels(rng, x);
  LearnerConfigs cfg;
  cfg.forest.n_trees = 8;
  cfg.gbdt.n_trees = 20;
  const DenseMatrix bg = SampleBackground(x, 40, 1);
  for (ModelKind k : {ModelKind::kTree, ModelKind::kForest, ModelKind::kGbdt}) {
    const TrainedModel m = TrainModel(k, x, y, {}, cfg, Names(5));
    const auto expl = ExplainRows(m, x, bg, 1);
    const auto threaded = ExplainRows(m, x, bg, 3);
    for (size_t r = 0; r < x.rows(); ++r) EXPECT_EQ(threaded[r].phi, expl[r].phi);
    double mean_out = 0.0;
    for (size_t r = 0; r < bg.rows(); ++r) mean_out += ExplainedOutput(m, bg.row(r));
    mean_out /= static_cast<double>(bg.rows());
    for (size_t r = 0; r < x.rows(); r += 7) {
      EXPECT_NEAR(expl[r].Total(), ExplainedOutput(m, x.row(r)), 1e-9);
      EXPECT_NEAR(expl[r].base_value, mean_out, 1e-12);
    }
    EXPECT_EQ(expl[0].scale, k == ModelKind::kGbdt ? OutputScale::kLogOdds
                                                  : OutputScale::kProbability);
  }
}

TEST(TreeShapTest, UnusedFeatureGetsZero) {
  Rng rng(43);
  TrainedModel m = RandomModel(rng, ModelKind::kForest, 4);
  for (Tree& t : m.trees) {
    for (TreeNode& n : t.nodes) {
      if (n.feature == 2) n.feature = 0;
    }
  }
  const DenseMatrix bg = oracle::IntegerMatrix(rng, 10, 4, 4);
  const DenseMatrix x = oracle::IntegerMatrix(rng, 5, 4, 4);
  for (size_t r = 0; r < x.rows(); ++r) EXPECT_EQ(TreeShap(m, x.row(r), bg).phi[2], 0.0);
}

TEST(TreeShapTest, StumpHasClosedForm) {
  TrainedModel m;
  m.kind = ModelKind::kTree;
  m.feature_names = Names(2);
  m.trees.push_back({{{1, 0.5, 1, 2, 0.0}, {-1, 0, -1, -1, 0.2}, {-1, 0, -1, -1, 0.9}}});
  DenseMatrix bg(4, 2);
  bg(0, 1) = 1;  // one of four background rows goes right
  const std::vector<double> x{5.0, 1.0};
  const ShapVector s = TreeShap(m, x, bg);
  EXPECT_DOUBLE_EQ(s.base_value, 0.75 * 0.2 + 0.25 * 0.9);
  EXPECT_NEAR(s.phi[1], 0.9 - s.base_value, 1e-15);
  EXPECT_EQ(s.phi[0], 0.0);
}

TEST(TreeShapTest, SymmetricFeaturesShareCredit) {
  // f = 1 when both features exceed 0.5.
  TrainedModel m;
  m.kind = ModelKind::kTree;
  m.feature_names = Names(2);
  m.trees.push_back({{{0, 0.5, 1, 2, 0},
                      {-1, 0, -1, -1, 0.0},
                      {1, 0.5, 3, 4, 0},
                      {-1, 0, -1, -1, 0.0},
                      {-1, 0, -1, -1, 1.0}}});
  const DenseMatrix bg(1, 2, 0.0);
  const ShapVector s = TreeShap(m, std::vector<double>{1.0, 1.0}, bg);
  EXPECT_DOUBLE_EQ(s.phi[0], 0.5);
  EXPECT_DOUBLE_EQ(s.phi[1], 0.5);
}

TEST(TreeShapTest, GbdtAttributionsAddAcrossTrees) {
  Rng rng(44);
  TrainedModel m = RandomModel(rng, ModelKind::kGbdt, 5);
  const DenseMatrix bg = oracle::IntegerMatrix(rng, 8, 5, 4);
  const std::vector<double> x{0, 1, 2, 3, 1};
  std::vector<double> sum(5, 0.0);
  for (const Tree& t : m.trees) {
    const auto phi = TreeShapSingle(t, x, bg);
    for (size_t f = 0; f < 5; ++f) sum[f] += phi[f];
  }
  const ShapVector s = TreeShap(m, x, bg);
  for (size_t f = 0; f < 5; ++f) EXPECT_NEAR(s.phi[f], sum[f], 1e-12);
}

TEST(TreeShapTest, EnsembleWithBoostedMemberIsRejected) {
  Rng rng(45);
  const TrainedModel e = MakeEnsemble({RandomModel(rng, ModelKind::kTree, 3),
                                       RandomModel(rng, ModelKind::kGbdt, 3)});
  const DenseMatrix bg(2, 3, 0.0);
  EXPECT_THROW(TreeShap(e, std::vector<double>{0, 0, 0}, bg), std::invalid_argument);
  const TrainedModel ok = MakeEnsemble({RandomModel(rng, ModelKind::kTree, 3),
                                        RandomModel(rng, ModelKind::kForest, 3)});
  const std::vector<double> x{1, 2, 3};
  const DenseMatrix bg2 = oracle::IntegerMatrix(rng, 5, 3, 4);
  EXPECT_NEAR(TreeShap(ok, x, bg2).Total(), ExplainedOutput(ok, x), 1e-12);
}

TEST(RankImportanceTest, OrderTiesAndTruncation) {
  std::vector<ShapVector> e(2);
  e[0].phi = {0.1, -0.4, 0.2};
  e[1].phi = {-0.3, 0.1, 0.2};
  const auto r = RankImportance(e, {"c", "b", "a"}, 2);
  ASSERT_EQ(r.entries.size(), 2u);
  EXPECT_EQ(r.entries[0].feature, "b");
  EXPECT_EQ(r.entries[1].feature, "a");  // ties with c at 0.2, wins by name
  EXPECT_TRUE(r.warning.empty());
  const auto all = RankImportance(e, {"c", "b", "a"}, 10);
  EXPECT_EQ(all.entries.size(), 3u);
  EXPECT_FALSE(all.warning.empty());
  EXPECT_THROW(RankImportance({}, {"a"}, 1), std::invalid_argument);
}

TEST(ShapCsvTest, HeaderAndRows) {
  std::vector<ShapVector> e(1);
  e[0].phi = {0.25, -1.0};
  e[0].base_value = 0.5;
  const std::string csv = ShapCsv(e, {"a", "b"});
  EXPECT_EQ(csv.substr(0, csv.find('\n')).find("a,b") != std::string::npos, true);
  EXPECT_NE(csv.find("0.25"), std::string::npos);
}

}  // namespace
}  // namespace dropwatch
