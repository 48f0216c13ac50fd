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

#include "dropwatch/metrics.h"
#include "oracles.h"
#include "test_util.h"

namespace dropwatch {
namespace {

const std::vector<int> kTableLabels{1, 0, 0, 1, 1, 0, 1, 0};
const std::vector<double> kTableProbs{0.96, 0.62, 0.65, 0.87, 0.91, 0.77, 0.65, 0.78};

TEST(MetricsTest, HandComputedConfusion) {
  const EvalReport r = ComputeMetrics({4, 31, 4, 1});
  EXPECT_DOUBLE_EQ(r.dropout_class.precision, 0.5);
  EXPECT_DOUBLE_EQ(r.dropout_class.recall, 0.8);
  EXPECT_DOUBLE_EQ(r.accuracy, 0.875);
  EXPECT_DOUBLE_EQ(r.specificity, 31.0 / 35.0);
  EXPECT_DOUBLE_EQ(r.continue_class.precision, 31.0 / 32.0);
  const double f1_drop = 2 * 0.5 * 0.8 / 1.3;
  const double f1_cont = 2 * (31.0 / 32) * (31.0 / 35) / (31.0 / 32 + 31.0 / 35);
  EXPECT_NEAR(r.macro_f1, (f1_drop + f1_cont) / 2, 1e-15);
}

TEST(MetricsTest, PublishedMacroF1Rows) {
  EXPECT_NEAR(MacroF1(0.99, 0.93, 0.28, 0.66), 0.676, 5e-4);
  EXPECT_EQ(Fixed2(MacroF1(0.99, 0.93, 0.28, 0.66)), "0.68");
  EXPECT_NEAR(MacroF1(0.80, 0.98, 0.84, 0.29), 0.656, 5e-4);
  EXPECT_EQ(Fixed2(MacroF1(0.80, 0.98, 0.84, 0.29)), "0.66");
}

TEST(MetricsTest, ZeroDenominatorsAreFlagged) {
  const EvalReport none = ComputeMetrics({0, 10, 0, 5});
  EXPECT_TRUE(none.dropout_class.precision_undefined);
  EXPECT_FALSE(none.dropout_class.recall_undefined);
  EXPECT_EQ(none.dropout_class.precision, 0.0);
  EXPECT_EQ(none.dropout_class.f1, 0.0);
  const EvalReport no_pos = ComputeMetrics({0, 10, 2, 0});
  EXPECT_TRUE(no_pos.dropout_class.recall_undefined);
  EXPECT_THROW(ComputeMetrics({}), std::invalid_argument);
}

TEST(CorrectorTest, EightRowTable) {
  const EvalReport at50 = Evaluate(kTableLabels, kTableProbs, 0.5);
  EXPECT_EQ(at50.cm, (ConfusionMatrix{4, 0, 4, 0}));
  EXPECT_DOUBLE_EQ(at50.dropout_class.precision, 0.5);
  const EvalReport at70 = Evaluate(kTableLabels, kTableProbs, 0.70);
  EXPECT_EQ(at70.cm, (ConfusionMatrix{3, 2, 2, 1}));
  EXPECT_DOUBLE_EQ(at70.dropout_class.precision, 0.6);
}

TEST(CorrectorTest, BoundaryProbabilityIsFlagged) {
  EXPECT_EQ(ApplyCorrector(std::vector<double>{0.65, 0.6499999}, 0.65), (std::vector<int>{1, 0}));
  EXPECT_THROW(ApplyCorrector(std::vector<double>{1.2}, 0.5), std::invalid_argument);
}

TEST(CorrectorTest, FlaggedSetsShrinkAlongTheGrid) {
  Rng rng(31);
  const auto grid = CorrectorConfig::DefaultGrid();
  ASSERT_EQ(grid.size(), 7u);
  EXPECT_DOUBLE_EQ(grid.back(), 0.80);
  for (int trial = 0; trial < 20; ++trial) {
    std::vector<double> p(300);
    for (double& v : p) v = rng.Uniform01();
    const auto y = testing::RandomLabels(rng, p.size(), 0.3);
    const auto sweep = ThresholdSweep(p, y, grid);
    for (size_t g = 1; g < grid.size(); ++g) {
      const auto lo = ApplyCorrector(p, grid[g - 1]);
      const auto hi = ApplyCorrector(p, grid[g]);
      for (size_t r = 0; r < p.size(); ++r) EXPECT_LE(hi[r], lo[r]);
      EXPECT_LE(sweep[g].dropout_class.recall, sweep[g - 1].dropout_class.recall);
      EXPECT_EQ(sweep[g].auc, sweep[0].auc);
    }
  }
  EXPECT_THROW(ThresholdSweep(kTableProbs, kTableLabels, {0.7, 0.6}), std::invalid_argument);
}

TEST(AucTest, MatchesPairCounting) {
  Rng rng(32);
  for (int trial = 0; trial < 50; ++trial) {
    const auto y = testing::RandomLabels(rng, 200, 0.2);
    std::vector<double> s(200);
    for (double& v : s) v = static_cast<double>(rng.UniformIndex(trial % 2 ? 10 : 1000000));
    EXPECT_NEAR(RocAuc(y, s), oracle::PairCountAuc(y, s), 1e-12);
  }
}

TEST(AucTest, InvariantUnderMonotoneTransform) {
  Rng rng(33);
  const auto y = testing::RandomLabels(rng, 150, 0.4);
  std::vector<double> s(150), t(150);
  for (size_t i = 0; i < s.size(); ++i) {
    s[i] = rng.Normal();
    t[i] = std::exp(3.0 * s[i]) + 7.0;
  }
  EXPECT_DOUBLE_EQ(RocAuc(y, s), RocAuc(y, t));
  std::vector<double> flipped(s);
  for (double& v : flipped) v = -v;
  EXPECT_NEAR(RocAuc(y, flipped), 1.0 - RocAuc(y, s), 1e-12);
  EXPECT_THROW(RocAuc(std::vector<int>{1, 1}, std::vector<double>{0.1, 0.2}),
               std::invalid_argument);
}

TEST(EvalReportTest, JsonRoundTripAndMarkdown) {
  EvalReport r = Evaluate(kTableLabels, kTableProbs, 0.7);
  r.metadata = {{"learner", "gbdt"}};
  const EvalReport back = EvalReport::FromJson(nlohmann::json::parse(r.ToJson().dump()));
  EXPECT_EQ(back.cm, r.cm);
  EXPECT_EQ(back.macro_f1, r.macro_f1);
  EXPECT_EQ(back.auc, r.auc);
  EXPECT_EQ(back.metadata, r.metadata);
  EXPECT_THROW(EvalReport::FromJson(nlohmann::json::object()), DataError);

  const std::string md = SweepMarkdown(ThresholdSweep(kTableProbs, kTableLabels, {0.5, 0.7}));
  EXPECT_NE(md.find("| 0.70 |"), std::string::npos);
  EXPECT_NE(md.find("Dropout Precision"), std::string::npos);
}

}  // namespace
}  // namespace dropwatch
