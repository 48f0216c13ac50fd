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
#include <sstream>

#include "dropwatch/cohort.h"
#include "dropwatch/design_matrix.h"
#include "dropwatch/generator.h"
#include "dropwatch/metrics.h"

namespace dropwatch::synth {
namespace {

GeneratorConfig Small(int n = 3000, uint64_t seed = 5) {
  GeneratorConfig cfg = GeneratorConfig::Default();
  cfg.n_students = n;
  cfg.seed = seed;
  return cfg;
}

TEST(SolveInterceptTest, ClosedForms) {
  const std::vector<double> zeros(10, 0.0);
  EXPECT_NEAR(SolveIntercept(0.5, zeros), 0.0, 1e-9);
  EXPECT_NEAR(SolveIntercept(0.0649, zeros), std::log(0.0649 / (1 - 0.0649)), 1e-9);
  EXPECT_NEAR(SolveIntercept(0.0649, zeros), -2.668, 1e-3);
}

TEST(SolveInterceptTest, MixedScoresHitTheTarget) {
  const std::vector<double> s{-3.0, -1.0, 0.0, 0.5, 2.0, 4.0};
  for (double target : {0.01, 0.0649, 0.3, 0.9}) {
    const double b = SolveIntercept(target, s);
    double mean = 0.0;
    for (double v : s) mean += 1.0 / (1.0 + std::exp(-(b + v)));
    EXPECT_NEAR(mean / s.size(), target, 1e-9);
  }
  EXPECT_THROW(SolveIntercept(0.0, s), std::invalid_argument);
  EXPECT_THROW(SolveIntercept(0.5, {}), std::invalid_argument);
}

TEST(GeneratorConfigTest, PublishedAnchors) {
  EXPECT_DOUBLE_EQ(PublishedLevelRates().at({6, 2015}), 6.49);
  EXPECT_DOUBLE_EQ(PublishedLevelRates().at({9, 2015}), 19.41);
  EXPECT_DOUBLE_EQ(PublishedMissingness().at("mother_profession"), 63.58);
  const GeneratorConfig d = GeneratorConfig::Default();
  EXPECT_DOUBLE_EQ(d.DropoutRate(LevelId(6), AcademicYear(2015)), 0.0649);
  EXPECT_NO_THROW(d.Validate());
}

TEST(GeneratorConfigTest, ValidationAndJson) {
  GeneratorConfig bad = GeneratorConfig::Default();
  bad.level_year_dropout_rate[{6, 2015}] = 1.5;
  EXPECT_THROW(bad.Validate(), std::invalid_argument);
  GeneratorConfig neg = GeneratorConfig::Default();
  neg.signal_strength = -1;
  EXPECT_THROW(neg.Validate(), std::invalid_argument);

  GeneratorConfig c = Small(123, 9);
  c.signal_strength = 1.7;
  const GeneratorConfig back = GeneratorConfig::FromJson(c.ToJson());
  EXPECT_EQ(back.ToJson(), c.ToJson());
  EXPECT_THROW(GeneratorConfig::FromJson(nlohmann::json::array()), std::invalid_argument);
}

TEST(GeneratorTest, DeterministicAndSeedSensitive) {
  std::stringstream a, b, c;
  WriteCohortCsv(Generate(Small()), a);
  WriteCohortCsv(Generate(Small()), b);
  WriteCohortCsv(Generate(Small(3000, 6)), c);
  EXPECT_EQ(a.str(), b.str());
  EXPECT_NE(a.str(), c.str());
}

TEST(GeneratorTest, StatusSequencesAreValid) {
  const Cohort cohort = Generate(Small());
  EXPECT_TRUE(ValidateTransitions(cohort).empty());
  for (const auto& rec : cohort.records()) {
    for (size_t f = 0; f < cohort.schema().size(); ++f) {
      const auto& spec = cohort.schema().at(f);
      if (!rec.features[f] || spec.kind == FeatureKind::kCategorical) continue;
      EXPECT_GE(*rec.features[f], spec.min) << spec.name;
      EXPECT_LE(*rec.features[f], spec.max) << spec.name;
    }
  }
}

TEST(GeneratorTest, CycleRatesAreEnrollmentWeightedLevelRates) {
  const Cohort cohort = Generate(Small());
  const RateTable levels = DropoutRateTable(cohort, RateGrouping::kLevel);
  const RateTable cycles = DropoutRateTable(cohort, RateGrouping::kCycle);
  for (const auto& year : cycles.years) {
    for (Cycle cyc : {Cycle::kPrimary, Cycle::kMiddleSchool, Cycle::kHighSchool}) {
      int enrolled = 0;
      int dropouts = 0;
      for (int l = 1; l <= 12; ++l) {
        if (LevelId(l).cycle() != cyc) continue;
        if (const RateCell* c = levels.Find(std::to_string(l), year)) {
          enrolled += c->enrolled;
          dropouts += c->dropouts;
        }
      }
      const RateCell* cell = cycles.Find(std::string(CycleName(cyc)), year);
      ASSERT_NE(cell, nullptr);
      EXPECT_EQ(cell->enrolled, enrolled);
      EXPECT_EQ(cell->dropouts, dropouts);
    }
  }
}

TEST(GeneratorTest, ZeroSignalMeansNoPredictiveFeature) {
  GeneratorConfig cfg = Small(20000, 3);
  cfg.signal_strength = 0.0;
  const Cohort cohort = Generate(cfg);
  std::vector<int> labels;
  std::vector<double> grade;
  for (size_t r = 0; r < cohort.size(); ++r) {
    auto g = cohort.Value(r, "grade_avg");
    if (!g) continue;
    labels.push_back(cohort.outcome(r) == StudentStatus::kDropout);
    grade.push_back(-*g);
  }
  EXPECT_NEAR(RocAuc(labels, grade), 0.5, 0.02);

  cfg.signal_strength = 1.0;
  const Cohort signal = Generate(cfg);
  labels.clear();
  grade.clear();
  for (size_t r = 0; r < signal.size(); ++r) {
    auto g = signal.Value(r, "grade_avg");
    if (!g) continue;
    labels.push_back(signal.outcome(r) == StudentStatus::kDropout);
    grade.push_back(-*g);
  }
  EXPECT_GT(RocAuc(labels, grade), 0.6);
}

}  // namespace
}  // namespace dropwatch::synth
