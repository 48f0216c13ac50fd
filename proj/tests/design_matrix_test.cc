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

#include <set>
#include <sstream>

#include "dropwatch/design_matrix.h"
#include "dropwatch/generator.h"
#include "test_util.h"

namespace dropwatch {
namespace {

using testing::ToyCohort;
constexpr auto kS = StudentStatus::kSuccess;
constexpr auto kF = StudentStatus::kFailure;
constexpr auto kD = StudentStatus::kDropout;

DesignMatrix Build(const Cohort& c, const ModelKey& key, prep::PreprocessPlan plan = {}) {
  const auto rows = EnumerateEligibleRows(c, key);
  return BuildDesignMatrix(c, key, rows, FitPreprocessor(c, rows, plan));
}

Cohort SmallGenerated(int n = 700, uint64_t seed = 2) {
  synth::GeneratorConfig cfg = synth::GeneratorConfig::Default();
  cfg.n_students = n;
  cfg.seed = seed;
  return synth::Generate(cfg);
}

TEST(EligibleRowsTest, ThreeYearToyCohort) {
  // Level 6 appears in 2015 (x), 2016 (y, z after a repeat) and 2017 (w).
  const Cohort c = ToyCohort()
                       .Path("x", 2015, 6, {kS, kS, kS})
                       .Path("y", 2015, 5, {kS, kD})
                       .Path("z", 2015, 6, {kF, kS, kS})
                       .Path("w", 2016, 5, {kS, kS})
                       .Build();
  const auto rows = EnumerateEligibleRows(c, ModelKey(1, 1, LevelId(6)));
  std::set<std::pair<std::string, int>> got;
  for (const auto& r : rows) got.insert({r.provenance.student_id, r.provenance.anchor_year.start_year()});
  const std::set<std::pair<std::string, int>> want{
      {"x", 2015}, {"y", 2016}, {"z", 2015}, {"z", 2016}, {"w", 2017}};
  EXPECT_EQ(got, want);
  for (const auto& r : rows) {
    if (r.provenance.student_id == "y") {
      EXPECT_EQ(r.label, Label::kDropout);
    }
  }
}

TEST(EligibleRowsTest, FailedStudentHistoryCarriesBothLevels) {
  const Cohort c = ToyCohort().Path("f", 2015, 8, {kF, kS, kS}).Build();
  const DesignMatrix dm = Build(c, ModelKey(2, 1, LevelId(9)));
  ASSERT_EQ(dm.rows(), 1u);
  const auto& names = dm.feature_names;
  const size_t l0 = std::find(names.begin(), names.end(), "level@0") - names.begin();
  const size_t l1 = std::find(names.begin(), names.end(), "level@-1") - names.begin();
  ASSERT_LT(l1, names.size());
  EXPECT_EQ(dm.x(0, l0), 9.0);
  EXPECT_EQ(dm.x(0, l1), 8.0);
  EXPECT_EQ(names.back(), "level@-1");
}

TEST(EligibleRowsTest, ErrorsNameTheConstraint) {
  const Cohort c = ToyCohort().Path("a", 2015, 6, {kS}).Build();
  try {
    EnumerateEligibleRows(c, ModelKey(1, 1, LevelId(8)));
    FAIL();
  } catch (const DataError& e) {
    EXPECT_NE(std::string(e.what()).find("no records at level 8"), std::string::npos);
  }
  try {
    EnumerateEligibleRows(c, ModelKey(2, 1, LevelId(6)));
    FAIL();
  } catch (const DataError& e) {
    EXPECT_NE(std::string(e.what()).find("history"), std::string::npos);
  }
  try {
    EnumerateEligibleRows(c, ModelKey(1, 2, LevelId(6)));
    FAIL();
  } catch (const DataError& e) {
    EXPECT_NE(std::string(e.what()).find("horizon"), std::string::npos);
  }
}

// Oracle: enumerate (student, year) pairs straight from the record list.
TEST(EligibleRowsTest, MatchesBruteForceEnumeration) {
  const Cohort c = SmallGenerated(400);
  for (int i = 1; i <= 3; ++i) {
    for (int j = 1; j <= 3; ++j) {
      const ModelKey key(i, j, LevelId(7));
      std::set<std::pair<std::string, int>> want;
      for (size_t r = 0; r < c.size(); ++r) {
        const auto& rec = c.records()[r];
        if (rec.level.value() != 7) continue;
        bool ok = true;
        for (int h = 1; h < i; ++h) ok = ok && c.Find(rec.student_id, rec.year + (-h)).has_value();
        if (!ok) continue;
        if (!HorizonLabel(c, rec.student_id, rec.year, j)) continue;
        want.insert({rec.student_id, rec.year.start_year()});
      }
      std::set<std::pair<std::string, int>> got;
      for (const auto& row : EnumerateEligibleRows(c, key)) {
        got.insert({row.provenance.student_id, row.provenance.anchor_year.start_year()});
      }
      EXPECT_EQ(got, want) << key.Display();
    }
  }
}

TEST(DesignMatrixTest, LongerHorizonNeverAddsRows) {
  const Cohort c = SmallGenerated(500);
  for (int level : {6, 7, 9}) {
    std::set<std::pair<std::string, int>> prev;
    for (int j = 1; j <= 4; ++j) {
      std::set<std::pair<std::string, int>> cur;
      for (const auto& row : EnumerateEligibleRows(c, ModelKey(1, j, LevelId(level)))) {
        cur.insert({row.provenance.student_id, row.provenance.anchor_year.start_year()});
      }
      if (j > 1) {
        EXPECT_TRUE(std::includes(prev.begin(), prev.end(), cur.begin(), cur.end()));
      }
      prev = std::move(cur);
    }
  }
}

TEST(DesignMatrixTest, ColumnCountIsHistoryTimesPerYearWidth) {
  const Cohort c = SmallGenerated();
  const auto rows1 = EnumerateEligibleRows(c, ModelKey(1, 1, LevelId(7)));
  const auto fp = FitPreprocessor(c, rows1, {});
  const size_t per_year = fp.output_names().size() + 1;
  for (int i = 1; i <= 3; ++i) {
    const ModelKey key(i, 1, LevelId(7));
    const auto rows = EnumerateEligibleRows(c, key);
    const DesignMatrix dm = BuildDesignMatrix(c, key, rows, fp);
    EXPECT_EQ(dm.cols(), static_cast<size_t>(i) * per_year);
    EXPECT_EQ(dm.feature_names.size(), dm.cols());
    EXPECT_EQ(dm.feature_names.front().substr(dm.feature_names.front().size() - 2), "@0");
  }
}

TEST(DesignMatrixTest, SingleHistoryEqualsPreprocessedYear) {
  const Cohort c = SmallGenerated();
  const ModelKey key(1, 1, LevelId(7));
  const auto rows = EnumerateEligibleRows(c, key);
  const auto fp = FitPreprocessor(c, rows, {});
  const DesignMatrix dm = BuildDesignMatrix(c, key, rows, fp);
  std::vector<size_t> index;
  const DenseMatrix year = PreprocessYear(c, AcademicYear(2017), fp, &index);
  size_t checked = 0;
  for (size_t r = 0; r < dm.rows(); ++r) {
    if (dm.provenance[r].anchor_year.start_year() != 2017) continue;
    const size_t rec = rows[r].history[0];
    const size_t pos = std::find(index.begin(), index.end(), rec) - index.begin();
    ASSERT_LT(pos, index.size());
    for (size_t col = 0; col < year.cols(); ++col) EXPECT_EQ(dm.x(r, col), year(pos, col));
    EXPECT_EQ(dm.x(r, year.cols()), 7.0);
    ++checked;
  }
  EXPECT_GT(checked, 0u);
}

TEST(DesignMatrixTest, CsvRoundTrip) {
  const Cohort c = SmallGenerated(300);
  const DesignMatrix dm = Build(c, ModelKey(2, 1, LevelId(8)));
  std::stringstream ss;
  WriteDesignMatrixCsv(dm, ss);
  const std::string text = ss.str();
  EXPECT_EQ(text.rfind("student_id,anchor_year,school_id,", 0), 0u);
  const DesignMatrix back = ReadDesignMatrixCsv(ss);
  EXPECT_EQ(back.x, dm.x);
  EXPECT_EQ(back.y, dm.y);
  EXPECT_EQ(back.provenance, dm.provenance);
  EXPECT_EQ(back.feature_names, dm.feature_names);
  std::stringstream bad("student_id,anchor_year,school_id,f,label\na,2015,S,notanumber,0\n");
  EXPECT_THROW(ReadDesignMatrixCsv(bad), DataError);
}

TEST(DesignMatrixTest, SubsetKeepsAlignment) {
  const Cohort c = SmallGenerated(300);
  const DesignMatrix dm = Build(c, ModelKey(1, 1, LevelId(3)));
  const std::vector<size_t> pick{2, 0};
  const DesignMatrix s = dm.Subset(pick);
  ASSERT_EQ(s.rows(), 2u);
  EXPECT_EQ(s.provenance[0], dm.provenance[2]);
  EXPECT_EQ(s.y[1], dm.y[0]);
  for (size_t col = 0; col < dm.cols(); ++col) EXPECT_EQ(s.x(0, col), dm.x(2, col));
}

TEST(RateTableTest, SingleDropoutIsOneHundredPercent) {
  const Cohort c = ToyCohort().Add("a", 2015, 4, kD).Build();
  const RateTable t = DropoutRateTable(c, RateGrouping::kLevel);
  const RateCell* cell = t.Find("4", AcademicYear(2015));
  ASSERT_NE(cell, nullptr);
  EXPECT_DOUBLE_EQ(cell->percent(), 100.0);
  EXPECT_NE(t.ToMarkdown().find("100.00"), std::string::npos);
  EXPECT_EQ(t.Find("5", AcademicYear(2015)), nullptr);
}

TEST(RateTableTest, OverallRowCountsEveryRecord) {
  const Cohort c = SmallGenerated(500);
  const RateTable t = DropoutRateTable(c, RateGrouping::kCycle);
  for (const auto& y : c.years()) {
    int drops = 0;
    for (size_t r : c.RecordsInYear(y)) drops += c.outcome(r) == kD;
    const RateCell* all = t.Find("Overall", y);
    ASSERT_NE(all, nullptr);
    EXPECT_EQ(all->enrolled, static_cast<int>(c.RecordsInYear(y).size()));
    EXPECT_EQ(all->dropouts, drops);
  }
}

}  // namespace
}  // namespace dropwatch
