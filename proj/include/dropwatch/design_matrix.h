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

#ifndef DROPWATCH_DESIGN_MATRIX_H_
#define DROPWATCH_DESIGN_MATRIX_H_

#include <iosfwd>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "dropwatch/cohort.h"
#include "dropwatch/common.h"
#include "dropwatch/preprocess.h"

namespace dropwatch {

struct RowProvenance {
  std::string student_id;
  AcademicYear anchor_year{2015};
  std::string school_id;

  friend bool operator==(const RowProvenance&, const RowProvenance&) = default;
};

// Rows are (student, anchor year) pairs. Columns are the preprocessed
// features of each history year, suffixed "@0" for the anchor year, "@-1"
// for the year before, and so on; every history block ends with "level@h".
struct DesignMatrix {
  std::optional<ModelKey> key;
  DenseMatrix x;
  std::vector<Label> y;
  std::vector<RowProvenance> provenance;
  std::vector<std::string> feature_names;

  size_t rows() const { return x.rows(); }
  size_t cols() const { return x.cols(); }

  // Throws DataError if shapes disagree or any cell is not finite.
  void Validate() const;
  DesignMatrix Subset(std::span<const size_t> rows) const;
  std::vector<int> LabelValues() const;
};

// A (student, anchor) pair eligible for model key (i, j, k).
struct EligibleRow {
  RowProvenance provenance;
  // history[h] is the cohort record of year anchor - h, h = 0..i-1.
  std::vector<size_t> history;
  Label label = Label::kContinue;
};

// Students at level k in year t with records for t..t-i+1 and a decidable
// horizon-j label, in cohort record order of the anchor record. Throws
// DataError naming the constraint that left no rows.
std::vector<EligibleRow> EnumerateEligibleRows(const Cohort& cohort, const ModelKey& key);

// Fits on the history records of `rows` (each record counted once), using
// the year-augmented frames.
prep::FittedPreprocessor FitPreprocessor(const Cohort& cohort,
                                         std::span<const EligibleRow> rows,
                                         const prep::PreprocessPlan& plan);

// Transforms every record of `year` (whole year, so per-group statistics see
// complete classrooms). `record_index[r]` is the cohort record of row r.
DenseMatrix PreprocessYear(const Cohort& cohort, AcademicYear year,
                           const prep::FittedPreprocessor& preprocessor,
                           std::vector<size_t>* record_index = nullptr);

std::vector<std::string> HistoryFeatureNames(const std::vector<std::string>& per_year,
                                             int history_years);

DesignMatrix BuildDesignMatrix(const Cohort& cohort, const ModelKey& key,
                               std::span<const EligibleRow> rows,
                               const prep::FittedPreprocessor& preprocessor);
DesignMatrix BuildDesignMatrix(const Cohort& cohort, const ModelKey& key,
                               const prep::FittedPreprocessor& preprocessor);

// CSV: student_id,anchor_year,school_id,<feature names...>,label.
void WriteDesignMatrixCsv(const DesignMatrix& dm, std::ostream& out);
void WriteDesignMatrixCsv(const DesignMatrix& dm, const std::string& path);
DesignMatrix ReadDesignMatrixCsv(std::istream& in);
DesignMatrix ReadDesignMatrixCsv(const std::string& path);

enum class RateGrouping { kCycle, kLevel };

struct RateCell {
  int enrolled = 0;
  int dropouts = 0;
  double percent() const { return 100.0 * dropouts / enrolled; }
};

// Dropout rate per group and year. Groups without enrollment in a year have
// no cell. Cycle tables carry an extra "Overall" group.
struct RateTable {
  RateGrouping grouping = RateGrouping::kLevel;
  std::vector<std::string> groups;
  std::vector<AcademicYear> years;
  std::map<std::pair<std::string, int>, RateCell> cells;

  const RateCell* Find(const std::string& group, AcademicYear year) const;
  // Percentages with two decimals; empty cells print as "-".
  std::string ToMarkdown() const;
  std::string ToCsv() const;
};

RateTable DropoutRateTable(const Cohort& cohort, RateGrouping grouping);

}  // namespace dropwatch

#endif  // DROPWATCH_DESIGN_MATRIX_H_
