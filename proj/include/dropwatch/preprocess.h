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

#ifndef DROPWATCH_PREPROCESS_H_
#define DROPWATCH_PREPROCESS_H_

#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "dropwatch/cohort.h"
#include "dropwatch/common.h"
#include "json.hpp"

namespace dropwatch::prep {

enum class ImputePolicy { kMedian, kMode, kConstant };
enum class NormalizeMode { kNone, kGlobalZScore, kPerGroupZScore };

struct PreprocessPlan {
  // Per-feature overrides. Default: median for numeric/binary, mode for
  // categorical.
  std::map<std::string, ImputePolicy> impute;
  std::map<std::string, double> impute_constant;
  // Categoricals with at most this many training categories are one-hot
  // encoded; larger ones are frequency encoded.
  int onehot_max_cardinality = 16;
  NormalizeMode normalize = NormalizeMode::kGlobalZScore;
  // Rows sharing a group key are z-scored together (per-group mode).
  std::string group_key = "class_id";
  bool add_missing_indicators = true;
  // Features dropped before fitting.
  std::vector<std::string> exclude;

  nlohmann::json ToJson() const;
  static PreprocessPlan FromJson(const nlohmann::json& j);
};

// Tabular input to the preprocessor. Categorical cells hold codes into the
// column's vocabulary.
struct FeatureFrame {
  std::vector<FeatureSpec> columns;
  std::vector<std::shared_ptr<const Vocabulary>> vocabularies;
  std::vector<std::vector<std::optional<double>>> rows;
  // Group key per row, used by per-group normalization. May be empty when
  // the plan does not normalize per group.
  std::vector<std::string> groups;

  size_t num_rows() const { return rows.size(); }
};

struct ColumnState {
  std::string name;
  FeatureKind kind = FeatureKind::kNumeric;
  bool excluded = false;
  // Numeric/binary: fill value. Categorical: fill category in `fill_category`.
  double fill_value = 0.0;
  std::string fill_category;
  double mean = 0.0;
  double stddev = 1.0;
  bool normalized = false;
  bool missing_indicator = false;
  // Categorical encodings.
  bool one_hot = false;
  std::vector<std::string> categories;            // one-hot columns, sorted
  std::map<std::string, double> frequencies;      // frequency encoding
};

// Fitted statistics plus the output column layout. Transform is a pure
// function of this state and its input frame.
class FittedPreprocessor {
 public:
  FittedPreprocessor() = default;
  FittedPreprocessor(PreprocessPlan plan, std::vector<ColumnState> columns);

  const PreprocessPlan& plan() const { return plan_; }
  const std::vector<ColumnState>& columns() const { return columns_; }
  const std::vector<std::string>& output_names() const { return output_names_; }

  // Throws std::invalid_argument if `frame` lacks a fitted column or carries
  // a column the preprocessor has never seen.
  DenseMatrix Transform(const FeatureFrame& frame) const;

  nlohmann::json ToJson() const;
  static FittedPreprocessor FromJson(const nlohmann::json& j);

 private:
  PreprocessPlan plan_;
  std::vector<ColumnState> columns_;
  std::vector<std::string> output_names_;
};

// Learns imputation values, normalization statistics and category tables
// from `frame` (training rows only). Statistics ignore missing cells.
// Throws DataError naming any kept feature that is entirely missing, and
// std::invalid_argument for an empty frame.
FittedPreprocessor Fit(const PreprocessPlan& plan, const FeatureFrame& frame);

struct ClassAggregates {
  int size = 0;
  int female = 0;
  std::optional<double> mean_grade;
  // Students repeating their level this year.
  int failures = 0;
  // Dropouts recorded in this class id during the prior year.
  std::optional<int> prior_dropouts;
};

struct SchoolAggregates {
  int size = 0;
  std::optional<int> prior_dropouts;
  std::optional<int> prior_failures;
};

struct GroupAggregates {
  std::map<std::string, ClassAggregates> classes;
  std::map<std::string, SchoolAggregates> schools;
};

// Class and school aggregates for `year`. Outcome-based counts only use the
// prior year's outcomes; they are empty when the cohort has no prior year.
// Throws DataError if the cohort has no records in `year`.
GroupAggregates AggregateGroupFeatures(const Cohort& cohort, AcademicYear year);

// Names of the aggregate columns appended by AugmentedYearFrame.
const std::vector<std::string>& AggregateColumnNames();

// All records of `year` as a frame: schema features followed by the class and
// school aggregate columns. Groups are keyed by plan-style key (class_id or
// school_id) qualified with the year. `record_index[r]` gives the cohort
// record of frame row r.
FeatureFrame AugmentedYearFrame(const Cohort& cohort, AcademicYear year,
                                 const std::string& group_key,
                                 std::vector<size_t>* record_index = nullptr);

}  // namespace dropwatch::prep

#endif  // DROPWATCH_PREPROCESS_H_
