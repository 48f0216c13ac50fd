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

#ifndef DROPWATCH_COHORT_H_
#define DROPWATCH_COHORT_H_

#include <compare>
#include <iosfwd>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace dropwatch {

enum class Cycle { kPrimary, kMiddleSchool, kHighSchool };

std::string_view CycleName(Cycle cycle);

// Grade level 1..12: primary 1-6, middle school 7-9, high school 10-12.
class LevelId {
 public:
  static constexpr int kMin = 1;
  static constexpr int kMax = 12;

  explicit LevelId(int value);

  int value() const { return value_; }
  Cycle cycle() const;
  bool is_last() const { return value_ == kMax; }

  friend auto operator<=>(const LevelId&, const LevelId&) = default;

 private:
  int value_;
};

// Academic year identified by its starting calendar year (2015 is 2015/2016).
class AcademicYear {
 public:
  explicit AcademicYear(int start_year);

  int start_year() const { return start_year_; }
  AcademicYear operator+(int offset) const {
    return AcademicYear(start_year_ + offset);
  }
  int operator-(const AcademicYear& other) const {
    return start_year_ - other.start_year_;
  }
  std::string Label() const;  // "2015/2016"

  friend auto operator<=>(const AcademicYear&, const AcademicYear&) = default;

 private:
  int start_year_;
};

// End-of-year outcome of a student's enrollment: promoted to the next level,
// held back at the same level, or left the system. Dropout is absorbing.
enum class StudentStatus { kSuccess, kFailure, kDropout };

std::string_view StatusName(StudentStatus status);
StudentStatus ParseStatus(std::string_view text);

// Binary target. Dropout is the positive class.
enum class Label : int { kContinue = 0, kDropout = 1 };

inline int LabelValue(Label label) { return static_cast<int>(label); }

// Identifies the model M(i,j)^k: i history years, horizon of j years, level k.
struct ModelKey {
  ModelKey(int history_years, int horizon_years, LevelId level);

  int history_years;
  int horizon_years;
  LevelId level;

  // "i1_j1_k6", used for file names and report keys.
  std::string Slug() const;
  // "M(1,1)^6", used in report headings.
  std::string Display() const;

  friend bool operator==(const ModelKey&, const ModelKey&) = default;
};

enum class FeatureKind { kNumeric, kBinary, kCategorical };

std::string_view FeatureKindName(FeatureKind kind);

struct FeatureSpec {
  std::string name;
  FeatureKind kind = FeatureKind::kNumeric;
  // Valid range for numeric/binary features.
  double min = 0.0;
  double max = 0.0;
  // Expected number of distinct values for categorical features.
  int cardinality = 0;
};

class Schema {
 public:
  Schema() = default;
  explicit Schema(std::vector<FeatureSpec> features);

  const std::vector<FeatureSpec>& features() const { return features_; }
  size_t size() const { return features_.size(); }
  const FeatureSpec& at(size_t i) const { return features_.at(i); }
  std::optional<size_t> IndexOf(std::string_view name) const;
  // Throws std::invalid_argument for unknown names.
  size_t RequireIndex(std::string_view name) const;

 private:
  std::vector<FeatureSpec> features_;
  std::unordered_map<std::string, size_t> index_;
};

// The dataset feature table: academic, grade, demographic and school
// attributes, with their documented ranges.
const Schema& StandardSchema();

// Interned category strings for one categorical feature. Codes are assigned
// in first-seen order.
class Vocabulary {
 public:
  int Intern(std::string_view value);
  std::optional<int> Find(std::string_view value) const;
  const std::string& Name(int code) const { return names_.at(code); }
  size_t size() const { return names_.size(); }

 private:
  std::vector<std::string> names_;
  std::unordered_map<std::string, int> codes_;
};

// One student's row for one academic year. `features` is aligned with the
// cohort schema; categorical cells hold vocabulary codes. Missing values are
// empty optionals.
struct StudentYearRecord {
  std::string student_id;
  AcademicYear year{2015};
  LevelId level{1};
  std::string school_id;
  std::string class_id;
  std::vector<std::optional<double>> features;
};

// Multi-year collection of records with the end-of-year status of every
// record. Immutable once constructed.
class Cohort {
 public:
  // `outcomes[r]` is the status of `records[r]`. Throws DataError on
  // duplicate (student, year) pairs, misaligned outcomes, or feature rows of
  // the wrong width.
  Cohort(std::shared_ptr<const Schema> schema,
         std::vector<std::shared_ptr<const Vocabulary>> vocabularies,
         std::vector<StudentYearRecord> records,
         std::vector<StudentStatus> outcomes);

  const Schema& schema() const { return *schema_; }
  const std::shared_ptr<const Schema>& schema_ptr() const { return schema_; }
  // One entry per schema feature; null for non-categorical features.
  const std::vector<std::shared_ptr<const Vocabulary>>& vocabularies() const {
    return vocabularies_;
  }

  const std::vector<StudentYearRecord>& records() const { return records_; }
  const std::vector<StudentStatus>& outcomes() const { return outcomes_; }
  StudentStatus outcome(size_t record) const { return outcomes_.at(record); }
  size_t size() const { return records_.size(); }

  std::optional<size_t> Find(std::string_view student_id,
                             AcademicYear year) const;
  // Record indices of a student ordered by year; empty if unknown.
  const std::vector<size_t>& StudentRecords(std::string_view student_id) const;
  bool HasStudent(std::string_view student_id) const;

  // Distinct years present, ascending.
  const std::vector<AcademicYear>& years() const { return years_; }
  // Record indices for one year, in record order.
  const std::vector<size_t>& RecordsInYear(AcademicYear year) const;

  std::optional<double> Value(size_t record, std::string_view feature) const;
  // Category string of a categorical cell, or nullopt when missing.
  std::optional<std::string> Category(size_t record, size_t feature) const;

 private:
  std::shared_ptr<const Schema> schema_;
  std::vector<std::shared_ptr<const Vocabulary>> vocabularies_;
  std::vector<StudentYearRecord> records_;
  std::vector<StudentStatus> outcomes_;
  std::unordered_map<std::string, std::vector<size_t>> by_student_;
  std::vector<AcademicYear> years_;
  std::vector<std::vector<size_t>> by_year_;
};

Label DeriveLabel(StudentStatus status);

// Label of `student_id` anchored at `anchor`, looking `horizon` years ahead:
// Dropout if any end-of-year status in anchor..anchor+horizon-1 (the student's
// status in years anchor+1..anchor+horizon) is Dropout, Continue if the
// student is observed without dropping out through the window (or graduates
// inside it), and nullopt (excluded) if the window is not fully observed.
// Throws std::invalid_argument for an unknown student, a missing anchor
// record, or horizon < 1.
std::optional<Label> HorizonLabel(const Cohort& cohort,
                                  std::string_view student_id,
                                  AcademicYear anchor, int horizon);

struct TransitionViolation {
  std::string student_id;
  AcademicYear year;
  std::string message;
};

// Checks every student's consecutive records against the status model:
// Success moves to level+1, Failure repeats the level, Dropout ends the
// record sequence, and years are contiguous.
std::vector<TransitionViolation> ValidateTransitions(const Cohort& cohort);

// Cohort CSV: student_id,year,level,school_id,class_id,status,<features...>.
// Empty cell = missing value.
void WriteCohortCsv(const Cohort& cohort, std::ostream& out);
void WriteCohortCsv(const Cohort& cohort, const std::string& path);
// Columns named in StandardSchema() take that spec; other columns are numeric
// when every non-empty cell parses as a number, categorical otherwise.
Cohort ReadCohortCsv(std::istream& in);
Cohort ReadCohortCsv(const std::string& path);

}  // namespace dropwatch

#endif  // DROPWATCH_COHORT_H_
