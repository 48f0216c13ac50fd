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

#include "dropwatch/cohort.h"

#include <algorithm>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include "dropwatch/common.h"
#include "dropwatch/csv.h"

namespace dropwatch {

std::string_view CycleName(Cycle cycle) {
  switch (cycle) {
    case Cycle::kPrimary:
      return "Primary";
    case Cycle::kMiddleSchool:
      return "Middle School";
    case Cycle::kHighSchool:
      return "High School";
  }
  return "?";
}

LevelId::LevelId(int value) : value_(value) {
  if (value < kMin || value > kMax) {
    throw std::invalid_argument("level must be in 1..12, got " +
                                std::to_string(value));
  }
}

Cycle LevelId::cycle() const {
  if (value_ <= 6) return Cycle::kPrimary;
  if (value_ <= 9) return Cycle::kMiddleSchool;
  return Cycle::kHighSchool;
}

AcademicYear::AcademicYear(int start_year) : start_year_(start_year) {
  if (start_year < 1900) {
    throw std::invalid_argument("academic year must be >= 1900, got " +
                                std::to_string(start_year));
  }
}

std::string AcademicYear::Label() const {
  return std::to_string(start_year_) + "/" + std::to_string(start_year_ + 1);
}

std::string_view StatusName(StudentStatus status) {
  switch (status) {
    case StudentStatus::kSuccess:
      return "success";
    case StudentStatus::kFailure:
      return "failure";
    case StudentStatus::kDropout:
      return "dropout";
  }
  return "?";
}

StudentStatus ParseStatus(std::string_view text) {
  if (text == "success") return StudentStatus::kSuccess;
  if (text == "failure") return StudentStatus::kFailure;
  if (text == "dropout") return StudentStatus::kDropout;
  throw DataError("unknown status '" + std::string(text) +
                  "' (expected success, failure or dropout)");
}

ModelKey::ModelKey(int history_years, int horizon_years, LevelId level)
    : history_years(history_years), horizon_years(horizon_years), level(level) {
  if (history_years < 1) throw std::invalid_argument("history years i must be >= 1");
  if (horizon_years < 1) throw std::invalid_argument("horizon years j must be >= 1");
}

std::string ModelKey::Slug() const {
  return "i" + std::to_string(history_years) + "_j" +
         std::to_string(horizon_years) + "_k" + std::to_string(level.value());
}

std::string ModelKey::Display() const {
  return "M(" + std::to_string(history_years) + "," +
         std::to_string(horizon_years) + ")^" + std::to_string(level.value());
}

std::string_view FeatureKindName(FeatureKind kind) {
  switch (kind) {
    case FeatureKind::kNumeric:
      return "numeric";
    case FeatureKind::kBinary:
      return "binary";
    case FeatureKind::kCategorical:
      return "categorical";
  }
  return "?";
}

Schema::Schema(std::vector<FeatureSpec> features) : features_(std::move(features)) {
  for (size_t i = 0; i < features_.size(); ++i) {
    if (!index_.emplace(features_[i].name, i).second) {
      throw std::invalid_argument("duplicate feature name '" +
                                  features_[i].name + "'");
    }
  }
}

std::optional<size_t> Schema::IndexOf(std::string_view name) const {
  auto it = index_.find(std::string(name));
  if (it == index_.end()) return std::nullopt;
  return it->second;
}

size_t Schema::RequireIndex(std::string_view name) const {
  auto idx = IndexOf(name);
  if (!idx) throw std::invalid_argument("unknown feature '" + std::string(name) + "'");
  return *idx;
}

const Schema& StandardSchema() {
  using K = FeatureKind;
  static const Schema* schema = new Schema({
      // Academic.
      {"cartable", K::kBinary, 0, 1, 0},
      {"tayssir", K::kBinary, 0, 1, 0},
      {"grade_avg", K::kNumeric, 0, 20, 0},
      {"days_missed_auth", K::kNumeric, 0, 120, 0},
      {"classes_missed_auth", K::kNumeric, 0, 828, 0},
      {"days_missed_unauth", K::kNumeric, 0, 388, 0},
      {"classes_missed_unauth", K::kNumeric, 0, 101, 0},
      {"failures_at_level", K::kNumeric, 0, 3, 0},
      {"class_rank", K::kNumeric, 0, 50, 0},
      // Grades.
      {"math_avg", K::kNumeric, 0, 20, 0},
      {"arabic_avg", K::kNumeric, 0, 20, 0},
      {"french_avg", K::kNumeric, 0, 20, 0},
      {"science_avg", K::kNumeric, 0, 20, 0},
      {"literary_avg", K::kNumeric, 0, 20, 0},
      // Demographic.
      {"gender", K::kBinary, 0, 1, 0},
      {"nationality", K::kBinary, 0, 1, 0},
      {"birthplace", K::kCategorical, 0, 0, 121720},
      {"disability", K::kCategorical, 0, 0, 6},
      {"preschool", K::kCategorical, 0, 0, 3},
      {"father_profession", K::kCategorical, 0, 0, 16849},
      {"mother_profession", K::kCategorical, 0, 0, 5462},
      {"age", K::kNumeric, 6, 23, 0},
      // School.
      {"school_age", K::kNumeric, 2, 88, 0},
      {"province", K::kCategorical, 0, 0, 9},
      {"boarding", K::kBinary, 0, 1, 0},
      {"internet", K::kBinary, 0, 1, 0},
      {"school_city", K::kCategorical, 0, 0, 407},
      {"school_tayssir", K::kBinary, 0, 1, 0},
  });
  return *schema;
}

int Vocabulary::Intern(std::string_view value) {
  auto [it, inserted] =
      codes_.emplace(std::string(value), static_cast<int>(names_.size()));
  if (inserted) names_.emplace_back(value);
  return it->second;
}

std::optional<int> Vocabulary::Find(std::string_view value) const {
  auto it = codes_.find(std::string(value));
  if (it == codes_.end()) return std::nullopt;
  return it->second;
}

Cohort::Cohort(std::shared_ptr<const Schema> schema,
               std::vector<std::shared_ptr<const Vocabulary>> vocabularies,
               std::vector<StudentYearRecord> records,
               std::vector<StudentStatus> outcomes)
    : schema_(std::move(schema)),
      vocabularies_(std::move(vocabularies)),
      records_(std::move(records)),
      outcomes_(std::move(outcomes)) {
  if (!schema_) throw std::invalid_argument("Cohort: null schema");
  if (vocabularies_.size() != schema_->size()) {
    throw std::invalid_argument("Cohort: one vocabulary slot per feature required");
  }
  for (size_t f = 0; f < schema_->size(); ++f) {
    const bool categorical = schema_->at(f).kind == FeatureKind::kCategorical;
    if (categorical && !vocabularies_[f]) {
      throw std::invalid_argument("Cohort: categorical feature '" +
                                  schema_->at(f).name + "' has no vocabulary");
    }
  }
  if (outcomes_.size() != records_.size()) {
    throw DataError("Cohort: every record needs exactly one outcome");
  }
  for (size_t r = 0; r < records_.size(); ++r) {
    const auto& rec = records_[r];
    if (rec.features.size() != schema_->size()) {
      throw DataError("Cohort: record of student '" + rec.student_id +
                      "' has " + std::to_string(rec.features.size()) +
                      " feature cells, schema has " +
                      std::to_string(schema_->size()));
    }
    by_student_[rec.student_id].push_back(r);
    if (std::find(years_.begin(), years_.end(), rec.year) == years_.end()) {
      years_.push_back(rec.year);
    }
  }
  std::sort(years_.begin(), years_.end());
  by_year_.resize(years_.size());
  for (size_t r = 0; r < records_.size(); ++r) {
    auto it = std::lower_bound(years_.begin(), years_.end(), records_[r].year);
    by_year_[it - years_.begin()].push_back(r);
  }
  for (auto& [student, indices] : by_student_) {
    std::stable_sort(indices.begin(), indices.end(), [&](size_t a, size_t b) {
      return records_[a].year < records_[b].year;
    });
    for (size_t i = 1; i < indices.size(); ++i) {
      if (records_[indices[i]].year == records_[indices[i - 1]].year) {
        throw DataError("Cohort: duplicate record for student '" + student +
                        "' in " + records_[indices[i]].year.Label());
      }
    }
  }
}

std::optional<size_t> Cohort::Find(std::string_view student_id,
                                   AcademicYear year) const {
  auto it = by_student_.find(std::string(student_id));
  if (it == by_student_.end()) return std::nullopt;
  for (size_t r : it->second) {
    if (records_[r].year == year) return r;
  }
  return std::nullopt;
}

const std::vector<size_t>& Cohort::StudentRecords(std::string_view student_id) const {
  static const std::vector<size_t> kEmpty;
  auto it = by_student_.find(std::string(student_id));
  return it == by_student_.end() ? kEmpty : it->second;
}

bool Cohort::HasStudent(std::string_view student_id) const {
  return by_student_.count(std::string(student_id)) > 0;
}

const std::vector<size_t>& Cohort::RecordsInYear(AcademicYear year) const {
  static const std::vector<size_t> kEmpty;
  auto it = std::lower_bound(years_.begin(), years_.end(), year);
  if (it == years_.end() || *it != year) return kEmpty;
  return by_year_[it - years_.begin()];
}

std::optional<double> Cohort::Value(size_t record, std::string_view feature) const {
  return records_.at(record).features[schema_->RequireIndex(feature)];
}

std::optional<std::string> Cohort::Category(size_t record, size_t feature) const {
  const auto& cell = records_.at(record).features.at(feature);
  if (!cell) return std::nullopt;
  return vocabularies_.at(feature)->Name(static_cast<int>(*cell));
}

Label DeriveLabel(StudentStatus status) {
  return status == StudentStatus::kDropout ? Label::kDropout : Label::kContinue;
}

std::optional<Label> HorizonLabel(const Cohort& cohort,
                                  std::string_view student_id,
                                  AcademicYear anchor, int horizon) {
  if (horizon < 1) throw std::invalid_argument("horizon must be >= 1");
  if (!cohort.HasStudent(student_id)) {
    throw std::invalid_argument("unknown student '" + std::string(student_id) + "'");
  }
  if (!cohort.Find(student_id, anchor)) {
    throw std::invalid_argument("student '" + std::string(student_id) +
                                "' has no record in " + anchor.Label());
  }
  for (int offset = 0; offset < horizon; ++offset) {
    const auto record = cohort.Find(student_id, anchor + offset);
    if (!record) return std::nullopt;
    const StudentStatus status = cohort.outcome(*record);
    if (status == StudentStatus::kDropout) return Label::kDropout;
    if (status == StudentStatus::kSuccess &&
        cohort.records()[*record].level.is_last()) {
      return Label::kContinue;  // graduated
    }
  }
  return Label::kContinue;
}

std::vector<TransitionViolation> ValidateTransitions(const Cohort& cohort) {
  std::vector<TransitionViolation> violations;
  const auto& records = cohort.records();
  for (size_t r = 0; r < records.size(); ++r) {
    const auto& seq = cohort.StudentRecords(records[r].student_id);
    if (seq.front() != r) continue;  // visit each student once, at first record
    for (size_t i = 1; i < seq.size(); ++i) {
      const auto& prev = records[seq[i - 1]];
      const auto& next = records[seq[i]];
      const StudentStatus status = cohort.outcome(seq[i - 1]);
      auto flag = [&](std::string message) {
        violations.push_back({next.student_id, next.year, std::move(message)});
      };
      if (next.year - prev.year != 1) {
        flag("records not in consecutive years (" + prev.year.Label() +
             " then " + next.year.Label() + ")");
        continue;
      }
      const int from = prev.level.value();
      const int to = next.level.value();
      if (status == StudentStatus::kDropout) {
        flag("record after dropout in " + prev.year.Label());
      } else if (to != from && to != from + 1) {
        flag("level " + std::to_string(from) + " -> " + std::to_string(to) +
             " is neither a repeat nor a promotion");
      } else if (status == StudentStatus::kSuccess && prev.level.is_last()) {
        flag("record after graduating from level 12");
      } else if (status == StudentStatus::kSuccess && to != from + 1) {
        flag("success at level " + std::to_string(from) +
             " but next level is " + std::to_string(to));
      } else if (status == StudentStatus::kFailure && to != from) {
        flag("failure at level " + std::to_string(from) +
             " but next level is " + std::to_string(to));
      }
    }
  }
  return violations;
}

namespace {

constexpr const char* kFixedColumns[] = {"student_id", "year",     "level",
                                         "school_id",  "class_id", "status"};
constexpr size_t kNumFixed = 6;

int ParseInt(const std::string& text, const char* what, size_t line) {
  auto value = csv::ParseDouble(text);
  if (!value || *value != static_cast<int>(*value)) {
    throw DataError("line " + std::to_string(line) + ": invalid " + what +
                    " '" + text + "'");
  }
  return static_cast<int>(*value);
}

}  // namespace

void WriteCohortCsv(const Cohort& cohort, std::ostream& out) {
  const Schema& schema = cohort.schema();
  std::vector<std::string> fields(kFixedColumns, kFixedColumns + kNumFixed);
  for (const auto& spec : schema.features()) fields.push_back(spec.name);
  csv::WriteRow(out, fields);
  for (size_t r = 0; r < cohort.size(); ++r) {
    const auto& rec = cohort.records()[r];
    fields.clear();
    fields.push_back(rec.student_id);
    fields.push_back(std::to_string(rec.year.start_year()));
    fields.push_back(std::to_string(rec.level.value()));
    fields.push_back(rec.school_id);
    fields.push_back(rec.class_id);
    fields.emplace_back(StatusName(cohort.outcome(r)));
    for (size_t f = 0; f < schema.size(); ++f) {
      const auto& cell = rec.features[f];
      if (!cell) {
        fields.emplace_back();
      } else if (schema.at(f).kind == FeatureKind::kCategorical) {
        fields.push_back(cohort.vocabularies()[f]->Name(static_cast<int>(*cell)));
      } else {
        fields.push_back(csv::FormatDouble(*cell));
      }
    }
    csv::WriteRow(out, fields);
  }
}

void WriteCohortCsv(const Cohort& cohort, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot open '" + path + "' for writing");
  WriteCohortCsv(cohort, out);
  if (!out) throw DataError("failed writing '" + path + "'");
}

Cohort ReadCohortCsv(std::istream& in) {
  csv::Reader reader(in);
  std::vector<std::string> header;
  if (!reader.Next(header)) throw DataError("cohort CSV is empty (header row required)");
  if (!header.empty() && header[0].rfind("\xEF\xBB\xBF", 0) == 0) {
    header[0].erase(0, 3);  // UTF-8 BOM
  }
  if (header.size() < kNumFixed) {
    throw DataError("cohort CSV header must start with student_id,year,level,"
                    "school_id,class_id,status");
  }
  for (size_t i = 0; i < kNumFixed; ++i) {
    if (header[i] != kFixedColumns[i]) {
      throw DataError("cohort CSV column " + std::to_string(i + 1) +
                      " must be '" + kFixedColumns[i] + "', found '" +
                      header[i] + "'");
    }
  }

  std::vector<std::vector<std::string>> rows;
  std::vector<size_t> lines;
  std::vector<std::string> fields;
  while (reader.Next(fields)) {
    if (fields.size() == 1 && fields[0].empty()) continue;  // blank line
    if (fields.size() != header.size()) {
      throw DataError("line " + std::to_string(reader.line()) + ": expected " +
                      std::to_string(header.size()) + " fields, found " +
                      std::to_string(fields.size()));
    }
    rows.push_back(fields);
    lines.push_back(reader.line());
  }

  const Schema& standard = StandardSchema();
  std::vector<FeatureSpec> specs;
  for (size_t c = kNumFixed; c < header.size(); ++c) {
    if (auto idx = standard.IndexOf(header[c])) {
      specs.push_back(standard.at(*idx));
      continue;
    }
    bool numeric = true;
    double lo = 0.0, hi = 0.0;
    bool seen = false;
    for (const auto& row : rows) {
      if (row[c].empty()) continue;
      auto v = csv::ParseDouble(row[c]);
      if (!v) {
        numeric = false;
        break;
      }
      lo = seen ? std::min(lo, *v) : *v;
      hi = seen ? std::max(hi, *v) : *v;
      seen = true;
    }
    specs.push_back({header[c],
                     numeric ? FeatureKind::kNumeric : FeatureKind::kCategorical,
                     lo, hi, 0});
  }
  auto schema = std::make_shared<const Schema>(std::move(specs));

  std::vector<std::shared_ptr<Vocabulary>> vocab(schema->size());
  for (size_t f = 0; f < schema->size(); ++f) {
    if (schema->at(f).kind == FeatureKind::kCategorical) {
      vocab[f] = std::make_shared<Vocabulary>();
    }
  }

  std::vector<StudentYearRecord> records;
  std::vector<StudentStatus> outcomes;
  records.reserve(rows.size());
  outcomes.reserve(rows.size());
  for (size_t i = 0; i < rows.size(); ++i) {
    const auto& row = rows[i];
    const size_t line = lines[i];
    if (row[0].empty()) {
      throw DataError("line " + std::to_string(line) + ": empty student_id");
    }
    StudentYearRecord rec;
    rec.student_id = row[0];
    try {
      rec.year = AcademicYear(ParseInt(row[1], "year", line));
      rec.level = LevelId(ParseInt(row[2], "level", line));
    } catch (const std::invalid_argument& e) {
      throw DataError("line " + std::to_string(line) + ": " + e.what());
    }
    rec.school_id = row[3];
    rec.class_id = row[4];
    try {
      outcomes.push_back(ParseStatus(row[5]));
    } catch (const DataError& e) {
      throw DataError("line " + std::to_string(line) + ": " + e.what());
    }
    rec.features.resize(schema->size());
    for (size_t f = 0; f < schema->size(); ++f) {
      const std::string& text = row[kNumFixed + f];
      if (text.empty()) continue;
      const FeatureSpec& spec = schema->at(f);
      if (spec.kind == FeatureKind::kCategorical) {
        rec.features[f] = vocab[f]->Intern(text);
        continue;
      }
      auto v = csv::ParseDouble(text);
      if (!v) {
        throw DataError("line " + std::to_string(line) + ": feature '" +
                        spec.name + "' expects a number, found '" + text + "'");
      }
      if (standard.IndexOf(spec.name) && (*v < spec.min || *v > spec.max)) {
        throw DataError("line " + std::to_string(line) + ": feature '" +
                        spec.name + "' value " + text + " outside [" +
                        csv::FormatDouble(spec.min) + ", " +
                        csv::FormatDouble(spec.max) + "]");
      }
      rec.features[f] = *v;
    }
    records.push_back(std::move(rec));
  }
  std::vector<std::shared_ptr<const Vocabulary>> frozen(vocab.begin(), vocab.end());
  return Cohort(std::move(schema), std::move(frozen), std::move(records),
                std::move(outcomes));
}

Cohort ReadCohortCsv(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open cohort file '" + path + "'");
  return ReadCohortCsv(in);
}

}  // namespace dropwatch
