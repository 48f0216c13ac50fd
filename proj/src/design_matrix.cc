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

#include "dropwatch/design_matrix.h"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <set>
#include <sstream>
#include <unordered_map>

#include "dropwatch/csv.h"

namespace dropwatch {

namespace {

std::string OffsetSuffix(int h) { return h == 0 ? "@0" : "@-" + std::to_string(h); }

std::string FormatPercent(double v) {
  std::ostringstream os;
  os << std::fixed << std::setprecision(2) << v;
  return os.str();
}

}  // namespace

void DesignMatrix::Validate() const {
  if (y.size() != x.rows() || provenance.size() != x.rows()) {
    throw DataError("design matrix rows, labels and provenance differ in length");
  }
  if (feature_names.size() != x.cols()) {
    throw DataError("design matrix has " + std::to_string(x.cols()) + " columns but " +
                    std::to_string(feature_names.size()) + " feature names");
  }
  for (double v : x.data()) {
    if (!std::isfinite(v)) throw DataError("design matrix contains a non-finite value");
  }
}

DesignMatrix DesignMatrix::Subset(std::span<const size_t> rows) const {
  DesignMatrix out;
  out.key = key;
  out.feature_names = feature_names;
  out.x = x.SelectRows(rows);
  out.y.reserve(rows.size());
  out.provenance.reserve(rows.size());
  for (size_t r : rows) {
    out.y.push_back(y.at(r));
    out.provenance.push_back(provenance.at(r));
  }
  return out;
}

std::vector<int> DesignMatrix::LabelValues() const {
  std::vector<int> out;
  out.reserve(y.size());
  for (Label l : y) out.push_back(LabelValue(l));
  return out;
}

std::vector<EligibleRow> EnumerateEligibleRows(const Cohort& cohort, const ModelKey& key) {
  const int i = key.history_years;
  const int j = key.horizon_years;
  size_t at_level = 0;
  size_t with_history = 0;
  std::vector<EligibleRow> rows;
  for (size_t r = 0; r < cohort.size(); ++r) {
    const auto& rec = cohort.records()[r];
    if (rec.level != key.level) continue;
    ++at_level;
    std::vector<size_t> history{r};
    for (int h = 1; h < i; ++h) {
      auto prev = cohort.Find(rec.student_id, rec.year + (-h));
      if (!prev) break;
      history.push_back(*prev);
    }
    if (static_cast<int>(history.size()) < i) continue;
    ++with_history;
    auto label = HorizonLabel(cohort, rec.student_id, rec.year, j);
    if (!label) continue;
    rows.push_back({{rec.student_id, rec.year, rec.school_id}, std::move(history), *label});
  }
  const std::string name = key.Display();
  if (at_level == 0) {
    throw DataError(name + ": no records at level " + std::to_string(key.level.value()));
  }
  if (with_history == 0) {
    throw DataError(name + ": no level-" + std::to_string(key.level.value()) +
                    " record has " + std::to_string(i) + " consecutive years of history");
  }
  if (rows.empty()) {
    throw DataError(name + ": no candidate row has a decidable " + std::to_string(j) +
                    "-year horizon label (follow-up years missing)");
  }
  return rows;
}

prep::FittedPreprocessor FitPreprocessor(const Cohort& cohort,
                                         std::span<const EligibleRow> rows,
                                         const prep::PreprocessPlan& plan) {
  if (rows.empty()) throw std::invalid_argument("cannot fit a preprocessor on zero rows");
  std::map<int, std::set<size_t>> needed;  // year -> records
  for (const auto& row : rows) {
    for (size_t rec : row.history) needed[cohort.records()[rec].year.start_year()].insert(rec);
  }
  prep::FeatureFrame combined;
  for (const auto& [year, records] : needed) {
    std::vector<size_t> index;
    prep::FeatureFrame frame =
        prep::AugmentedYearFrame(cohort, AcademicYear(year), plan.group_key, &index);
    if (combined.columns.empty()) {
      combined.columns = frame.columns;
      combined.vocabularies = frame.vocabularies;
    }
    for (size_t r = 0; r < index.size(); ++r) {
      if (records.count(index[r])) {
        combined.rows.push_back(std::move(frame.rows[r]));
        combined.groups.push_back(std::move(frame.groups[r]));
      }
    }
  }
  return prep::Fit(plan, combined);
}

DenseMatrix PreprocessYear(const Cohort& cohort, AcademicYear year,
                           const prep::FittedPreprocessor& preprocessor,
                           std::vector<size_t>* record_index) {
  prep::FeatureFrame frame =
      prep::AugmentedYearFrame(cohort, year, preprocessor.plan().group_key, record_index);
  return preprocessor.Transform(frame);
}

std::vector<std::string> HistoryFeatureNames(const std::vector<std::string>& per_year,
                                             int history_years) {
  std::vector<std::string> names;
  for (int h = 0; h < history_years; ++h) {
    const std::string suffix = OffsetSuffix(h);
    for (const auto& n : per_year) names.push_back(n + suffix);
    names.push_back("level" + suffix);
  }
  return names;
}

DesignMatrix BuildDesignMatrix(const Cohort& cohort, const ModelKey& key,
                               std::span<const EligibleRow> rows,
                               const prep::FittedPreprocessor& preprocessor) {
  const int i = key.history_years;
  std::set<int> years;
  for (const auto& row : rows) {
    if (static_cast<int>(row.history.size()) != i) {
      throw std::invalid_argument("eligible row history length does not match the model key");
    }
    for (size_t rec : row.history) years.insert(cohort.records()[rec].year.start_year());
  }
  // Transformed year blocks; record -> (block, row).
  std::map<int, DenseMatrix> blocks;
  std::unordered_map<size_t, std::pair<int, size_t>> where;
  for (int year : years) {
    std::vector<size_t> index;
    blocks[year] = PreprocessYear(cohort, AcademicYear(year), preprocessor, &index);
    for (size_t r = 0; r < index.size(); ++r) where[index[r]] = {year, r};
  }

  const size_t per_year = preprocessor.output_names().size();
  const size_t width = static_cast<size_t>(i) * (per_year + 1);
  DesignMatrix dm;
  dm.key = key;
  dm.feature_names = HistoryFeatureNames(preprocessor.output_names(), i);
  dm.x = DenseMatrix(rows.size(), width);
  dm.y.reserve(rows.size());
  dm.provenance.reserve(rows.size());
  for (size_t r = 0; r < rows.size(); ++r) {
    auto out = dm.x.mutable_row(r);
    for (int h = 0; h < i; ++h) {
      const size_t rec = rows[r].history[h];
      const auto& [year, block_row] = where.at(rec);
      auto src = blocks.at(year).row(block_row);
      const size_t offset = static_cast<size_t>(h) * (per_year + 1);
      std::copy(src.begin(), src.end(), out.begin() + offset);
      out[offset + per_year] = cohort.records()[rec].level.value();
    }
    dm.y.push_back(rows[r].label);
    dm.provenance.push_back(rows[r].provenance);
  }
  dm.Validate();
  return dm;
}

DesignMatrix BuildDesignMatrix(const Cohort& cohort, const ModelKey& key,
                               const prep::FittedPreprocessor& preprocessor) {
  const auto rows = EnumerateEligibleRows(cohort, key);
  return BuildDesignMatrix(cohort, key, rows, preprocessor);
}

void WriteDesignMatrixCsv(const DesignMatrix& dm, std::ostream& out) {
  std::vector<std::string> fields{"student_id", "anchor_year", "school_id"};
  fields.insert(fields.end(), dm.feature_names.begin(), dm.feature_names.end());
  fields.push_back("label");
  csv::WriteRow(out, fields);
  for (size_t r = 0; r < dm.rows(); ++r) {
    fields.clear();
    const auto& p = dm.provenance[r];
    fields.push_back(p.student_id);
    fields.push_back(std::to_string(p.anchor_year.start_year()));
    fields.push_back(p.school_id);
    for (double v : dm.x.row(r)) fields.push_back(csv::FormatDouble(v));
    fields.push_back(std::to_string(LabelValue(dm.y[r])));
    csv::WriteRow(out, fields);
  }
}

void WriteDesignMatrixCsv(const DesignMatrix& dm, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot open '" + path + "' for writing");
  WriteDesignMatrixCsv(dm, out);
  if (!out) throw DataError("failed writing '" + path + "'");
}

DesignMatrix ReadDesignMatrixCsv(std::istream& in) {
  csv::Reader reader(in);
  std::vector<std::string> fields;
  if (!reader.Next(fields)) throw DataError("matrix CSV is empty (header row required)");
  if (fields.size() < 5 || fields[0] != "student_id" || fields[1] != "anchor_year" ||
      fields[2] != "school_id" || fields.back() != "label") {
    throw DataError(
        "matrix CSV header must be student_id,anchor_year,school_id,<features...>,label");
  }
  DesignMatrix dm;
  dm.feature_names.assign(fields.begin() + 3, fields.end() - 1);
  const size_t width = fields.size();
  std::vector<double> data;
  std::vector<double> row(dm.feature_names.size());
  while (reader.Next(fields)) {
    const std::string where = "matrix CSV line " + std::to_string(reader.line());
    if (fields.size() != width) {
      throw DataError(where + ": expected " + std::to_string(width) + " fields, got " +
                      std::to_string(fields.size()));
    }
    auto year = csv::ParseDouble(fields[1]);
    if (!year || *year != std::floor(*year)) throw DataError(where + ": bad anchor_year");
    for (size_t c = 0; c < row.size(); ++c) {
      auto v = csv::ParseDouble(fields[3 + c]);
      if (!v) {
        throw DataError(where + ": column '" + dm.feature_names[c] + "' is not a finite number");
      }
      row[c] = *v;
    }
    const std::string& label = fields.back();
    if (label != "0" && label != "1") throw DataError(where + ": label must be 0 or 1");
    dm.x.AppendRow(row);
    dm.y.push_back(label == "1" ? Label::kDropout : Label::kContinue);
    dm.provenance.push_back({fields[0], AcademicYear(static_cast<int>(*year)), fields[2]});
  }
  if (dm.y.empty()) throw DataError("matrix CSV has no data rows");
  dm.Validate();
  return dm;
}

DesignMatrix ReadDesignMatrixCsv(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open matrix file '" + path + "'");
  return ReadDesignMatrixCsv(in);
}

const RateCell* RateTable::Find(const std::string& group, AcademicYear year) const {
  auto it = cells.find({group, year.start_year()});
  return it == cells.end() ? nullptr : &it->second;
}

std::string RateTable::ToMarkdown() const {
  std::ostringstream os;
  os << "| " << (grouping == RateGrouping::kCycle ? "Cycle" : "Level");
  for (const auto& y : years) os << " | " << y.Label();
  os << " |\n|---";
  for (size_t k = 0; k < years.size(); ++k) os << "|---:";
  os << "|\n";
  for (const auto& g : groups) {
    os << "| " << g;
    for (const auto& y : years) {
      const RateCell* c = Find(g, y);
      os << " | " << (c ? FormatPercent(c->percent()) : "-");
    }
    os << " |\n";
  }
  return os.str();
}

std::string RateTable::ToCsv() const {
  std::ostringstream os;
  os << "group,year,enrolled,dropouts,rate_percent\n";
  for (const auto& g : groups) {
    for (const auto& y : years) {
      const RateCell* c = Find(g, y);
      if (!c) continue;
      os << csv::Escape(g) << ',' << y.start_year() << ',' << c->enrolled << ','
         << c->dropouts << ',' << FormatPercent(c->percent()) << '\n';
    }
  }
  return os.str();
}

RateTable DropoutRateTable(const Cohort& cohort, RateGrouping grouping) {
  RateTable t;
  t.grouping = grouping;
  t.years = cohort.years();
  std::set<int> levels;
  std::set<Cycle> cycles;
  auto group_of = [&](const StudentYearRecord& rec) {
    return grouping == RateGrouping::kLevel ? std::to_string(rec.level.value())
                                            : std::string(CycleName(rec.level.cycle()));
  };
  for (size_t r = 0; r < cohort.size(); ++r) {
    const auto& rec = cohort.records()[r];
    const bool drop = cohort.outcome(r) == StudentStatus::kDropout;
    RateCell& c = t.cells[{group_of(rec), rec.year.start_year()}];
    ++c.enrolled;
    c.dropouts += drop;
    levels.insert(rec.level.value());
    cycles.insert(rec.level.cycle());
    if (grouping == RateGrouping::kCycle) {
      RateCell& all = t.cells[{"Overall", rec.year.start_year()}];
      ++all.enrolled;
      all.dropouts += drop;
    }
  }
  if (grouping == RateGrouping::kLevel) {
    for (int l : levels) t.groups.push_back(std::to_string(l));
  } else {
    for (Cycle c : cycles) t.groups.emplace_back(CycleName(c));
    if (!t.cells.empty()) t.groups.emplace_back("Overall");
  }
  return t;
}

}  // namespace dropwatch
