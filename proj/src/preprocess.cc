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

#include "dropwatch/preprocess.h"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <unordered_map>

namespace dropwatch::prep {

namespace {

using nlohmann::json;

constexpr double kMinStd = 1e-12;

std::string_view ImputeName(ImputePolicy p) {
  switch (p) {
    case ImputePolicy::kMedian:
      return "median";
    case ImputePolicy::kMode:
      return "mode";
    case ImputePolicy::kConstant:
      return "constant";
  }
  return "?";
}

ImputePolicy ParseImpute(const std::string& s) {
  if (s == "median") return ImputePolicy::kMedian;
  if (s == "mode") return ImputePolicy::kMode;
  if (s == "constant") return ImputePolicy::kConstant;
  throw std::invalid_argument("unknown impute policy '" + s + "'");
}

std::string_view NormalizeName(NormalizeMode m) {
  switch (m) {
    case NormalizeMode::kNone:
      return "none";
    case NormalizeMode::kGlobalZScore:
      return "global-zscore";
    case NormalizeMode::kPerGroupZScore:
      return "per-group-zscore";
  }
  return "?";
}

NormalizeMode ParseNormalize(const std::string& s) {
  if (s == "none") return NormalizeMode::kNone;
  if (s == "global-zscore") return NormalizeMode::kGlobalZScore;
  if (s == "per-group-zscore") return NormalizeMode::kPerGroupZScore;
  throw std::invalid_argument("unknown normalize mode '" + s + "'");
}

FeatureKind ParseKind(const std::string& s) {
  if (s == "numeric") return FeatureKind::kNumeric;
  if (s == "binary") return FeatureKind::kBinary;
  if (s == "categorical") return FeatureKind::kCategorical;
  throw std::invalid_argument("unknown feature kind '" + s + "'");
}

double Median(std::vector<double> values) {
  std::sort(values.begin(), values.end());
  const size_t n = values.size();
  return n % 2 ? values[n / 2] : 0.5 * (values[n / 2 - 1] + values[n / 2]);
}

double NumericMode(const std::vector<double>& values) {
  std::map<double, int> counts;
  for (double v : values) ++counts[v];
  double best = counts.begin()->first;
  int best_count = 0;
  for (const auto& [v, c] : counts) {
    if (c > best_count) {
      best = v;
      best_count = c;
    }
  }
  return best;
}

}  // namespace

json PreprocessPlan::ToJson() const {
  json j;
  json imp = json::object();
  for (const auto& [name, p] : impute) imp[name] = ImputeName(p);
  j["impute"] = imp;
  j["impute_constant"] = impute_constant;
  j["onehot_max_cardinality"] = onehot_max_cardinality;
  j["normalize"] = NormalizeName(normalize);
  j["group_key"] = group_key;
  j["add_missing_indicators"] = add_missing_indicators;
  j["exclude"] = exclude;
  return j;
}

PreprocessPlan PreprocessPlan::FromJson(const json& j) {
  PreprocessPlan p;
  if (j.is_null()) return p;
  if (!j.is_object()) throw std::invalid_argument("preprocess plan must be a JSON object");
  if (j.contains("impute")) {
    for (const auto& [name, v] : j.at("impute").items()) {
      p.impute[name] = ParseImpute(v.get<std::string>());
    }
  }
  if (j.contains("impute_constant")) {
    p.impute_constant = j.at("impute_constant").get<std::map<std::string, double>>();
  }
  p.onehot_max_cardinality = j.value("onehot_max_cardinality", p.onehot_max_cardinality);
  if (j.contains("normalize")) p.normalize = ParseNormalize(j.at("normalize").get<std::string>());
  p.group_key = j.value("group_key", p.group_key);
  if (p.group_key != "class_id" && p.group_key != "school_id") {
    throw std::invalid_argument("group_key must be class_id or school_id");
  }
  p.add_missing_indicators = j.value("add_missing_indicators", p.add_missing_indicators);
  if (j.contains("exclude")) p.exclude = j.at("exclude").get<std::vector<std::string>>();
  return p;
}

FittedPreprocessor::FittedPreprocessor(PreprocessPlan plan,
                                       std::vector<ColumnState> columns)
    : plan_(std::move(plan)), columns_(std::move(columns)) {
  for (const auto& col : columns_) {
    if (col.excluded) continue;
    if (col.kind != FeatureKind::kCategorical) {
      output_names_.push_back(col.name);
    } else if (col.one_hot) {
      for (const auto& cat : col.categories) output_names_.push_back(col.name + "=" + cat);
    } else {
      output_names_.push_back(col.name + "#freq");
    }
  }
  for (const auto& col : columns_) {
    if (!col.excluded && col.missing_indicator) output_names_.push_back(col.name + "#missing");
  }
}

FittedPreprocessor Fit(const PreprocessPlan& plan, const FeatureFrame& frame) {
  if (frame.rows.empty()) throw std::invalid_argument("cannot fit a preprocessor on zero rows");
  if (plan.onehot_max_cardinality < 0) {
    throw std::invalid_argument("onehot_max_cardinality must be >= 0");
  }
  std::vector<ColumnState> states;
  for (size_t c = 0; c < frame.columns.size(); ++c) {
    const FeatureSpec& spec = frame.columns[c];
    ColumnState st;
    st.name = spec.name;
    st.kind = spec.kind;
    if (std::find(plan.exclude.begin(), plan.exclude.end(), spec.name) != plan.exclude.end()) {
      st.excluded = true;
      states.push_back(std::move(st));
      continue;
    }
    size_t missing = 0;
    std::vector<double> values;
    values.reserve(frame.rows.size());
    for (const auto& row : frame.rows) {
      if (row.at(c)) {
        values.push_back(*row[c]);
      } else {
        ++missing;
      }
    }
    if (values.empty()) {
      throw DataError("feature '" + spec.name + "' is entirely missing in the training rows");
    }
    st.missing_indicator = plan.add_missing_indicators && missing > 0;

    auto policy_it = plan.impute.find(spec.name);
    if (spec.kind == FeatureKind::kCategorical) {
      const auto& vocab = frame.vocabularies.at(c);
      if (!vocab) throw std::invalid_argument("categorical column '" + spec.name + "' has no vocabulary");
      std::map<std::string, size_t> counts;
      for (double code : values) ++counts[vocab->Name(static_cast<int>(code))];
      size_t best = 0;
      for (const auto& [cat, n] : counts) {
        if (n > best) {
          best = n;
          st.fill_category = cat;
        }
      }
      if (policy_it != plan.impute.end() && policy_it->second == ImputePolicy::kConstant) {
        st.fill_category = "__missing__";
      }
      const double total = static_cast<double>(values.size());
      for (const auto& [cat, n] : counts) st.frequencies[cat] = static_cast<double>(n) / total;
      st.one_hot = static_cast<int>(counts.size()) <= plan.onehot_max_cardinality;
      if (st.one_hot) {
        for (const auto& [cat, n] : counts) st.categories.push_back(cat);
        st.frequencies.clear();
      }
    } else {
      const ImputePolicy policy =
          policy_it != plan.impute.end() ? policy_it->second : ImputePolicy::kMedian;
      switch (policy) {
        case ImputePolicy::kMedian:
          st.fill_value = Median(values);
          break;
        case ImputePolicy::kMode:
          st.fill_value = NumericMode(values);
          break;
        case ImputePolicy::kConstant: {
          auto it = plan.impute_constant.find(spec.name);
          st.fill_value = it == plan.impute_constant.end() ? 0.0 : it->second;
          break;
        }
      }
      double sum = 0.0;
      for (double v : values) sum += v;
      st.mean = sum / static_cast<double>(values.size());
      double ss = 0.0;
      for (double v : values) ss += (v - st.mean) * (v - st.mean);
      st.stddev = std::sqrt(ss / static_cast<double>(values.size()));
      if (st.stddev < kMinStd) st.stddev = 1.0;
      st.normalized = spec.kind == FeatureKind::kNumeric && plan.normalize != NormalizeMode::kNone;
    }
    states.push_back(std::move(st));
  }
  return FittedPreprocessor(plan, std::move(states));
}

DenseMatrix FittedPreprocessor::Transform(const FeatureFrame& frame) const {
  std::unordered_map<std::string, size_t> frame_index;
  for (size_t c = 0; c < frame.columns.size(); ++c) frame_index[frame.columns[c].name] = c;
  std::unordered_map<std::string, const ColumnState*> fitted;
  for (const auto& col : columns_) fitted[col.name] = &col;
  for (const auto& spec : frame.columns) {
    if (!fitted.count(spec.name)) {
      throw std::invalid_argument("unknown feature '" + spec.name + "' (not seen at fit time)");
    }
  }

  struct Plan {
    const ColumnState* state;
    size_t source;
    size_t out;  // first output column
    std::vector<int> onehot_of_code;
    std::vector<double> freq_of_code;
    double fill_encoded_freq = 0.0;
    int fill_onehot = -1;
  };
  std::vector<Plan> plans;
  size_t out = 0;
  for (const auto& col : columns_) {
    if (col.excluded) continue;
    auto it = frame_index.find(col.name);
    if (it == frame_index.end()) {
      throw std::invalid_argument("input lacks fitted feature '" + col.name + "'");
    }
    Plan p{&col, it->second, out, {}, {}, 0.0, -1};
    if (col.kind == FeatureKind::kCategorical) {
      const auto& vocab = frame.vocabularies.at(it->second);
      if (!vocab) throw std::invalid_argument("categorical column '" + col.name + "' has no vocabulary");
      if (col.one_hot) {
        p.onehot_of_code.assign(vocab->size(), -1);
        for (size_t code = 0; code < vocab->size(); ++code) {
          auto pos = std::lower_bound(col.categories.begin(), col.categories.end(),
                                      vocab->Name(static_cast<int>(code)));
          if (pos != col.categories.end() && *pos == vocab->Name(static_cast<int>(code))) {
            p.onehot_of_code[code] = static_cast<int>(pos - col.categories.begin());
          }
        }
        auto pos = std::lower_bound(col.categories.begin(), col.categories.end(), col.fill_category);
        if (pos != col.categories.end() && *pos == col.fill_category) {
          p.fill_onehot = static_cast<int>(pos - col.categories.begin());
        }
        out += col.categories.size();
      } else {
        p.freq_of_code.assign(vocab->size(), 0.0);
        for (size_t code = 0; code < vocab->size(); ++code) {
          auto f = col.frequencies.find(vocab->Name(static_cast<int>(code)));
          if (f != col.frequencies.end()) p.freq_of_code[code] = f->second;
        }
        auto f = col.frequencies.find(col.fill_category);
        p.fill_encoded_freq = f == col.frequencies.end() ? 0.0 : f->second;
        out += 1;
      }
    } else {
      out += 1;
    }
    plans.push_back(std::move(p));
  }
  std::vector<std::pair<size_t, size_t>> indicators;  // (source, output column)
  for (const auto& p : plans) {
    if (p.state->missing_indicator) indicators.emplace_back(p.source, out++);
  }

  const size_t n = frame.rows.size();
  DenseMatrix x(n, out, 0.0);
  for (size_t r = 0; r < n; ++r) {
    const auto& row = frame.rows[r];
    for (const auto& p : plans) {
      const auto& cell = row.at(p.source);
      const ColumnState& st = *p.state;
      if (st.kind == FeatureKind::kCategorical) {
        if (st.one_hot) {
          int hot = cell ? (static_cast<size_t>(*cell) < p.onehot_of_code.size()
                                ? p.onehot_of_code[static_cast<size_t>(*cell)]
                                : -1)
                         : p.fill_onehot;
          if (hot >= 0) x(r, p.out + hot) = 1.0;
        } else {
          x(r, p.out) = cell ? (static_cast<size_t>(*cell) < p.freq_of_code.size()
                                    ? p.freq_of_code[static_cast<size_t>(*cell)]
                                    : 0.0)
                             : p.fill_encoded_freq;
        }
      } else {
        double v = cell ? *cell : st.fill_value;
        if (st.normalized && plan_.normalize == NormalizeMode::kGlobalZScore) {
          v = (v - st.mean) / st.stddev;
        }
        x(r, p.out) = v;
      }
    }
    for (const auto& [source, col] : indicators) x(r, col) = row[source] ? 0.0 : 1.0;
  }

  if (plan_.normalize == NormalizeMode::kPerGroupZScore) {
    if (frame.groups.size() != n) {
      throw std::invalid_argument("per-group normalization needs one group key per row");
    }
    std::map<std::string, std::vector<size_t>> members;
    for (size_t r = 0; r < n; ++r) members[frame.groups[r]].push_back(r);
    for (const auto& p : plans) {
      if (!p.state->normalized) continue;
      const size_t c = p.out;
      for (const auto& [group, rows] : members) {
        double sum = 0.0;
        for (size_t r : rows) sum += x(r, c);
        const double mean = sum / static_cast<double>(rows.size());
        double ss = 0.0;
        for (size_t r : rows) ss += (x(r, c) - mean) * (x(r, c) - mean);
        double sd = std::sqrt(ss / static_cast<double>(rows.size()));
        if (sd < kMinStd) sd = 1.0;
        for (size_t r : rows) x(r, c) = (x(r, c) - mean) / sd;
      }
    }
  }
  return x;
}

json FittedPreprocessor::ToJson() const {
  json cols = json::array();
  for (const auto& c : columns_) {
    json jc = {{"name", c.name},
               {"kind", FeatureKindName(c.kind)},
               {"excluded", c.excluded},
               {"fill_value", c.fill_value},
               {"fill_category", c.fill_category},
               {"mean", c.mean},
               {"stddev", c.stddev},
               {"normalized", c.normalized},
               {"missing_indicator", c.missing_indicator},
               {"one_hot", c.one_hot},
               {"categories", c.categories},
               {"frequencies", c.frequencies}};
    cols.push_back(std::move(jc));
  }
  return {{"plan", plan_.ToJson()}, {"columns", cols}, {"output_names", output_names_}};
}

FittedPreprocessor FittedPreprocessor::FromJson(const json& j) {
  try {
    PreprocessPlan plan = PreprocessPlan::FromJson(j.at("plan"));
    std::vector<ColumnState> cols;
    for (const auto& jc : j.at("columns")) {
      ColumnState c;
      c.name = jc.at("name").get<std::string>();
      c.kind = ParseKind(jc.at("kind").get<std::string>());
      c.excluded = jc.at("excluded").get<bool>();
      c.fill_value = jc.at("fill_value").get<double>();
      c.fill_category = jc.at("fill_category").get<std::string>();
      c.mean = jc.at("mean").get<double>();
      c.stddev = jc.at("stddev").get<double>();
      c.normalized = jc.at("normalized").get<bool>();
      c.missing_indicator = jc.at("missing_indicator").get<bool>();
      c.one_hot = jc.at("one_hot").get<bool>();
      c.categories = jc.at("categories").get<std::vector<std::string>>();
      c.frequencies = jc.at("frequencies").get<std::map<std::string, double>>();
      cols.push_back(std::move(c));
    }
    return FittedPreprocessor(std::move(plan), std::move(cols));
  } catch (const json::exception& e) {
    throw DataError(std::string("malformed preprocessor JSON: ") + e.what());
  }
}

GroupAggregates AggregateGroupFeatures(const Cohort& cohort, AcademicYear year) {
  const auto& current = cohort.RecordsInYear(year);
  if (current.empty()) throw DataError("cohort has no records in " + year.Label());
  const Schema& schema = cohort.schema();
  const auto f_gender = schema.IndexOf("gender");
  const auto f_grade = schema.IndexOf("grade_avg");
  const auto f_failures = schema.IndexOf("failures_at_level");

  GroupAggregates agg;
  std::map<std::string, std::pair<double, int>> grade_sums;
  for (size_t r : current) {
    const auto& rec = cohort.records()[r];
    ClassAggregates& c = agg.classes[rec.class_id];
    ++c.size;
    ++agg.schools[rec.school_id].size;
    if (f_gender && rec.features[*f_gender] == 1.0) ++c.female;
    if (f_failures && rec.features[*f_failures].value_or(0.0) > 0.0) ++c.failures;
    if (f_grade && rec.features[*f_grade]) {
      auto& [sum, n] = grade_sums[rec.class_id];
      sum += *rec.features[*f_grade];
      ++n;
    }
  }
  for (auto& [cls, c] : agg.classes) {
    auto it = grade_sums.find(cls);
    if (it != grade_sums.end()) c.mean_grade = it->second.first / it->second.second;
  }

  const auto& prior = cohort.RecordsInYear(year + (-1));
  if (!prior.empty()) {
    std::map<std::string, int> class_drop, school_drop, school_fail;
    for (size_t r : prior) {
      const auto& rec = cohort.records()[r];
      const StudentStatus s = cohort.outcome(r);
      if (s == StudentStatus::kDropout) {
        ++class_drop[rec.class_id];
        ++school_drop[rec.school_id];
      } else if (s == StudentStatus::kFailure) {
        ++school_fail[rec.school_id];
      }
    }
    for (auto& [cls, c] : agg.classes) {
      auto it = class_drop.find(cls);
      c.prior_dropouts = it == class_drop.end() ? 0 : it->second;
    }
    for (auto& [sch, s] : agg.schools) {
      auto d = school_drop.find(sch);
      s.prior_dropouts = d == school_drop.end() ? 0 : d->second;
      auto f = school_fail.find(sch);
      s.prior_failures = f == school_fail.end() ? 0 : f->second;
    }
  }
  return agg;
}

const std::vector<std::string>& AggregateColumnNames() {
  static const auto* names = new std::vector<std::string>{
      "class_size",          "class_female",          "class_mean_grade",
      "class_failures",      "class_prior_dropouts",  "school_prior_dropouts",
      "school_prior_failures"};
  return *names;
}

FeatureFrame AugmentedYearFrame(const Cohort& cohort, AcademicYear year,
                                const std::string& group_key,
                                std::vector<size_t>* record_index) {
  const GroupAggregates agg = AggregateGroupFeatures(cohort, year);
  FeatureFrame frame;
  frame.columns = cohort.schema().features();
  frame.vocabularies = cohort.vocabularies();
  for (const auto& name : AggregateColumnNames()) {
    frame.columns.push_back({name, FeatureKind::kNumeric, 0.0, 0.0, 0});
    frame.vocabularies.push_back(nullptr);
  }
  const bool by_school = group_key == "school_id";
  const auto& records = cohort.RecordsInYear(year);
  frame.rows.reserve(records.size());
  frame.groups.reserve(records.size());
  if (record_index) record_index->assign(records.begin(), records.end());
  const std::string year_tag = "@" + std::to_string(year.start_year());
  for (size_t r : records) {
    const auto& rec = cohort.records()[r];
    auto row = rec.features;
    const ClassAggregates& c = agg.classes.at(rec.class_id);
    const SchoolAggregates& s = agg.schools.at(rec.school_id);
    row.emplace_back(c.size);
    row.emplace_back(c.female);
    row.push_back(c.mean_grade);
    row.emplace_back(c.failures);
    row.push_back(c.prior_dropouts ? std::optional<double>(*c.prior_dropouts) : std::nullopt);
    row.push_back(s.prior_dropouts ? std::optional<double>(*s.prior_dropouts) : std::nullopt);
    row.push_back(s.prior_failures ? std::optional<double>(*s.prior_failures) : std::nullopt);
    frame.rows.push_back(std::move(row));
    frame.groups.push_back((by_school ? rec.school_id : rec.class_id) + year_tag);
  }
  return frame;
}

}  // namespace dropwatch::prep
