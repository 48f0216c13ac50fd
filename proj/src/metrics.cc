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

#include "dropwatch/metrics.h"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <numeric>
#include <sstream>
#include <stdexcept>

#include "dropwatch/common.h"

namespace dropwatch {

namespace {

using nlohmann::json;

std::pair<double, bool> Ratio(int64_t num, int64_t den) {
  if (den == 0) return {0.0, true};
  return {static_cast<double>(num) / static_cast<double>(den), false};
}

json ClassToJson(const ClassMetrics& c) {
  return {{"recall", c.recall},
          {"precision", c.precision},
          {"f1", c.f1},
          {"recall_undefined", c.recall_undefined},
          {"precision_undefined", c.precision_undefined}};
}

ClassMetrics ClassFromJson(const json& j) {
  ClassMetrics c;
  c.recall = j.at("recall").get<double>();
  c.precision = j.at("precision").get<double>();
  c.f1 = j.at("f1").get<double>();
  c.recall_undefined = j.at("recall_undefined").get<bool>();
  c.precision_undefined = j.at("precision_undefined").get<bool>();
  return c;
}

void CheckLabels(std::span<const int> labels) {
  for (int l : labels) {
    if (l != 0 && l != 1) throw std::invalid_argument("labels must be 0 or 1");
  }
}

}  // namespace

ConfusionMatrix Confusion(std::span<const int> labels, std::span<const int> predicted) {
  if (labels.size() != predicted.size()) {
    throw std::invalid_argument("labels and predictions differ in length");
  }
  if (labels.empty()) throw std::invalid_argument("cannot evaluate zero rows");
  CheckLabels(labels);
  CheckLabels(predicted);
  ConfusionMatrix cm;
  for (size_t i = 0; i < labels.size(); ++i) {
    if (labels[i]) {
      (predicted[i] ? cm.tp : cm.fn) += 1;
    } else {
      (predicted[i] ? cm.fp : cm.tn) += 1;
    }
  }
  return cm;
}

double F1Score(double precision, double recall) {
  return precision + recall > 0.0 ? 2.0 * precision * recall / (precision + recall) : 0.0;
}

double MacroF1(double continue_recall, double continue_precision, double dropout_recall,
               double dropout_precision) {
  return 0.5 * (F1Score(continue_precision, continue_recall) +
                F1Score(dropout_precision, dropout_recall));
}

EvalReport ComputeMetrics(const ConfusionMatrix& cm) {
  if (cm.total() <= 0) throw std::invalid_argument("confusion matrix is empty");
  EvalReport r;
  r.cm = cm;
  r.accuracy = static_cast<double>(cm.tp + cm.tn) / static_cast<double>(cm.total());
  std::tie(r.dropout_class.recall, r.dropout_class.recall_undefined) = Ratio(cm.tp, cm.tp + cm.fn);
  std::tie(r.dropout_class.precision, r.dropout_class.precision_undefined) =
      Ratio(cm.tp, cm.tp + cm.fp);
  std::tie(r.continue_class.recall, r.continue_class.recall_undefined) =
      Ratio(cm.tn, cm.tn + cm.fp);
  std::tie(r.continue_class.precision, r.continue_class.precision_undefined) =
      Ratio(cm.tn, cm.tn + cm.fn);
  r.specificity = r.continue_class.recall;
  r.dropout_class.f1 = F1Score(r.dropout_class.precision, r.dropout_class.recall);
  r.continue_class.f1 = F1Score(r.continue_class.precision, r.continue_class.recall);
  r.macro_f1 = 0.5 * (r.dropout_class.f1 + r.continue_class.f1);
  return r;
}

double RocAuc(std::span<const int> labels, std::span<const double> scores) {
  if (labels.size() != scores.size()) {
    throw std::invalid_argument("labels and scores differ in length");
  }
  CheckLabels(labels);
  const size_t n = labels.size();
  std::vector<size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(),
            [&](size_t a, size_t b) { return scores[a] < scores[b]; });
  double rank_sum = 0.0;
  int64_t pos = 0;
  for (size_t i = 0; i < n;) {
    size_t j = i;
    while (j < n && scores[order[j]] == scores[order[i]]) ++j;
    const double mid_rank = 0.5 * static_cast<double>(i + 1 + j);  // ranks i+1..j
    for (size_t k = i; k < j; ++k) {
      if (labels[order[k]]) {
        rank_sum += mid_rank;
        ++pos;
      }
    }
    i = j;
  }
  const int64_t neg = static_cast<int64_t>(n) - pos;
  if (pos == 0 || neg == 0) throw std::invalid_argument("AUC needs both classes present");
  const double p = static_cast<double>(pos);
  return (rank_sum - p * (p + 1.0) / 2.0) / (p * static_cast<double>(neg));
}

std::vector<double> CorrectorConfig::DefaultGrid() {
  std::vector<double> grid;
  for (int k = 0; k <= 6; ++k) grid.push_back((50 + 5 * k) / 100.0);
  return grid;
}

void CorrectorConfig::Validate() const {
  if (!(threshold >= 0.0 && threshold <= 1.0)) {
    throw std::invalid_argument("corrector threshold must lie in [0, 1]");
  }
  if (grid.empty()) throw std::invalid_argument("threshold grid is empty");
  for (size_t i = 0; i < grid.size(); ++i) {
    if (!(grid[i] >= 0.0 && grid[i] <= 1.0)) {
      throw std::invalid_argument("threshold grid values must lie in [0, 1]");
    }
    if (i > 0 && !(grid[i] > grid[i - 1])) {
      throw std::invalid_argument("threshold grid must be strictly increasing");
    }
  }
}

std::vector<int> ApplyCorrector(std::span<const double> probs, double threshold) {
  std::vector<int> out;
  out.reserve(probs.size());
  for (double p : probs) {
    if (!(p >= 0.0 && p <= 1.0)) throw std::invalid_argument("probabilities must lie in [0, 1]");
    out.push_back(p >= threshold ? 1 : 0);
  }
  return out;
}

EvalReport Evaluate(std::span<const int> labels, std::span<const double> probs,
                    double threshold) {
  const auto predicted = ApplyCorrector(probs, threshold);
  EvalReport r = ComputeMetrics(Confusion(labels, predicted));
  r.threshold = threshold;
  const bool has_pos = std::find(labels.begin(), labels.end(), 1) != labels.end();
  const bool has_neg = std::find(labels.begin(), labels.end(), 0) != labels.end();
  if (has_pos && has_neg) r.auc = RocAuc(labels, probs);
  return r;
}

std::vector<EvalReport> ThresholdSweep(std::span<const double> probs,
                                       std::span<const int> labels,
                                       const std::vector<double>& grid) {
  CorrectorConfig cfg;
  cfg.grid = grid;
  cfg.Validate();
  std::vector<EvalReport> out;
  out.reserve(grid.size());
  for (double t : grid) out.push_back(Evaluate(labels, probs, t));
  return out;
}

json EvalReport::ToJson() const {
  return {{"confusion", {{"tp", cm.tp}, {"tn", cm.tn}, {"fp", cm.fp}, {"fn", cm.fn}}},
          {"accuracy", accuracy},
          {"specificity", specificity},
          {"continue", ClassToJson(continue_class)},
          {"dropout", ClassToJson(dropout_class)},
          {"macro_f1", macro_f1},
          {"auc", auc ? json(*auc) : json(nullptr)},
          {"threshold", threshold},
          {"metadata", metadata}};
}

EvalReport EvalReport::FromJson(const json& j) {
  try {
    EvalReport r;
    const json& c = j.at("confusion");
    r.cm = {c.at("tp").get<int64_t>(), c.at("tn").get<int64_t>(), c.at("fp").get<int64_t>(),
            c.at("fn").get<int64_t>()};
    r.accuracy = j.at("accuracy").get<double>();
    r.specificity = j.at("specificity").get<double>();
    r.continue_class = ClassFromJson(j.at("continue"));
    r.dropout_class = ClassFromJson(j.at("dropout"));
    r.macro_f1 = j.at("macro_f1").get<double>();
    if (!j.at("auc").is_null()) r.auc = j.at("auc").get<double>();
    r.threshold = j.at("threshold").get<double>();
    r.metadata = j.value("metadata", json::object());
    return r;
  } catch (const json::exception& e) {
    throw DataError(std::string("malformed report: ") + e.what());
  }
}

std::string Fixed2(double v) {
  std::ostringstream os;
  os << std::fixed << std::setprecision(2) << v;
  return os.str();
}

std::string MetricsMarkdown(const std::vector<std::string>& lead_headers,
                            const std::vector<ReportRow>& rows) {
  std::ostringstream os;
  os << "|";
  for (const auto& h : lead_headers) os << ' ' << h << " |";
  os << " Accuracy | Continue Recall | Continue Precision | Dropout Recall | "
        "Dropout Precision | F1-Score | AUC |\n|";
  for (size_t k = 0; k < lead_headers.size(); ++k) os << "---|";
  os << "---:|---:|---:|---:|---:|---:|---:|\n";
  for (const auto& row : rows) {
    os << "|";
    for (const auto& cell : row.lead) os << ' ' << cell << " |";
    const EvalReport& r = *row.report;
    os << ' ' << Fixed2(r.accuracy) << " | " << Fixed2(r.continue_class.recall) << " | "
       << Fixed2(r.continue_class.precision) << " | " << Fixed2(r.dropout_class.recall) << " | "
       << Fixed2(r.dropout_class.precision) << " | " << Fixed2(r.macro_f1) << " | "
       << (r.auc ? Fixed2(*r.auc) : "-") << " |\n";
  }
  return os.str();
}

std::string SweepMarkdown(const std::vector<EvalReport>& sweep) {
  std::vector<std::string> labels;
  labels.reserve(sweep.size());
  for (const auto& r : sweep) labels.push_back(Fixed2(r.threshold));
  std::vector<ReportRow> rows;
  for (size_t i = 0; i < sweep.size(); ++i) rows.push_back({{labels[i]}, &sweep[i]});
  return MetricsMarkdown({"Threshold"}, rows);
}

std::string SweepCsv(const std::vector<EvalReport>& sweep) {
  std::ostringstream os;
  os << "threshold,accuracy,continue_recall,continue_precision,dropout_recall,"
        "dropout_precision,macro_f1,auc,tp,tn,fp,fn\n";
  os << std::setprecision(17);
  for (const auto& r : sweep) {
    os << Fixed2(r.threshold) << ',' << r.accuracy << ',' << r.continue_class.recall << ','
       << r.continue_class.precision << ',' << r.dropout_class.recall << ','
       << r.dropout_class.precision << ',' << r.macro_f1 << ',';
    if (r.auc) os << *r.auc;
    os << ',' << r.cm.tp << ',' << r.cm.tn << ',' << r.cm.fp << ',' << r.cm.fn << '\n';
  }
  return os.str();
}

}  // namespace dropwatch
