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

#ifndef DROPWATCH_METRICS_H_
#define DROPWATCH_METRICS_H_

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "json.hpp"

namespace dropwatch {

// Positive class = Dropout (label 1).
struct ConfusionMatrix {
  int64_t tp = 0;
  int64_t tn = 0;
  int64_t fp = 0;
  int64_t fn = 0;

  int64_t total() const { return tp + tn + fp + fn; }
  friend bool operator==(const ConfusionMatrix&, const ConfusionMatrix&) = default;
};

// Throws std::invalid_argument on length mismatch, empty input or labels
// other than 0/1.
ConfusionMatrix Confusion(std::span<const int> labels, std::span<const int> predicted);

struct ClassMetrics {
  double recall = 0.0;
  double precision = 0.0;
  double f1 = 0.0;
  // Set when the denominator was zero and the value defaulted to 0.
  bool recall_undefined = false;
  bool precision_undefined = false;
};

struct EvalReport {
  ConfusionMatrix cm;
  double accuracy = 0.0;
  double specificity = 0.0;
  ClassMetrics continue_class;
  ClassMetrics dropout_class;
  double macro_f1 = 0.0;
  // Absent when only one class occurs in the labels.
  std::optional<double> auc;
  double threshold = 0.5;
  // Free-form context: model key, learner, treatment, split.
  nlohmann::json metadata = nlohmann::json::object();

  nlohmann::json ToJson() const;
  static EvalReport FromJson(const nlohmann::json& j);
};

double F1Score(double precision, double recall);
// Mean of the two per-class F1 scores.
double MacroF1(double continue_recall, double continue_precision, double dropout_recall,
               double dropout_precision);

// All count-derived fields of a report. Throws std::invalid_argument if the
// matrix is empty.
EvalReport ComputeMetrics(const ConfusionMatrix& cm);

// Mann-Whitney AUC with mid-ranks for ties. Throws std::invalid_argument if a
// class is absent or lengths differ.
double RocAuc(std::span<const int> labels, std::span<const double> scores);

struct CorrectorConfig {
  double threshold = 0.5;
  std::vector<double> grid = DefaultGrid();

  // 0.50, 0.55, ..., 0.80.
  static std::vector<double> DefaultGrid();
  // Throws std::invalid_argument unless threshold is in [0,1] and the grid is
  // non-empty, strictly increasing and within [0,1].
  void Validate() const;
};

// Dropout iff p >= threshold.
std::vector<int> ApplyCorrector(std::span<const double> probs, double threshold);

// Confusion-derived metrics at `threshold`, plus the AUC of `probs`.
EvalReport Evaluate(std::span<const int> labels, std::span<const double> probs,
                    double threshold);

// One report per grid threshold, in grid order.
std::vector<EvalReport> ThresholdSweep(std::span<const double> probs,
                                       std::span<const int> labels,
                                       const std::vector<double>& grid);

// Markdown tables: one row per report, columns Accuracy, Continue
// recall/precision, Dropout recall/precision, F1-Score, AUC, preceded by the
// given leading columns.
struct ReportRow {
  std::vector<std::string> lead;
  const EvalReport* report;
};
std::string MetricsMarkdown(const std::vector<std::string>& lead_headers,
                            const std::vector<ReportRow>& rows);
std::string SweepMarkdown(const std::vector<EvalReport>& sweep);
std::string SweepCsv(const std::vector<EvalReport>& sweep);

// Two-decimal rendering used in the tables.
std::string Fixed2(double v);

}  // namespace dropwatch

#endif  // DROPWATCH_METRICS_H_
