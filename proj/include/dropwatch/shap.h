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

#ifndef DROPWATCH_SHAP_H_
#define DROPWATCH_SHAP_H_

#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "dropwatch/common.h"
#include "dropwatch/learners.h"
#include "json.hpp"

namespace dropwatch {

enum class OutputScale { kProbability, kLogOdds };
std::string_view OutputScaleName(OutputScale s);

struct ShapVector {
  std::vector<double> phi;
  // Mean model output over the background rows.
  double base_value = 0.0;
  OutputScale scale = OutputScale::kProbability;

  // base_value + sum(phi); equals ExplainedOutput for the explained row.
  double Total() const;
};

// The quantity the attributions add up to: the probability for trees,
// forests and tree-only ensembles, the log-odds margin for boosted models.
// Throws std::invalid_argument for an ensemble with a boosted member.
double ExplainedOutput(const TrainedModel& model, std::span<const double> x);
OutputScale ExplainedScale(const TrainedModel& model);

// Exact interventional Shapley values of one tree's output at x, averaged
// over `background` rows. `expected` receives the mean leaf value over the
// background.
std::vector<double> TreeShapSingle(const Tree& tree, std::span<const double> x,
                                   const DenseMatrix& background, double* expected = nullptr);

// Forests and tree ensembles average their trees (members); boosted models sum
// their trees on the log-odds scale. Throws std::invalid_argument for an
// empty background, width mismatch, or an ensemble with a boosted member.
ShapVector TreeShap(const TrainedModel& model, std::span<const double> x,
                    const DenseMatrix& background);

// One explanation per row of x. Rows are independent; `n_threads` workers
// produce identical results to the sequential loop.
std::vector<ShapVector> ExplainRows(const TrainedModel& model, const DenseMatrix& x,
                                    const DenseMatrix& background, int n_threads = 1);

// Up to n rows drawn without replacement (all rows, in order, if n >= rows).
DenseMatrix SampleBackground(const DenseMatrix& x, size_t n, uint64_t seed);

struct ImportanceEntry {
  std::string feature;
  double mean_abs_phi = 0.0;
};

struct ImportanceRanking {
  std::vector<ImportanceEntry> entries;  // descending, ties by name
  int k = 0;
  // Set when the requested k exceeded the feature count.
  std::string warning;

  nlohmann::json ToJson() const;
  std::string ToMarkdown() const;
};

// Mean |phi| per feature over `explanations`, top-k.
ImportanceRanking RankImportance(const std::vector<ShapVector>& explanations,
                                 const std::vector<std::string>& feature_names, int k);
ImportanceRanking GlobalImportance(const TrainedModel& model, const DenseMatrix& rows,
                                   const DenseMatrix& background, int k = 8,
                                   int n_threads = 1);

// CSV: row,<feature...>,base_value,output.
std::string ShapCsv(const std::vector<ShapVector>& explanations,
                    const std::vector<std::string>& feature_names);

}  // namespace dropwatch

#endif  // DROPWATCH_SHAP_H_
