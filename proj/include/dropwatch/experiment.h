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

#ifndef DROPWATCH_EXPERIMENT_H_
#define DROPWATCH_EXPERIMENT_H_

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "dropwatch/cohort.h"
#include "dropwatch/generator.h"
#include "dropwatch/imbalance.h"
#include "dropwatch/learners.h"
#include "dropwatch/metrics.h"
#include "dropwatch/preprocess.h"
#include "dropwatch/splits.h"
#include "json.hpp"

namespace dropwatch {

inline constexpr int kExperimentConfigVersion = 1;
inline constexpr const char* kOutputRootEnv = "DROPWATCH_OUTPUT_ROOT";

struct SplitConfig {
  SplitStrategy strategy = SplitStrategy::kGuidedRandom;
  double test_fraction = 0.2;    // guided_random
  double school_fraction = 0.3;  // by_schools
  int test_years = 1;            // by_years

  nlohmann::json ToJson() const;
  static SplitConfig FromJson(const nlohmann::json& j);
};

// Applies the configured strategy to the row provenance.
SplitResult ApplySplit(const SplitConfig& cfg, std::span<const RowProvenance> rows,
                       uint64_t seed);

struct ExplainConfig {
  bool enabled = true;
  ModelKind learner = ModelKind::kGbdt;
  Treatment treatment = Treatment::kClassWeights;
  int background = 256;
  // Test rows explained for the global ranking.
  int rows = 200;
  int top_k = 8;

  nlohmann::json ToJson() const;
  static ExplainConfig FromJson(const nlohmann::json& j);
};

struct ExperimentConfig {
  uint64_t seed = 1;
  // Exactly one cohort source.
  std::optional<synth::GeneratorConfig> generator;
  std::string cohort_csv;
  prep::PreprocessPlan preprocess;
  std::vector<ModelKey> model_keys;
  SplitConfig split;
  std::vector<Treatment> treatments;
  std::vector<ModelKind> learners;
  LearnerConfigs learner_configs;
  int smote_k = 5;
  CorrectorConfig corrector;
  ExplainConfig explain;
  // Learner and treatment whose reports feed the horizon/history series and
  // the top-level threshold sweeps.
  ModelKind series_learner = ModelKind::kGbdt;
  Treatment series_treatment = Treatment::kClassWeights;
  std::string output_dir = "dropwatch-out";
  int jobs = 1;

  // Throws std::invalid_argument on inconsistent settings or a missing
  // cohort file.
  void Validate() const;
  nlohmann::json ToJson() const;
  // Relative cohort paths resolve against `base_dir`.
  static ExperimentConfig FromJson(const nlohmann::json& j, const std::string& base_dir = "");
  static ExperimentConfig Load(const std::string& path);

  // A small configuration covering every experiment shape: the imbalance
  // comparison on (1,1,6), horizons j = 1..3 and histories i = 1..3 at level 7.
  static ExperimentConfig Demo();
};

// `configured` if absolute; otherwise resolved against $DROPWATCH_OUTPUT_ROOT
// when set, else returned unchanged.
std::string ResolveOutputDir(const std::string& configured);

// Generates or reads the configured cohort. Generator seeds default to the
// experiment seed.
Cohort LoadCohort(const ExperimentConfig& cfg);

// Deterministic per-purpose seed derived from the experiment seed.
uint64_t StreamSeed(uint64_t seed, std::string_view purpose);

struct CellOutcome {
  ModelKey key;
  Treatment treatment;
  ModelKind learner;
  std::optional<EvalReport> report;
  std::vector<EvalReport> sweep;
  std::string error;  // non-empty when the cell failed
};

struct ExperimentResult {
  std::string output_dir;
  std::vector<CellOutcome> cells;
  std::vector<std::string> errors;

  int failed_cells() const;
};

// Runs every (key x treatment x learner) cell and writes the artifact tree
// under `output_dir`. Cell failures are logged and recorded; other cells
// proceed. Throws on failures that affect every cell (cohort loading, output
// directory creation).
ExperimentResult RunExperiment(const ExperimentConfig& cfg, const std::string& output_dir,
                               std::ostream* log = nullptr);

}  // namespace dropwatch

#endif  // DROPWATCH_EXPERIMENT_H_
