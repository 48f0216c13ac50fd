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

#ifndef DROPWATCH_GENERATOR_H_
#define DROPWATCH_GENERATOR_H_

#include <cstdint>
#include <map>
#include <set>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "dropwatch/cohort.h"
#include "json.hpp"

namespace dropwatch::synth {

// Logistic dropout risk. Score of a student-year:
//   grade * z(grade_avg) + absences * z(log1p(total days missed))
//   + failures * failures_at_level + age * (age - expected age for level)
// scaled by signal_strength. The per-(level, year) intercept is solved so the
// mean probability hits the configured rate.
struct RiskModel {
  double grade = -1.2;
  double absences = 0.9;
  double failures = 0.6;
  double age = 0.5;
  // Multipliers applied in shift years (distribution shift).
  double shift_absence_factor = 2.5;
  double shift_grade_factor = 0.4;

  nlohmann::json ToJson() const;
  static RiskModel FromJson(const nlohmann::json& j);
};

struct GeneratorConfig {
  // Enrollment of the first year, spread over levels 1..12. Each later year
  // admits as many new level-1 students as the first year had.
  int n_students = 20000;
  std::vector<AcademicYear> years;
  // Keyed by (level, start year). Rates are fractions in [0, 1].
  std::map<std::pair<int, int>, double> level_year_dropout_rate;
  std::map<int, double> level_failure_rate;
  // Fraction of records whose cell is missing, per feature name.
  std::map<std::string, double> missingness;
  double signal_strength = 1.0;
  std::set<int> shift_years;
  uint64_t seed = 1;
  RiskModel risk;
  int schools_per_cycle = 40;
  int class_size = 30;

  // Defaults follow the published level x year dropout table for 2015-2020 and the
  // dataset's per-feature missing-value rates.
  static GeneratorConfig Default();

  // Throws std::invalid_argument on rates outside [0,1], missing table
  // cells, non-contiguous years, or dropout + failure > 1 for some cell.
  void Validate() const;

  double DropoutRate(LevelId level, AcademicYear year) const;

  nlohmann::json ToJson() const;
  // Fields absent from `j` keep their Default() values.
  static GeneratorConfig FromJson(const nlohmann::json& j);
};

// Published dropout rates by level (rows 1..12) and year (2015..2020), in
// percent.
const std::map<std::pair<int, int>, double>& PublishedLevelRates();

// Published missing-value percentages for the dataset features.
const std::map<std::string, double>& PublishedMissingness();

// Returns b with mean(sigmoid(b + s_i)) == target_rate (to 1e-9), by
// bisection on the strictly increasing map b -> mean probability.
// Requires 0 < target_rate < 1, non-empty finite scores.
double SolveIntercept(double target_rate, std::span<const double> risk_scores);

// Deterministic in config (including seed).
Cohort Generate(const GeneratorConfig& config);

}  // namespace dropwatch::synth

#endif  // DROPWATCH_GENERATOR_H_
