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

#ifndef DROPWATCH_SPLITS_H_
#define DROPWATCH_SPLITS_H_

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "dropwatch/design_matrix.h"
#include "json.hpp"

namespace dropwatch {

enum class SplitStrategy { kGuidedRandom, kBySchools, kByYears };

std::string_view SplitStrategyName(SplitStrategy s);
SplitStrategy ParseSplitStrategy(std::string_view name);

struct SplitResult {
  std::vector<size_t> train_rows;  // ascending
  std::vector<size_t> test_rows;   // ascending
  SplitStrategy strategy = SplitStrategy::kGuidedRandom;
  uint64_t seed = 0;
  // Strategy parameter: test fraction, school fraction or number of years.
  double parameter = 0.0;

  nlohmann::json ToJson() const;
  // Throws DataError on malformed documents.
  static SplitResult FromJson(const nlohmann::json& j);
  // Throws DataError unless train and test are disjoint, non-empty and cover
  // 0..n-1.
  void Validate(size_t n) const;
};

// Per anchor year, round-half-even(frac * n_year) rows go to test (kept in
// [1, n_year - 1]). Requires every year to have at least 2 rows.
SplitResult GuidedRandomSplit(std::span<const RowProvenance> rows, double frac,
                              uint64_t seed);
// round-half-even(fraction * n_schools) whole schools, at least one and at
// most n_schools - 1, drawn uniformly.
SplitResult SplitBySchools(std::span<const RowProvenance> rows, double test_fraction,
                           uint64_t seed);
// Rows of the latest `n_test_years` anchor years form the test set.
SplitResult SplitByYears(std::span<const RowProvenance> rows, int n_test_years);

inline SplitResult GuidedRandomSplit(const DesignMatrix& dm, double frac, uint64_t seed) {
  return GuidedRandomSplit(dm.provenance, frac, seed);
}
inline SplitResult SplitBySchools(const DesignMatrix& dm, double fraction, uint64_t seed) {
  return SplitBySchools(dm.provenance, fraction, seed);
}
inline SplitResult SplitByYears(const DesignMatrix& dm, int n_test_years) {
  return SplitByYears(dm.provenance, n_test_years);
}

}  // namespace dropwatch

#endif  // DROPWATCH_SPLITS_H_
