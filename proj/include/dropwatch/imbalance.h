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

#ifndef DROPWATCH_IMBALANCE_H_
#define DROPWATCH_IMBALANCE_H_

#include <cstdint>
#include <span>
#include <string_view>
#include <vector>

#include "dropwatch/cohort.h"
#include "dropwatch/common.h"

namespace dropwatch {

enum class Treatment { kBaseline, kClassWeights, kUndersample, kSmote };

// Report order: baseline, class weights, undersampling, oversampling.
const std::vector<Treatment>& AllTreatments();
std::string_view TreatmentName(Treatment t);
Treatment ParseTreatment(std::string_view name);

struct ClassWeights {
  double continue_weight = 1.0;
  double dropout_weight = 1.0;

  double For(int label) const { return label ? dropout_weight : continue_weight; }
};

// w_c = N / (2 N_c). Throws DataError if a class is absent.
ClassWeights BalancedClassWeights(std::span<const int> y);
std::vector<double> SampleWeights(std::span<const int> y, const ClassWeights& w);

enum class RowOrigin { kOriginal, kSynthetic, kRetained };
std::string_view RowOriginName(RowOrigin o);

struct ResampleResult {
  DenseMatrix x;
  std::vector<int> y;
  std::vector<RowOrigin> origin;
  // Input row of each output row; for synthetic rows, the base row a.
  std::vector<size_t> source;
  // Synthetic rows only: the neighbor b and the interpolation weight, so that
  // x = x[a] + lambda * (x[b] - x[a]). Unset (npos / 0) for other rows.
  std::vector<size_t> neighbor;
  std::vector<double> lambda;
};

// Keeps every minority row; draws as many majority rows without replacement.
// Minority rows are tagged original, kept majority rows retained.
ResampleResult Undersample(const DenseMatrix& x, std::span<const int> y, uint64_t seed);

// Adds synthetic minority rows until both classes have the majority count.
// k is clamped to minority_count - 1. Throws DataError if the minority class
// has fewer than 2 rows.
ResampleResult Smote(const DenseMatrix& x, std::span<const int> y, int k, uint64_t seed);

// Indices of the k nearest rows of `candidates` to candidates[i] (excluding
// i itself), by Euclidean distance; ties go to the lower candidate position.
std::vector<size_t> NearestNeighbors(const DenseMatrix& x, std::span<const size_t> candidates,
                                     size_t i, int k);

// Training rows after a treatment: resampled rows and per-row weights (class
// weights for kClassWeights, ones otherwise).
struct TreatedData {
  DenseMatrix x;
  std::vector<int> y;
  std::vector<double> weights;
  std::vector<RowOrigin> origin;
};

TreatedData ApplyTreatment(Treatment t, const DenseMatrix& x, std::span<const int> y,
                           int smote_k, uint64_t seed);

}  // namespace dropwatch

#endif  // DROPWATCH_IMBALANCE_H_
