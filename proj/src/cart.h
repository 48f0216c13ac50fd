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

#ifndef DROPWATCH_SRC_CART_H_
#define DROPWATCH_SRC_CART_H_

#include <span>
#include <vector>

#include "dropwatch/common.h"
#include "dropwatch/learners.h"
#include "dropwatch/rng.h"

namespace dropwatch::internal {

// Grows one weighted-Gini CART tree over the rows with positive weight.
// With `rng` set and 0 < max_features < d, each split considers a random
// subset of max_features features.
Tree GrowCart(const DenseMatrix& x, std::span<const int> y, std::span<const double> w,
              const TrainConfig& cfg, int max_features, Rng* rng);

// Checks shapes, labels and weights; returns the weights (ones if empty).
std::vector<double> CheckTrainingInput(const DenseMatrix& x, std::span<const int> y,
                                       std::span<const double> weights);

}  // namespace dropwatch::internal

#endif  // DROPWATCH_SRC_CART_H_
