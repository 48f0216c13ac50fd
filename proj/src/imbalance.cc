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

#include "dropwatch/imbalance.h"

#include <algorithm>
#include <limits>
#include <numeric>
#include <stdexcept>
#include <string>

#include "dropwatch/rng.h"

namespace dropwatch {

namespace {

constexpr size_t kNone = std::numeric_limits<size_t>::max();

struct ClassIndex {
  std::vector<size_t> rows[2];
  int minority = 1;
};

ClassIndex IndexClasses(std::span<const int> y) {
  ClassIndex c;
  for (size_t r = 0; r < y.size(); ++r) {
    if (y[r] != 0 && y[r] != 1) throw DataError("labels must be 0 or 1");
    c.rows[y[r]].push_back(r);
  }
  if (c.rows[0].empty() || c.rows[1].empty()) {
    throw DataError("both classes must be present (got " + std::to_string(c.rows[0].size()) +
                    " continue, " + std::to_string(c.rows[1].size()) + " dropout)");
  }
  c.minority = c.rows[1].size() <= c.rows[0].size() ? 1 : 0;
  return c;
}

void CheckShape(const DenseMatrix& x, std::span<const int> y) {
  if (x.rows() != y.size()) throw std::invalid_argument("matrix rows and labels differ in length");
}

void PushRow(ResampleResult& out, const DenseMatrix& x, size_t r, int label, RowOrigin origin) {
  out.x.AppendRow(x.row(r));
  out.y.push_back(label);
  out.origin.push_back(origin);
  out.source.push_back(r);
  out.neighbor.push_back(kNone);
  out.lambda.push_back(0.0);
}

}  // namespace

const std::vector<Treatment>& AllTreatments() {
  static const auto* all = new std::vector<Treatment>{
      Treatment::kBaseline, Treatment::kClassWeights, Treatment::kUndersample, Treatment::kSmote};
  return *all;
}

std::string_view TreatmentName(Treatment t) {
  switch (t) {
    case Treatment::kBaseline:
      return "baseline";
    case Treatment::kClassWeights:
      return "class_weights";
    case Treatment::kUndersample:
      return "undersample";
    case Treatment::kSmote:
      return "smote";
  }
  return "?";
}

Treatment ParseTreatment(std::string_view name) {
  for (Treatment t : AllTreatments()) {
    if (TreatmentName(t) == name) return t;
  }
  throw std::invalid_argument("unknown treatment '" + std::string(name) +
                              "' (expected baseline, class_weights, undersample or smote)");
}

std::string_view RowOriginName(RowOrigin o) {
  switch (o) {
    case RowOrigin::kOriginal:
      return "original";
    case RowOrigin::kSynthetic:
      return "synthetic";
    case RowOrigin::kRetained:
      return "retained";
  }
  return "?";
}

ClassWeights BalancedClassWeights(std::span<const int> y) {
  const ClassIndex c = IndexClasses(y);
  const double n = static_cast<double>(y.size());
  return {n / (2.0 * static_cast<double>(c.rows[0].size())),
          n / (2.0 * static_cast<double>(c.rows[1].size()))};
}

std::vector<double> SampleWeights(std::span<const int> y, const ClassWeights& w) {
  std::vector<double> out;
  out.reserve(y.size());
  for (int label : y) out.push_back(w.For(label));
  return out;
}

ResampleResult Undersample(const DenseMatrix& x, std::span<const int> y, uint64_t seed) {
  CheckShape(x, y);
  ClassIndex c = IndexClasses(y);
  const int minority = c.minority;
  const int majority = 1 - minority;
  std::vector<size_t> pool = c.rows[majority];
  Rng rng(seed);
  rng.Shuffle(pool);
  pool.resize(c.rows[minority].size());
  std::vector<bool> keep(y.size(), false);
  for (size_t r : pool) keep[r] = true;
  for (size_t r : c.rows[minority]) keep[r] = true;

  ResampleResult out;
  for (size_t r = 0; r < y.size(); ++r) {
    if (!keep[r]) continue;
    PushRow(out, x, r, y[r], y[r] == minority ? RowOrigin::kOriginal : RowOrigin::kRetained);
  }
  return out;
}

std::vector<size_t> NearestNeighbors(const DenseMatrix& x, std::span<const size_t> candidates,
                                     size_t i, int k) {
  const auto a = x.row(candidates[i]);
  std::vector<std::pair<double, size_t>> dist;
  dist.reserve(candidates.size());
  for (size_t j = 0; j < candidates.size(); ++j) {
    if (j == i) continue;
    const auto b = x.row(candidates[j]);
    double d = 0.0;
    for (size_t c = 0; c < a.size(); ++c) d += (a[c] - b[c]) * (a[c] - b[c]);
    dist.emplace_back(d, j);
  }
  const size_t kk = std::min<size_t>(static_cast<size_t>(std::max(k, 0)), dist.size());
  std::partial_sort(dist.begin(), dist.begin() + kk, dist.end());
  std::vector<size_t> out;
  out.reserve(kk);
  for (size_t t = 0; t < kk; ++t) out.push_back(dist[t].second);
  return out;
}

ResampleResult Smote(const DenseMatrix& x, std::span<const int> y, int k, uint64_t seed) {
  CheckShape(x, y);
  if (k < 1) throw std::invalid_argument("SMOTE k must be >= 1");
  const ClassIndex c = IndexClasses(y);
  const int minority = c.minority;
  const auto& pool = c.rows[minority];
  if (pool.size() < 2) throw DataError("SMOTE needs at least 2 minority rows");
  const int kk = std::min<int>(k, static_cast<int>(pool.size()) - 1);
  const size_t needed = c.rows[1 - minority].size() - pool.size();

  ResampleResult out;
  for (size_t r = 0; r < y.size(); ++r) PushRow(out, x, r, y[r], RowOrigin::kOriginal);

  std::vector<std::vector<size_t>> knn(pool.size());
  std::vector<double> synthetic(x.cols());
  Rng rng(seed);
  for (size_t s = 0; s < needed; ++s) {
    const size_t i = rng.UniformIndex(pool.size());
    if (knn[i].empty()) knn[i] = NearestNeighbors(x, pool, i, kk);
    const size_t j = knn[i][rng.UniformIndex(knn[i].size())];
    const double lambda = rng.Uniform01();
    const auto a = x.row(pool[i]);
    const auto b = x.row(pool[j]);
    for (size_t col = 0; col < synthetic.size(); ++col) {
      synthetic[col] = a[col] + lambda * (b[col] - a[col]);
    }
    out.x.AppendRow(synthetic);
    out.y.push_back(minority);
    out.origin.push_back(RowOrigin::kSynthetic);
    out.source.push_back(pool[i]);
    out.neighbor.push_back(pool[j]);
    out.lambda.push_back(lambda);
  }
  return out;
}

TreatedData ApplyTreatment(Treatment t, const DenseMatrix& x, std::span<const int> y,
                           int smote_k, uint64_t seed) {
  CheckShape(x, y);
  TreatedData out;
  switch (t) {
    case Treatment::kBaseline:
    case Treatment::kClassWeights:
      out.x = x;
      out.y.assign(y.begin(), y.end());
      out.origin.assign(y.size(), RowOrigin::kOriginal);
      out.weights = t == Treatment::kBaseline ? std::vector<double>(y.size(), 1.0)
                                              : SampleWeights(y, BalancedClassWeights(y));
      return out;
    case Treatment::kUndersample:
    case Treatment::kSmote: {
      ResampleResult r = t == Treatment::kUndersample ? Undersample(x, y, seed)
                                                      : Smote(x, y, smote_k, seed);
      out.x = std::move(r.x);
      out.y = std::move(r.y);
      out.origin = std::move(r.origin);
      out.weights.assign(out.y.size(), 1.0);
      return out;
    }
  }
  throw std::invalid_argument("unknown treatment");
}

}  // namespace dropwatch
