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

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>
#include <string>

#include "cart.h"

namespace dropwatch {

double Tree::Predict(std::span<const double> x) const { return nodes[Leaf(x)].value; }

int Tree::Leaf(std::span<const double> x) const {
  int n = 0;
  while (!nodes[n].is_leaf()) {
    n = x[nodes[n].feature] <= nodes[n].threshold ? nodes[n].left : nodes[n].right;
  }
  return n;
}

int Tree::Depth() const {
  std::vector<int> depth(nodes.size(), 0);
  int best = 0;
  for (size_t i = 0; i < nodes.size(); ++i) {
    best = std::max(best, depth[i]);
    if (!nodes[i].is_leaf()) {
      depth[nodes[i].left] = depth[i] + 1;
      depth[nodes[i].right] = depth[i] + 1;
    }
  }
  return best;
}

int Tree::NumLeaves() const {
  return static_cast<int>(
      std::count_if(nodes.begin(), nodes.end(), [](const TreeNode& n) { return n.is_leaf(); }));
}

namespace internal {

std::vector<double> CheckTrainingInput(const DenseMatrix& x, std::span<const int> y,
                                       std::span<const double> weights) {
  if (x.cols() == 0) throw std::invalid_argument("training matrix has no columns");
  if (x.rows() == 0) throw std::invalid_argument("training matrix has no rows");
  if (y.size() != x.rows()) throw std::invalid_argument("labels and matrix rows differ in length");
  if (!weights.empty() && weights.size() != x.rows()) {
    throw std::invalid_argument("weights and matrix rows differ in length");
  }
  std::vector<double> w(weights.begin(), weights.end());
  if (w.empty()) w.assign(x.rows(), 1.0);
  double total = 0.0;
  for (size_t r = 0; r < w.size(); ++r) {
    if (!(w[r] >= 0.0) || !std::isfinite(w[r])) {
      throw std::invalid_argument("sample weights must be finite and non-negative");
    }
    if (y[r] != 0 && y[r] != 1) throw std::invalid_argument("labels must be 0 or 1");
    total += w[r];
  }
  if (!(total > 0.0)) throw std::invalid_argument("sample weights sum to zero");
  for (double v : x.data()) {
    if (!std::isfinite(v)) throw std::invalid_argument("training matrix has non-finite values");
  }
  return w;
}

namespace {

struct Candidate {
  int feature = -1;
  double threshold = 0.0;
  double gain = 0.0;
};

class CartBuilder {
 public:
  CartBuilder(const DenseMatrix& x, std::span<const int> y, std::span<const double> w,
              const TrainConfig& cfg, int max_features, Rng* rng)
      : x_(x), y_(y), w_(w), cfg_(cfg), max_features_(max_features), rng_(rng) {}

  Tree Build() {
    std::vector<size_t> rows;
    for (size_t r = 0; r < x_.rows(); ++r) {
      if (w_[r] > 0.0) rows.push_back(r);
    }
    Grow(rows, 0);
    return {std::move(nodes_)};
  }

 private:
  int Grow(std::vector<size_t>& rows, int depth) {
    double w0 = 0.0;
    double w1 = 0.0;
    for (size_t r : rows) (y_[r] ? w1 : w0) += w_[r];
    const int id = static_cast<int>(nodes_.size());
    nodes_.push_back({-1, 0.0, -1, -1, w1 / (w0 + w1)});
    const size_t min_leaf = static_cast<size_t>(std::max(cfg_.min_samples_leaf, 1));
    if (depth >= cfg_.max_depth || w0 == 0.0 || w1 == 0.0 || rows.size() < 2 * min_leaf) {
      return id;
    }
    const Candidate best = BestSplit(rows, w0, w1, min_leaf);
    if (best.feature < 0) return id;

    std::vector<size_t> left;
    std::vector<size_t> right;
    for (size_t r : rows) {
      (x_(r, best.feature) <= best.threshold ? left : right).push_back(r);
    }
    rows.clear();
    rows.shrink_to_fit();
    nodes_[id].feature = best.feature;
    nodes_[id].threshold = best.threshold;
    const int l = Grow(left, depth + 1);
    const int r = Grow(right, depth + 1);
    nodes_[id].left = l;
    nodes_[id].right = r;
    return id;
  }

  std::vector<int> CandidateFeatures() {
    const int d = static_cast<int>(x_.cols());
    std::vector<int> features(d);
    std::iota(features.begin(), features.end(), 0);
    if (rng_ == nullptr || max_features_ <= 0 || max_features_ >= d) return features;
    for (int t = 0; t < max_features_; ++t) {
      const int j = t + static_cast<int>(rng_->UniformIndex(static_cast<uint64_t>(d - t)));
      std::swap(features[t], features[j]);
    }
    features.resize(max_features_);
    std::sort(features.begin(), features.end());
    return features;
  }

  Candidate BestSplit(const std::vector<size_t>& rows, double p0, double p1, size_t min_leaf) {
    const double wp = p0 + p1;
    const double parent = (p0 * p0 + p1 * p1) / wp;
    Candidate best;
    best.gain = 1e-12 * wp;  // a split must beat this
    std::vector<std::pair<double, size_t>> order(rows.size());
    for (int f : CandidateFeatures()) {
      for (size_t i = 0; i < rows.size(); ++i) order[i] = {x_(rows[i], f), rows[i]};
      std::sort(order.begin(), order.end());
      double l0 = 0.0;
      double l1 = 0.0;
      for (size_t i = 0; i + 1 < order.size(); ++i) {
        const size_t r = order[i].second;
        (y_[r] ? l1 : l0) += w_[r];
        const double lo = order[i].first;
        const double hi = order[i + 1].first;
        if (!(lo < hi)) continue;
        if (i + 1 < min_leaf || order.size() - (i + 1) < min_leaf) continue;
        const double r0 = p0 - l0;
        const double r1 = p1 - l1;
        const double wl = l0 + l1;
        const double wr = r0 + r1;
        if (wl <= 0.0 || wr <= 0.0) continue;
        const double gain = (l0 * l0 + l1 * l1) / wl + (r0 * r0 + r1 * r1) / wr - parent;
        if (gain > best.gain) {
          double mid = lo + (hi - lo) / 2.0;
          if (!(mid < hi)) mid = lo;
          best = {f, mid, gain};
        }
      }
    }
    return best;
  }

  const DenseMatrix& x_;
  std::span<const int> y_;
  std::span<const double> w_;
  const TrainConfig& cfg_;
  int max_features_;
  Rng* rng_;
  std::vector<TreeNode> nodes_;
};

}  // namespace

Tree GrowCart(const DenseMatrix& x, std::span<const int> y, std::span<const double> w,
              const TrainConfig& cfg, int max_features, Rng* rng) {
  return CartBuilder(x, y, w, cfg, max_features, rng).Build();
}

}  // namespace internal

}  // namespace dropwatch
