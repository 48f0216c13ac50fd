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

#include "dropwatch/shap.h"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <iomanip>
#include <mutex>
#include <numeric>
#include <sstream>
#include <stdexcept>
#include <thread>

#include "dropwatch/csv.h"
#include "dropwatch/metrics.h"
#include "dropwatch/rng.h"

namespace dropwatch {

namespace {

bool HasBoostedMember(const TrainedModel& m) {
  if (m.kind == ModelKind::kGbdt) return true;
  for (const auto& mem : m.members) {
    if (HasBoostedMember(mem)) return true;
  }
  return false;
}

void RequireExplainable(const TrainedModel& m) {
  if (m.kind == ModelKind::kEnsemble && HasBoostedMember(m)) {
    throw std::invalid_argument(
        "cannot explain an ensemble with a boosted member: its probability is not additive "
        "over the member attributions; explain the members instead");
  }
}

// Walks one tree for a (foreground, background) pair. Features split on
// along the path are either taken from x (set A) or from z (set B).
class InterventionalWalker {
 public:
  InterventionalWalker(const Tree& tree, std::span<const double> x, size_t num_features,
                       std::vector<double>& phi)
      : tree_(tree), x_(x), state_(num_features, kNone), phi_(phi) {
    factorial_.push_back(1.0);
    for (int n = 1; n <= 128; ++n) factorial_.push_back(factorial_.back() * n);
  }

  // Adds the contributions for background row z; returns the leaf value of z.
  double Add(std::span<const double> z) {
    z_ = z;
    Walk(0);
    return tree_.nodes[tree_.Leaf(z)].value;
  }

 private:
  enum : uint8_t { kNone = 0, kFromX = 1, kFromZ = 2 };

  int Child(const TreeNode& n, double v) const { return v <= n.threshold ? n.left : n.right; }

  void Walk(int id) {
    const TreeNode& n = tree_.nodes[id];
    if (n.is_leaf()) {
      Leaf(n.value);
      return;
    }
    const int f = n.feature;
    if (state_[f] == kFromX) return Walk(Child(n, x_[f]));
    if (state_[f] == kFromZ) return Walk(Child(n, z_[f]));
    const int cx = Child(n, x_[f]);
    const int cz = Child(n, z_[f]);
    if (cx == cz) return Walk(cx);
    state_[f] = kFromX;
    from_x_.push_back(f);
    Walk(cx);
    from_x_.pop_back();
    state_[f] = kFromZ;
    from_z_.push_back(f);
    Walk(cz);
    from_z_.pop_back();
    state_[f] = kNone;
  }

  void Leaf(double v) {
    const size_t a = from_x_.size();
    const size_t b = from_z_.size();
    if (a + b == 0 || v == 0.0) return;
    const double total = factorial_.at(a + b);
    if (a > 0) {
      const double w = factorial_[a - 1] * factorial_[b] / total;
      for (int f : from_x_) phi_[f] += v * w;
    }
    if (b > 0) {
      const double w = factorial_[a] * factorial_[b - 1] / total;
      for (int f : from_z_) phi_[f] -= v * w;
    }
  }

  const Tree& tree_;
  std::span<const double> x_;
  std::span<const double> z_;
  std::vector<uint8_t> state_;
  std::vector<int> from_x_;
  std::vector<int> from_z_;
  std::vector<double>& phi_;
  std::vector<double> factorial_;
};

// Attribution of a model whose output is a weighted sum of tree outputs.
void AccumulateTrees(const std::vector<Tree>& trees, double scale, std::span<const double> x,
                     const DenseMatrix& background, std::vector<double>& phi, double& base) {
  for (const auto& t : trees) {
    double expected = 0.0;
    const auto p = TreeShapSingle(t, x, background, &expected);
    for (size_t f = 0; f < phi.size(); ++f) phi[f] += scale * p[f];
    base += scale * expected;
  }
}

void ExplainInto(const TrainedModel& model, std::span<const double> x,
                 const DenseMatrix& background, std::vector<double>& phi, double& base) {
  switch (model.kind) {
    case ModelKind::kTree:
    case ModelKind::kForest:
      AccumulateTrees(model.trees, 1.0 / static_cast<double>(model.trees.size()), x, background,
                      phi, base);
      break;
    case ModelKind::kGbdt:
      base += model.base_margin;
      AccumulateTrees(model.trees, 1.0, x, background, phi, base);
      break;
    case ModelKind::kEnsemble: {
      const double share = 1.0 / static_cast<double>(model.members.size());
      for (const auto& mem : model.members) {
        std::vector<double> p(phi.size(), 0.0);
        double b = 0.0;
        ExplainInto(mem, x, background, p, b);
        for (size_t f = 0; f < phi.size(); ++f) phi[f] += share * p[f];
        base += share * b;
      }
      break;
    }
  }
}

}  // namespace

std::string_view OutputScaleName(OutputScale s) {
  return s == OutputScale::kLogOdds ? "log_odds" : "probability";
}

double ShapVector::Total() const {
  double s = base_value;
  for (double p : phi) s += p;
  return s;
}

OutputScale ExplainedScale(const TrainedModel& model) {
  RequireExplainable(model);
  return model.kind == ModelKind::kGbdt ? OutputScale::kLogOdds : OutputScale::kProbability;
}

double ExplainedOutput(const TrainedModel& model, std::span<const double> x) {
  RequireExplainable(model);
  return model.kind == ModelKind::kGbdt ? model.Margin(x) : model.PredictRow(x);
}

std::vector<double> TreeShapSingle(const Tree& tree, std::span<const double> x,
                                   const DenseMatrix& background, double* expected) {
  if (background.rows() == 0) throw std::invalid_argument("background set is empty");
  if (background.cols() != x.size()) {
    throw std::invalid_argument("background width does not match the explained row");
  }
  std::vector<double> phi(x.size(), 0.0);
  InterventionalWalker walker(tree, x, x.size(), phi);
  double sum = 0.0;
  for (size_t r = 0; r < background.rows(); ++r) sum += walker.Add(background.row(r));
  const double n = static_cast<double>(background.rows());
  for (double& p : phi) p /= n;
  if (expected) *expected = sum / n;
  return phi;
}

ShapVector TreeShap(const TrainedModel& model, std::span<const double> x,
                    const DenseMatrix& background) {
  RequireExplainable(model);
  if (x.size() != model.num_features()) {
    throw std::invalid_argument("explained row has " + std::to_string(x.size()) +
                                " features, model expects " +
                                std::to_string(model.num_features()));
  }
  if (background.rows() == 0) throw std::invalid_argument("background set is empty");
  ShapVector out;
  out.scale = ExplainedScale(model);
  out.phi.assign(x.size(), 0.0);
  ExplainInto(model, x, background, out.phi, out.base_value);
  return out;
}

std::vector<ShapVector> ExplainRows(const TrainedModel& model, const DenseMatrix& x,
                                    const DenseMatrix& background, int n_threads) {
  RequireExplainable(model);
  std::vector<ShapVector> out(x.rows());
  const int threads = std::max(1, std::min<int>(n_threads, static_cast<int>(x.rows())));
  if (threads <= 1) {
    for (size_t r = 0; r < x.rows(); ++r) out[r] = TreeShap(model, x.row(r), background);
    return out;
  }
  std::atomic<size_t> next{0};
  std::exception_ptr error;
  std::mutex mu;
  std::vector<std::thread> pool;
  for (int t = 0; t < threads; ++t) {
    pool.emplace_back([&] {
      for (size_t r = next++; r < x.rows(); r = next++) {
        try {
          out[r] = TreeShap(model, x.row(r), background);
        } catch (...) {
          std::lock_guard<std::mutex> lock(mu);
          if (!error) error = std::current_exception();
        }
      }
    });
  }
  for (auto& th : pool) th.join();
  if (error) std::rethrow_exception(error);
  return out;
}

DenseMatrix SampleBackground(const DenseMatrix& x, size_t n, uint64_t seed) {
  if (n >= x.rows()) return x;
  std::vector<size_t> idx(x.rows());
  std::iota(idx.begin(), idx.end(), 0);
  Rng rng(seed);
  rng.Shuffle(idx);
  idx.resize(n);
  std::sort(idx.begin(), idx.end());
  return x.SelectRows(idx);
}

nlohmann::json ImportanceRanking::ToJson() const {
  nlohmann::json list = nlohmann::json::array();
  for (const auto& e : entries) {
    list.push_back({{"feature", e.feature}, {"mean_abs_phi", e.mean_abs_phi}});
  }
  nlohmann::json j = {{"k", k}, {"ranking", list}};
  if (!warning.empty()) j["warning"] = warning;
  return j;
}

std::string ImportanceRanking::ToMarkdown() const {
  double top = 0.0;
  for (const auto& e : entries) top = std::max(top, e.mean_abs_phi);
  std::ostringstream os;
  os << "| Rank | Feature | mean(abs(SHAP)) | |\n|---:|---|---:|---|\n";
  for (size_t i = 0; i < entries.size(); ++i) {
    const int bar = top > 0.0 ? static_cast<int>(std::lround(30.0 * entries[i].mean_abs_phi / top))
                              : 0;
    std::ostringstream value;
    value << std::setprecision(4) << entries[i].mean_abs_phi;
    os << "| " << i + 1 << " | " << entries[i].feature << " | " << value.str() << " | "
       << std::string(static_cast<size_t>(bar), '#') << " |\n";
  }
  return os.str();
}

ImportanceRanking RankImportance(const std::vector<ShapVector>& explanations,
                                 const std::vector<std::string>& feature_names, int k) {
  if (explanations.empty()) throw std::invalid_argument("no explanations to rank");
  if (k < 1) throw std::invalid_argument("k must be >= 1");
  const size_t d = feature_names.size();
  std::vector<double> mean(d, 0.0);
  for (const auto& e : explanations) {
    if (e.phi.size() != d) throw std::invalid_argument("explanation width mismatch");
    for (size_t f = 0; f < d; ++f) mean[f] += std::abs(e.phi[f]);
  }
  ImportanceRanking out;
  for (size_t f = 0; f < d; ++f) {
    out.entries.push_back({feature_names[f], mean[f] / static_cast<double>(explanations.size())});
  }
  std::sort(out.entries.begin(), out.entries.end(),
            [](const ImportanceEntry& a, const ImportanceEntry& b) {
              if (a.mean_abs_phi != b.mean_abs_phi) return a.mean_abs_phi > b.mean_abs_phi;
              return a.feature < b.feature;
            });
  out.k = k;
  if (static_cast<size_t>(k) > d) {
    out.warning = "k=" + std::to_string(k) + " exceeds the " + std::to_string(d) +
                  " features; returning all of them";
    out.k = static_cast<int>(d);
  }
  out.entries.resize(static_cast<size_t>(out.k));
  return out;
}

ImportanceRanking GlobalImportance(const TrainedModel& model, const DenseMatrix& rows,
                                   const DenseMatrix& background, int k, int n_threads) {
  if (rows.rows() == 0) throw std::invalid_argument("no rows to explain");
  return RankImportance(ExplainRows(model, rows, background, n_threads), model.feature_names, k);
}

std::string ShapCsv(const std::vector<ShapVector>& explanations,
                    const std::vector<std::string>& feature_names) {
  std::ostringstream os;
  std::vector<std::string> fields{"row"};
  fields.insert(fields.end(), feature_names.begin(), feature_names.end());
  fields.push_back("base_value");
  fields.push_back("output");
  csv::WriteRow(os, fields);
  for (size_t r = 0; r < explanations.size(); ++r) {
    fields.clear();
    fields.push_back(std::to_string(r));
    for (double p : explanations[r].phi) fields.push_back(csv::FormatDouble(p));
    fields.push_back(csv::FormatDouble(explanations[r].base_value));
    fields.push_back(csv::FormatDouble(explanations[r].Total()));
    csv::WriteRow(os, fields);
  }
  return os.str();
}

}  // namespace dropwatch
