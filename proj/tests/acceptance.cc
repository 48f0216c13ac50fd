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

// Acceptance suite: one PASS/FAIL line per criterion, nonzero exit on any
// failure. Pass criterion numbers as arguments to run a subset.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "dropwatch/design_matrix.h"
#include "dropwatch/experiment.h"
#include "dropwatch/generator.h"
#include "dropwatch/imbalance.h"
#include "dropwatch/learners.h"
#include "dropwatch/metrics.h"
#include "dropwatch/shap.h"
#include "dropwatch/splits.h"
#include "oracles.h"

namespace dropwatch {
namespace {

namespace fs = std::filesystem;

// Collects the first few failure messages of a criterion.
class Check {
 public:
  void Expect(bool ok, const std::string& what) {
    if (ok) return;
    ++failures_;
    if (failures_ <= 5) messages_ << (failures_ > 1 ? "; " : "") << what;
  }
  void Note(const std::string& s) { notes_ << (notes_.tellp() > 0 ? ", " : "") << s; }
  bool ok() const { return failures_ == 0; }
  std::string Detail() const {
    if (ok()) return notes_.str();
    return std::to_string(failures_) + " failure(s): " + messages_.str();
  }

 private:
  int failures_ = 0;
  std::ostringstream messages_;
  std::ostringstream notes_;
};

std::string Num(double v, int precision = 4) {
  std::ostringstream os;
  os.precision(precision);
  os << v;
  return os.str();
}

bool Near(double a, double b, double tol) { return std::abs(a - b) <= tol; }

DenseMatrix Gaussian(Rng& rng, size_t rows, size_t cols) {
  DenseMatrix m(rows, cols);
  for (size_t r = 0; r < rows; ++r) {
    for (size_t c = 0; c < cols; ++c) m(r, c) = rng.Normal();
  }
  return m;
}

std::vector<int> Labels(Rng& rng, size_t n, double p1) {
  std::vector<int> y(n);
  for (auto& v : y) v = rng.Bernoulli(p1);
  y[0] = 0;
  y[1] = 1;
  return y;
}

// ---------------------------------------------------------------------------

void MetricsOracle(Check& c) {
  const EvalReport r = ComputeMetrics({4, 31, 4, 1});
  c.Expect(r.dropout_class.precision == 0.5, "precision " + Num(r.dropout_class.precision));
  c.Expect(r.dropout_class.recall == 0.8, "recall " + Num(r.dropout_class.recall));
  c.Expect(r.accuracy == 0.875, "accuracy " + Num(r.accuracy));
  const double base = MacroF1(0.99, 0.93, 0.28, 0.66);
  const double weighted = MacroF1(0.80, 0.98, 0.84, 0.29);
  c.Expect(Near(base, 0.68, 0.01), "baseline macro-F1 " + Num(base));
  c.Expect(Near(weighted, 0.65, 0.01), "class-weights macro-F1 " + Num(weighted));
  c.Note("macro-F1 " + Num(base, 3) + " / " + Num(weighted, 3));
}

void AucEquivalence(Check& c) {
  double worst = 0.0;
  for (uint64_t seed = 0; seed < 50; ++seed) {
    Rng rng(seed);
    const auto y = Labels(rng, 200, 0.1 + 0.8 * rng.Uniform01());
    std::vector<double> s(200);
    const uint64_t levels = seed % 3 == 0 ? 7 : 1000000007;  // some seeds with heavy ties
    for (double& v : s) v = static_cast<double>(rng.UniformIndex(levels)) / 7.0;
    const double diff = std::abs(RocAuc(y, s) - oracle::PairCountAuc(y, s));
    worst = std::max(worst, diff);
    c.Expect(diff <= 1e-12, "seed " + std::to_string(seed) + " diff " + Num(diff));
  }
  c.Note("max |diff| " + Num(worst, 3));
}

void TreeSplitOptimality(Check& c) {
  Rng rng(301);
  int ties = 0;
  for (int trial = 0; trial < 100; ++trial) {
    const size_t n = 2 + rng.UniformIndex(49);
    const size_t d = 1 + rng.UniformIndex(3);
    const uint64_t levels = 2 + rng.UniformIndex(9);
    DenseMatrix x(n, d);
    for (size_t r = 0; r < n; ++r) {
      for (size_t f = 0; f < d; ++f) {
        x(r, f) = trial % 2 ? static_cast<double>(rng.UniformIndex(levels)) : rng.Normal();
      }
    }
    const auto y = Labels(rng, n, 0.4);
    std::vector<double> w(n, 1.0);
    if (trial % 3 == 0) {
      for (double& v : w) v = 0.25 + rng.Uniform01();
    }
    TrainConfig cfg = DefaultTrainConfig(ModelKind::kTree);
    cfg.max_depth = 1;
    cfg.min_samples_leaf = 1 + static_cast<int>(rng.UniformIndex(3));
    const Tree t = TrainDecisionTree(x, y, w, cfg).trees[0];
    const auto best =
        oracle::ExhaustiveBestSplit(x, y, w, static_cast<size_t>(cfg.min_samples_leaf));
    double total = 0.0;
    for (double v : w) total += v;
    const std::string id = "instance " + std::to_string(trial);
    if (best.decrease <= 1e-12 * total) {
      c.Expect(t.nodes[0].is_leaf(), id + ": split where none improves");
      continue;
    }
    if (t.nodes[0].is_leaf()) {
      c.Expect(false, id + ": no split chosen");
      continue;
    }
    const double got = oracle::GiniDecrease(x, y, w, t.nodes[0].feature, t.nodes[0].threshold);
    c.Expect(Near(got, best.decrease, 1e-9 * total),
             id + ": decrease " + Num(got, 12) + " vs " + Num(best.decrease, 12));
    if (t.nodes[0].feature != best.feature || t.nodes[0].threshold != best.threshold) ++ties;
  }
  c.Note("100 instances, " + std::to_string(ties) + " resolved among tied optima");

  for (int trial = 0; trial < 50; ++trial) {
    const size_t n = 3 + rng.UniformIndex(45);
    DenseMatrix x(n, 3);
    for (size_t r = 0; r < n; ++r) {
      for (size_t f = 0; f < 3; ++f) x(r, f) = static_cast<double>(rng.UniformIndex(6));
    }
    const auto y = Labels(rng, n, 0.4);
    std::vector<double> w(n);
    DenseMatrix rx;
    std::vector<int> ry;
    for (size_t r = 0; r < n; ++r) {
      w[r] = static_cast<double>(rng.UniformIndex(4));  // zero drops the row
      for (int k = 0; k < static_cast<int>(w[r]); ++k) {
        rx.AppendRow(x.row(r));
        ry.push_back(y[r]);
      }
    }
    if (rx.rows() == 0) {
      w[0] = 1.0;
      rx.AppendRow(x.row(0));
      ry.push_back(y[0]);
    }
    TrainConfig cfg = DefaultTrainConfig(ModelKind::kTree);
    cfg.min_samples_leaf = 1;
    cfg.max_depth = 10;
    const bool same =
        TrainDecisionTree(x, y, w, cfg).trees[0] == TrainDecisionTree(rx, ry, {}, cfg).trees[0];
    c.Expect(same, "replication instance " + std::to_string(trial) + " differs");
  }
  c.Note("50 replication instances");
}

void GbdtDescent(Check& c) {
  Rng rng(401);
  size_t flat_rounds = 0;
  for (int ds = 0; ds < 20; ++ds) {
    const size_t n = 100 + rng.UniformIndex(400);
    const size_t d = 1 + rng.UniformIndex(6);
    const DenseMatrix x = Gaussian(rng, n, d);
    std::vector<int> y(n);
    const double noise = 0.05 + 0.4 * rng.Uniform01();
    for (size_t r = 0; r < n; ++r) {
      y[r] = (x(r, 0) + (d > 1 ? x(r, 1) * x(r, 1) - 1.0 : 0.0) > 0.3) != rng.Bernoulli(noise);
    }
    y[0] = 0;
    y[1] = 1;
    std::vector<double> w(n, 1.0);
    if (ds % 2) {
      for (size_t r = 0; r < n; ++r) w[r] = y[r] ? 4.0 : 0.5 + rng.Uniform01();
    }
    TrainConfig cfg = DefaultTrainConfig(ModelKind::kGbdt);
    cfg.n_trees = 50;
    cfg.learning_rate = 0.1;
    cfg.min_samples_leaf = 1 + static_cast<int>(rng.UniformIndex(20));
    std::vector<double> trace;
    const TrainedModel m = TrainGbdt(x, y, w, cfg, &trace);
    const std::string id = "dataset " + std::to_string(ds);
    c.Expect(trace.size() == 51, id + ": trace length " + std::to_string(trace.size()));
    for (size_t t = 1; t < trace.size(); ++t) {
      c.Expect(trace[t] <= trace[t - 1], id + ": round " + std::to_string(t) + " increased");
      flat_rounds += trace[t] == trace[t - 1];
    }
    // Recompute every prefix independently of the trainer's bookkeeping.
    TrainedModel prefix = m;
    double prev = 0.0;
    for (size_t t = 0; t <= m.trees.size(); ++t) {
      prefix.trees.assign(m.trees.begin(), m.trees.begin() + static_cast<long>(t));
      const double loss = oracle::MeanLogLoss(prefix, x, y, w);
      c.Expect(Near(loss, trace[t], 1e-10 * std::max(1.0, loss)),
               id + ": recomputed loss differs at round " + std::to_string(t));
      if (t > 0) {
        c.Expect(loss <= prev + 1e-12 * prev,
                 id + ": recomputed loss rose at round " + std::to_string(t));
      }
      prev = loss;
    }
  }
  c.Note("20 datasets x 50 rounds, " + std::to_string(flat_rounds) + " flat rounds");
}

void SmoteGeometry(Check& c) {
  Rng rng(501);
  size_t synthetic = 0;
  for (int trial = 0; trial < 20; ++trial) {
    const size_t n = 60 + rng.UniformIndex(200);
    const size_t d = 1 + rng.UniformIndex(5);
    DenseMatrix x = Gaussian(rng, n, d);
    if (trial % 4 == 0) {  // duplicated minority points
      for (size_t r = 1; r < n; r += 5) {
        for (size_t f = 0; f < d; ++f) x(r, f) = x(r - 1, f);
      }
    }
    const auto y = Labels(rng, n, 0.05 + 0.3 * rng.Uniform01());
    const int k = 1 + static_cast<int>(rng.UniformIndex(5));
    std::vector<size_t> minority;
    for (size_t r = 0; r < n; ++r) {
      if (y[r]) minority.push_back(r);
    }
    const size_t n1 = minority.size();
    const size_t n0 = n - n1;
    if (n1 < 2 || n1 >= n0) continue;
    const int kk = std::min<int>(k, static_cast<int>(n1) - 1);
    const std::string id = "trial " + std::to_string(trial);
    const ResampleResult s = Smote(x, y, kk, static_cast<uint64_t>(trial));
    size_t c1 = 0;
    for (int v : s.y) c1 += v;
    c.Expect(c1 == n0 && s.y.size() == 2 * n0, id + ": SMOTE counts unequal");
    for (size_t i = 0; i < s.y.size(); ++i) {
      if (s.origin[i] != RowOrigin::kSynthetic) continue;
      ++synthetic;
      const size_t a = s.source[i];
      const size_t b = s.neighbor[i];
      c.Expect(y[a] == 1 && y[b] == 1 && s.y[i] == 1, id + ": synthetic row outside minority");
      // kNN oracle: b must be no farther than the kk-th nearest other minority row.
      std::vector<double> dist;
      for (size_t m : minority) {
        if (m == a) continue;
        double s2 = 0.0;
        for (size_t f = 0; f < d; ++f) s2 += (x(a, f) - x(m, f)) * (x(a, f) - x(m, f));
        dist.push_back(s2);
      }
      std::sort(dist.begin(), dist.end());
      double db = 0.0;
      for (size_t f = 0; f < d; ++f) db += (x(a, f) - x(b, f)) * (x(a, f) - x(b, f));
      c.Expect(b != a && db <= dist[static_cast<size_t>(kk) - 1], id + ": neighbor not in kNN");
      std::optional<double> lambda;
      for (size_t f = 0; f < d; ++f) {
        const double span = x(b, f) - x(a, f);
        if (span == 0.0) {
          c.Expect(s.x(i, f) == x(a, f), id + ": coordinate off a degenerate segment");
          continue;
        }
        const double l = (s.x(i, f) - x(a, f)) / span;
        if (lambda) {
          c.Expect(Near(l, *lambda, 1e-9), id + ": inconsistent lambda");
        } else {
          lambda = l;
        }
      }
      if (lambda) {
        c.Expect(*lambda >= -1e-12 && *lambda <= 1.0 + 1e-12, id + ": lambda outside [0,1]");
      }
    }

    const ResampleResult u = Undersample(x, y, static_cast<uint64_t>(trial));
    size_t u1 = 0;
    for (int v : u.y) u1 += v;
    c.Expect(u1 == n1 && u.y.size() == 2 * n1, id + ": undersample counts unequal");
    std::set<size_t> used;
    for (size_t i = 0; i < u.y.size(); ++i) {
      const size_t src = u.source[i];
      bool row_ok = src < n && y[src] == u.y[i] && used.insert(src).second;
      for (size_t f = 0; row_ok && f < d; ++f) row_ok = u.x(i, f) == x(src, f);
      c.Expect(row_ok, id + ": undersampled row is not a distinct original row");
    }
  }
  c.Note(std::to_string(synthetic) + " synthetic rows checked");
}

int HalfEven(double v) {
  const double fl = std::floor(v);
  const double frac = v - fl;
  if (frac > 0.5) return static_cast<int>(fl) + 1;
  if (frac < 0.5) return static_cast<int>(fl);
  return static_cast<int>(std::fmod(fl, 2.0) == 0.0 ? fl : fl + 1);
}

void SplitInvariants(Check& c) {
  for (uint64_t seed = 0; seed < 100; ++seed) {
    Rng rng(seed + 600);
    std::vector<RowProvenance> rows;
    std::map<int, int> per_year;
    const int n_schools = 3 + static_cast<int>(rng.UniformIndex(20));
    for (int year = 2015; year <= 2020; ++year) {
      const int count = 2 + static_cast<int>(rng.UniformIndex(200));
      per_year[year] = count;
      for (int i = 0; i < count; ++i) {
        rows.push_back({"s" + std::to_string(rows.size()), AcademicYear(year),
                        "S" + std::to_string(rng.UniformIndex(static_cast<uint64_t>(n_schools)))});
      }
    }
    Rng shuffle(seed);
    shuffle.Shuffle(rows);
    const std::string id = "seed " + std::to_string(seed);

    const SplitResult g = GuidedRandomSplit(rows, 0.2, seed);
    std::map<int, int> test_count;
    for (size_t r : g.test_rows) ++test_count[rows[r].anchor_year.start_year()];
    for (const auto& [year, n] : per_year) {
      const int want = std::clamp(HalfEven(0.2 * n), 1, n - 1);
      c.Expect(test_count[year] == want, id + ": year " + std::to_string(year) + " has " +
                                             std::to_string(test_count[year]) + " test rows, want " +
                                             std::to_string(want));
    }
    c.Expect(g.train_rows.size() + g.test_rows.size() == rows.size(), id + ": guided not a partition");

    const SplitResult s = SplitBySchools(rows, 0.3, seed);
    std::set<std::string> train_schools;
    for (size_t r : s.train_rows) train_schools.insert(rows[r].school_id);
    for (size_t r : s.test_rows) {
      c.Expect(!train_schools.count(rows[r].school_id), id + ": school on both sides");
    }
    c.Expect(!s.test_rows.empty() && !s.train_rows.empty(), id + ": empty school split side");
    c.Expect(s.train_rows.size() + s.test_rows.size() == rows.size(), id + ": school not a partition");

    const int test_years = 1 + static_cast<int>(seed % 3);
    const SplitResult t = SplitByYears(rows, test_years);
    int max_train = 0;
    int min_test = 10000;
    for (size_t r : t.train_rows) max_train = std::max(max_train, rows[r].anchor_year.start_year());
    for (size_t r : t.test_rows) min_test = std::min(min_test, rows[r].anchor_year.start_year());
    c.Expect(max_train < min_test && min_test == 2021 - test_years, id + ": year split not temporal");
  }
  c.Note("100 seeds x 3 strategies");
}

void Corrector(Check& c) {
  const std::vector<int> labels{1, 0, 0, 1, 1, 0, 1, 0};
  const std::vector<double> probs{0.96, 0.62, 0.65, 0.87, 0.91, 0.77, 0.65, 0.78};
  const double p50 = Evaluate(labels, probs, 0.50).dropout_class.precision;
  const double p70 = Evaluate(labels, probs, 0.70).dropout_class.precision;
  c.Expect(p50 == 0.5, "precision at 0.50 is " + Num(p50));
  c.Expect(Near(p70, 0.6, 1e-15), "precision at 0.70 is " + Num(p70));
  const auto grid = CorrectorConfig::DefaultGrid();
  c.Expect(grid.front() == 0.5 && grid.back() == 0.8, "grid does not span 0.50-0.80");
  Rng rng(701);
  for (int trial = 0; trial < 200; ++trial) {
    std::vector<double> p(1 + rng.UniformIndex(100));
    for (double& v : p) {
      v = trial % 2 ? rng.Uniform01() : static_cast<double>(rng.UniformIndex(21)) / 20.0;
    }
    std::vector<int> prev = ApplyCorrector(p, grid[0]);
    for (size_t g = 1; g < grid.size(); ++g) {
      const auto cur = ApplyCorrector(p, grid[g]);
      for (size_t i = 0; i < p.size(); ++i) {
        c.Expect(cur[i] <= prev[i], "flag set grew at " + Num(grid[g]));
      }
      prev = cur;
    }
  }
  c.Note("precision " + Num(p50) + " -> " + Num(p70));
}

void ShapExactness(Check& c) {
  Rng rng(801);
  const ModelKind kinds[] = {ModelKind::kTree, ModelKind::kForest, ModelKind::kGbdt};
  double worst = 0.0;
  size_t explanations = 0;
  for (int model = 0; model < 30; ++model) {
    const int d = 1 + static_cast<int>(rng.UniformIndex(10));
    const ModelKind kind = kinds[model % 3];
    TrainedModel m;
    m.kind = kind;
    for (int f = 0; f < d; ++f) m.feature_names.push_back("x" + std::to_string(f));
    const int n_trees = kind == ModelKind::kTree ? 1 : 1 + static_cast<int>(rng.UniformIndex(5));
    for (int t = 0; t < n_trees; ++t) {
      m.trees.push_back(oracle::RandomTree(rng, d, 2 + static_cast<int>(rng.UniformIndex(14)), 5,
                                           kind == ModelKind::kGbdt ? -1.0 : 0.0, 1.0));
    }
    if (kind == ModelKind::kGbdt) m.base_margin = rng.Normal();
    const DenseMatrix bg = oracle::IntegerMatrix(rng, 1 + rng.UniformIndex(10), d, 5);
    const DenseMatrix rows = oracle::IntegerMatrix(rng, 4, d, 5);
    for (size_t r = 0; r < rows.rows(); ++r) {
      const ShapVector s = TreeShap(m, rows.row(r), bg);
      const auto want = oracle::BruteForceShap(
          [&](std::span<const double> v) { return ExplainedOutput(m, v); }, rows.row(r), bg);
      for (int f = 0; f < d; ++f) {
        const double diff = std::abs(s.phi[f] - want[f]);
        worst = std::max(worst, diff);
        c.Expect(diff <= 1e-9, "model " + std::to_string(model) + " feature " +
                                   std::to_string(f) + " diff " + Num(diff));
      }
      c.Expect(Near(s.Total(), ExplainedOutput(m, rows.row(r)), 1e-9),
               "model " + std::to_string(model) + ": local accuracy");
      ++explanations;
    }
  }
  // Local accuracy on trained models of every explainable kind.
  const DenseMatrix x = Gaussian(rng, 400, 6);
  std::vector<int> y(400);
  for (size_t r = 0; r < 400; ++r) y[r] = x(r, 0) - x(r, 2) + 0.5 * rng.Normal() > 0;
  LearnerConfigs cfg;
  cfg.forest.n_trees = 10;
  cfg.gbdt.n_trees = 30;
  const std::vector<std::string> names{"a", "b", "c", "d", "e", "f"};
  const DenseMatrix bg = SampleBackground(x, 50, 3);
  std::vector<TrainedModel> trained;
  for (ModelKind k : {ModelKind::kTree, ModelKind::kForest, ModelKind::kGbdt}) {
    trained.push_back(TrainModel(k, x, y, {}, cfg, names));
  }
  trained.push_back(MakeEnsemble({trained[0], trained[1]}));
  for (const TrainedModel& m : trained) {
    const auto ex = ExplainRows(m, x.SelectRows(std::vector<size_t>{0, 1, 2, 3, 4, 5, 6, 7}), bg);
    for (size_t r = 0; r < ex.size(); ++r) {
      c.Expect(Near(ex[r].Total(), ExplainedOutput(m, x.row(r)), 1e-9),
               std::string(ModelKindName(m.kind)) + ": local accuracy");
      ++explanations;
    }
  }
  c.Note("30 random models, max |diff| " + Num(worst, 3) + ", " + std::to_string(explanations) +
         " explanations locally accurate");
}

void GeneratorCalibration(Check& c) {
  synth::GeneratorConfig cfg = synth::GeneratorConfig::Default();
  cfg.n_students = 100000;
  cfg.seed = 2024;
  for (const auto& [cell, pct] : synth::PublishedLevelRates()) {
    const double configured = cfg.level_year_dropout_rate.at(cell) * 100.0;
    c.Expect(Near(configured, pct, 1e-9), "default rate for level " + std::to_string(cell.first) +
                                              " differs from the published table");
  }
  const Cohort cohort = synth::Generate(cfg);
  const RateTable t = DropoutRateTable(cohort, RateGrouping::kLevel);
  double worst = 0.0;
  int cells = 0;
  for (const auto& [cell, rate] : cfg.level_year_dropout_rate) {
    const RateCell* got = t.Find(std::to_string(cell.first), AcademicYear(cell.second));
    if (got == nullptr) {
      c.Expect(false, "no records for level " + std::to_string(cell.first) + " in " +
                          std::to_string(cell.second));
      continue;
    }
    const double diff = std::abs(got->percent() - rate * 100.0);
    worst = std::max(worst, diff);
    ++cells;
    c.Expect(diff <= 0.5, "level " + std::to_string(cell.first) + " year " +
                              std::to_string(cell.second) + ": " + Num(got->percent()) + "% vs " +
                              Num(rate * 100.0) + "%");
  }
  double worst_missing = 0.0;
  for (const auto& [name, pct] : synth::PublishedMissingness()) {
    const auto f = cohort.schema().IndexOf(name);
    if (!f) {
      c.Expect(false, "schema lacks " + name);
      continue;
    }
    size_t missing = 0;
    for (const auto& rec : cohort.records()) missing += !rec.features[*f].has_value();
    const double got = 100.0 * static_cast<double>(missing) / static_cast<double>(cohort.size());
    worst_missing = std::max(worst_missing, std::abs(got - pct));
    c.Expect(std::abs(got - pct) <= 1.0, name + ": " + Num(got) + "% missing vs " + Num(pct) + "%");
  }
  c.Note(std::to_string(cells) + " level x year cells, max |diff| " + Num(worst, 3) +
         " pp; missingness max |diff| " + Num(worst_missing, 3) + " pp");
}

void DirectionalReplication(Check& c) {
  ExperimentConfig cfg;
  cfg.seed = 1;
  synth::GeneratorConfig g = synth::GeneratorConfig::Default();
  g.n_students = 100000;
  g.signal_strength = 1.5;
  for (const auto& year : g.years) g.level_year_dropout_rate[{6, year.start_year()}] = 0.07;
  cfg.generator = g;
  cfg.model_keys = {ModelKey(1, 1, LevelId(6))};
  cfg.treatments = {Treatment::kBaseline, Treatment::kClassWeights, Treatment::kUndersample};
  cfg.learners = {ModelKind::kGbdt};
  cfg.explain.enabled = false;
  cfg.jobs = 3;
  const fs::path out = fs::temp_directory_path() / "dropwatch_acceptance_replication";
  fs::remove_all(out);
  const ExperimentResult result = RunExperiment(cfg, out.string());
  fs::remove_all(out);
  std::map<Treatment, const CellOutcome*> cell;
  for (const auto& co : result.cells) {
    c.Expect(co.error.empty() && co.report.has_value(),
             std::string(TreatmentName(co.treatment)) + " failed: " + co.error);
    if (co.report) cell[co.treatment] = &co;
  }
  if (cell.size() != 3) return;
  const EvalReport& base = *cell[Treatment::kBaseline]->report;
  const EvalReport& cw = *cell[Treatment::kClassWeights]->report;
  const EvalReport& under = *cell[Treatment::kUndersample]->report;
  c.Expect(cw.dropout_class.recall >= 0.70, "class-weights recall " + Num(cw.dropout_class.recall));
  c.Expect(under.dropout_class.recall >= 0.70,
           "undersample recall " + Num(under.dropout_class.recall));
  c.Expect(base.dropout_class.recall <= 0.50, "baseline recall " + Num(base.dropout_class.recall));
  c.Expect(cw.auc && *cw.auc >= 0.75, "class-weights AUC " + Num(cw.auc.value_or(0.0)));
  const auto& sweep = cell[Treatment::kClassWeights]->sweep;
  c.Expect(sweep.size() == 7, "sweep has " + std::to_string(sweep.size()) + " thresholds");
  std::string prec_series, rec_series;
  for (size_t i = 0; i < sweep.size(); ++i) {
    prec_series += (i ? " " : "") + Num(sweep[i].dropout_class.precision, 3);
    rec_series += (i ? " " : "") + Num(sweep[i].dropout_class.recall, 3);
    if (i == 0) continue;
    c.Expect(sweep[i].dropout_class.precision >= sweep[i - 1].dropout_class.precision,
             "precision fell at threshold " + Num(sweep[i].threshold));
    c.Expect(sweep[i].dropout_class.recall <= sweep[i - 1].dropout_class.recall,
             "recall rose at threshold " + Num(sweep[i].threshold));
  }
  double rate = 0.0;
  rate = static_cast<double>(base.cm.tp + base.cm.fn) / static_cast<double>(base.cm.total());
  c.Note("test dropout rate " + Num(100 * rate, 3) + "%; recall baseline " +
         Num(base.dropout_class.recall, 3) + ", class_weights " + Num(cw.dropout_class.recall, 3) +
         ", undersample " + Num(under.dropout_class.recall, 3) + "; AUC " +
         Num(cw.auc.value_or(0.0), 3) + "; sweep precision [" + prec_series + "] recall [" +
         rec_series + "]");
}

uint64_t TreeDigest(const fs::path& root, size_t* files) {
  std::vector<std::pair<std::string, std::string>> entries;
  for (const auto& e : fs::recursive_directory_iterator(root)) {
    if (!e.is_regular_file()) continue;
    std::ifstream in(e.path(), std::ios::binary);
    std::ostringstream ss;
    ss << in.rdbuf();
    entries.emplace_back(fs::relative(e.path(), root).generic_string(), ss.str());
  }
  std::sort(entries.begin(), entries.end());
  uint64_t h = 0xcbf29ce484222325ULL;
  auto mix = [&h](const std::string& s) {
    for (unsigned char ch : s) {
      h ^= ch;
      h *= 0x100000001b3ULL;
    }
    h ^= 0xff;
    h *= 0x100000001b3ULL;
  };
  for (const auto& [path, content] : entries) {
    mix(path);
    mix(content);
  }
  *files = entries.size();
  return h;
}

void EndToEndDeterminism(Check& c) {
  const ExperimentConfig cfg = ExperimentConfig::Demo();
  uint64_t digest[2];
  size_t files[2];
  for (int run = 0; run < 2; ++run) {
    const fs::path out =
        fs::temp_directory_path() / ("dropwatch_acceptance_demo_" + std::to_string(run));
    fs::remove_all(out);
    const ExperimentResult r = RunExperiment(cfg, out.string());
    c.Expect(r.failed_cells() == 0, "run " + std::to_string(run) + " had failed cells");
    digest[run] = TreeDigest(out, &files[run]);
    fs::remove_all(out);
  }
  c.Expect(digest[0] == digest[1] && files[0] == files[1], "artifact trees differ");
  char hex[17];
  std::snprintf(hex, sizeof(hex), "%016llx", static_cast<unsigned long long>(digest[0]));
  c.Note(std::to_string(files[0]) + " files, digest " + hex);
}

struct Criterion {
  int id;
  const char* name;
  double budget_s;
  std::function<void(Check&)> run;
};

}  // namespace
}  // namespace dropwatch

int main(int argc, char** argv) {
  using namespace dropwatch;
  const std::vector<Criterion> all = {
      {1, "metrics oracle", 1, MetricsOracle},
      {2, "AUC equals pair counting", 5, AucEquivalence},
      {3, "tree-split optimality", 30, TreeSplitOptimality},
      {4, "GBDT descent", 60, GbdtDescent},
      {5, "SMOTE geometry", 10, SmoteGeometry},
      {6, "split invariants", 10, SplitInvariants},
      {7, "prediction corrector", 1, Corrector},
      {8, "SHAP exactness", 120, ShapExactness},
      {9, "generator calibration", 60, GeneratorCalibration},
      {10, "directional replication", 600, DirectionalReplication},
      {11, "end-to-end determinism", 900, EndToEndDeterminism},
  };
  std::set<int> only;
  for (int i = 1; i < argc; ++i) only.insert(std::atoi(argv[i]));
  int failed = 0;
  for (const auto& cr : all) {
    if (!only.empty() && !only.count(cr.id)) continue;
    Check check;
    const auto start = std::chrono::steady_clock::now();
    try {
      cr.run(check);
    } catch (const std::exception& e) {
      check.Expect(false, std::string("exception: ") + e.what());
    }
    const double secs =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    const bool in_time = secs < cr.budget_s;
    if (!in_time) check.Expect(false, "over the " + Num(cr.budget_s) + " s budget");
    const bool ok = check.ok();
    failed += !ok;
    std::printf("%s  %2d %-26s %8.2fs / %4.0fs  %s\n", ok ? "PASS" : "FAIL", cr.id, cr.name,
                secs, cr.budget_s, check.Detail().c_str());
    std::fflush(stdout);
  }
  return failed == 0 ? 0 : 1;
}
