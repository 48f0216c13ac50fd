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

#include "dropwatch/learners.h"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <mutex>
#include <stdexcept>
#include <thread>

#include "cart.h"

namespace dropwatch {

namespace {

constexpr double kMaxMargin = 30.0;

double Sigmoid(double f) { return 1.0 / (1.0 + std::exp(-f)); }

// log(1 + e^f) - y f, computed without overflow.
double LogLoss(double f, int y) {
  const double softplus = f > 0.0 ? f + std::log1p(std::exp(-f)) : std::log1p(std::exp(f));
  return softplus - (y ? f : 0.0);
}

void CheckWidth(const TrainedModel& m, size_t cols) {
  if (cols != m.num_features()) {
    throw std::invalid_argument("model expects " + std::to_string(m.num_features()) +
                                " features, input has " + std::to_string(cols));
  }
}

std::vector<std::string> DefaultNames(size_t d) {
  std::vector<std::string> names;
  names.reserve(d);
  for (size_t f = 0; f < d; ++f) names.push_back("f" + std::to_string(f));
  return names;
}

}  // namespace

std::string_view ModelKindName(ModelKind kind) {
  switch (kind) {
    case ModelKind::kTree:
      return "tree";
    case ModelKind::kForest:
      return "forest";
    case ModelKind::kGbdt:
      return "gbdt";
    case ModelKind::kEnsemble:
      return "ensemble";
  }
  return "?";
}

ModelKind ParseModelKind(std::string_view name) {
  for (ModelKind k : {ModelKind::kTree, ModelKind::kForest, ModelKind::kGbdt,
                      ModelKind::kEnsemble}) {
    if (ModelKindName(k) == name) return k;
  }
  throw std::invalid_argument("unknown learner '" + std::string(name) +
                              "' (expected tree, forest, gbdt or ensemble)");
}

void TrainConfig::Validate() const {
  if (max_depth < 1) throw std::invalid_argument("max_depth must be >= 1");
  if (min_samples_leaf < 1) throw std::invalid_argument("min_samples_leaf must be >= 1");
  if (n_trees < 0) throw std::invalid_argument("n_trees must be >= 0");
  if (!(learning_rate > 0.0 && learning_rate <= 1.0)) {
    throw std::invalid_argument("learning_rate must lie in (0, 1]");
  }
  if (n_bins < 2 || n_bins > 256) throw std::invalid_argument("n_bins must lie in [2, 256]");
  if (!(l2_lambda >= 0.0)) throw std::invalid_argument("l2_lambda must be >= 0");
  if (max_features < 0) throw std::invalid_argument("max_features must be >= 0");
  if (n_threads < 0) throw std::invalid_argument("n_threads must be >= 0");
}

nlohmann::json TrainConfig::ToJson() const {
  return {{"max_depth", max_depth},         {"min_samples_leaf", min_samples_leaf},
          {"n_trees", n_trees},             {"learning_rate", learning_rate},
          {"n_bins", n_bins},               {"l2_lambda", l2_lambda},
          {"max_features", max_features},   {"bootstrap", bootstrap},
          {"seed", seed}};
}

TrainConfig TrainConfig::FromJson(const nlohmann::json& j, const TrainConfig& defaults) {
  TrainConfig c = defaults;
  if (j.is_null()) return c;
  if (!j.is_object()) throw std::invalid_argument("learner config must be a JSON object");
  static const char* const kKnown[] = {"max_depth", "min_samples_leaf", "n_trees",
                                       "learning_rate", "n_bins", "l2_lambda",
                                       "max_features", "bootstrap", "seed", "n_threads"};
  for (const auto& [k, v] : j.items()) {
    if (std::find(std::begin(kKnown), std::end(kKnown), k) == std::end(kKnown)) {
      throw std::invalid_argument("unknown learner config field '" + k + "'");
    }
  }
  c.max_depth = j.value("max_depth", c.max_depth);
  c.min_samples_leaf = j.value("min_samples_leaf", c.min_samples_leaf);
  c.n_trees = j.value("n_trees", c.n_trees);
  c.learning_rate = j.value("learning_rate", c.learning_rate);
  c.n_bins = j.value("n_bins", c.n_bins);
  c.l2_lambda = j.value("l2_lambda", c.l2_lambda);
  c.max_features = j.value("max_features", c.max_features);
  c.bootstrap = j.value("bootstrap", c.bootstrap);
  c.seed = j.value("seed", c.seed);
  c.n_threads = j.value("n_threads", c.n_threads);
  c.Validate();
  return c;
}

TrainConfig DefaultTrainConfig(ModelKind kind) {
  TrainConfig c;
  switch (kind) {
    case ModelKind::kTree:
      c.max_depth = 8;
      c.min_samples_leaf = 10;
      c.n_trees = 1;
      break;
    case ModelKind::kForest:
      c.max_depth = 12;
      c.min_samples_leaf = 5;
      c.n_trees = 50;
      break;
    case ModelKind::kGbdt:
    case ModelKind::kEnsemble:
      c.max_depth = 6;
      c.min_samples_leaf = 20;
      c.n_trees = 200;
      c.learning_rate = 0.1;
      c.n_bins = 64;
      c.l2_lambda = 1.0;
      break;
  }
  return c;
}

double TrainedModel::Margin(std::span<const double> x) const {
  if (kind == ModelKind::kGbdt) {
    double f = base_margin;
    for (const auto& t : trees) f += t.Predict(x);
    return f;
  }
  return PredictRow(x);
}

double TrainedModel::PredictRow(std::span<const double> x) const {
  switch (kind) {
    case ModelKind::kTree:
      return trees.at(0).Predict(x);
    case ModelKind::kForest: {
      double s = 0.0;
      for (const auto& t : trees) s += t.Predict(x);
      return s / static_cast<double>(trees.size());
    }
    case ModelKind::kGbdt:
      return Sigmoid(Margin(x));
    case ModelKind::kEnsemble: {
      double s = 0.0;
      for (const auto& m : members) s += m.PredictRow(x);
      return s / static_cast<double>(members.size());
    }
  }
  return 0.0;
}

std::vector<double> TrainedModel::PredictProba(const DenseMatrix& x) const {
  CheckWidth(*this, x.cols());
  std::vector<double> p(x.rows());
  for (size_t r = 0; r < x.rows(); ++r) p[r] = PredictRow(x.row(r));
  return p;
}

std::vector<double> TrainedModel::PredictProba(const DenseMatrix& x,
                                               const std::vector<std::string>& names) const {
  if (names != feature_names) {
    CheckWidth(*this, names.size());
    for (size_t f = 0; f < names.size(); ++f) {
      if (names[f] != feature_names[f]) {
        throw std::invalid_argument("feature " + std::to_string(f) + " is '" + names[f] +
                                    "' but the model was trained on '" + feature_names[f] + "'");
      }
    }
  }
  return PredictProba(x);
}

TrainedModel TrainDecisionTree(const DenseMatrix& x, std::span<const int> y,
                               std::span<const double> weights, const TrainConfig& cfg) {
  cfg.Validate();
  const auto w = internal::CheckTrainingInput(x, y, weights);
  TrainedModel m;
  m.kind = ModelKind::kTree;
  m.feature_names = DefaultNames(x.cols());
  Rng rng(cfg.seed);
  m.trees.push_back(internal::GrowCart(x, y, w, cfg, cfg.max_features, &rng));
  m.metadata.config = cfg;
  m.metadata.seed = cfg.seed;
  return m;
}

TrainedModel TrainRandomForest(const DenseMatrix& x, std::span<const int> y,
                               std::span<const double> weights, const TrainConfig& cfg) {
  cfg.Validate();
  if (cfg.n_trees < 1) throw std::invalid_argument("a forest needs n_trees >= 1");
  const auto w = internal::CheckTrainingInput(x, y, weights);
  std::vector<size_t> positive;
  for (size_t r = 0; r < w.size(); ++r) {
    if (w[r] > 0.0) positive.push_back(r);
  }
  const int max_features =
      cfg.max_features > 0
          ? cfg.max_features
          : std::max(1, static_cast<int>(std::lround(std::sqrt(static_cast<double>(x.cols())))));

  TrainedModel m;
  m.kind = ModelKind::kForest;
  m.feature_names = DefaultNames(x.cols());
  m.trees.resize(cfg.n_trees);
  auto grow = [&](int t) {
    Rng rng(DeriveSeed(cfg.seed, static_cast<uint64_t>(t)));
    std::vector<double> bw;
    if (cfg.bootstrap) {
      bw.assign(w.size(), 0.0);
      for (size_t k = 0; k < positive.size(); ++k) {
        const size_t r = positive[rng.UniformIndex(positive.size())];
        bw[r] += w[r];
      }
    } else {
      bw = w;
    }
    m.trees[t] = internal::GrowCart(x, y, bw, cfg, max_features, &rng);
  };

  const int threads = std::min(cfg.n_threads == 0
                                   ? static_cast<int>(std::max(1u, std::thread::hardware_concurrency()))
                                   : cfg.n_threads,
                               cfg.n_trees);
  if (threads <= 1) {
    for (int t = 0; t < cfg.n_trees; ++t) grow(t);
  } else {
    std::atomic<int> next{0};
    std::exception_ptr error;
    std::mutex error_mu;
    std::vector<std::thread> pool;
    for (int k = 0; k < threads; ++k) {
      pool.emplace_back([&] {
        for (int t = next++; t < cfg.n_trees; t = next++) {
          try {
            grow(t);
          } catch (...) {
            std::lock_guard<std::mutex> lock(error_mu);
            if (!error) error = std::current_exception();
          }
        }
      });
    }
    for (auto& th : pool) th.join();
    if (error) std::rethrow_exception(error);
  }
  m.metadata.config = cfg;
  m.metadata.seed = cfg.seed;
  return m;
}

namespace {

// Features quantized into at most n_bins bins. upper[f][b] is the largest
// training value of bin b, so "bin <= b" is the same as "x <= upper[f][b]".
struct BinnedData {
  size_t rows = 0;
  size_t cols = 0;
  std::vector<std::vector<double>> upper;
  std::vector<size_t> offset;  // histogram offset per feature
  std::vector<uint8_t> bins;   // row-major
  size_t total_bins = 0;
};

std::vector<double> WeightedQuantileEdges(std::vector<std::pair<double, double>> vw,
                                          int n_bins) {
  std::sort(vw.begin(), vw.end());
  std::vector<std::pair<double, double>> uniq;
  for (const auto& [v, w] : vw) {
    if (!uniq.empty() && uniq.back().first == v) {
      uniq.back().second += w;
    } else {
      uniq.emplace_back(v, w);
    }
  }
  std::vector<double> edges;
  if (static_cast<int>(uniq.size()) <= n_bins) {
    for (const auto& [v, w] : uniq) edges.push_back(v);
    return edges;
  }
  double total = 0.0;
  for (const auto& [v, w] : uniq) total += w;
  double cum = 0.0;
  int k = 1;
  for (const auto& [v, w] : uniq) {
    cum += w;
    bool placed = false;
    while (k < n_bins && cum >= total * k / n_bins) {
      ++k;
      placed = true;
    }
    if (placed && (edges.empty() || edges.back() < v)) edges.push_back(v);
  }
  if (edges.empty() || edges.back() < uniq.back().first) edges.push_back(uniq.back().first);
  return edges;
}

BinnedData BinFeatures(const DenseMatrix& x, std::span<const size_t> rows,
                       std::span<const double> w, int n_bins) {
  BinnedData b;
  b.rows = rows.size();
  b.cols = x.cols();
  b.upper.resize(b.cols);
  b.offset.resize(b.cols);
  b.bins.resize(b.rows * b.cols);
  std::vector<std::pair<double, double>> vw(rows.size());
  for (size_t f = 0; f < b.cols; ++f) {
    for (size_t i = 0; i < rows.size(); ++i) vw[i] = {x(rows[i], f), w[rows[i]]};
    b.upper[f] = WeightedQuantileEdges(vw, n_bins);
    b.offset[f] = b.total_bins;
    b.total_bins += b.upper[f].size();
    const auto& up = b.upper[f];
    for (size_t i = 0; i < rows.size(); ++i) {
      auto it = std::lower_bound(up.begin(), up.end(), x(rows[i], f));
      size_t bin = static_cast<size_t>(it - up.begin());
      if (bin >= up.size()) bin = up.size() - 1;
      b.bins[i * b.cols + f] = static_cast<uint8_t>(bin);
    }
  }
  return b;
}

class GbdtTreeBuilder {
 public:
  GbdtTreeBuilder(const BinnedData& data, const std::vector<double>& g,
                  const std::vector<double>& h, const TrainConfig& cfg)
      : data_(data), g_(g), h_(h), cfg_(cfg) {}

  // Grows a tree with leaf values -G/(H + lambda) (unscaled). `leaf_rows[k]`
  // lists the rows of leaf node `leaf_nodes[k]`.
  Tree Grow(std::vector<int>* leaf_nodes, std::vector<std::vector<uint32_t>>* leaf_rows) {
    nodes_.clear();
    leaf_nodes_ = leaf_nodes;
    leaf_rows_ = leaf_rows;
    std::vector<uint32_t> rows(data_.rows);
    for (size_t i = 0; i < rows.size(); ++i) rows[i] = static_cast<uint32_t>(i);
    Build(std::move(rows), 0);
    return {std::move(nodes_)};
  }

 private:
  struct Split {
    int feature = -1;
    int bin = -1;
    double gain = 0.0;
  };

  int Build(std::vector<uint32_t> rows, int depth) {
    double gsum = 0.0;
    double hsum = 0.0;
    for (uint32_t r : rows) {
      gsum += g_[r];
      hsum += h_[r];
    }
    const int id = static_cast<int>(nodes_.size());
    const double denom = hsum + cfg_.l2_lambda;
    nodes_.push_back({-1, 0.0, -1, -1, denom > 0.0 ? -gsum / denom : 0.0});
    const size_t min_leaf = static_cast<size_t>(cfg_.min_samples_leaf);
    Split best;
    if (depth < cfg_.max_depth && rows.size() >= 2 * min_leaf) best = FindSplit(rows, gsum, hsum);
    if (best.feature < 0) {
      leaf_nodes_->push_back(id);
      leaf_rows_->push_back(std::move(rows));
      return id;
    }
    std::vector<uint32_t> left;
    std::vector<uint32_t> right;
    const size_t d = data_.cols;
    for (uint32_t r : rows) {
      (data_.bins[r * d + best.feature] <= best.bin ? left : right).push_back(r);
    }
    rows.clear();
    rows.shrink_to_fit();
    nodes_[id].feature = best.feature;
    nodes_[id].threshold = data_.upper[best.feature][best.bin];
    const int l = Build(std::move(left), depth + 1);
    const int r = Build(std::move(right), depth + 1);
    nodes_[id].left = l;
    nodes_[id].right = r;
    return id;
  }

  Split FindSplit(const std::vector<uint32_t>& rows, double gsum, double hsum) {
    const size_t d = data_.cols;
    hist_g_.assign(data_.total_bins, 0.0);
    hist_h_.assign(data_.total_bins, 0.0);
    hist_c_.assign(data_.total_bins, 0);
    for (uint32_t r : rows) {
      const uint8_t* b = &data_.bins[r * d];
      const double gr = g_[r];
      const double hr = h_[r];
      for (size_t f = 0; f < d; ++f) {
        const size_t k = data_.offset[f] + b[f];
        hist_g_[k] += gr;
        hist_h_[k] += hr;
        ++hist_c_[k];
      }
    }
    const double lambda = cfg_.l2_lambda;
    const double parent = gsum * gsum / (hsum + lambda);
    const size_t min_leaf = static_cast<size_t>(cfg_.min_samples_leaf);
    Split best;
    best.gain = 1e-12 * std::max(1.0, std::abs(parent));
    for (size_t f = 0; f < d; ++f) {
      const size_t nb = data_.upper[f].size();
      double gl = 0.0;
      double hl = 0.0;
      size_t cl = 0;
      for (size_t b = 0; b + 1 < nb; ++b) {
        const size_t k = data_.offset[f] + b;
        gl += hist_g_[k];
        hl += hist_h_[k];
        cl += hist_c_[k];
        const size_t cr = rows.size() - cl;
        if (cl < min_leaf || cr < min_leaf) continue;
        const double gr = gsum - gl;
        const double hr = hsum - hl;
        if (hl + lambda <= 0.0 || hr + lambda <= 0.0) continue;
        const double gain =
            0.5 * (gl * gl / (hl + lambda) + gr * gr / (hr + lambda) - parent);
        if (gain > best.gain) best = {static_cast<int>(f), static_cast<int>(b), gain};
      }
    }
    return best;
  }

  const BinnedData& data_;
  const std::vector<double>& g_;
  const std::vector<double>& h_;
  const TrainConfig& cfg_;
  std::vector<TreeNode> nodes_;
  std::vector<int>* leaf_nodes_ = nullptr;
  std::vector<std::vector<uint32_t>>* leaf_rows_ = nullptr;
  std::vector<double> hist_g_;
  std::vector<double> hist_h_;
  std::vector<uint32_t> hist_c_;
};

}  // namespace

TrainedModel TrainGbdt(const DenseMatrix& x, std::span<const int> y,
                       std::span<const double> weights, const TrainConfig& cfg,
                       std::vector<double>* loss_trace) {
  cfg.Validate();
  const auto w_all = internal::CheckTrainingInput(x, y, weights);
  std::vector<size_t> rows;
  for (size_t r = 0; r < w_all.size(); ++r) {
    if (w_all[r] > 0.0) rows.push_back(r);
  }
  const size_t n = rows.size();
  std::vector<double> w(n);
  std::vector<int> yy(n);
  double wsum = 0.0;
  double w1 = 0.0;
  for (size_t i = 0; i < n; ++i) {
    w[i] = w_all[rows[i]];
    yy[i] = y[rows[i]];
    wsum += w[i];
    if (yy[i]) w1 += w[i];
  }
  const double w0 = wsum - w1;

  TrainedModel m;
  m.kind = ModelKind::kGbdt;
  m.feature_names = DefaultNames(x.cols());
  m.metadata.config = cfg;
  m.metadata.seed = cfg.seed;
  if (w1 == 0.0) {
    m.base_margin = -kMaxMargin;
  } else if (w0 == 0.0) {
    m.base_margin = kMaxMargin;
  } else {
    m.base_margin = std::clamp(std::log(w1 / w0), -kMaxMargin, kMaxMargin);
  }

  std::vector<double> f(n, m.base_margin);
  auto total_loss = [&](const std::vector<double>& margin) {
    double s = 0.0;
    for (size_t i = 0; i < n; ++i) s += w[i] * LogLoss(margin[i], yy[i]);
    return s;
  };
  double loss = total_loss(f);
  if (loss_trace) {
    loss_trace->clear();
    loss_trace->push_back(loss / wsum);
  }
  if (cfg.n_trees == 0) return m;

  const BinnedData data = BinFeatures(x, rows, w_all, cfg.n_bins);
  std::vector<double> g(n);
  std::vector<double> h(n);
  std::vector<double> trial(n);
  GbdtTreeBuilder builder(data, g, h, cfg);
  for (int round = 0; round < cfg.n_trees; ++round) {
    for (size_t i = 0; i < n; ++i) {
      const double p = Sigmoid(f[i]);
      g[i] = w[i] * (p - yy[i]);
      h[i] = w[i] * p * (1.0 - p);
    }
    std::vector<int> leaf_nodes;
    std::vector<std::vector<uint32_t>> leaf_rows;
    Tree tree = builder.Grow(&leaf_nodes, &leaf_rows);

    // Step-halving per leaf: keep a step only if it lowers that leaf's loss.
    for (size_t k = 0; k < leaf_nodes.size(); ++k) {
      const auto& lr = leaf_rows[k];
      double before = 0.0;
      for (uint32_t r : lr) before += w[r] * LogLoss(f[r], yy[r]);
      double step = cfg.learning_rate * tree.nodes[leaf_nodes[k]].value;
      bool accepted = false;
      for (int halvings = 0; halvings < 60 && step != 0.0; ++halvings, step *= 0.5) {
        double after = 0.0;
        for (uint32_t r : lr) after += w[r] * LogLoss(f[r] + step, yy[r]);
        if (after < before - 1e-12 * std::abs(before)) {
          accepted = true;
          break;
        }
      }
      tree.nodes[leaf_nodes[k]].value = accepted ? step : 0.0;
    }
    // Whole-model check in the trace's summation order.
    for (int halvings = 0;; ++halvings) {
      for (size_t k = 0; k < leaf_nodes.size(); ++k) {
        const double v = tree.nodes[leaf_nodes[k]].value;
        for (uint32_t r : leaf_rows[k]) trial[r] = f[r] + v;
      }
      const double next = total_loss(trial);
      if (next <= loss) {
        loss = next;
        break;
      }
      for (int node : leaf_nodes) {
        tree.nodes[node].value = halvings < 60 ? tree.nodes[node].value * 0.5 : 0.0;
      }
    }
    f.swap(trial);
    if (loss_trace) loss_trace->push_back(loss / wsum);
    m.trees.push_back(std::move(tree));
  }
  return m;
}

TrainedModel MakeEnsemble(std::vector<TrainedModel> members) {
  if (members.empty()) throw std::invalid_argument("an ensemble needs at least one member");
  for (const auto& mem : members) {
    if (mem.feature_names != members[0].feature_names) {
      throw std::invalid_argument("ensemble members disagree on feature names");
    }
  }
  TrainedModel m;
  m.kind = ModelKind::kEnsemble;
  m.feature_names = members[0].feature_names;
  m.metadata = members[0].metadata;
  m.members = std::move(members);
  return m;
}

std::vector<double> SoftVote(std::span<const TrainedModel> models, const DenseMatrix& x) {
  if (models.empty()) throw std::invalid_argument("soft vote needs at least one model");
  for (const auto& mem : models) {
    if (mem.feature_names != models[0].feature_names) {
      throw std::invalid_argument("soft vote members disagree on feature names");
    }
  }
  std::vector<double> out(x.rows(), 0.0);
  for (const auto& mem : models) {
    const auto p = mem.PredictProba(x);
    for (size_t r = 0; r < out.size(); ++r) out[r] += p[r];
  }
  for (double& v : out) v /= static_cast<double>(models.size());
  return out;
}

const TrainConfig& LearnerConfigs::For(ModelKind kind) const {
  switch (kind) {
    case ModelKind::kTree:
      return tree;
    case ModelKind::kForest:
      return forest;
    default:
      return gbdt;
  }
}

nlohmann::json LearnerConfigs::ToJson() const {
  return {{"tree", tree.ToJson()}, {"forest", forest.ToJson()}, {"gbdt", gbdt.ToJson()}};
}

LearnerConfigs LearnerConfigs::FromJson(const nlohmann::json& j) {
  LearnerConfigs c;
  if (j.is_null()) return c;
  for (const auto& [k, v] : j.items()) {
    if (k != "tree" && k != "forest" && k != "gbdt") {
      throw std::invalid_argument("unknown learner config section '" + k + "'");
    }
  }
  if (j.contains("tree")) c.tree = TrainConfig::FromJson(j.at("tree"), c.tree);
  if (j.contains("forest")) c.forest = TrainConfig::FromJson(j.at("forest"), c.forest);
  if (j.contains("gbdt")) c.gbdt = TrainConfig::FromJson(j.at("gbdt"), c.gbdt);
  return c;
}

TrainedModel TrainModel(ModelKind kind, const DenseMatrix& x, std::span<const int> y,
                        std::span<const double> weights, const LearnerConfigs& configs,
                        const std::vector<std::string>& feature_names) {
  if (feature_names.size() != x.cols()) {
    throw std::invalid_argument("feature name count does not match matrix width");
  }
  TrainedModel m;
  switch (kind) {
    case ModelKind::kTree:
      m = TrainDecisionTree(x, y, weights, configs.tree);
      break;
    case ModelKind::kForest:
      m = TrainRandomForest(x, y, weights, configs.forest);
      break;
    case ModelKind::kGbdt:
      m = TrainGbdt(x, y, weights, configs.gbdt);
      break;
    case ModelKind::kEnsemble: {
      std::vector<TrainedModel> members;
      for (ModelKind k : {ModelKind::kTree, ModelKind::kForest, ModelKind::kGbdt}) {
        members.push_back(TrainModel(k, x, y, weights, configs, feature_names));
      }
      m = MakeEnsemble(std::move(members));
      break;
    }
  }
  m.feature_names = feature_names;
  return m;
}

}  // namespace dropwatch
