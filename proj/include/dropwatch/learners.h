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

#ifndef DROPWATCH_LEARNERS_H_
#define DROPWATCH_LEARNERS_H_

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "dropwatch/cohort.h"
#include "dropwatch/common.h"
#include "json.hpp"

namespace dropwatch {

// Internal nodes have feature >= 0; a row goes left iff x[feature] <= threshold.
// Leaves carry `value`: the class-1 probability for CART and forest trees, the
// additive log-odds contribution for boosted trees.
struct TreeNode {
  int feature = -1;
  double threshold = 0.0;
  int left = -1;
  int right = -1;
  double value = 0.0;

  bool is_leaf() const { return feature < 0; }
  friend bool operator==(const TreeNode&, const TreeNode&) = default;
};

// Node 0 is the root; parents precede their children.
struct Tree {
  std::vector<TreeNode> nodes;

  double Predict(std::span<const double> x) const;
  // Index of the leaf reached by x.
  int Leaf(std::span<const double> x) const;
  int Depth() const;
  int NumLeaves() const;

  friend bool operator==(const Tree&, const Tree&) = default;
};

enum class ModelKind { kTree, kForest, kGbdt, kEnsemble };

std::string_view ModelKindName(ModelKind kind);
ModelKind ParseModelKind(std::string_view name);

struct TrainConfig {
  int max_depth = 12;
  // Minimum number of (positive-weight) rows in each child.
  int min_samples_leaf = 5;
  int n_trees = 100;
  double learning_rate = 0.1;
  int n_bins = 64;
  double l2_lambda = 1.0;
  // Features considered per split; 0 = sqrt(d) for forests, all otherwise.
  int max_features = 0;
  bool bootstrap = true;
  uint64_t seed = 1;
  // Worker threads for forest training; results do not depend on it.
  int n_threads = 1;

  // Throws std::invalid_argument on out-of-range fields.
  void Validate() const;
  // n_threads is a runtime knob and is not serialized.
  nlohmann::json ToJson() const;
  // Missing fields keep the values of `defaults`.
  static TrainConfig FromJson(const nlohmann::json& j, const TrainConfig& defaults);
};

// Defaults per learner. Boosting: 200 rounds, depth 6, learning rate 0.1, 64
// bins, l2 1.0.
TrainConfig DefaultTrainConfig(ModelKind kind);

struct TrainingMetadata {
  std::optional<ModelKey> key;
  std::string treatment = "baseline";
  TrainConfig config;
  uint64_t seed = 0;
};

struct TrainedModel {
  ModelKind kind = ModelKind::kTree;
  std::vector<Tree> trees;
  // Boosting only: initial log-odds.
  double base_margin = 0.0;
  std::vector<std::string> feature_names;
  // Ensemble only.
  std::vector<TrainedModel> members;
  TrainingMetadata metadata;

  size_t num_features() const { return feature_names.size(); }

  // Boosting: base + sum of leaf values. Other kinds: the probability.
  double Margin(std::span<const double> x) const;
  double PredictRow(std::span<const double> x) const;
  // Throws std::invalid_argument if x has the wrong width.
  std::vector<double> PredictProba(const DenseMatrix& x) const;
  // Also checks column names.
  std::vector<double> PredictProba(const DenseMatrix& x,
                                   const std::vector<std::string>& names) const;
};

// Row weights: empty means all ones. Rows with zero weight are ignored.
// Throws std::invalid_argument for zero-width input, negative or all-zero
// weights, and labels other than 0/1.
TrainedModel TrainDecisionTree(const DenseMatrix& x, std::span<const int> y,
                               std::span<const double> weights, const TrainConfig& cfg);
TrainedModel TrainRandomForest(const DenseMatrix& x, std::span<const int> y,
                               std::span<const double> weights, const TrainConfig& cfg);
// `loss_trace`, if given, receives the weighted mean training log loss before
// the first round and after every round (n_trees + 1 entries).
TrainedModel TrainGbdt(const DenseMatrix& x, std::span<const int> y,
                       std::span<const double> weights, const TrainConfig& cfg,
                       std::vector<double>* loss_trace = nullptr);

// Soft-voting model over `members`. Throws std::invalid_argument if the
// members disagree on feature names or the list is empty.
TrainedModel MakeEnsemble(std::vector<TrainedModel> members);
// Mean of member probabilities.
std::vector<double> SoftVote(std::span<const TrainedModel> models, const DenseMatrix& x);

struct LearnerConfigs {
  TrainConfig tree = DefaultTrainConfig(ModelKind::kTree);
  TrainConfig forest = DefaultTrainConfig(ModelKind::kForest);
  TrainConfig gbdt = DefaultTrainConfig(ModelKind::kGbdt);

  const TrainConfig& For(ModelKind kind) const;
  nlohmann::json ToJson() const;
  static LearnerConfigs FromJson(const nlohmann::json& j);
};

// Dispatch by kind; the ensemble votes over a tree, a forest and a boosted
// model trained on the same rows. Feature names are attached to the result
// (and members). Seeds come from each learner's config.
TrainedModel TrainModel(ModelKind kind, const DenseMatrix& x, std::span<const int> y,
                        std::span<const double> weights, const LearnerConfigs& configs,
                        const std::vector<std::string>& feature_names);

// Model file: versioned JSON (format_version, kind, feature_names, trees,
// members, metadata).
inline constexpr int kModelFormatVersion = 1;
nlohmann::json ModelToJson(const TrainedModel& model);
// Throws DataError on a malformed document or unsupported version.
TrainedModel ModelFromJson(const nlohmann::json& j);
void SaveModel(const TrainedModel& model, const std::string& path);
TrainedModel LoadModel(const std::string& path);

}  // namespace dropwatch

#endif  // DROPWATCH_LEARNERS_H_
