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

#include <cmath>
#include <fstream>
#include <sstream>

#include "dropwatch/learners.h"

namespace dropwatch {

namespace {

using nlohmann::json;

json TreeToJson(const Tree& t) {
  std::vector<int> feature;
  std::vector<double> threshold;
  std::vector<int> left;
  std::vector<int> right;
  std::vector<double> value;
  for (const auto& n : t.nodes) {
    feature.push_back(n.feature);
    threshold.push_back(n.threshold);
    left.push_back(n.left);
    right.push_back(n.right);
    value.push_back(n.value);
  }
  return {{"feature", feature}, {"threshold", threshold}, {"left", left},
          {"right", right},     {"value", value}};
}

Tree TreeFromJson(const json& j, size_t num_features) {
  const auto feature = j.at("feature").get<std::vector<int>>();
  const auto threshold = j.at("threshold").get<std::vector<double>>();
  const auto left = j.at("left").get<std::vector<int>>();
  const auto right = j.at("right").get<std::vector<int>>();
  const auto value = j.at("value").get<std::vector<double>>();
  const size_t n = feature.size();
  if (n == 0 || threshold.size() != n || left.size() != n || right.size() != n ||
      value.size() != n) {
    throw DataError("tree arrays are empty or of unequal length");
  }
  Tree t;
  t.nodes.resize(n);
  for (size_t i = 0; i < n; ++i) {
    TreeNode& node = t.nodes[i];
    node = {feature[i], threshold[i], left[i], right[i], value[i]};
    if (node.is_leaf()) continue;
    if (static_cast<size_t>(node.feature) >= num_features) {
      throw DataError("tree node " + std::to_string(i) + " uses an unknown feature");
    }
    // Children must come after their parent, which also rules out cycles.
    const auto valid = [&](int c) { return c > static_cast<int>(i) && c < static_cast<int>(n); };
    if (!valid(node.left) || !valid(node.right) || node.left == node.right) {
      throw DataError("tree node " + std::to_string(i) + " has invalid children");
    }
    if (!std::isfinite(node.threshold)) {
      throw DataError("tree node " + std::to_string(i) + " has a non-finite threshold");
    }
  }
  return t;
}

json MetadataToJson(const TrainingMetadata& m) {
  json j = {{"treatment", m.treatment}, {"config", m.config.ToJson()}, {"seed", m.seed}};
  if (m.key) {
    j["key"] = {{"i", m.key->history_years},
                {"j", m.key->horizon_years},
                {"k", m.key->level.value()}};
  } else {
    j["key"] = nullptr;
  }
  return j;
}

TrainingMetadata MetadataFromJson(const json& j) {
  TrainingMetadata m;
  m.treatment = j.at("treatment").get<std::string>();
  m.config = TrainConfig::FromJson(j.at("config"), TrainConfig{});
  m.seed = j.at("seed").get<uint64_t>();
  const json& key = j.at("key");
  if (!key.is_null()) {
    m.key = ModelKey(key.at("i").get<int>(), key.at("j").get<int>(),
                     LevelId(key.at("k").get<int>()));
  }
  return m;
}

json ModelBody(const TrainedModel& model) {
  json trees = json::array();
  for (const auto& t : model.trees) trees.push_back(TreeToJson(t));
  json members = json::array();
  for (const auto& m : model.members) members.push_back(ModelBody(m));
  return {{"kind", ModelKindName(model.kind)},
          {"feature_names", model.feature_names},
          {"base_margin", model.base_margin},
          {"trees", trees},
          {"members", members},
          {"metadata", MetadataToJson(model.metadata)}};
}

TrainedModel ModelFromBody(const json& j) {
  TrainedModel m;
  m.kind = ParseModelKind(j.at("kind").get<std::string>());
  m.feature_names = j.at("feature_names").get<std::vector<std::string>>();
  m.base_margin = j.at("base_margin").get<double>();
  for (const auto& t : j.at("trees")) m.trees.push_back(TreeFromJson(t, m.feature_names.size()));
  for (const auto& mem : j.at("members")) m.members.push_back(ModelFromBody(mem));
  m.metadata = MetadataFromJson(j.at("metadata"));
  switch (m.kind) {
    case ModelKind::kTree:
      if (m.trees.size() != 1) throw DataError("a tree model must hold exactly one tree");
      break;
    case ModelKind::kForest:
      if (m.trees.empty()) throw DataError("a forest model holds no trees");
      break;
    case ModelKind::kGbdt:
      break;
    case ModelKind::kEnsemble:
      if (m.members.empty()) throw DataError("an ensemble model holds no members");
      for (const auto& mem : m.members) {
        if (mem.feature_names != m.feature_names) {
          throw DataError("ensemble member feature names differ from the ensemble's");
        }
      }
      break;
  }
  return m;
}

}  // namespace

nlohmann::json ModelToJson(const TrainedModel& model) {
  json j = {{"format_version", kModelFormatVersion}};
  j.update(ModelBody(model));
  return j;
}

TrainedModel ModelFromJson(const nlohmann::json& j) {
  try {
    if (!j.is_object() || !j.contains("format_version")) {
      throw DataError("model document lacks format_version");
    }
    const int version = j.at("format_version").get<int>();
    if (version != kModelFormatVersion) {
      throw DataError("unsupported model format_version " + std::to_string(version) +
                      " (this build reads version " + std::to_string(kModelFormatVersion) +
                      ")");
    }
    return ModelFromBody(j);
  } catch (const json::exception& e) {
    throw DataError(std::string("malformed model document: ") + e.what());
  } catch (const std::invalid_argument& e) {
    throw DataError(std::string("malformed model document: ") + e.what());
  }
}

void SaveModel(const TrainedModel& model, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot open '" + path + "' for writing");
  out << ModelToJson(model).dump(1) << '\n';
  if (!out) throw DataError("failed writing '" + path + "'");
}

TrainedModel LoadModel(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open model file '" + path + "'");
  json j;
  try {
    j = json::parse(in);
  } catch (const json::exception& e) {
    throw DataError("model file '" + path + "' is not valid JSON: " + e.what());
  }
  return ModelFromJson(j);
}

}  // namespace dropwatch
