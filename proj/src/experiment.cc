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

#include "dropwatch/experiment.h"

#include <algorithm>
#include <atomic>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <map>
#include <memory>
#include <mutex>
#include <sstream>
#include <thread>

#include "dropwatch/design_matrix.h"
#include "dropwatch/rng.h"
#include "dropwatch/shap.h"
#include "dropwatch/svg.h"

namespace dropwatch {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

uint64_t Fnv1a(std::string_view s) {
  uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

void WriteFile(const fs::path& path, const std::string& content) {
  fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot open '" + path.string() + "' for writing");
  out << content;
  if (!out) throw DataError("failed writing '" + path.string() + "'");
}

std::string Dump(const json& j) { return j.dump(2) + "\n"; }

// Leading comment that makes a Markdown artifact self-describing.
std::string Provenance(const json& fragment, uint64_t seed) {
  return "<!-- dropwatch seed=" + std::to_string(seed) + " config=" + fragment.dump() + " -->\n";
}

json KeyJson(const ModelKey& k) {
  return {{"i", k.history_years}, {"j", k.horizon_years}, {"k", k.level.value()}};
}

ModelKey KeyFromJson(const json& j) {
  if (j.is_array()) {
    if (j.size() != 3) throw std::invalid_argument("model key arrays must be [i, j, k]");
    return ModelKey(j[0].get<int>(), j[1].get<int>(), LevelId(j[2].get<int>()));
  }
  return ModelKey(j.at("i").get<int>(), j.at("j").get<int>(), LevelId(j.at("k").get<int>()));
}

void RunParallel(size_t n, int jobs, const std::function<void(size_t)>& task) {
  const int threads = std::max(1, std::min<int>(jobs, static_cast<int>(n)));
  if (threads <= 1) {
    for (size_t i = 0; i < n; ++i) task(i);
    return;
  }
  std::atomic<size_t> next{0};
  std::vector<std::thread> pool;
  for (int t = 0; t < threads; ++t) {
    pool.emplace_back([&] {
      for (size_t i = next++; i < n; i = next++) task(i);
    });
  }
  for (auto& th : pool) th.join();
}

class Logger {
 public:
  explicit Logger(std::ostream* out) : out_(out) {}
  void Line(const std::string& s) {
    std::lock_guard<std::mutex> lock(mu_);
    if (out_) *out_ << s << std::endl;
  }

 private:
  std::ostream* out_;
  std::mutex mu_;
};

struct KeyData {
  ModelKey key;
  std::string slug;
  std::string error;
  DesignMatrix train;
  DesignMatrix test;
  SplitResult split;
  size_t eligible = 0;
};

struct Unit {
  size_t key_index;
  Treatment treatment;
};

std::vector<std::string> ReportLead(const CellOutcome& c) {
  return {std::string(TreatmentName(c.treatment)), std::string(ModelKindName(c.learner))};
}

json SeriesRow(const EvalReport& r) {
  return {{"accuracy", r.accuracy},
          {"dropout_recall", r.dropout_class.recall},
          {"dropout_precision", r.dropout_class.precision},
          {"macro_f1", r.macro_f1},
          {"auc", r.auc ? json(*r.auc) : json(nullptr)}};
}

}  // namespace

json SplitConfig::ToJson() const {
  return {{"strategy", SplitStrategyName(strategy)},
          {"test_fraction", test_fraction},
          {"school_fraction", school_fraction},
          {"test_years", test_years}};
}

SplitConfig SplitConfig::FromJson(const json& j) {
  SplitConfig c;
  if (j.is_null()) return c;
  if (j.contains("strategy")) c.strategy = ParseSplitStrategy(j.at("strategy").get<std::string>());
  c.test_fraction = j.value("test_fraction", c.test_fraction);
  c.school_fraction = j.value("school_fraction", c.school_fraction);
  c.test_years = j.value("test_years", c.test_years);
  return c;
}

SplitResult ApplySplit(const SplitConfig& cfg, std::span<const RowProvenance> rows,
                       uint64_t seed) {
  switch (cfg.strategy) {
    case SplitStrategy::kGuidedRandom:
      return GuidedRandomSplit(rows, cfg.test_fraction, seed);
    case SplitStrategy::kBySchools:
      return SplitBySchools(rows, cfg.school_fraction, seed);
    case SplitStrategy::kByYears:
      return SplitByYears(rows, cfg.test_years);
  }
  throw std::invalid_argument("unknown split strategy");
}

json ExplainConfig::ToJson() const {
  return {{"enabled", enabled},
          {"learner", ModelKindName(learner)},
          {"treatment", TreatmentName(treatment)},
          {"background", background},
          {"rows", rows},
          {"top_k", top_k}};
}

ExplainConfig ExplainConfig::FromJson(const json& j) {
  ExplainConfig c;
  if (j.is_null()) return c;
  c.enabled = j.value("enabled", c.enabled);
  if (j.contains("learner")) c.learner = ParseModelKind(j.at("learner").get<std::string>());
  if (j.contains("treatment")) c.treatment = ParseTreatment(j.at("treatment").get<std::string>());
  c.background = j.value("background", c.background);
  c.rows = j.value("rows", c.rows);
  c.top_k = j.value("top_k", c.top_k);
  return c;
}

void ExperimentConfig::Validate() const {
  if (generator.has_value() == !cohort_csv.empty()) {
    throw std::invalid_argument("configure exactly one cohort source: generator or csv");
  }
  if (!cohort_csv.empty() && !fs::exists(cohort_csv)) {
    throw std::invalid_argument("cohort file '" + cohort_csv + "' does not exist");
  }
  if (generator) generator->Validate();
  if (model_keys.empty()) throw std::invalid_argument("at least one model key is required");
  if (treatments.empty()) throw std::invalid_argument("at least one treatment is required");
  if (learners.empty()) throw std::invalid_argument("at least one learner is required");
  if (smote_k < 1) throw std::invalid_argument("smote_k must be >= 1");
  if (jobs < 1) throw std::invalid_argument("jobs must be >= 1");
  corrector.Validate();
  if (explain.background < 1 || explain.rows < 1 || explain.top_k < 1) {
    throw std::invalid_argument("explain background, rows and top_k must be >= 1");
  }
  learner_configs.tree.Validate();
  learner_configs.forest.Validate();
  learner_configs.gbdt.Validate();
}

json ExperimentConfig::ToJson() const {
  json j;
  j["config_version"] = kExperimentConfigVersion;
  j["seed"] = seed;
  if (generator) {
    j["cohort"] = {{"generator", generator->ToJson()}};
  } else {
    j["cohort"] = {{"csv", cohort_csv}};
  }
  j["preprocess"] = preprocess.ToJson();
  json keys = json::array();
  for (const auto& k : model_keys) keys.push_back(KeyJson(k));
  j["model_keys"] = keys;
  j["split"] = split.ToJson();
  std::vector<std::string> t;
  for (Treatment x : treatments) t.emplace_back(TreatmentName(x));
  j["treatments"] = t;
  std::vector<std::string> l;
  for (ModelKind x : learners) l.emplace_back(ModelKindName(x));
  j["learners"] = l;
  j["learner_configs"] = learner_configs.ToJson();
  j["smote_k"] = smote_k;
  j["corrector"] = {{"threshold", corrector.threshold}, {"grid", corrector.grid}};
  j["explain"] = explain.ToJson();
  j["series"] = {{"learner", ModelKindName(series_learner)},
                 {"treatment", TreatmentName(series_treatment)}};
  j["output_dir"] = output_dir;
  j["jobs"] = jobs;
  return j;
}

ExperimentConfig ExperimentConfig::FromJson(const json& j, const std::string& base_dir) {
  if (!j.is_object()) throw std::invalid_argument("experiment config must be a JSON object");
  static const char* const kKnown[] = {
      "config_version", "seed",       "cohort",    "preprocess", "model_keys",
      "split",          "treatments", "learners",  "learner_configs", "smote_k",
      "corrector",      "explain",    "series",    "output_dir", "jobs"};
  for (const auto& [k, v] : j.items()) {
    if (std::find(std::begin(kKnown), std::end(kKnown), k) == std::end(kKnown)) {
      throw std::invalid_argument("unknown experiment config field '" + k + "'");
    }
  }
  try {
    const int version = j.value("config_version", kExperimentConfigVersion);
    if (version != kExperimentConfigVersion) {
      throw std::invalid_argument("unsupported config_version " + std::to_string(version));
    }
    ExperimentConfig c;
    c.seed = j.value("seed", c.seed);
    const json& cohort = j.at("cohort");
    if (cohort.contains("generator") == cohort.contains("csv")) {
      throw std::invalid_argument("cohort must contain exactly one of 'generator' or 'csv'");
    }
    if (cohort.contains("generator")) {
      const json& g = cohort.at("generator");
      c.generator = synth::GeneratorConfig::FromJson(g.is_null() ? json::object() : g);
      if (!g.is_object() || !g.contains("seed")) c.generator->seed = c.seed;
    } else {
      fs::path p = cohort.at("csv").get<std::string>();
      if (p.is_relative() && !base_dir.empty()) p = fs::path(base_dir) / p;
      c.cohort_csv = p.string();
    }
    c.preprocess = prep::PreprocessPlan::FromJson(j.value("preprocess", json()));
    for (const auto& k : j.at("model_keys")) c.model_keys.push_back(KeyFromJson(k));
    c.split = SplitConfig::FromJson(j.value("split", json()));
    if (j.contains("treatments")) {
      for (const auto& t : j.at("treatments")) c.treatments.push_back(ParseTreatment(t.get<std::string>()));
    } else {
      c.treatments = AllTreatments();
    }
    if (j.contains("learners")) {
      for (const auto& l : j.at("learners")) c.learners.push_back(ParseModelKind(l.get<std::string>()));
    } else {
      c.learners = {ModelKind::kTree, ModelKind::kForest, ModelKind::kGbdt, ModelKind::kEnsemble};
    }
    c.learner_configs = LearnerConfigs::FromJson(j.value("learner_configs", json()));
    c.smote_k = j.value("smote_k", c.smote_k);
    if (j.contains("corrector")) {
      const json& cc = j.at("corrector");
      c.corrector.threshold = cc.value("threshold", c.corrector.threshold);
      if (cc.contains("grid")) c.corrector.grid = cc.at("grid").get<std::vector<double>>();
    }
    c.explain = ExplainConfig::FromJson(j.value("explain", json()));
    if (j.contains("series")) {
      const json& s = j.at("series");
      if (s.contains("learner")) c.series_learner = ParseModelKind(s.at("learner").get<std::string>());
      if (s.contains("treatment")) {
        c.series_treatment = ParseTreatment(s.at("treatment").get<std::string>());
      }
    }
    c.output_dir = j.value("output_dir", c.output_dir);
    c.jobs = j.value("jobs", c.jobs);
    c.Validate();
    return c;
  } catch (const json::exception& e) {
    throw std::invalid_argument(std::string("malformed experiment config: ") + e.what());
  }
}

ExperimentConfig ExperimentConfig::Load(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::invalid_argument("cannot open config file '" + path + "'");
  json j;
  try {
    j = json::parse(in);
  } catch (const json::exception& e) {
    throw std::invalid_argument("config file '" + path + "' is not valid JSON: " + e.what());
  }
  return FromJson(j, fs::path(path).parent_path().string());
}

ExperimentConfig ExperimentConfig::Demo() {
  ExperimentConfig c;
  c.seed = 7;
  c.generator = synth::GeneratorConfig::Default();
  c.generator->n_students = 12000;
  c.generator->seed = c.seed;
  c.model_keys = {ModelKey(1, 1, LevelId(6)), ModelKey(1, 1, LevelId(7)),
                  ModelKey(1, 2, LevelId(7)), ModelKey(1, 3, LevelId(7)),
                  ModelKey(2, 1, LevelId(7)), ModelKey(3, 1, LevelId(7))};
  c.treatments = AllTreatments();
  c.learners = {ModelKind::kTree, ModelKind::kForest, ModelKind::kGbdt, ModelKind::kEnsemble};
  c.learner_configs.forest.n_trees = 30;
  c.learner_configs.gbdt.n_trees = 100;
  c.explain.background = 128;
  c.explain.rows = 150;
  return c;
}

std::string ResolveOutputDir(const std::string& configured) {
  fs::path p = configured;
  if (p.is_absolute()) return p.string();
  if (const char* root = std::getenv(kOutputRootEnv); root && *root) {
    return (fs::path(root) / p).string();
  }
  return p.string();
}

Cohort LoadCohort(const ExperimentConfig& cfg) {
  if (cfg.generator) return synth::Generate(*cfg.generator);
  return ReadCohortCsv(cfg.cohort_csv);
}

uint64_t StreamSeed(uint64_t seed, std::string_view purpose) {
  return DeriveSeed(seed, Fnv1a(purpose));
}

int ExperimentResult::failed_cells() const {
  return static_cast<int>(std::count_if(cells.begin(), cells.end(),
                                        [](const CellOutcome& c) { return !c.error.empty(); }));
}

ExperimentResult RunExperiment(const ExperimentConfig& cfg, const std::string& output_dir,
                               std::ostream* log_stream) {
  cfg.Validate();
  const fs::path root = output_dir;
  fs::create_directories(root);
  std::ostringstream log_buffer;
  std::mutex log_mu;
  Logger console(log_stream);
  auto log = [&](const std::string& line) {
    {
      std::lock_guard<std::mutex> lock(log_mu);
      log_buffer << line << '\n';
    }
    console.Line(line);
  };
  // Parallel phases buffer per task so log.txt follows task order, not completion order.
  std::vector<std::vector<std::string>> task_lines;
  auto task_log = [&](size_t task, const std::string& line) {
    task_lines[task].push_back(line);
    console.Line(line);
  };
  auto flush_tasks = [&] {
    for (const auto& lines : task_lines) {
      for (const auto& l : lines) log_buffer << l << '\n';
    }
    task_lines.clear();
  };

  // Execution-only settings stay out of artifacts so outputs do not depend on them.
  json config_json = cfg.ToJson();
  config_json.erase("jobs");
  config_json.erase("output_dir");
  WriteFile(root / "config.json", Dump(config_json));

  log("loading cohort");
  const Cohort cohort = LoadCohort(cfg);
  log("cohort: " + std::to_string(cohort.size()) + " records, " +
      std::to_string(cohort.years().size()) + " years");

  // Dropout-rate tables.
  for (auto [grouping, name] : {std::pair{RateGrouping::kLevel, "level"},
                                std::pair{RateGrouping::kCycle, "cycle"}}) {
    const RateTable t = DropoutRateTable(cohort, grouping);
    const json frag = {{"cohort", config_json.at("cohort")}, {"table", name}};
    WriteFile(root / "rates" / (std::string("dropout_rate_by_") + name + ".md"),
              Provenance(frag, cfg.seed) + t.ToMarkdown());
    WriteFile(root / "rates" / (std::string("dropout_rate_by_") + name + ".csv"), t.ToCsv());
    std::vector<svg::Series> series;
    for (const auto& g : t.groups) {
      svg::Series s{grouping == RateGrouping::kLevel ? "Level " + g : g, {}, {}};
      for (const auto& y : t.years) {
        if (const RateCell* c = t.Find(g, y)) {
          s.x.push_back(y.start_year());
          s.y.push_back(c->percent());
        }
      }
      series.push_back(std::move(s));
    }
    if (grouping == RateGrouping::kCycle) {
      WriteFile(root / "rates" / "dropout_rate_by_cycle.svg",
                svg::LineChart("Dropout rate by cycle", "academic year (start)", "dropout rate (%)",
                               series));
    }
  }

  // Per-key matrices and splits.
  std::vector<KeyData> keys;
  for (const auto& k : cfg.model_keys) keys.push_back({k, k.Slug(), "", {}, {}, {}, 0});
  task_lines.assign(keys.size(), {});
  RunParallel(keys.size(), cfg.jobs, [&](size_t i) {
    KeyData& kd = keys[i];
    try {
      const auto rows = EnumerateEligibleRows(cohort, kd.key);
      kd.eligible = rows.size();
      std::vector<RowProvenance> prov;
      prov.reserve(rows.size());
      for (const auto& r : rows) prov.push_back(r.provenance);
      kd.split = ApplySplit(cfg.split, prov, StreamSeed(cfg.seed, kd.slug + "/split"));
      std::vector<EligibleRow> train_rows;
      for (size_t r : kd.split.train_rows) train_rows.push_back(rows[r]);
      const auto pre = FitPreprocessor(cohort, train_rows, cfg.preprocess);
      const DesignMatrix dm = BuildDesignMatrix(cohort, kd.key, rows, pre);
      kd.train = dm.Subset(kd.split.train_rows);
      kd.test = dm.Subset(kd.split.test_rows);
      const fs::path dir = root / "cells" / kd.slug;
      WriteFile(dir / "split.json", Dump(kd.split.ToJson()));
      WriteFile(dir / "preprocessor.json", Dump(pre.ToJson()));
      auto count = [](const DesignMatrix& m) {
        return std::count(m.y.begin(), m.y.end(), Label::kDropout);
      };
      WriteFile(dir / "matrix.json",
                Dump({{"key", KeyJson(kd.key)},
                      {"eligible_rows", rows.size()},
                      {"columns", dm.cols()},
                      {"train_rows", kd.train.rows()},
                      {"test_rows", kd.test.rows()},
                      {"train_dropouts", count(kd.train)},
                      {"test_dropouts", count(kd.test)},
                      {"feature_names", dm.feature_names}}));
      task_log(i, kd.key.Display() + ": " + std::to_string(rows.size()) + " rows, " +
          std::to_string(dm.cols()) + " columns");
    } catch (const std::exception& e) {
      kd.error = e.what();
      task_log(i, kd.key.Display() + ": failed: " + kd.error);
    }
  });
  flush_tasks();

  // Cells, grouped into (key, treatment) units that share treated data.
  std::vector<Unit> units;
  for (size_t i = 0; i < keys.size(); ++i) {
    for (Treatment t : cfg.treatments) units.push_back({i, t});
  }
  std::vector<std::vector<CellOutcome>> unit_cells(units.size());
  std::vector<std::map<ModelKind, std::shared_ptr<TrainedModel>>> unit_models(units.size());
  task_lines.assign(units.size(), {});
  RunParallel(units.size(), cfg.jobs, [&](size_t u) {
    const KeyData& kd = keys[units[u].key_index];
    const Treatment treatment = units[u].treatment;
    const std::string tname(TreatmentName(treatment));
    const std::string unit_id = kd.slug + "/" + tname;
    auto& cells = unit_cells[u];
    for (ModelKind l : cfg.learners) cells.push_back({kd.key, treatment, l, {}, {}, {}});
    if (!kd.error.empty()) {
      for (auto& c : cells) c.error = "matrix construction failed: " + kd.error;
      return;
    }
    const fs::path final_dir = root / "cells" / kd.slug / tname;
    const fs::path tmp_dir = root / "cells" / kd.slug / ("." + tname + ".tmp");
    fs::remove_all(tmp_dir);
    TreatedData data;
    try {
      data = ApplyTreatment(treatment, kd.train.x, kd.train.LabelValues(), cfg.smote_k,
                            StreamSeed(cfg.seed, unit_id + "/treatment"));
    } catch (const std::exception& e) {
      for (auto& c : cells) c.error = std::string("treatment failed: ") + e.what();
      task_log(u, unit_id + ": treatment failed: " + e.what());
      return;
    }
    auto& models = unit_models[u];
    auto train = [&](ModelKind kind) -> std::shared_ptr<TrainedModel> {
      if (auto it = models.find(kind); it != models.end()) return it->second;
      LearnerConfigs lc = cfg.learner_configs;
      for (ModelKind k : {ModelKind::kTree, ModelKind::kForest, ModelKind::kGbdt}) {
        TrainConfig& tc = k == ModelKind::kTree     ? lc.tree
                          : k == ModelKind::kForest ? lc.forest
                                                    : lc.gbdt;
        tc.seed = StreamSeed(cfg.seed, unit_id + "/" + std::string(ModelKindName(k)));
      }
      std::shared_ptr<TrainedModel> m;
      if (kind == ModelKind::kEnsemble) {
        std::vector<TrainedModel> members;
        for (ModelKind k : {ModelKind::kTree, ModelKind::kForest, ModelKind::kGbdt}) {
          auto& slot = models[k];
          if (!slot) {
            slot = std::make_shared<TrainedModel>(
                TrainModel(k, data.x, data.y, data.weights, lc, kd.train.feature_names));
          }
          members.push_back(*slot);
        }
        m = std::make_shared<TrainedModel>(MakeEnsemble(std::move(members)));
      } else {
        m = std::make_shared<TrainedModel>(
            TrainModel(kind, data.x, data.y, data.weights, lc, kd.train.feature_names));
      }
      m->metadata.key = kd.key;
      m->metadata.treatment = tname;
      for (auto& mem : m->members) {
        mem.metadata.key = kd.key;
        mem.metadata.treatment = tname;
      }
      models[kind] = m;
      return m;
    };
    const std::vector<int> test_y = kd.test.LabelValues();
    for (auto& cell : cells) {
      const std::string lname(ModelKindName(cell.learner));
      try {
        auto model = train(cell.learner);
        const auto probs = model->PredictProba(kd.test.x, kd.test.feature_names);
        EvalReport report = Evaluate(test_y, probs, cfg.corrector.threshold);
        const json fragment = {{"key", KeyJson(kd.key)},
                               {"treatment", tname},
                               {"learner", lname},
                               {"split", cfg.split.ToJson()},
                               {"learner_config", model->metadata.config.ToJson()},
                               {"corrector", config_json.at("corrector")}};
        report.metadata = {{"model", kd.key.Display()},
                           {"train_rows", data.y.size()},
                           {"test_rows", test_y.size()},
                           {"config", fragment},
                           {"seed", model->metadata.seed},
                           {"experiment_seed", cfg.seed}};
        cell.sweep = ThresholdSweep(probs, test_y, cfg.corrector.grid);
        for (auto& s : cell.sweep) s.metadata = report.metadata;
        const fs::path dir = tmp_dir / lname;
        WriteFile(dir / "report.json", Dump(report.ToJson()));
        json sweep = json::array();
        for (const auto& s : cell.sweep) sweep.push_back(s.ToJson());
        WriteFile(dir / "sweep.json", Dump({{"config", fragment},
                                            {"seed", model->metadata.seed},
                                            {"reports", sweep}}));
        WriteFile(dir / "sweep.md",
                  Provenance(fragment, model->metadata.seed) + SweepMarkdown(cell.sweep));
        WriteFile(dir / "model.json", Dump(ModelToJson(*model)));
        cell.report = std::move(report);
        task_log(u, unit_id + "/" + lname + ": dropout recall " +
            Fixed2(cell.report->dropout_class.recall) + ", precision " +
            Fixed2(cell.report->dropout_class.precision) + ", auc " +
            (cell.report->auc ? Fixed2(*cell.report->auc) : std::string("-")));
      } catch (const std::exception& e) {
        cell.error = e.what();
        task_log(u, unit_id + "/" + lname + ": failed: " + cell.error);
      }
    }
    fs::remove_all(final_dir);
    if (fs::exists(tmp_dir)) fs::rename(tmp_dir, final_dir);
  });
  flush_tasks();

  ExperimentResult result;
  result.output_dir = root.string();
  for (auto& cells : unit_cells) {
    for (auto& c : cells) result.cells.push_back(std::move(c));
  }
  auto find_cell = [&](const ModelKey& k, Treatment t, ModelKind l) -> const CellOutcome* {
    for (const auto& c : result.cells) {
      if (c.key == k && c.treatment == t && c.learner == l) return &c;
    }
    return nullptr;
  };

  // Comparison tables (treatments in report order) and top-level sweeps.
  json index_keys = json::array();
  for (const auto& kd : keys) {
    std::vector<ReportRow> rows;
    std::vector<std::vector<std::string>> leads;
    json comparison = json::array();
    for (Treatment t : AllTreatments()) {
      if (std::find(cfg.treatments.begin(), cfg.treatments.end(), t) == cfg.treatments.end()) {
        continue;
      }
      for (ModelKind l : cfg.learners) {
        const CellOutcome* c = find_cell(kd.key, t, l);
        json entry = {{"treatment", TreatmentName(t)}, {"learner", ModelKindName(l)}};
        if (c && c->report) {
          entry["report"] = c->report->ToJson();
          rows.push_back({ReportLead(*c), &*c->report});
        } else {
          entry["error"] = c ? c->error : "missing";
        }
        comparison.push_back(entry);
      }
    }
    const json frag = {{"key", KeyJson(kd.key)},
                       {"treatments", config_json.at("treatments")},
                       {"learners", config_json.at("learners")},
                       {"split", cfg.split.ToJson()}};
    WriteFile(root / "comparison" / (kd.slug + ".json"),
              Dump({{"config", frag}, {"seed", cfg.seed}, {"cells", comparison}}));
    WriteFile(root / "comparison" / (kd.slug + ".md"),
              Provenance(frag, cfg.seed) + "## Imbalance treatments for " + kd.key.Display() +
                  "\n\n" + MetricsMarkdown({"Technique", "Algorithm"}, rows));

    if (const CellOutcome* c = find_cell(kd.key, cfg.series_treatment, cfg.series_learner);
        c && c->report) {
      const json sfrag = {{"key", KeyJson(kd.key)},
                          {"treatment", TreatmentName(cfg.series_treatment)},
                          {"learner", ModelKindName(cfg.series_learner)},
                          {"grid", cfg.corrector.grid}};
      WriteFile(root / "sweeps" / (kd.slug + ".md"),
                Provenance(sfrag, cfg.seed) + "## Prediction corrector, " + kd.key.Display() +
                    " " + std::string(ModelKindName(cfg.series_learner)) + " / " +
                    std::string(TreatmentName(cfg.series_treatment)) + "\n\n" +
                    SweepMarkdown(c->sweep));
      WriteFile(root / "sweeps" / (kd.slug + ".csv"), SweepCsv(c->sweep));
      std::vector<svg::Series> s(4);
      s[0].name = "accuracy";
      s[1].name = "dropout recall";
      s[2].name = "dropout precision";
      s[3].name = "F1-score";
      for (const auto& r : c->sweep) {
        for (auto& series : s) series.x.push_back(r.threshold);
        s[0].y.push_back(r.accuracy);
        s[1].y.push_back(r.dropout_class.recall);
        s[2].y.push_back(r.dropout_class.precision);
        s[3].y.push_back(r.macro_f1);
      }
      WriteFile(root / "sweeps" / (kd.slug + ".svg"),
                svg::LineChart("Threshold sweep " + kd.key.Display(), "threshold", "score", s));
    }
    index_keys.push_back({{"key", KeyJson(kd.key)},
                          {"slug", kd.slug},
                          {"eligible_rows", kd.eligible},
                          {"error", kd.error}});
  }

  // Horizon (vary j) and history (vary i) series.
  auto write_series = [&](const std::string& kind, auto group_of, auto axis_of,
                          const std::string& axis) {
    std::map<std::pair<int, int>, std::vector<const CellOutcome*>> groups;
    for (const auto& kd : keys) {
      const CellOutcome* c = find_cell(kd.key, cfg.series_treatment, cfg.series_learner);
      if (c && c->report) groups[group_of(kd.key)].push_back(c);
    }
    for (auto& [g, cells] : groups) {
      std::sort(cells.begin(), cells.end(), [&](const CellOutcome* a, const CellOutcome* b) {
        return axis_of(a->key) < axis_of(b->key);
      });
      cells.erase(std::unique(cells.begin(), cells.end(),
                              [&](const CellOutcome* a, const CellOutcome* b) {
                                return axis_of(a->key) == axis_of(b->key);
                              }),
                  cells.end());
      if (cells.size() < 2) continue;
      const std::string fixed = kind == "horizon" ? "i" : "j";
      const std::string stem = kind + "_" + fixed + std::to_string(g.first) + "_k" +
                               std::to_string(g.second);
      std::ostringstream csv_out;
      csv_out << axis << ",model,accuracy,dropout_recall,dropout_precision,macro_f1,auc\n";
      json rows = json::array();
      std::vector<svg::Series> s(4);
      s[0].name = "accuracy";
      s[1].name = "dropout recall";
      s[2].name = "dropout precision";
      s[3].name = "AUC";
      for (const CellOutcome* c : cells) {
        const EvalReport& r = *c->report;
        const int a = axis_of(c->key);
        csv_out << a << ',' << c->key.Display() << ',' << r.accuracy << ','
                << r.dropout_class.recall << ',' << r.dropout_class.precision << ','
                << r.macro_f1 << ',' << (r.auc ? std::to_string(*r.auc) : "") << '\n';
        json row = SeriesRow(r);
        row[axis] = a;
        row["model"] = c->key.Display();
        rows.push_back(row);
        for (auto& series : s) series.x.push_back(a);
        s[0].y.push_back(r.accuracy);
        s[1].y.push_back(r.dropout_class.recall);
        s[2].y.push_back(r.dropout_class.precision);
        s[3].y.push_back(r.auc.value_or(0.0));
      }
      const json frag = {{"series", kind},
                         {"learner", ModelKindName(cfg.series_learner)},
                         {"treatment", TreatmentName(cfg.series_treatment)}};
      WriteFile(root / "series" / (stem + ".csv"), csv_out.str());
      WriteFile(root / "series" / (stem + ".json"),
                Dump({{"config", frag}, {"seed", cfg.seed}, {"rows", rows}}));
      WriteFile(root / "series" / (stem + ".svg"),
                svg::LineChart(kind == "horizon" ? "Impact of the prediction horizon (j)"
                                                 : "Impact of the history length (i)",
                               axis, "score", s));
    }
  };
  write_series(
      "horizon", [](const ModelKey& k) { return std::pair{k.history_years, k.level.value()}; },
      [](const ModelKey& k) { return k.horizon_years; }, "j");
  write_series(
      "history", [](const ModelKey& k) { return std::pair{k.horizon_years, k.level.value()}; },
      [](const ModelKey& k) { return k.history_years; }, "i");

  // Explanations.
  if (cfg.explain.enabled) {
    for (size_t ki = 0; ki < keys.size(); ++ki) {
      const KeyData& kd = keys[ki];
      if (!kd.error.empty()) continue;
      std::shared_ptr<TrainedModel> model;
      for (size_t u = 0; u < units.size(); ++u) {
        if (units[u].key_index == ki && units[u].treatment == cfg.explain.treatment) {
          auto it = unit_models[u].find(cfg.explain.learner);
          if (it != unit_models[u].end()) model = it->second;
        }
      }
      if (!model) continue;
      try {
        const DenseMatrix background = SampleBackground(
            kd.train.x, static_cast<size_t>(cfg.explain.background),
            StreamSeed(cfg.seed, kd.slug + "/background"));
        const DenseMatrix rows = SampleBackground(kd.test.x, static_cast<size_t>(cfg.explain.rows),
                                                  StreamSeed(cfg.seed, kd.slug + "/explain"));
        const auto explanations = ExplainRows(*model, rows, background, cfg.jobs);
        const ImportanceRanking ranking =
            RankImportance(explanations, model->feature_names, cfg.explain.top_k);
        if (!ranking.warning.empty()) log(kd.slug + ": " + ranking.warning);
        const json frag = {{"key", KeyJson(kd.key)}, {"explain", cfg.explain.ToJson()}};
        json rj = ranking.ToJson();
        rj["config"] = frag;
        rj["seed"] = cfg.seed;
        rj["output_scale"] = OutputScaleName(ExplainedScale(*model));
        const fs::path dir = root / "shap" / kd.slug;
        WriteFile(dir / "top_features.json", Dump(rj));
        WriteFile(dir / "top_features.md",
                  Provenance(frag, cfg.seed) + "## Top " + std::to_string(ranking.k) +
                      " features by mean absolute SHAP value, " + kd.key.Display() + "\n\n" +
                      ranking.ToMarkdown());
        std::vector<std::string> labels;
        std::vector<double> values;
        for (const auto& e : ranking.entries) {
          labels.push_back(e.feature);
          values.push_back(e.mean_abs_phi);
        }
        WriteFile(dir / "top_features.svg",
                  svg::BarChart("Top features " + kd.key.Display(), labels, values,
                                "mean |SHAP| (" +
                                    std::string(OutputScaleName(ExplainedScale(*model))) + ")"));
        WriteFile(dir / "shap_values.csv", ShapCsv(explanations, model->feature_names));
        log(kd.slug + ": explained " + std::to_string(rows.rows()) + " rows");
      } catch (const std::exception& e) {
        result.errors.push_back(kd.slug + ": explanation failed: " + e.what());
        log(result.errors.back());
      }
    }
  }

  // Index.
  json cells_index = json::array();
  std::ostringstream md;
  md << Provenance(config_json, cfg.seed) << "# Experiment index\n\n"
     << "| Model | Treatment | Learner | Status |\n|---|---|---|---|\n";
  for (const auto& c : result.cells) {
    const std::string status = c.error.empty() ? "ok" : "failed: " + c.error;
    md << "| " << c.key.Display() << " | " << TreatmentName(c.treatment) << " | "
       << ModelKindName(c.learner) << " | " << status << " |\n";
    cells_index.push_back({{"key", KeyJson(c.key)},
                           {"treatment", TreatmentName(c.treatment)},
                           {"learner", ModelKindName(c.learner)},
                           {"path", c.error.empty() ? "cells/" + c.key.Slug() + "/" +
                                                          std::string(TreatmentName(c.treatment)) +
                                                          "/" + std::string(ModelKindName(c.learner))
                                                    : ""},
                           {"error", c.error}});
    if (!c.error.empty()) {
      result.errors.push_back(c.key.Slug() + "/" + std::string(TreatmentName(c.treatment)) + "/" +
                              std::string(ModelKindName(c.learner)) + ": " + c.error);
    }
  }
  WriteFile(root / "index.md", md.str());
  WriteFile(root / "index.json", Dump({{"seed", cfg.seed},
                                       {"keys", index_keys},
                                       {"cells", cells_index},
                                       {"failed_cells", result.failed_cells()}}));
  log("done: " + std::to_string(result.cells.size() - result.failed_cells()) + " of " +
      std::to_string(result.cells.size()) + " cells succeeded");
  WriteFile(root / "log.txt", log_buffer.str());
  return result;
}

}  // namespace dropwatch
