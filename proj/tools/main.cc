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

// dropwatch: command-line front end for the dropout early-warning pipeline.

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "dropwatch/design_matrix.h"
#include "dropwatch/experiment.h"
#include "dropwatch/generator.h"
#include "dropwatch/imbalance.h"
#include "dropwatch/learners.h"
#include "dropwatch/metrics.h"
#include "dropwatch/shap.h"
#include "dropwatch/splits.h"
#include "dropwatch/svg.h"
#include "json.hpp"

namespace dw = dropwatch;
namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr int kExitUsage = 1;
constexpr int kExitData = 2;
constexpr int kExitInternal = 3;

json ReadJsonFile(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::invalid_argument("cannot open '" + path + "'");
  try {
    return json::parse(in);
  } catch (const json::exception& e) {
    throw dw::DataError("'" + path + "' is not valid JSON: " + e.what());
  }
}

void WriteText(const std::string& path, const std::string& text) {
  if (path.empty() || path == "-") {
    std::cout << text;
    return;
  }
  const fs::path p(path);
  if (p.has_parent_path()) fs::create_directories(p.parent_path());
  std::ofstream out(p, std::ios::binary);
  if (!out) throw dw::DataError("cannot open '" + path + "' for writing");
  out << text;
}

void WriteJson(const std::string& path, const json& j) { WriteText(path, j.dump(2) + "\n"); }

dw::ModelKey ParseKey(const std::string& s) {
  std::vector<int> v;
  std::stringstream ss(s);
  std::string part;
  while (std::getline(ss, part, ',')) {
    try {
      v.push_back(std::stoi(part));
    } catch (const std::exception&) {
      throw std::invalid_argument("model key must look like i,j,k (got '" + s + "')");
    }
  }
  if (v.size() != 3) throw std::invalid_argument("model key must look like i,j,k (got '" + s + "')");
  return dw::ModelKey(v[0], v[1], dw::LevelId(v[2]));
}

struct Options {
  // generate
  std::string gen_config;
  int n_students = 0;
  int64_t gen_seed = -1;
  // shared
  std::string out;
  std::string cohort;
  std::string matrix;
  std::string model;
  std::string key;
  uint64_t seed = 1;
  // prep
  std::string plan;
  std::string split_file;
  // split
  std::string strategy = "guided_random";
  double fraction = 0.2;
  int test_years = 1;
  std::string train_out;
  std::string test_out;
  // train
  std::string learner = "gbdt";
  std::string treatment = "class_weights";
  std::string learner_config;
  int smote_k = 5;
  int threads = 1;
  // eval / sweep
  double threshold = 0.5;
  std::vector<double> grid;
  std::string markdown;
  // explain
  std::string background_matrix;
  int background = 256;
  int rows = 200;
  int top_k = 8;
  // run
  std::string config;
  bool demo = false;
  int jobs = 0;
};

int Generate(const Options& o) {
  dw::synth::GeneratorConfig cfg = o.gen_config.empty()
                                       ? dw::synth::GeneratorConfig::Default()
                                       : dw::synth::GeneratorConfig::FromJson(ReadJsonFile(o.gen_config));
  if (o.n_students > 0) cfg.n_students = o.n_students;
  if (o.gen_seed >= 0) cfg.seed = static_cast<uint64_t>(o.gen_seed);
  const dw::Cohort cohort = dw::synth::Generate(cfg);
  std::ostringstream os;
  dw::WriteCohortCsv(cohort, os);
  WriteText(o.out, os.str());
  std::cerr << "generated " << cohort.size() << " student-year records\n";
  return 0;
}

int Prep(const Options& o) {
  const dw::Cohort cohort = dw::ReadCohortCsv(o.cohort);
  const dw::ModelKey key = ParseKey(o.key);
  const auto plan =
      o.plan.empty() ? dw::prep::PreprocessPlan{} : dw::prep::PreprocessPlan::FromJson(ReadJsonFile(o.plan));
  const auto rows = dw::EnumerateEligibleRows(cohort, key);
  std::vector<dw::EligibleRow> fit_rows = rows;
  if (!o.split_file.empty()) {
    const auto split = dw::SplitResult::FromJson(ReadJsonFile(o.split_file));
    split.Validate(rows.size());
    fit_rows.clear();
    for (size_t r : split.train_rows) fit_rows.push_back(rows[r]);
  }
  const auto pre = dw::FitPreprocessor(cohort, fit_rows, plan);
  const dw::DesignMatrix dm = dw::BuildDesignMatrix(cohort, key, rows, pre);
  std::ostringstream os;
  dw::WriteDesignMatrixCsv(dm, os);
  WriteText(o.out, os.str());
  std::cerr << key.Display() << ": " << dm.rows() << " rows x " << dm.cols() << " features\n";
  return 0;
}

int Split(const Options& o) {
  const dw::DesignMatrix dm = dw::ReadDesignMatrixCsv(o.matrix);
  dw::SplitConfig cfg;
  cfg.strategy = dw::ParseSplitStrategy(o.strategy);
  cfg.test_fraction = o.fraction;
  cfg.school_fraction = o.fraction;
  cfg.test_years = o.test_years;
  const dw::SplitResult split = dw::ApplySplit(cfg, dm.provenance, o.seed);
  WriteJson(o.out, split.ToJson());
  if (!o.train_out.empty()) dw::WriteDesignMatrixCsv(dm.Subset(split.train_rows), o.train_out);
  if (!o.test_out.empty()) dw::WriteDesignMatrixCsv(dm.Subset(split.test_rows), o.test_out);
  std::cerr << "train " << split.train_rows.size() << ", test " << split.test_rows.size() << "\n";
  return 0;
}

int Train(const Options& o) {
  const dw::DesignMatrix dm = dw::ReadDesignMatrixCsv(o.matrix);
  const dw::ModelKind kind = dw::ParseModelKind(o.learner);
  const dw::Treatment treatment = dw::ParseTreatment(o.treatment);
  dw::LearnerConfigs configs = o.learner_config.empty()
                                   ? dw::LearnerConfigs{}
                                   : dw::LearnerConfigs::FromJson(ReadJsonFile(o.learner_config));
  for (dw::TrainConfig* c : {&configs.tree, &configs.forest, &configs.gbdt}) {
    if (o.learner_config.empty()) c->seed = o.seed;
    c->n_threads = o.threads;
  }
  const dw::TreatedData data =
      dw::ApplyTreatment(treatment, dm.x, dm.LabelValues(), o.smote_k, o.seed);
  dw::TrainedModel model = dw::TrainModel(kind, data.x, data.y, data.weights, configs, dm.feature_names);
  model.metadata.key = dm.key;
  model.metadata.treatment = std::string(dw::TreatmentName(treatment));
  for (auto& m : model.members) {
    m.metadata.key = dm.key;
    m.metadata.treatment = model.metadata.treatment;
  }
  WriteJson(o.out, dw::ModelToJson(model));
  std::cerr << "trained " << dw::ModelKindName(kind) << " on " << data.y.size() << " rows\n";
  return 0;
}

json EvalMetadata(const Options& o, const dw::TrainedModel& model, const dw::DesignMatrix& dm) {
  return {{"model_file", o.model},
          {"matrix_file", o.matrix},
          {"learner", dw::ModelKindName(model.kind)},
          {"treatment", model.metadata.treatment},
          {"learner_config", model.metadata.config.ToJson()},
          {"seed", model.metadata.seed},
          {"rows", dm.rows()}};
}

int Eval(const Options& o) {
  const dw::TrainedModel model = dw::LoadModel(o.model);
  const dw::DesignMatrix dm = dw::ReadDesignMatrixCsv(o.matrix);
  const auto probs = model.PredictProba(dm.x, dm.feature_names);
  dw::EvalReport report = dw::Evaluate(dm.LabelValues(), probs, o.threshold);
  report.metadata = EvalMetadata(o, model, dm);
  WriteJson(o.out, report.ToJson());
  if (!o.markdown.empty()) {
    WriteText(o.markdown, dw::MetricsMarkdown({"Threshold"}, {{{dw::Fixed2(o.threshold)}, &report}}));
  }
  return 0;
}

int Sweep(const Options& o) {
  const dw::TrainedModel model = dw::LoadModel(o.model);
  const dw::DesignMatrix dm = dw::ReadDesignMatrixCsv(o.matrix);
  dw::CorrectorConfig cc;
  if (!o.grid.empty()) cc.grid = o.grid;
  cc.Validate();
  const auto probs = model.PredictProba(dm.x, dm.feature_names);
  auto sweep = dw::ThresholdSweep(probs, dm.LabelValues(), cc.grid);
  const json meta = EvalMetadata(o, model, dm);
  json reports = json::array();
  for (auto& r : sweep) {
    r.metadata = meta;
    reports.push_back(r.ToJson());
  }
  WriteJson(o.out, {{"config", meta}, {"reports", reports}});
  if (!o.markdown.empty()) WriteText(o.markdown, dw::SweepMarkdown(sweep));
  return 0;
}

int Explain(const Options& o) {
  const dw::TrainedModel model = dw::LoadModel(o.model);
  const dw::DesignMatrix dm = dw::ReadDesignMatrixCsv(o.matrix);
  const dw::DesignMatrix bg_source =
      o.background_matrix.empty() ? dm : dw::ReadDesignMatrixCsv(o.background_matrix);
  if (bg_source.feature_names != model.feature_names || dm.feature_names != model.feature_names) {
    throw std::invalid_argument("matrix columns do not match the model's features");
  }
  const auto background = dw::SampleBackground(bg_source.x, static_cast<size_t>(o.background),
                                               dw::StreamSeed(o.seed, "background"));
  const auto rows = dw::SampleBackground(dm.x, static_cast<size_t>(o.rows),
                                         dw::StreamSeed(o.seed, "explain"));
  const auto expl = dw::ExplainRows(model, rows, background, o.threads);
  const auto ranking = dw::RankImportance(expl, model.feature_names, o.top_k);
  if (!ranking.warning.empty()) std::cerr << "warning: " << ranking.warning << "\n";
  const fs::path dir = o.out.empty() ? fs::path("explain") : fs::path(o.out);
  json rj = ranking.ToJson();
  rj["seed"] = o.seed;
  rj["output_scale"] = dw::OutputScaleName(dw::ExplainedScale(model));
  rj["config"] = {{"model_file", o.model}, {"background", o.background}, {"rows", o.rows}};
  WriteJson((dir / "top_features.json").string(), rj);
  WriteText((dir / "top_features.md").string(), ranking.ToMarkdown());
  std::vector<std::string> labels;
  std::vector<double> values;
  for (const auto& e : ranking.entries) {
    labels.push_back(e.feature);
    values.push_back(e.mean_abs_phi);
  }
  WriteText((dir / "top_features.svg").string(),
            dw::svg::BarChart("Top features", labels, values, "mean |SHAP|"));
  WriteText((dir / "shap_values.csv").string(), dw::ShapCsv(expl, model.feature_names));
  std::cout << ranking.ToMarkdown();
  return 0;
}

int Report(const Options& o) {
  const dw::Cohort cohort = dw::ReadCohortCsv(o.cohort);
  const fs::path dir = o.out.empty() ? fs::path("rates") : fs::path(o.out);
  for (auto [g, name] : {std::pair{dw::RateGrouping::kLevel, "level"},
                         std::pair{dw::RateGrouping::kCycle, "cycle"}}) {
    const dw::RateTable t = dw::DropoutRateTable(cohort, g);
    WriteText((dir / (std::string("dropout_rate_by_") + name + ".md")).string(), t.ToMarkdown());
    WriteText((dir / (std::string("dropout_rate_by_") + name + ".csv")).string(), t.ToCsv());
    if (g == dw::RateGrouping::kCycle) std::cout << t.ToMarkdown();
  }
  return 0;
}

int Run(const Options& o) {
  if (o.demo == !o.config.empty()) {
    throw std::invalid_argument("run needs exactly one of --config or --demo");
  }
  dw::ExperimentConfig cfg = o.demo ? dw::ExperimentConfig::Demo() : dw::ExperimentConfig::Load(o.config);
  if (o.jobs > 0) cfg.jobs = o.jobs;
  const std::string out = dw::ResolveOutputDir(o.out.empty() ? cfg.output_dir : o.out);
  const auto result = dw::RunExperiment(cfg, out, &std::cerr);
  std::cout << "artifacts written to " << result.output_dir << "\n";
  if (result.failed_cells() > 0) {
    std::cerr << result.failed_cells() << " cell(s) failed; see index.md\n";
    return kExitData;
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"dropwatch: school dropout early-warning pipeline"};
  app.require_subcommand(1);
  Options o;

  auto* gen = app.add_subcommand("generate", "Generate a synthetic cohort CSV");
  gen->add_option("--config", o.gen_config, "Generator config JSON")->check(CLI::ExistingFile);
  gen->add_option("--n-students", o.n_students, "Override the number of students");
  gen->add_option("--seed", o.gen_seed, "Override the generator seed");
  gen->add_option("--out", o.out, "Output CSV ('-' for stdout)")->required();

  auto* prep = app.add_subcommand("prep", "Build the design matrix for a model key");
  prep->add_option("--cohort", o.cohort, "Cohort CSV")->required();
  prep->add_option("--key", o.key, "Model key i,j,k")->required();
  prep->add_option("--plan", o.plan, "Preprocess plan JSON");
  prep->add_option("--split", o.split_file, "Fit preprocessing on this split's training rows");
  prep->add_option("--out", o.out, "Output matrix CSV")->required();

  auto* split = app.add_subcommand("split", "Split a design matrix into train and test rows");
  split->add_option("--matrix", o.matrix, "Design matrix CSV")->required();
  split->add_option("--strategy", o.strategy, "guided_random | by_schools | by_years")
      ->check(CLI::IsMember({"guided_random", "by_schools", "by_years"}));
  split->add_option("--fraction", o.fraction, "Test fraction of rows or schools");
  split->add_option("--test-years", o.test_years, "Number of latest years held out (by_years)");
  split->add_option("--seed", o.seed, "Split seed");
  split->add_option("--out", o.out, "Output split JSON")->required();
  split->add_option("--train-out", o.train_out, "Also write the training matrix");
  split->add_option("--test-out", o.test_out, "Also write the test matrix");

  auto* train = app.add_subcommand("train", "Train a classifier on a design matrix");
  train->add_option("--matrix", o.matrix, "Training matrix CSV")->required();
  train->add_option("--learner", o.learner, "tree | forest | gbdt | ensemble")
      ->check(CLI::IsMember({"tree", "forest", "gbdt", "ensemble"}));
  train->add_option("--treatment", o.treatment, "baseline | class_weights | undersample | smote")
      ->check(CLI::IsMember({"baseline", "class_weights", "undersample", "smote"}));
  train->add_option("--learner-config", o.learner_config, "Learner configs JSON");
  train->add_option("--smote-k", o.smote_k, "SMOTE neighbors");
  train->add_option("--seed", o.seed, "Seed for resampling and learners");
  train->add_option("--threads", o.threads, "Forest training threads");
  train->add_option("--out", o.out, "Output model JSON")->required();

  auto* eval = app.add_subcommand("eval", "Evaluate a model with the prediction corrector");
  eval->add_option("--model", o.model, "Model JSON")->required();
  eval->add_option("--matrix", o.matrix, "Test matrix CSV")->required();
  eval->add_option("--threshold", o.threshold, "Dropout threshold")->check(CLI::Range(0.0, 1.0));
  eval->add_option("--out", o.out, "Report JSON (default stdout)");
  eval->add_option("--markdown", o.markdown, "Also write a Markdown table");

  auto* sweep = app.add_subcommand("sweep", "Evaluate a model over a threshold grid");
  sweep->add_option("--model", o.model, "Model JSON")->required();
  sweep->add_option("--matrix", o.matrix, "Test matrix CSV")->required();
  sweep->add_option("--grid", o.grid, "Thresholds (default 0.50..0.80 step 0.05)");
  sweep->add_option("--out", o.out, "Sweep JSON (default stdout)");
  sweep->add_option("--markdown", o.markdown, "Also write a Markdown table");

  auto* explain = app.add_subcommand("explain", "Rank features by mean absolute SHAP value");
  explain->add_option("--model", o.model, "Model JSON")->required();
  explain->add_option("--matrix", o.matrix, "Rows to explain")->required();
  explain->add_option("--background-matrix", o.background_matrix,
                      "Background rows (default --matrix)");
  explain->add_option("--background", o.background, "Background sample size")->check(CLI::PositiveNumber);
  explain->add_option("--rows", o.rows, "Rows explained")->check(CLI::PositiveNumber);
  explain->add_option("--top-k", o.top_k, "Features reported")->check(CLI::PositiveNumber);
  explain->add_option("--seed", o.seed, "Sampling seed");
  explain->add_option("--threads", o.threads, "Worker threads");
  explain->add_option("--out", o.out, "Output directory");

  auto* report = app.add_subcommand("report", "Dropout-rate tables for a cohort");
  report->add_option("--cohort", o.cohort, "Cohort CSV")->required();
  report->add_option("--out", o.out, "Output directory");

  auto* run = app.add_subcommand("run", "Run a full experiment from a config");
  run->add_option("--config", o.config, "Experiment config JSON")->check(CLI::ExistingFile);
  run->add_flag("--demo", o.demo, "Use the built-in demo config");
  run->add_option("--out", o.out, "Output directory (overrides the config)");
  run->add_option("--jobs", o.jobs, "Concurrent cells")->check(CLI::PositiveNumber);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitUsage;
  }

  try {
    if (*gen) return Generate(o);
    if (*prep) return Prep(o);
    if (*split) return Split(o);
    if (*train) return Train(o);
    if (*eval) return Eval(o);
    if (*sweep) return Sweep(o);
    if (*explain) return Explain(o);
    if (*report) return Report(o);
    if (*run) return Run(o);
  } catch (const dw::DataError& e) {
    std::cerr << "data error: " << e.what() << "\n";
    return kExitData;
  } catch (const std::invalid_argument& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const std::exception& e) {
    std::cerr << "internal error: " << e.what() << "\n";
    return kExitInternal;
  }
  return kExitUsage;
}
