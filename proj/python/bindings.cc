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

#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

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

namespace py = pybind11;
namespace dw = dropwatch;
using nlohmann::json;

namespace {

using Array = py::array_t<double, py::array::c_style | py::array::forcecast>;

dw::DenseMatrix ToMatrix(const Array& a) {
  if (a.ndim() != 2) throw std::invalid_argument("expected a 2-D array");
  return dw::DenseMatrix(static_cast<size_t>(a.shape(0)), static_cast<size_t>(a.shape(1)),
                         std::vector<double>(a.data(), a.data() + a.size()));
}

Array FromMatrix(const dw::DenseMatrix& m) {
  Array a({m.rows(), m.cols()});
  std::copy(m.data().begin(), m.data().end(), a.mutable_data());
  return a;
}

py::dict MatrixDict(const dw::DesignMatrix& dm) {
  py::dict d;
  d["x"] = FromMatrix(dm.x);
  d["y"] = dm.LabelValues();
  d["feature_names"] = dm.feature_names;
  std::vector<std::string> students;
  std::vector<int> years;
  std::vector<std::string> schools;
  for (const auto& p : dm.provenance) {
    students.push_back(p.student_id);
    years.push_back(p.anchor_year.start_year());
    schools.push_back(p.school_id);
  }
  d["student_id"] = students;
  d["anchor_year"] = years;
  d["school_id"] = schools;
  return d;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Native core of the dropwatch dropout early-warning pipeline";

  py::register_exception<dw::DataError>(m, "DataError", PyExc_ValueError);

  m.def(
      "generate_cohort_csv",
      [](const std::string& config_json, const std::string& path) {
        const auto cfg = dw::synth::GeneratorConfig::FromJson(json::parse(config_json));
        const dw::Cohort cohort = dw::synth::Generate(cfg);
        dw::WriteCohortCsv(cohort, path);
        return cohort.size();
      },
      py::arg("config_json"), py::arg("path"),
      "Generate a synthetic cohort and write it as CSV; returns the record count.");

  m.def("default_generator_config",
        [] { return dw::synth::GeneratorConfig::Default().ToJson().dump(); });

  m.def(
      "build_design_matrix",
      [](const std::string& cohort_csv, int i, int j, int k, const std::string& plan_json) {
        const dw::Cohort cohort = dw::ReadCohortCsv(cohort_csv);
        const auto plan = plan_json.empty() ? dw::prep::PreprocessPlan{}
                                            : dw::prep::PreprocessPlan::FromJson(json::parse(plan_json));
        const dw::ModelKey key(i, j, dw::LevelId(k));
        const auto rows = dw::EnumerateEligibleRows(cohort, key);
        const auto pre = dw::FitPreprocessor(cohort, rows, plan);
        return MatrixDict(dw::BuildDesignMatrix(cohort, key, rows, pre));
      },
      py::arg("cohort_csv"), py::arg("i"), py::arg("j"), py::arg("k"), py::arg("plan_json") = "");

  m.def(
      "read_design_matrix",
      [](const std::string& path) { return MatrixDict(dw::ReadDesignMatrixCsv(path)); },
      py::arg("path"));

  m.def(
      "guided_random_split",
      [](const std::vector<int>& years, double fraction, uint64_t seed) {
        std::vector<dw::RowProvenance> rows;
        for (size_t r = 0; r < years.size(); ++r) {
          rows.push_back({std::to_string(r), dw::AcademicYear(years[r]), "s"});
        }
        const auto s = dw::GuidedRandomSplit(rows, fraction, seed);
        return py::make_tuple(s.train_rows, s.test_rows);
      },
      py::arg("years"), py::arg("fraction"), py::arg("seed"));

  m.def(
      "smote",
      [](const Array& x, const std::vector<int>& y, int k, uint64_t seed) {
        const auto r = dw::Smote(ToMatrix(x), y, k, seed);
        std::vector<std::string> origin;
        for (auto o : r.origin) origin.emplace_back(dw::RowOriginName(o));
        py::dict d;
        d["x"] = FromMatrix(r.x);
        d["y"] = r.y;
        d["origin"] = origin;
        d["source"] = r.source;
        d["lambda"] = r.lambda;
        return d;
      },
      py::arg("x"), py::arg("y"), py::arg("k") = 5, py::arg("seed") = 1);

  m.def(
      "balanced_class_weights",
      [](const std::vector<int>& y) {
        const auto w = dw::BalancedClassWeights(y);
        return py::make_tuple(w.continue_weight, w.dropout_weight);
      },
      py::arg("y"));

  py::class_<dw::TrainedModel>(m, "Model")
      .def_property_readonly("kind",
                             [](const dw::TrainedModel& t) { return std::string(dw::ModelKindName(t.kind)); })
      .def_property_readonly("feature_names",
                             [](const dw::TrainedModel& t) { return t.feature_names; })
      .def_property_readonly("num_trees", [](const dw::TrainedModel& t) { return t.trees.size(); })
      .def(
          "predict_proba",
          [](const dw::TrainedModel& t, const Array& x) { return t.PredictProba(ToMatrix(x)); },
          py::arg("x"))
      .def("to_json", [](const dw::TrainedModel& t) { return dw::ModelToJson(t).dump(); })
      .def_static(
          "from_json", [](const std::string& s) { return dw::ModelFromJson(json::parse(s)); },
          py::arg("text"));

  m.def(
      "train",
      [](const std::string& kind, const Array& x, const std::vector<int>& y,
         const std::vector<double>& weights, const std::string& configs_json) {
        const auto configs = configs_json.empty() ? dw::LearnerConfigs{}
                                                  : dw::LearnerConfigs::FromJson(json::parse(configs_json));
        const dw::DenseMatrix mx = ToMatrix(x);
        std::vector<std::string> names;
        for (size_t c = 0; c < mx.cols(); ++c) names.push_back("f" + std::to_string(c));
        py::gil_scoped_release release;
        return dw::TrainModel(dw::ParseModelKind(kind), mx, y, weights, configs, names);
      },
      py::arg("kind"), py::arg("x"), py::arg("y"), py::arg("weights") = std::vector<double>{},
      py::arg("configs_json") = "");

  m.def(
      "gbdt_loss_trace",
      [](const Array& x, const std::vector<int>& y, const std::vector<double>& weights,
         int n_trees, double learning_rate) {
        dw::TrainConfig cfg = dw::DefaultTrainConfig(dw::ModelKind::kGbdt);
        cfg.n_trees = n_trees;
        cfg.learning_rate = learning_rate;
        std::vector<double> trace;
        dw::TrainGbdt(ToMatrix(x), y, weights, cfg, &trace);
        return trace;
      },
      py::arg("x"), py::arg("y"), py::arg("weights") = std::vector<double>{},
      py::arg("n_trees") = 50, py::arg("learning_rate") = 0.1);

  m.def(
      "evaluate",
      [](const std::vector<int>& labels, const std::vector<double>& probs, double threshold) {
        return dw::Evaluate(labels, probs, threshold).ToJson().dump();
      },
      py::arg("labels"), py::arg("probs"), py::arg("threshold") = 0.5);

  m.def(
      "threshold_sweep",
      [](const std::vector<double>& probs, const std::vector<int>& labels,
         const std::vector<double>& grid) {
        json out = json::array();
        for (const auto& r : dw::ThresholdSweep(probs, labels, grid)) out.push_back(r.ToJson());
        return out.dump();
      },
      py::arg("probs"), py::arg("labels"), py::arg("grid"));

  m.def("roc_auc", [](const std::vector<int>& labels, const std::vector<double>& scores) {
    return dw::RocAuc(labels, scores);
  });

  m.def(
      "tree_shap",
      [](const dw::TrainedModel& model, const std::vector<double>& x, const Array& background) {
        const auto s = dw::TreeShap(model, x, ToMatrix(background));
        return py::make_tuple(s.phi, s.base_value, std::string(dw::OutputScaleName(s.scale)));
      },
      py::arg("model"), py::arg("x"), py::arg("background"));

  m.def(
      "explained_output",
      [](const dw::TrainedModel& model, const std::vector<double>& x) {
        return dw::ExplainedOutput(model, x);
      },
      py::arg("model"), py::arg("x"));

  m.def(
      "run_experiment",
      [](const std::string& config_json, const std::string& output_dir, const std::string& base_dir) {
        const auto cfg = dw::ExperimentConfig::FromJson(json::parse(config_json), base_dir);
        dw::ExperimentResult r;
        {
          py::gil_scoped_release release;
          r = dw::RunExperiment(cfg, output_dir);
        }
        py::dict d;
        d["output_dir"] = r.output_dir;
        d["cells"] = r.cells.size();
        d["failed_cells"] = r.failed_cells();
        d["errors"] = r.errors;
        return d;
      },
      py::arg("config_json"), py::arg("output_dir"), py::arg("base_dir") = "");

  m.def("demo_config", [] { return dw::ExperimentConfig::Demo().ToJson().dump(); });
}
