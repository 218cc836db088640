/*
 * Copyright 2026 The ktboost Authors.
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

#include <pybind11/eigen.h>
#include <pybind11/functional.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include "ktboost/bench.h"
#include "ktboost/boost.h"

namespace py = pybind11;
using namespace ktboost;

namespace {

Dataset make_dataset(RowMatrix x, Vector y, const std::string& task, int num_classes) {
  return Dataset(std::move(x), std::move(y), parse_task(task), num_classes);
}

BoostConfig make_config(int max_iterations, double nu, bool newton, int max_depth,
                        int min_samples_leaf, std::optional<double> rho,
                        const std::string& rho_mode, int rho_knn, double lambda,
                        std::optional<Index> nystrom_samples, std::uint64_t seed,
                        const std::string& learners, const std::string& selection,
                        bool standardize, std::optional<int> early_stopping_rounds) {
  BoostConfig c;
  c.max_iterations = max_iterations;
  c.nu = nu;
  c.newton = newton;
  c.tree.max_depth = max_depth;
  c.tree.min_samples_leaf = min_samples_leaf;
  c.rho = rho;
  if (rho_mode == "decay01") {
    c.rho_mode = RhoMode::kDecay01;
  } else if (rho_mode == "slow") {
    c.rho_mode = RhoMode::kSlow;
  } else {
    throw DataError("rho_mode must be 'decay01' or 'slow'");
  }
  c.rho_knn = rho_knn;
  c.lambda = lambda;
  c.nystrom_samples = nystrom_samples;
  c.seed = seed;
  c.learners = parse_learner_set(learners);
  c.selection = parse_selection_mode(selection);
  c.standardize = standardize;
  c.early_stopping_rounds = early_stopping_rounds;
  c.validate();
  return c;
}

}  // namespace

PYBIND11_MODULE(_ktboost, m) {
  m.doc() = "Boosting with kernel ridge and tree base learners";

  static py::exception<Error> error(m, "Error");
  static py::exception<DataError> data_error(m, "DataError", error.ptr());
  static py::exception<FormatError> format_error(m, "FormatError", data_error.ptr());
  static py::exception<NumericalError> numerical_error(m, "NumericalError", error.ptr());
  py::register_exception_translator([](std::exception_ptr p) {
    try {
      if (p) std::rethrow_exception(p);
    } catch (const FormatError& e) {
      PyErr_SetString(format_error.ptr(), e.what());
    } catch (const DataError& e) {
      PyErr_SetString(data_error.ptr(), e.what());
    } catch (const NumericalError& e) {
      PyErr_SetString(numerical_error.ptr(), e.what());
    } catch (const Error& e) {
      PyErr_SetString(error.ptr(), e.what());
    }
  });

  py::class_<Dataset>(m, "Dataset")
      .def(py::init(&make_dataset), py::arg("x"), py::arg("y"), py::arg("task") = "regression",
           py::arg("num_classes") = 1)
      .def_property_readonly("x", &Dataset::features)
      .def_property_readonly("y", &Dataset::targets)
      .def_property_readonly("task", [](const Dataset& d) { return to_string(d.task()); })
      .def_property_readonly("num_classes", &Dataset::num_classes)
      .def_property_readonly("label_map", &Dataset::label_map)
      .def_property_readonly("n", &Dataset::n)
      .def_property_readonly("p", &Dataset::p);

  m.def(
      "load_csv",
      [](const std::filesystem::path& path, const std::string& task, std::optional<int> target,
         bool header) {
        CsvOptions options;
        options.task = parse_task(task);
        options.target_column = target.value_or(-1);
        options.header = header;
        return load_csv(path, options);
      },
      py::arg("path"), py::arg("task") = "regression", py::arg("target") = py::none(),
      py::arg("header") = true);
  m.def(
      "split",
      [](const Dataset& data, std::uint64_t seed) {
        auto parts = split(data, SplitSpec{{1.0 / 3, 1.0 / 3, 1.0 / 3}, seed});
        return py::make_tuple(parts[0], parts[1], parts[2]);
      },
      py::arg("data"), py::arg("seed") = 0);

  py::class_<BoostConfig>(m, "BoostConfig")
      .def(py::init(&make_config), py::kw_only(), py::arg("max_iterations") = 100,
           py::arg("nu") = 0.1, py::arg("newton") = false, py::arg("max_depth") = 1,
           py::arg("min_samples_leaf") = 1, py::arg("rho") = py::none(),
           py::arg("rho_mode") = "decay01", py::arg("rho_knn") = 5, py::arg("lambda_") = 1.0,
           py::arg("nystrom_samples") = py::none(), py::arg("seed") = 0,
           py::arg("learners") = "ktboost", py::arg("selection") = "damped",
           py::arg("standardize") = true, py::arg("early_stopping_rounds") = py::none())
      .def_readonly("max_iterations", &BoostConfig::max_iterations)
      .def_readonly("nu", &BoostConfig::nu)
      .def_readonly("newton", &BoostConfig::newton)
      .def_readonly("lambda_", &BoostConfig::lambda)
      .def_readonly("rho", &BoostConfig::rho);

  py::class_<Ensemble>(m, "Ensemble")
      .def("predict", &Ensemble::predict, py::arg("x"), py::arg("truncate_at") = py::none())
      .def("predict_proba", &Ensemble::predict_proba, py::arg("x"),
           py::arg("truncate_at") = py::none())
      .def("predict_labels", &Ensemble::predict_labels, py::arg("x"),
           py::arg("truncate_at") = py::none())
      .def("truncated", &Ensemble::truncated, py::arg("m"))
      .def("to_json", [](const Ensemble& e) { return to_json(e); })
      .def_static("from_json", &from_json, py::arg("text"))
      .def("save", [](const Ensemble& e, const std::filesystem::path& p) { save(e, p); })
      .def_static("load", [](const std::filesystem::path& p) { return load(p); })
      .def_property_readonly("num_iterations", &Ensemble::num_iterations)
      .def_property_readonly("num_features", &Ensemble::num_features)
      .def_property_readonly("task", [](const Ensemble& e) { return to_string(e.task()); })
      .def_property_readonly("f0", &Ensemble::f0)
      .def_property_readonly("nu", &Ensemble::nu)
      .def_property_readonly("label_map", &Ensemble::label_map)
      .def_property_readonly("tags", [](const Ensemble& e) {
        std::vector<std::string> tags;
        for (const auto& it : e.iterations()) tags.push_back(to_string(it.tag));
        return tags;
      });

  py::class_<FitReport>(m, "FitReport")
      .def_readonly("initial_risk", &FitReport::initial_risk)
      .def_readonly("train_risk", &FitReport::train_risk)
      .def_readonly("validation_risk", &FitReport::validation_risk)
      .def_readonly("selected_iterations", &FitReport::selected_iterations)
      .def_readonly("rho", &FitReport::rho)
      .def_property_readonly("chosen", [](const FitReport& r) {
        std::vector<std::string> out;
        for (LearnerTag t : r.chosen) out.push_back(to_string(t));
        return out;
      });

  m.def(
      "fit",
      [](const Dataset& train, const BoostConfig& config, std::optional<Dataset> validation) {
        std::optional<FitResult> result;
        {
          py::gil_scoped_release release;
          result.emplace(validation ? fit(train, config, *validation) : fit(train, config));
        }
        return py::make_tuple(std::move(result->ensemble), std::move(result->report));
      },
      py::arg("train"), py::arg("config"), py::arg("validation") = py::none());

  m.def("kernel_matrix", py::overload_cast<const RowMatrix&, const RowMatrix&, double>(&kernel_matrix),
        py::arg("a"), py::arg("b"), py::arg("rho"));
  m.def(
      "select_rho",
      [](const RowMatrix& x, int k, const std::string& mode) {
        return select_rho(x, k, mode == "slow" ? RhoMode::kSlow : RhoMode::kDecay01);
      },
      py::arg("x"), py::arg("k") = 5, py::arg("mode") = "decay01");

  auto bench_module = m.def_submodule("bench", "Experiment harness");
  bench_module.def(
      "simulate",
      [](std::uint64_t function_seed, Index n, std::uint64_t data_seed) {
        return bench::simulate(bench::SimFunction::draw(function_seed), n, data_seed);
      },
      py::arg("function_seed"), py::arg("n"), py::arg("data_seed"));
  bench_module.def(
      "metric",
      [](const std::string& task, const Vector& y, const Matrix& scores) {
        return bench::metric(parse_task(task), y, scores);
      },
      py::arg("task"), py::arg("targets"), py::arg("scores"));
  bench_module.def(
      "friedman_iman_davenport",
      [](const Vector& average_ranks, int num_datasets) {
        const auto r = bench::friedman_iman_davenport(average_ranks, num_datasets);
        return py::make_tuple(r.f_statistic, r.p_value);
      },
      py::arg("average_ranks"), py::arg("num_datasets"));
  bench_module.def("sign_test", &bench::sign_test, py::arg("wins"), py::arg("losses"));
  bench_module.def(
      "holm_adjust", [](const std::vector<double>& p) { return bench::holm_adjust(p); },
      py::arg("p_values"));
}
