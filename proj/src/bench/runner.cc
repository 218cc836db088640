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

#include <nlohmann/json.hpp>

#include "ktboost/bench.h"

namespace ktboost::bench {
namespace {

using nlohmann::json;

json optional_json(const std::optional<double>& v) { return v ? json(*v) : json(nullptr); }

json vector_json(const Vector& v) { return json(std::vector<double>(v.data(), v.data() + v.size())); }

json config_to_json(const GridConfig& grid_config, int selected_iterations) {
  const BoostConfig& c = grid_config.config;
  return {
      {"learners", to_string(c.learners)},
      {"max_iterations", c.max_iterations},
      {"selected_iterations", selected_iterations},
      {"nu", c.nu},
      {"newton", c.newton},
      {"max_depth", c.tree.max_depth},
      {"min_samples_leaf", c.tree.min_samples_leaf},
      {"rho", optional_json(c.rho)},
      {"rho_label", grid_config.rho_label},
      {"lambda", c.lambda},
      {"nystrom_samples", c.nystrom_samples ? json(*c.nystrom_samples) : json(nullptr)},
      {"seed", c.seed},
      {"selection", to_string(c.selection)},
      {"standardize", c.standardize},
  };
}

struct BenchmarkJob {
  std::size_t dataset;
  int split;
  std::size_t method;
};

}  // namespace

std::string config_json(const GridConfig& config, int selected_iterations) {
  return config_to_json(config, selected_iterations).dump();
}

std::string comparison_json(const ComparisonTable& table) {
  json doc;
  doc["datasets"] = table.datasets;
  doc["methods"] = table.methods;
  doc["average_ranks"] = vector_json(table.average_ranks);
  if (table.friedman) {
    doc["friedman"] = {{"chi_square", table.friedman->chi_square},
                       {"f_statistic", table.friedman->f_statistic},
                       {"df1", table.friedman->df1},
                       {"df2", table.friedman->df2},
                       {"p_value", table.friedman->p_value}};
  } else {
    doc["friedman"] = nullptr;
  }
  json sign = json::object();
  for (std::size_t m = 1; m < table.methods.size(); ++m) {
    sign[table.methods[0] + "_vs_" + table.methods[m]] =
        optional_json(table.sign_test_adjusted[m - 1]);
  }
  doc["sign_test_holm"] = std::move(sign);
  return doc.dump() + "\n";
}

BenchmarkResult run_benchmark(const std::vector<NamedDataset>& datasets,
                              const BenchmarkOptions& options) {
  if (datasets.empty()) throw DataError("benchmark needs at least one dataset");
  if (options.methods.empty()) throw DataError("benchmark needs at least one method");
  if (options.splits < 1) throw DataError("benchmark needs at least one split");

  std::vector<BenchmarkJob> jobs;
  for (std::size_t d = 0; d < datasets.size(); ++d) {
    for (int s = 0; s < options.splits; ++s) {
      for (std::size_t m = 0; m < options.methods.size(); ++m) jobs.push_back({d, s, m});
    }
  }
  std::vector<std::optional<BenchmarkRecord>> records(jobs.size());
  std::vector<std::string> errors(jobs.size());

  parallel_for(jobs.size(), options.jobs, [&](std::size_t j) {
    const BenchmarkJob& job = jobs[j];
    const NamedDataset& named = datasets[job.dataset];
    const LearnerSet method = options.methods[job.method];
    const std::uint64_t split_seed = options.seed + static_cast<std::uint64_t>(job.split);
    try {
      const auto [train, validation, test] = split(named.data, SplitSpec{{1.0 / 3, 1.0 / 3, 1.0 / 3}, split_seed});
      GridSpec spec = options.grid;
      spec.base.newton = options.newton.value_or(named.data.task() != Task::kRegression);
      GridResult grid = grid_search(train, validation, spec, method, 1);
      const double test_metric =
          metric(test.task(), test.targets(), grid.best_ensemble.predict(test.features()));
      records[j] = BenchmarkRecord{named.name, method,        split_seed,
                                   grid.best,  grid.best_iterations, grid.best_validation_metric,
                                   test_metric};
    } catch (const Error& e) {
      errors[j] = named.name + "/" + to_string(method) + "/split " + std::to_string(job.split) +
                  ": " + e.what();
    }
  });

  BenchmarkResult result;
  // metrics[d][m] over splits, for the comparison table.
  std::vector<std::vector<std::vector<double>>> metrics(
      datasets.size(), std::vector<std::vector<double>>(options.methods.size()));
  for (std::size_t j = 0; j < jobs.size(); ++j) {
    if (records[j]) {
      metrics[jobs[j].dataset][jobs[j].method].push_back(records[j]->test_metric);
      result.records.push_back(std::move(*records[j]));
    } else {
      result.failures.push_back(errors[j]);
    }
  }

  std::vector<std::string> names;
  std::vector<std::vector<std::vector<double>>> complete;
  for (std::size_t d = 0; d < datasets.size(); ++d) {
    bool ok = true;
    for (const auto& values : metrics[d]) ok = ok && !values.empty();
    if (ok) {
      names.push_back(datasets[d].name);
      complete.push_back(std::move(metrics[d]));
    } else {
      result.failures.push_back(datasets[d].name + ": excluded from the comparison table");
    }
  }
  std::vector<std::string> methods;
  for (LearnerSet m : options.methods) methods.push_back(to_string(m));
  result.table = build_comparison(std::move(names), std::move(methods), complete);
  return result;
}

std::string manifest_json(const BenchmarkResult& result) {
  json doc = json::array();
  for (const BenchmarkRecord& r : result.records) {
    doc.push_back({{"dataset", r.dataset},
                   {"method", to_string(r.method)},
                   {"split_seed", r.split_seed},
                   {"config", config_to_json(r.config, r.iterations)},
                   {"validation_metric", r.validation_metric},
                   {"test_metric", r.test_metric}});
  }
  return doc.dump() + "\n";
}

BoostConfig SimulationStudyOptions::default_config() {
  BoostConfig config;
  config.max_iterations = 1000;
  config.nu = 0.1;
  config.tree.max_depth = 1;
  config.rho = 0.1;
  config.lambda = 1.0;
  config.standardize = false;
  return config;
}

SimulationStudyResult run_simulation_study(const SimulationStudyOptions& options) {
  if (options.replications < 1) throw DataError("at least one replication is required");
  if (options.methods.empty()) throw DataError("at least one method is required");
  const auto reps = static_cast<std::size_t>(options.replications);
  const std::size_t nm = options.methods.size();

  SimulationStudyResult result;
  result.methods = options.methods;
  result.grid = unit_grid(options.grid_points);
  result.test_mse.resize(options.replications, static_cast<Index>(nm));
  result.noisy_test_mse.resize(options.replications, static_cast<Index>(nm));
  result.selected_iterations.assign(reps, std::vector<int>(nm, 0));
  std::vector<std::vector<Vector>> squared(reps, std::vector<Vector>(nm));

  parallel_for(reps, options.jobs, [&](std::size_t r) {
    const SimFunction sim = SimFunction::draw(derive_seed(options.seed, r, 0));
    const Dataset train = simulate(sim, options.n, derive_seed(options.seed, r, 1));
    const Dataset validation = simulate(sim, options.n, derive_seed(options.seed, r, 2));
    const Dataset test = simulate(sim, options.n, derive_seed(options.seed, r, 3));
    for (std::size_t m = 0; m < nm; ++m) {
      BoostConfig config = options.config;
      config.learners = options.methods[m];
      const FitResult fitted = fit(train, config, validation);
      const int selected = fitted.report.selected_iterations;
      result.selected_iterations[r][m] = selected;
      squared[r][m] = pointwise_squared_error(fitted.ensemble, sim, result.grid, selected);
      const Matrix scores = fitted.ensemble.predict(test.features(), selected);
      double truth_se = 0.0;
      for (Index i = 0; i < test.n(); ++i) {
        const double e = scores(i, 0) - sim(test.features()(i, 0));
        truth_se += e * e;
      }
      const auto ri = static_cast<Index>(r);
      const auto mi = static_cast<Index>(m);
      result.test_mse(ri, mi) = truth_se / static_cast<double>(test.n());
      result.noisy_test_mse(ri, mi) = metric(Task::kRegression, test.targets(), scores);
    }
  });

  result.pointwise_mse.resize(result.grid.size(), static_cast<Index>(nm));
  for (std::size_t m = 0; m < nm; ++m) {
    PointwiseMse acc(result.grid);
    for (std::size_t r = 0; r < reps; ++r) acc.add_squared_errors(squared[r][m]);
    result.pointwise_mse.col(static_cast<Index>(m)) = acc.mean();
  }
  return result;
}

std::string simulation_manifest_json(const SimulationStudyResult& result,
                                     const SimulationStudyOptions& options) {
  json replications = json::array();
  for (std::size_t r = 0; r < result.selected_iterations.size(); ++r) {
    const std::uint64_t sim_seed = derive_seed(options.seed, r, 0);
    const SimFunction sim = SimFunction::draw(sim_seed);
    json per_method = json::object();
    for (std::size_t m = 0; m < result.methods.size(); ++m) {
      const auto ri = static_cast<Index>(r);
      const auto mi = static_cast<Index>(m);
      per_method[to_string(result.methods[m])] = {
          {"selected_iterations", result.selected_iterations[r][m]},
          {"test_mse", result.test_mse(ri, mi)},
          {"noisy_test_mse", result.noisy_test_mse(ri, mi)}};
    }
    replications.push_back({{"replication", r},
                            {"sim_seed", sim_seed},
                            {"jump_locations", sim.jump_locations},
                            {"jump_sizes", sim.jump_sizes},
                            {"methods", std::move(per_method)}});
  }
  json pointwise = json::object();
  for (std::size_t m = 0; m < result.methods.size(); ++m) {
    pointwise[to_string(result.methods[m])] =
        vector_json(result.pointwise_mse.col(static_cast<Index>(m)));
  }
  const json doc = {
      {"seed", options.seed},
      {"n", options.n},
      {"replications_count", options.replications},
      {"config", config_to_json({options.config, ""}, options.config.max_iterations)},
      {"grid", vector_json(result.grid)},
      {"pointwise_mse", std::move(pointwise)},
      {"replications", std::move(replications)},
  };
  return doc.dump() + "\n";
}

}  // namespace ktboost::bench
