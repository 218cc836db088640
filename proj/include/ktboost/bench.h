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

// Experiment harness: the jump-plus-sine simulation, validation-based grid
// search over repeated random splits, test metrics, and the rank-based
// significance tests used to compare boosting variants across datasets.

#ifndef KTBOOST_BENCH_H_
#define KTBOOST_BENCH_H_

#include <array>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "ktboost/boost.h"
#include "ktboost/common.h"
#include "ktboost/data.h"

namespace ktboost::bench {

// ---------------------------------------------------------------------------
// Simulation

// F(x) = sum_i g_i 1{t_i < x <= 1} + sin(8 pi x) on [0, 1].
struct SimFunction {
  std::array<double, 5> jump_locations{};  // t_i ~ Unif(0, 0.5)
  std::array<double, 5> jump_sizes{};      // g_i ~ Unif(0, 5)
  double noise_sd = 0.25;

  static SimFunction draw(std::uint64_t seed);
  double operator()(double x) const;
};

// x ~ Unif(0, 1), y = F(x) + N(0, noise_sd^2); one-feature regression data.
Dataset simulate(const SimFunction& sim, Index n, std::uint64_t data_seed);

// Running average over replications of (F_hat(x) - F(x))^2 on a grid.
class PointwiseMse {
 public:
  explicit PointwiseMse(Vector grid);

  // Adds one replication; `truncate_at` selects F_m.
  void add(const Ensemble& model, const SimFunction& sim, std::optional<int> truncate_at = {});
  // Adds precomputed squared errors for one replication.
  void add_squared_errors(const Vector& squared_errors);

  const Vector& grid() const { return grid_; }
  int replications() const { return count_; }
  Vector mean() const;

 private:
  Vector grid_;
  Vector total_;
  int count_ = 0;
};

// Squared estimation error of one model at each grid point.
Vector pointwise_squared_error(const Ensemble& model, const SimFunction& sim, const Vector& grid,
                               std::optional<int> truncate_at = {});

// Mean over models[r] / sims[r] of the pointwise squared error.
Vector pointwise_mse(std::span<const Ensemble> models, std::span<const SimFunction> sims,
                     const Vector& grid);

// `count` equally spaced cell midpoints of [0, 1].
Vector unit_grid(int count);

// ---------------------------------------------------------------------------
// Metrics

// Regression: mean squared error of the scores. Classification:
// misclassification rate of the argmax labels.
double metric(Task task, const Vector& targets, const Matrix& scores);

// ---------------------------------------------------------------------------
// Grid search

struct GridSpec {
  std::vector<double> nu{1.0, 1e-1, 1e-2, 1e-3};
  std::vector<int> max_depth{1, 5, 10};
  std::vector<double> lambda{1.0, 10.0};
  // Neighbor counts for decay01 ranges; values >= m are replaced by m - 1,
  // which is always included. A slow-decay range is appended.
  std::vector<int> knn{5, 50, 500, 5000};
  bool include_slow = true;
  int max_iterations = 1000;

  // Settings shared by every configuration (newton, selection, Nystrom,
  // seed, min_samples_leaf, standardize).
  BoostConfig base;
};

// One grid point; `rho_label` describes how rho was derived.
struct GridConfig {
  BoostConfig config;
  std::string rho_label;
};

// Canonical enumeration order: nu, then depth, then lambda, then rho.
// Tree-only grids skip the kernel axes and kernel-only grids skip depth.
// `rho_rows` are the rows nearest-neighbor distances are computed on.
std::vector<GridConfig> enumerate_grid(const GridSpec& grid, LearnerSet method,
                                       const RowMatrix& rho_rows);

struct GridEntry {
  GridConfig grid_config;
  int selected_iterations = 0;
  double validation_risk = 0.0;
  double validation_metric = 0.0;
  std::vector<double> validation_trace;
  std::optional<std::string> error;
};

struct GridResult {
  std::size_t best_index = 0;
  GridConfig best;
  int best_iterations = 0;
  double best_validation_metric = 0.0;
  // Truncated to the selected iteration count.
  Ensemble best_ensemble;
  std::vector<GridEntry> entries;
};

// Fits every configuration once with the validation trace, takes M as the
// argmin of the validation risk, and keeps the configuration with the
// lowest validation metric at its M (ties: first in canonical order).
// Failing configurations are recorded and skipped; throws if all fail.
GridResult grid_search(const Dataset& train, const Dataset& validation,
                       const std::vector<GridConfig>& configs, int jobs = 1);

GridResult grid_search(const Dataset& train, const Dataset& validation, const GridSpec& grid,
                       LearnerSet method, int jobs = 1);

// Rows used for nearest-neighbor range selection under `base`: the
// standardized training rows, or the Nystrom samples.
RowMatrix rho_reference_rows(const Dataset& train, const BoostConfig& base);

// ---------------------------------------------------------------------------
// Statistics

// Mid-ranks per row (dataset) of a datasets x methods metric matrix; lower
// metric is better and gets rank 1.
Matrix mid_ranks(const Matrix& metrics);

struct FriedmanResult {
  double chi_square = 0.0;
  double f_statistic = 0.0;
  double df1 = 0.0;
  double df2 = 0.0;
  double p_value = 1.0;
};

// 12 N / (k (k + 1)) * sum_j (R_j - (k + 1) / 2)^2 for average ranks R_j.
double friedman_chi_square(const Vector& average_ranks, int num_datasets);

// Friedman test with the Iman-Davenport F correction on a datasets x methods
// rank matrix. Throws NumericalError when chi^2 = N (k - 1).
FriedmanResult friedman_iman_davenport(const Matrix& ranks);
FriedmanResult friedman_iman_davenport(const Vector& average_ranks, int num_datasets);

// Two-sided exact sign test; ties are excluded by the caller.
double sign_test(int wins, int losses);

// Holm step-down adjustment, returned in the input order.
std::vector<double> holm_adjust(std::span<const double> p_values);

// Sign test per (wins, losses) pair followed by Holm over all pairs.
std::vector<double> sign_test_holm(std::span<const std::pair<int, int>> wins_losses);

// ---------------------------------------------------------------------------
// Traces

struct TraceRow {
  double step = 0.0;  // iteration or x
  std::string method;
  double value = 0.0;
  int replication = 0;
};

// CSV with header `<step_name>,method,value,replication`.
void write_traces(std::span<const TraceRow> rows, const std::filesystem::path& path,
                  const std::string& step_name = "iteration");
std::vector<TraceRow> read_traces(const std::filesystem::path& path);

enum class TraceSeries { kTrainRisk, kValidationRisk };
std::vector<TraceRow> report_traces(const FitReport& report, const std::string& method,
                                    int replication = 0,
                                    TraceSeries series = TraceSeries::kTrainRisk);

// Test metric after every iteration.
std::vector<TraceRow> test_metric_traces(const Ensemble& model, const Dataset& test,
                                         const std::string& method, int replication = 0);

// ---------------------------------------------------------------------------
// Comparison across datasets

struct ComparisonTable {
  std::vector<std::string> datasets;
  std::vector<std::string> methods;
  Matrix mean;  // datasets x methods
  Matrix sd;
  Matrix ranks;
  Vector average_ranks;
  std::optional<FriedmanResult> friedman;
  // Holm-adjusted sign tests of methods[0] against each other method;
  // empty entries where every dataset tied.
  std::vector<std::optional<double>> sign_test_adjusted;
};

// `metrics[d][m]` holds the per-split test metrics of dataset d, method m.
ComparisonTable build_comparison(std::vector<std::string> datasets,
                                 std::vector<std::string> methods,
                                 const std::vector<std::vector<std::vector<double>>>& metrics);

// Long format: dataset,method,mean,sd,rank.
void write_comparison_csv(const ComparisonTable& table, const std::filesystem::path& path);
// Average ranks, the Friedman result and the adjusted sign tests.
std::string comparison_json(const ComparisonTable& table);

// ---------------------------------------------------------------------------
// Runners

struct NamedDataset {
  std::string name;
  Dataset data;
};

struct BenchmarkOptions {
  std::vector<LearnerSet> methods{LearnerSet::kKTBoost, LearnerSet::kTreeOnly,
                                  LearnerSet::kKernelOnly};
  int splits = 10;
  std::uint64_t seed = 0;
  GridSpec grid;
  // Overrides grid.base.newton; unset uses gradient steps for regression
  // and Newton steps for classification.
  std::optional<bool> newton;
  int jobs = 1;
};

struct BenchmarkRecord {
  std::string dataset;
  LearnerSet method;
  std::uint64_t split_seed = 0;
  GridConfig config;
  int iterations = 0;
  double validation_metric = 0.0;
  double test_metric = 0.0;
};

struct BenchmarkResult {
  std::vector<BenchmarkRecord> records;
  ComparisonTable table;
  std::vector<std::string> failures;
};

BenchmarkResult run_benchmark(const std::vector<NamedDataset>& datasets,
                              const BenchmarkOptions& options);

// JSON array of {dataset, method, split_seed, config, validation_metric,
// test_metric}, canonical key order.
std::string manifest_json(const BenchmarkResult& result);

// Flat description of a configuration as used in manifests.
std::string config_json(const GridConfig& config, int selected_iterations);

struct SimulationStudyOptions {
  int replications = 100;
  Index n = 1000;
  // nu = 0.1, stumps, rho = 0.1, lambda = 1, M <= 1000, raw features.
  BoostConfig config = default_config();
  std::vector<LearnerSet> methods{LearnerSet::kKTBoost, LearnerSet::kTreeOnly,
                                  LearnerSet::kKernelOnly};
  int grid_points = 200;
  std::uint64_t seed = 0;
  int jobs = 1;

  static BoostConfig default_config();
};

struct SimulationStudyResult {
  std::vector<LearnerSet> methods;
  Vector grid;
  Matrix pointwise_mse;  // grid x methods
  // replications x methods; squared error against F(x) on the test rows,
  // and the usual MSE against the noisy test targets.
  Matrix test_mse;
  Matrix noisy_test_mse;
  std::vector<std::vector<int>> selected_iterations;  // replication, method
};

SimulationStudyResult run_simulation_study(const SimulationStudyOptions& options);

std::string simulation_manifest_json(const SimulationStudyResult& result,
                                     const SimulationStudyOptions& options);

// ---------------------------------------------------------------------------

// Runs body(i) for i in [0, count) on up to `jobs` threads. The first
// exception thrown by any job is rethrown after all jobs finish.
void parallel_for(std::size_t count, int jobs, const std::function<void(std::size_t)>& body);

// Deterministic seed derivation for independent replications.
std::uint64_t derive_seed(std::uint64_t base, std::uint64_t a, std::uint64_t b = 0);

}  // namespace ktboost::bench

#endif  // KTBOOST_BENCH_H_
