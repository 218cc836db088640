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

#include <algorithm>
#include <atomic>
#include <cmath>
#include <numbers>
#include <random>
#include <set>

#include <gtest/gtest.h>
#include <nlohmann/json.hpp>

#include "ktboost/bench.h"
#include "test_util.h"

namespace ktboost::bench {
namespace {

using testing::random_rows;
using testing::read_file;
using testing::TempDir;

Vector vec(std::initializer_list<double> values) {
  Vector v(static_cast<Index>(values.size()));
  Index i = 0;
  for (double x : values) v[i++] = x;
  return v;
}

SimFunction fixed_sim() {
  SimFunction sim;
  sim.jump_locations = {0.1, 0.2, 0.3, 0.35, 0.45};
  sim.jump_sizes = {1.0, 2.0, 0.5, 4.0, 1.5};
  return sim;
}

// --- Simulation ------------------------------------------------------------

TEST(Simulation, DrawIsInRange) {
  for (std::uint64_t seed = 0; seed < 50; ++seed) {
    const SimFunction sim = SimFunction::draw(seed);
    for (std::size_t i = 0; i < 5; ++i) {
      EXPECT_GT(sim.jump_locations[i], 0.0);
      EXPECT_LT(sim.jump_locations[i], 0.5);
      EXPECT_GT(sim.jump_sizes[i], 0.0);
      EXPECT_LT(sim.jump_sizes[i], 5.0);
    }
    EXPECT_EQ(sim.noise_sd, 0.25);
  }
}

TEST(Simulation, FunctionValues) {
  const SimFunction sim = fixed_sim();
  const double x = 0.05;
  EXPECT_EQ(sim(x), std::sin(8 * std::numbers::pi * x));
  EXPECT_NEAR(sim(1.0) - std::sin(8 * std::numbers::pi), 9.0, 1e-14);
  // The jump at t = 0.1 is included just to the right of t only.
  EXPECT_EQ(sim(0.1), std::sin(8 * std::numbers::pi * 0.1));
  EXPECT_NEAR(sim(0.1000001) - std::sin(8 * std::numbers::pi * 0.1000001), 1.0, 1e-12);
}

TEST(Simulation, NoiselessDataFollowsFunction) {
  SimFunction sim = fixed_sim();
  sim.noise_sd = 0.0;
  const Dataset d = simulate(sim, 100, 3);
  for (Index i = 0; i < d.n(); ++i) EXPECT_EQ(d.targets()[i], sim(d.features()(i, 0)));
}

TEST(Simulation, NoiseLevelMonteCarlo) {
  const SimFunction sim = SimFunction::draw(4);
  const Dataset d = simulate(sim, 100000, 5);
  Vector residual(d.n());
  for (Index i = 0; i < d.n(); ++i) residual[i] = d.targets()[i] - sim(d.features()(i, 0));
  const double mean = residual.mean();
  const double sd = std::sqrt((residual.array() - mean).square().sum() / (d.n() - 1));
  EXPECT_NEAR(sd, 0.25, 0.005);
  EXPECT_GE(d.features().minCoeff(), 0.0);
  EXPECT_LE(d.features().maxCoeff(), 1.0);
}

TEST(Simulation, IsDeterministicPerSeed) {
  const SimFunction sim = SimFunction::draw(6);
  EXPECT_EQ(simulate(sim, 50, 1).targets(), simulate(sim, 50, 1).targets());
  EXPECT_NE(simulate(sim, 50, 1).targets(), simulate(sim, 50, 2).targets());
  EXPECT_THROW(simulate(sim, 0, 1), DataError);
}

TEST(Pointwise, GridAndClosedForms) {
  EXPECT_EQ(unit_grid(4), vec({0.125, 0.375, 0.625, 0.875}));
  SimFunction sine_only;
  sine_only.jump_sizes.fill(0.0);
  sine_only.jump_locations = {0.1, 0.1, 0.1, 0.1, 0.1};
  const Ensemble zero(Task::kRegression, 1, Vector::Zero(1), 0.1, Standardizer::identity(1), {}, {});
  const Vector grid = unit_grid(50);
  const Vector err = pointwise_squared_error(zero, sine_only, grid);
  for (Index i = 0; i < grid.size(); ++i) {
    EXPECT_NEAR(err[i], std::pow(std::sin(8 * std::numbers::pi * grid[i]), 2), 1e-15);
  }
  PointwiseMse acc(grid);
  acc.add_squared_errors(Vector::Zero(50));
  acc.add_squared_errors(Vector::Zero(50));
  EXPECT_EQ(acc.mean(), Vector::Zero(50));
  acc.add(zero, sine_only);
  EXPECT_LE((acc.mean() - err / 3).cwiseAbs().maxCoeff(), 1e-15);
  const std::vector<Ensemble> models{zero, zero};
  const std::vector<SimFunction> sims{sine_only, sine_only};
  EXPECT_LE((pointwise_mse(models, sims, grid) - err).cwiseAbs().maxCoeff(), 1e-15);
}

// --- Metrics ---------------------------------------------------------------

TEST(Metric, Examples) {
  EXPECT_EQ(metric(Task::kRegression, vec({1, 2}), vec({1, 2})), 0.0);
  EXPECT_EQ(metric(Task::kRegression, vec({0, 2}), vec({1, 1})), 1.0);
  EXPECT_EQ(metric(Task::kBinary, vec({1, 0, 0, 1}), vec({2.0, -1.0, 0.5, 3.0})), 0.25);
  Matrix multi(3, 3);
  multi << 1, 0, 0, 0, 0, 1, 0, 5, 0;
  EXPECT_NEAR(metric(Task::kMulticlass, vec({0, 2, 2}), multi), 1.0 / 3.0, 1e-15);
}

// --- Grid ------------------------------------------------------------------

Dataset grid_data(Index n, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  RowMatrix x = random_rows(n, 2, rng);
  Vector y(n);
  for (Index i = 0; i < n; ++i) y[i] = std::sin(x(i, 0)) + (x(i, 1) > 0 ? 1.0 : 0.0);
  return Dataset(std::move(x), std::move(y), Task::kRegression);
}

TEST(Grid, CardinalityAndOrder) {
  std::mt19937_64 rng(1);
  const RowMatrix rows = random_rows(20, 2, rng);
  const GridSpec spec;  // the default four-axis grid
  // knn {5, 50, 500, 5000} with m = 20 becomes {5, 19}, plus slow.
  const auto ktboost = enumerate_grid(spec, LearnerSet::kKTBoost, rows);
  EXPECT_EQ(ktboost.size(), 4u * 3u * 2u * 3u);
  EXPECT_EQ(enumerate_grid(spec, LearnerSet::kTreeOnly, rows).size(), 4u * 3u);
  EXPECT_EQ(enumerate_grid(spec, LearnerSet::kKernelOnly, rows).size(), 4u * 2u * 3u);
  EXPECT_EQ(ktboost[0].rho_label, "decay01:k=5");
  EXPECT_EQ(ktboost[1].rho_label, "decay01:k=19");
  EXPECT_EQ(ktboost[2].rho_label, "slow");
  EXPECT_EQ(ktboost[0].config.nu, 1.0);
  EXPECT_EQ(ktboost.back().config.nu, 1e-3);
  EXPECT_DOUBLE_EQ(*ktboost[0].config.rho, select_rho(rows, 5, RhoMode::kDecay01));
  EXPECT_DOUBLE_EQ(*ktboost[2].config.rho, select_rho(rows, 19, RhoMode::kSlow));
  for (const GridConfig& g : ktboost) EXPECT_EQ(g.config.max_iterations, 1000);
}

TEST(Grid, SingleConfigurationIsReturned) {
  const Dataset train = grid_data(40, 2);
  const Dataset val = grid_data(30, 3);
  GridConfig only;
  only.config.max_iterations = 20;
  only.config.rho = 1.0;
  only.rho_label = "fixed";
  const GridResult r = grid_search(train, val, std::vector<GridConfig>{only});
  EXPECT_EQ(r.best_index, 0u);
  EXPECT_EQ(r.best.rho_label, "fixed");
  ASSERT_EQ(r.entries.size(), 1u);
  const auto& trace = r.entries[0].validation_trace;
  const auto argmin = std::min_element(trace.begin(), trace.end()) - trace.begin();
  EXPECT_EQ(r.best_iterations, argmin + 1);
  EXPECT_EQ(r.best_ensemble.num_iterations(), r.best_iterations);
  EXPECT_NEAR(r.best_validation_metric,
              metric(Task::kRegression, val.targets(), r.best_ensemble.predict(val.features())),
              1e-12);
}

TEST(Grid, ZeroRiskConfigurationIsSelected) {
  // A noiseless step: one full-size stump reproduces it exactly.
  RowMatrix x(40, 1);
  Vector y(40);
  for (Index i = 0; i < 40; ++i) {
    x(i, 0) = static_cast<double>(i);
    y[i] = i < 20 ? -1.0 : 2.0;
  }
  const Dataset data(x, y, Task::kRegression);
  GridConfig slow;
  slow.config.max_iterations = 5;
  slow.config.nu = 1e-3;
  slow.config.learners = LearnerSet::kTreeOnly;
  GridConfig oracle = slow;
  oracle.config.nu = 1.0;
  const GridResult r = grid_search(data, data, std::vector<GridConfig>{slow, oracle});
  EXPECT_EQ(r.best_index, 1u);
  EXPECT_LT(r.best_validation_metric, 1e-20);
}

TEST(Grid, ResultDominatesAndFailuresAreRecorded) {
  const Dataset train = grid_data(50, 4);
  const Dataset val = grid_data(40, 5);
  GridSpec spec;
  spec.nu = {1.0, 0.1};
  spec.max_depth = {1, 3};
  spec.lambda = {1.0};
  spec.knn = {5};
  spec.max_iterations = 30;
  std::vector<GridConfig> configs =
      enumerate_grid(spec, LearnerSet::kKTBoost, rho_reference_rows(train, spec.base));
  GridConfig broken = configs[0];
  broken.config.nystrom_samples = 500;  // more samples than rows
  configs.insert(configs.begin(), broken);
  const GridResult r = grid_search(train, val, configs, 2);
  ASSERT_EQ(r.entries.size(), configs.size());
  EXPECT_TRUE(r.entries[0].error.has_value());
  EXPECT_NE(r.best_index, 0u);
  for (const GridEntry& e : r.entries) {
    if (!e.error) EXPECT_LE(r.best_validation_metric, e.validation_metric);
  }
  // Same result with one thread.
  const GridResult serial = grid_search(train, val, configs, 1);
  EXPECT_EQ(serial.best_index, r.best_index);
  EXPECT_EQ(to_json(serial.best_ensemble), to_json(r.best_ensemble));

  EXPECT_THROW(grid_search(train, val, std::vector<GridConfig>{broken}), DataError);
}

// --- Statistics ------------------------------------------------------------

TEST(Ranks, MidRanksSumToTriangularNumber) {
  Matrix m(3, 4);
  m << 0.1, 0.2, 0.3, 0.4, 0.5, 0.5, 0.1, 0.9, 1.0, 1.0, 1.0, 1.0;
  const Matrix r = mid_ranks(m);
  EXPECT_EQ(r.row(0), Eigen::RowVector4d(1, 2, 3, 4));
  EXPECT_EQ(r.row(1), Eigen::RowVector4d(2.5, 2.5, 1, 4));
  EXPECT_EQ(r.row(2), Eigen::RowVector4d(2.5, 2.5, 2.5, 2.5));
  std::mt19937_64 rng(7);
  const Matrix random = (random_rows(30, 5, rng).array() * 2).round().matrix();
  const Matrix rr = mid_ranks(random);
  for (Index i = 0; i < rr.rows(); ++i) EXPECT_DOUBLE_EQ(rr.row(i).sum(), 15.0);
}

TEST(Friedman, AllTiedHasNoEvidence) {
  const Matrix ranks = Matrix::Constant(10, 3, 2.0);
  const FriedmanResult f = friedman_iman_davenport(ranks);
  EXPECT_EQ(f.chi_square, 0.0);
  EXPECT_EQ(f.p_value, 1.0);
}

TEST(Friedman, PublishedAverageRanks) {
  const FriedmanResult f = friedman_iman_davenport(vec({1.24, 2.48, 2.29}), 21);
  EXPECT_NEAR(f.chi_square, 21.0 * (0.76 * 0.76 + 0.48 * 0.48 + 0.29 * 0.29), 1e-12);
  EXPECT_NEAR(f.f_statistic, 16.1, 0.05);
  EXPECT_EQ(f.df1, 2.0);
  EXPECT_EQ(f.df2, 40.0);
  EXPECT_GT(f.p_value, 7.84e-6 / 2);
  EXPECT_LT(f.p_value, 7.84e-6 * 2);
}

TEST(Friedman, HandCase) {
  EXPECT_DOUBLE_EQ(friedman_chi_square(vec({1, 2}), 3), 3.0);
  // chi^2 = N (k - 1): the corrected statistic is undefined.
  Matrix ranks(3, 2);
  ranks << 1, 2, 1, 2, 1, 2;
  EXPECT_THROW(friedman_iman_davenport(ranks), NumericalError);
  EXPECT_THROW(friedman_iman_davenport(vec({1, 2}), 1), DataError);
}

TEST(Friedman, PValueDecreasesWithSpread) {
  double previous = 1.0;
  for (double spread : {0.0, 0.1, 0.2, 0.4, 0.6, 0.8}) {
    const FriedmanResult f = friedman_iman_davenport(vec({2 - spread, 2.0, 2 + spread}), 21);
    EXPECT_GT(f.p_value, 0.0);
    EXPECT_LE(f.p_value, previous);
    previous = f.p_value;
  }
}

TEST(SignTest, Examples) {
  EXPECT_DOUBLE_EQ(sign_test(5, 0), 0.0625);
  EXPECT_DOUBLE_EQ(sign_test(0, 5), 0.0625);
  EXPECT_DOUBLE_EQ(sign_test(4, 4), 1.0);
  EXPECT_NEAR(sign_test(15, 6), 0.0784, 1e-4);
  EXPECT_THROW(sign_test(0, 0), DataError);
}

TEST(Holm, HandExampleAndMonotonicity) {
  const std::vector<double> p{0.001, 0.04};
  const std::vector<double> adj = holm_adjust(p);
  EXPECT_DOUBLE_EQ(adj[0], 0.002);
  EXPECT_DOUBLE_EQ(adj[1], 0.04);
  std::mt19937_64 rng(8);
  std::uniform_real_distribution<double> unit(0.0, 0.3);
  for (int trial = 0; trial < 50; ++trial) {
    std::vector<double> raw(1 + rng() % 8);
    for (double& v : raw) v = unit(rng);
    const std::vector<double> a = holm_adjust(raw);
    std::vector<std::size_t> order(raw.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    std::sort(order.begin(), order.end(), [&](auto i, auto j) { return raw[i] < raw[j]; });
    for (std::size_t i = 0; i < raw.size(); ++i) {
      EXPECT_GE(a[i], raw[i]);
      EXPECT_LE(a[i], 1.0);
      if (i > 0) EXPECT_LE(a[order[i - 1]], a[order[i]]);
    }
  }
  const std::vector<std::pair<int, int>> wl{{5, 0}, {3, 3}};
  const std::vector<double> st = sign_test_holm(wl);
  EXPECT_DOUBLE_EQ(st[0], 0.125);
  EXPECT_DOUBLE_EQ(st[1], 1.0);
}

TEST(Comparison, TableRanksAndTests) {
  // Method 0 wins every dataset; methods 1 and 2 swap on the last one so
  // the ranks are not perfectly concordant.
  std::vector<std::vector<std::vector<double>>> metrics;
  for (int d = 0; d < 5; ++d) {
    metrics.push_back({{0.1 + d, 0.2 + d}, {0.5 + d, 0.6 + d}, {0.9 + d, 0.7 + d}});
  }
  metrics.push_back({{5.1, 5.2}, {5.9, 5.7}, {5.5, 5.6}});
  std::vector<std::string> names;
  for (int d = 0; d < 6; ++d) names.push_back("d" + std::to_string(d));
  const ComparisonTable t = build_comparison(names, {"ktboost", "tree", "kernel"}, metrics);
  EXPECT_NEAR(t.mean(0, 0), 0.15, 1e-15);
  EXPECT_NEAR(t.sd(0, 0), std::sqrt(0.005), 1e-15);
  EXPECT_NEAR(t.average_ranks[0], 1.0, 1e-15);
  EXPECT_NEAR(t.average_ranks[1], 13.0 / 6.0, 1e-15);
  EXPECT_NEAR(t.average_ranks[2], 17.0 / 6.0, 1e-15);
  ASSERT_TRUE(t.friedman.has_value());
  // chi^2 = 31 / 3 and F = 5 chi^2 / (12 - chi^2) = 31.
  EXPECT_NEAR(t.friedman->chi_square, 31.0 / 3.0, 1e-12);
  EXPECT_NEAR(t.friedman->f_statistic, 31.0, 1e-9);
  EXPECT_LT(t.friedman->p_value, 0.01);
  ASSERT_EQ(t.sign_test_adjusted.size(), 2u);
  EXPECT_DOUBLE_EQ(*t.sign_test_adjusted[0], 2.0 * std::pow(0.5, 5));
  TempDir dir;
  write_comparison_csv(t, dir / "table.csv");
  const std::string csv = read_file(dir / "table.csv");
  EXPECT_EQ(csv.substr(0, csv.find('\n')), "dataset,method,mean,sd,rank");
  EXPECT_EQ(std::count(csv.begin(), csv.end(), '\n'), 1 + 18);
  const auto summary = nlohmann::json::parse(comparison_json(t));
  EXPECT_TRUE(summary.contains("average_ranks"));
}

// --- Traces ----------------------------------------------------------------

TEST(Traces, EmptyReportGivesHeaderOnly) {
  TempDir dir;
  write_traces(report_traces(FitReport{}, "ktboost"), dir / "t.csv");
  EXPECT_EQ(read_file(dir / "t.csv"), "iteration,method,value,replication\n");
  EXPECT_TRUE(read_traces(dir / "t.csv").empty());
}

TEST(Traces, RoundTripIsExact) {
  TempDir dir;
  std::mt19937_64 rng(9);
  std::uniform_real_distribution<double> unit(-1e3, 1e3);
  std::vector<TraceRow> rows;
  for (int i = 0; i < 100; ++i) {
    rows.push_back({unit(rng), i % 2 ? "tree" : "kernel", unit(rng) * 1e-7, i % 5});
  }
  write_traces(rows, dir / "t.csv", "x");
  const std::vector<TraceRow> back = read_traces(dir / "t.csv");
  ASSERT_EQ(back.size(), rows.size());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    EXPECT_EQ(back[i].step, rows[i].step);
    EXPECT_EQ(back[i].method, rows[i].method);
    EXPECT_EQ(back[i].value, rows[i].value);
    EXPECT_EQ(back[i].replication, rows[i].replication);
  }
  testing::write_file(dir / "bad.csv", "a,b\n1,2\n");
  EXPECT_THROW(read_traces(dir / "bad.csv"), FormatError);
}

TEST(Traces, FitTracesFollowTheReport) {
  const Dataset train = grid_data(40, 10);
  const Dataset test = grid_data(30, 11);
  BoostConfig c;
  c.max_iterations = 12;
  c.rho = 1.0;
  const FitResult r = fit(train, c, test);
  const auto train_rows = report_traces(r.report, "ktboost", 3);
  ASSERT_EQ(train_rows.size(), 12u);
  EXPECT_EQ(train_rows[0].step, 1.0);
  EXPECT_EQ(train_rows[11].value, r.report.train_risk[11]);
  EXPECT_EQ(train_rows[0].replication, 3);
  const auto val_rows = report_traces(r.report, "ktboost", 0, TraceSeries::kValidationRisk);
  EXPECT_EQ(val_rows[4].value, r.report.validation_risk[4]);
  const auto test_rows = test_metric_traces(r.ensemble, test, "ktboost");
  // One row per completed iteration, aligned with the risk traces.
  ASSERT_EQ(test_rows.size(), 12u);
  EXPECT_EQ(test_rows.front().step, 1.0);
  EXPECT_NEAR(test_rows.back().value,
              metric(Task::kRegression, test.targets(), r.ensemble.predict(test.features())),
              1e-12);
}

// --- Runners ---------------------------------------------------------------

TEST(Parallel, VisitsAllAndRethrowsLowestFailure) {
  std::vector<std::atomic<int>> hits(100);
  parallel_for(100, 3, [&](std::size_t i) { hits[i]++; });
  for (auto& h : hits) EXPECT_EQ(h.load(), 1);
  try {
    parallel_for(20, 4, [](std::size_t i) {
      if (i == 7 || i == 13) throw DataError("job " + std::to_string(i));
    });
    FAIL() << "expected an exception";
  } catch (const DataError& e) {
    EXPECT_STREQ(e.what(), "job 7");
  }
  EXPECT_EQ(derive_seed(1, 2, 3), derive_seed(1, 2, 3));
  std::set<std::uint64_t> seeds;
  for (std::uint64_t a = 0; a < 10; ++a) {
    for (std::uint64_t b = 0; b < 4; ++b) seeds.insert(derive_seed(42, a, b));
  }
  EXPECT_EQ(seeds.size(), 40u);
}

BenchmarkOptions tiny_benchmark() {
  BenchmarkOptions o;
  o.splits = 3;
  o.seed = 11;
  o.grid.nu = {0.5};
  o.grid.max_depth = {1, 2};
  o.grid.lambda = {1.0};
  o.grid.knn = {5};
  o.grid.include_slow = false;
  o.grid.max_iterations = 15;
  return o;
}

TEST(Benchmark, ManifestCardinalityAndDeterminism) {
  const std::vector<NamedDataset> data{{"toy", grid_data(60, 12)}, {"toy2", grid_data(45, 13)}};
  BenchmarkOptions o = tiny_benchmark();
  const BenchmarkResult r = run_benchmark(data, o);
  EXPECT_EQ(r.records.size(), 2u * 3u * 3u);
  EXPECT_TRUE(r.failures.empty());
  const auto manifest = nlohmann::json::parse(manifest_json(r));
  ASSERT_EQ(manifest.size(), 18u);
  for (const auto& key : {"dataset", "method", "split_seed", "config", "validation_metric",
                          "test_metric"}) {
    EXPECT_TRUE(manifest[0].contains(key)) << key;
  }
  EXPECT_EQ(r.table.datasets.size(), 2u);
  EXPECT_EQ(r.table.methods.size(), 3u);
  o.jobs = 2;
  EXPECT_EQ(manifest_json(run_benchmark(data, o)), manifest_json(r));
}

TEST(Benchmark, SimulationStudyShapes) {
  SimulationStudyOptions o;
  o.replications = 2;
  o.n = 60;
  o.config.max_iterations = 20;
  o.grid_points = 10;
  o.seed = 3;
  const SimulationStudyResult r = run_simulation_study(o);
  EXPECT_EQ(r.pointwise_mse.rows(), 10);
  EXPECT_EQ(r.pointwise_mse.cols(), 3);
  EXPECT_EQ(r.test_mse.rows(), 2);
  EXPECT_EQ(r.selected_iterations.size(), 2u);
  EXPECT_TRUE((r.pointwise_mse.array() >= 0).all());
  // Noise adds about noise_sd^2 to the test error against F.
  EXPECT_GT(r.noisy_test_mse.mean(), r.test_mse.mean());
  o.jobs = 2;
  const SimulationStudyResult again = run_simulation_study(o);
  EXPECT_EQ(again.pointwise_mse, r.pointwise_mse);
  EXPECT_EQ(simulation_manifest_json(again, o), simulation_manifest_json(r, o));
  const SimulationStudyOptions defaults;
  EXPECT_EQ(defaults.config.nu, 0.1);
  EXPECT_EQ(*defaults.config.rho, 0.1);
  EXPECT_EQ(defaults.config.tree.max_depth, 1);
  EXPECT_EQ(defaults.config.max_iterations, 1000);
}

}  // namespace
}  // namespace ktboost::bench
