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

#include "ktboost/cli.h"

#include <charconv>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <CLI11.hpp>

#include "ktboost/bench.h"
#include "ktboost/boost.h"
#include "ktboost/format.h"

namespace ktboost::cli {
namespace {

namespace fs = std::filesystem;

// Flag combinations that parse but are inconsistent; reported as exit 1.
class UsageError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Flags shared by the subcommands that read a labelled CSV.
struct InputFlags {
  std::string task = "regression";
  std::string target;
  bool no_header = false;
};

struct TrainFlags {
  InputFlags input;
  std::string data;
  std::string validation;
  std::string test;
  std::string out;
  std::string trace;
  std::string loss;
  std::string learner = "ktboost";
  std::string selection = "damped";
  bool newton = false;
  bool gradient = false;
  int iterations = 100;
  double nu = 0.1;
  int max_depth = 1;
  int min_leaf = 1;
  double rho = 0.0;
  int rho_knn = 0;
  bool rho_slow = false;
  double lambda = 1.0;
  long long nystrom = 0;
  std::uint64_t seed = 0;
  bool no_standardize = false;
  int early_stopping = 0;
};

struct PredictFlags {
  std::string model;
  std::string data;
  std::string out;
  std::string target;
  bool no_header = false;
  int iterations = -1;
};

struct SimulateFlags {
  long long n = 1000;
  std::uint64_t seed = 0;
  std::uint64_t function_seed = 0;
  double noise_sd = 0.25;
  std::string out;
};

struct BenchmarkFlags {
  InputFlags input;
  std::vector<std::string> data;
  std::vector<std::string> methods{"ktboost", "tree", "kernel"};
  int splits = 10;
  std::uint64_t seed = 0;
  int jobs = 1;
  std::string out;
  std::vector<double> nu;
  std::vector<int> max_depth;
  std::vector<double> lambda;
  std::vector<int> knn;
  bool no_slow = false;
  int iterations = 1000;
  bool newton = false;
  bool gradient = false;
  long long nystrom = 0;
  std::string selection = "damped";
  int min_leaf = 1;
  bool no_standardize = false;
  // Simulation study.
  bool simulation = false;
  int replications = 100;
  long long n = 1000;
  double rho = 0.1;
};

std::variant<std::string, int> parse_target(const std::string& target) {
  if (target.empty()) return -1;
  int index = 0;
  const auto [end, ec] = std::from_chars(target.data(), target.data() + target.size(), index);
  if (ec == std::errc() && end == target.data() + target.size()) return index;
  return target;
}

CsvOptions csv_options(const InputFlags& flags) {
  CsvOptions options;
  options.task = parse_task(flags.task);
  options.target_column = parse_target(flags.target);
  options.header = !flags.no_header;
  return options;
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write '" + path.string() + "'");
  out << text;
  if (!out) throw DataError("write failure on '" + path.string() + "'");
}

BoostConfig train_config(const TrainFlags& f, Task task) {
  BoostConfig config;
  config.max_iterations = f.iterations;
  config.nu = f.nu;
  config.newton = f.newton || (!f.gradient && task != Task::kRegression);
  config.tree.max_depth = f.max_depth;
  config.tree.min_samples_leaf = f.min_leaf;
  if (f.rho > 0.0) config.rho = f.rho;
  if (f.rho_knn > 0) config.rho_knn = f.rho_knn;
  if (f.rho_slow) config.rho_mode = RhoMode::kSlow;
  config.lambda = f.lambda;
  if (f.nystrom > 0) config.nystrom_samples = static_cast<Index>(f.nystrom);
  config.seed = f.seed;
  config.learners = parse_learner_set(f.learner);
  config.selection = parse_selection_mode(f.selection);
  config.standardize = !f.no_standardize;
  if (f.early_stopping > 0) config.early_stopping_rounds = f.early_stopping;
  config.validate();
  return config;
}

std::string json_number(double v) { return std::isfinite(v) ? format_double(v) : "null"; }

int cmd_train(const TrainFlags& f, std::ostream& out) {
  const CsvOptions options = csv_options(f.input);
  const BoostConfig config = train_config(f, options.task);
  if (config.early_stopping_rounds && f.validation.empty()) {
    throw UsageError("--early-stopping requires --validation");
  }
  if (!f.loss.empty() &&
      parse_loss(f.loss) != LossFunction::for_task(options.task, 3).kind()) {
    throw UsageError("loss '" + f.loss + "' does not match task '" + to_string(options.task) + "'");
  }
  const Dataset train = load_csv(f.data, options);
  // Held-out files share the training label enumeration.
  CsvOptions held_out = options;
  if (train.task() != Task::kRegression) {
    held_out.label_map = train.label_map();
    held_out.num_classes = train.num_classes();
  }
  std::optional<Dataset> validation;
  if (!f.validation.empty()) validation = load_csv(f.validation, held_out);
  std::optional<Dataset> test;
  if (!f.test.empty()) test = load_csv(f.test, held_out);

  FitResult result = validation ? fit(train, config, *validation) : fit(train, config);
  const FitReport& report = result.report;
  const int selected = report.selected_iterations;
  const Ensemble model =
      validation ? result.ensemble.truncated(selected) : result.ensemble;
  save(model, f.out);

  const std::string method = to_string(config.learners);
  if (!f.trace.empty()) {
    std::vector<bench::TraceRow> rows = bench::report_traces(report, method + "/train");
    if (validation) {
      auto v = bench::report_traces(report, method + "/validation", 0,
                                    bench::TraceSeries::kValidationRisk);
      rows.insert(rows.end(), v.begin(), v.end());
    }
    if (test) {
      auto t = bench::test_metric_traces(result.ensemble, *test, method + "/test");
      rows.insert(rows.end(), t.begin(), t.end());
    }
    bench::write_traces(rows, f.trace);
  }

  int trees = 0;
  for (const auto& it : model.iterations()) trees += it.tag == LearnerTag::kTree ? 1 : 0;
  const double model_risk =
      selected > 0 ? report.train_risk[static_cast<std::size_t>(selected - 1)] : report.initial_risk;
  out << "{\"completed_iterations\":" << report.completed_iterations()
      << ",\"selected_iterations\":" << model.num_iterations()
      << ",\"tree_iterations\":" << trees
      << ",\"kernel_iterations\":" << model.num_iterations() - trees
      << ",\"initial_risk\":" << json_number(report.initial_risk)
      << ",\"train_risk\":" << json_number(model_risk)
      << ",\"validation_risk\":"
      << (validation && selected > 0
              ? json_number(report.validation_risk[static_cast<std::size_t>(selected - 1)])
              : std::string("null"))
      << ",\"test_metric\":"
      << (test ? json_number(bench::metric(test->task(), test->targets(),
                                           model.predict(test->features())))
               : std::string("null"))
      << ",\"rho\":" << json_number(report.rho) << ",\"model\":\"" << f.out << "\"}\n";
  return kExitOk;
}

RowMatrix load_prediction_features(const PredictFlags& f) {
  if (f.target.empty()) return load_feature_csv(f.data, !f.no_header);
  return load_feature_csv(f.data, !f.no_header, parse_target(f.target));
}

std::optional<int> truncation(int iterations) {
  if (iterations < 0) return std::nullopt;
  return iterations;
}

int cmd_predict(const PredictFlags& f, std::ostream& out) {
  const Ensemble model = load(f.model);
  const RowMatrix x = load_prediction_features(f);
  if (x.cols() != model.num_features()) {
    throw DataError("model expects " + std::to_string(model.num_features()) +
                    " features but the file has " + std::to_string(x.cols()));
  }
  std::ostringstream text;
  if (model.task() == Task::kRegression) {
    const Matrix scores = model.predict(x, truncation(f.iterations));
    text << "score\n";
    for (Index i = 0; i < scores.rows(); ++i) text << format_double(scores(i, 0)) << '\n';
  } else {
    const Matrix proba = model.predict_proba(x, truncation(f.iterations));
    for (const auto& label : model.label_map()) text << "p_" << label << ',';
    text << "label\n";
    for (Index i = 0; i < proba.rows(); ++i) {
      Index best = 0;
      for (Index k = 0; k < proba.cols(); ++k) {
        text << format_double(proba(i, k)) << ',';
        if (proba(i, k) > proba(i, best)) best = k;
      }
      text << model.label_map()[static_cast<std::size_t>(best)] << '\n';
    }
  }
  if (f.out.empty()) {
    out << text.str();
  } else {
    write_text(f.out, text.str());
  }
  return kExitOk;
}

int cmd_evaluate(const PredictFlags& f, std::ostream& out) {
  const Ensemble model = load(f.model);
  CsvOptions options;
  options.task = model.task();
  options.target_column = parse_target(f.target);
  options.header = !f.no_header;
  if (model.task() != Task::kRegression) {
    options.label_map = model.label_map();
    options.num_classes = model.num_classes();
  }
  const Dataset data = load_csv(f.data, options);
  if (data.p() != model.num_features()) {
    throw DataError("model expects " + std::to_string(model.num_features()) +
                    " features but the file has " + std::to_string(data.p()));
  }
  const Matrix scores = model.predict(data.features(), truncation(f.iterations));
  const double risk = empirical_risk(model.loss(), data.targets(), scores);
  out << "{\"metric\":\"" << (model.task() == Task::kRegression ? "mse" : "error_rate")
      << "\",\"value\":" << json_number(bench::metric(data.task(), data.targets(), scores))
      << ",\"risk\":" << json_number(risk) << ",\"n\":" << data.n() << "}\n";
  return kExitOk;
}

int cmd_simulate(const SimulateFlags& f, bool function_seed_set, std::ostream& out) {
  if (f.n < 1) throw DataError("--n must be positive");
  if (!(f.noise_sd >= 0.0)) throw DataError("--noise-sd must be non-negative");
  bench::SimFunction sim = bench::SimFunction::draw(function_seed_set ? f.function_seed : f.seed);
  sim.noise_sd = f.noise_sd;
  // Data seed differs from the function seed so that train, validation and
  // test files can share one function.
  const Dataset data = bench::simulate(sim, static_cast<Index>(f.n), bench::derive_seed(f.seed, 1));
  write_csv(data, f.out);
  out << "{\"rows\":" << data.n() << ",\"out\":\"" << f.out << "\"}\n";
  return kExitOk;
}

void check_single(const std::vector<double>& values, const char* flag) {
  if (values.size() > 1) {
    throw DataError(std::string(flag) + " takes a single value with --simulation");
  }
}

int cmd_benchmark_simulation(const BenchmarkFlags& f, std::ostream& out) {
  bench::SimulationStudyOptions options;
  options.replications = f.replications;
  options.n = static_cast<Index>(f.n);
  options.seed = f.seed;
  options.jobs = f.jobs;
  options.methods.clear();
  for (const auto& m : f.methods) options.methods.push_back(parse_learner_set(m));
  check_single(f.nu, "--nu");
  check_single(f.lambda, "--lambda");
  if (f.max_depth.size() > 1) throw DataError("--max-depth takes a single value with --simulation");
  BoostConfig& config = options.config;
  if (!f.nu.empty()) config.nu = f.nu.front();
  if (!f.lambda.empty()) config.lambda = f.lambda.front();
  if (!f.max_depth.empty()) config.tree.max_depth = f.max_depth.front();
  config.rho = f.rho;
  config.max_iterations = f.iterations;
  config.tree.min_samples_leaf = f.min_leaf;
  config.newton = f.newton;
  config.selection = parse_selection_mode(f.selection);
  config.validate();

  const bench::SimulationStudyResult result = bench::run_simulation_study(options);
  fs::create_directories(f.out);
  write_text(fs::path(f.out) / "manifest.json", bench::simulation_manifest_json(result, options));

  std::vector<bench::TraceRow> pointwise;
  std::vector<bench::TraceRow> per_replication;
  for (std::size_t m = 0; m < result.methods.size(); ++m) {
    const std::string name = to_string(result.methods[m]);
    const auto mi = static_cast<Index>(m);
    for (Index i = 0; i < result.grid.size(); ++i) {
      pointwise.push_back({result.grid[i], name, result.pointwise_mse(i, mi), 0});
    }
    for (Index r = 0; r < result.test_mse.rows(); ++r) {
      per_replication.push_back({1.0, name, result.test_mse(r, mi), static_cast<int>(r)});
    }
  }
  bench::write_traces(pointwise, fs::path(f.out) / "pointwise_mse.csv", "x");
  bench::write_traces(per_replication, fs::path(f.out) / "test_mse.csv", "iteration");

  out << "{\"replications\":" << options.replications << ",\"mean_test_mse\":{";
  for (std::size_t m = 0; m < result.methods.size(); ++m) {
    out << (m ? "," : "") << '"' << to_string(result.methods[m])
        << "\":" << json_number(result.test_mse.col(static_cast<Index>(m)).mean());
  }
  out << "},\"out\":\"" << f.out << "\"}\n";
  return kExitOk;
}

int cmd_benchmark(const BenchmarkFlags& f, std::ostream& out) {
  if (f.simulation) return cmd_benchmark_simulation(f, out);
  if (f.data.empty()) throw DataError("benchmark needs --data or --simulation");
  bench::BenchmarkOptions options;
  options.methods.clear();
  for (const auto& m : f.methods) options.methods.push_back(parse_learner_set(m));
  options.splits = f.splits;
  options.seed = f.seed;
  options.jobs = f.jobs;
  if (f.newton) options.newton = true;
  if (f.gradient) options.newton = false;
  bench::GridSpec& grid = options.grid;
  if (!f.nu.empty()) grid.nu = f.nu;
  if (!f.max_depth.empty()) grid.max_depth = f.max_depth;
  if (!f.lambda.empty()) grid.lambda = f.lambda;
  if (!f.knn.empty()) grid.knn = f.knn;
  grid.include_slow = !f.no_slow;
  grid.max_iterations = f.iterations;
  grid.base.tree.min_samples_leaf = f.min_leaf;
  grid.base.selection = parse_selection_mode(f.selection);
  grid.base.standardize = !f.no_standardize;
  grid.base.seed = f.seed;
  if (f.nystrom > 0) grid.base.nystrom_samples = static_cast<Index>(f.nystrom);
  for (double nu : grid.nu) {
    BoostConfig probe = grid.base;
    probe.nu = nu;
    probe.max_iterations = grid.max_iterations;
    probe.validate();
  }

  const CsvOptions csv = csv_options(f.input);
  std::vector<bench::NamedDataset> datasets;
  for (const auto& path : f.data) {
    datasets.push_back({fs::path(path).stem().string(), load_csv(path, csv)});
  }
  const bench::BenchmarkResult result = bench::run_benchmark(datasets, options);
  fs::create_directories(f.out);
  write_text(fs::path(f.out) / "manifest.json", bench::manifest_json(result));
  bench::write_comparison_csv(result.table, fs::path(f.out) / "table.csv");
  write_text(fs::path(f.out) / "summary.json", bench::comparison_json(result.table));
  for (const auto& failure : result.failures) out << "warning: " << failure << '\n';
  out << "{\"records\":" << result.records.size() << ",\"failures\":" << result.failures.size()
      << ",\"out\":\"" << f.out << "\"}\n";
  return kExitOk;
}

void add_input_flags(CLI::App* cmd, InputFlags& flags) {
  cmd->add_option("--task", flags.task, "regression, binary or multiclass")
      ->check(CLI::IsMember({"regression", "binary", "multiclass"}));
  cmd->add_option("--target", flags.target, "Target column name or zero-based index (default: last)");
  cmd->add_flag("--no-header", flags.no_header, "Input files have no header row");
}

}  // namespace

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Boosting with kernel and tree base learners", "ktboost"};
  app.require_subcommand(1);
  app.failure_message(CLI::FailureMessage::help);

  TrainFlags train;
  auto* train_cmd = app.add_subcommand("train", "Fit a boosted ensemble and save it as JSON");
  train_cmd->add_option("--data", train.data, "Training CSV")->required();
  train_cmd->add_option("--validation", train.validation, "Validation CSV; selects the iteration count");
  train_cmd->add_option("--test", train.test, "Test CSV, reported only");
  add_input_flags(train_cmd, train.input);
  train_cmd->add_option("--loss", train.loss, "Must match the task if given")
      ->check(CLI::IsMember({"squared", "logistic", "softmax"}));
  train_cmd->add_option("--learner", train.learner, "ktboost, tree or kernel")
      ->check(CLI::IsMember({"ktboost", "tree", "kernel"}));
  auto* newton = train_cmd->add_flag("--newton", train.newton, "Second-order updates");
  auto* gradient = train_cmd->add_flag("--gradient", train.gradient, "First-order updates");
  newton->excludes(gradient);
  train_cmd->add_option("--iterations", train.iterations, "Boosting iterations")
      ->check(CLI::PositiveNumber);
  train_cmd->add_option("--nu", train.nu, "Shrinkage in (0, 1]")->check(CLI::Range(0.0, 1.0));
  train_cmd->add_option("--max-depth", train.max_depth)->check(CLI::NonNegativeNumber);
  train_cmd->add_option("--min-leaf", train.min_leaf)->check(CLI::PositiveNumber);
  auto* rho = train_cmd->add_option("--rho", train.rho, "Fixed kernel range")
                  ->check(CLI::PositiveNumber);
  auto* knn = train_cmd->add_option("--rho-knn", train.rho_knn, "Range from K-nearest-neighbor distances")
                  ->check(CLI::PositiveNumber);
  auto* slow = train_cmd->add_flag("--rho-slow", train.rho_slow, "Slowly decaying range");
  rho->excludes(knn)->excludes(slow);
  knn->excludes(slow);
  train_cmd->add_option("--lambda", train.lambda, "Kernel ridge penalty")
      ->check(CLI::NonNegativeNumber);
  train_cmd->add_option("--nystrom", train.nystrom, "Number of Nystrom samples")
      ->check(CLI::PositiveNumber);
  train_cmd->add_option("--seed", train.seed);
  train_cmd->add_option("--out", train.out, "Model file")->required();
  train_cmd->add_option("--trace", train.trace, "Risk trace CSV");
  train_cmd->add_option("--selection", train.selection, "damped or undamped")
      ->check(CLI::IsMember({"damped", "undamped"}));
  train_cmd->add_flag("--no-standardize", train.no_standardize);
  train_cmd->add_option("--early-stopping", train.early_stopping,
                        "Stop after this many rounds without validation improvement")
      ->check(CLI::PositiveNumber);

  PredictFlags predict;
  auto* predict_cmd = app.add_subcommand("predict", "Score a feature CSV with a saved model");
  predict_cmd->add_option("--model", predict.model)->required();
  predict_cmd->add_option("--data", predict.data, "Feature CSV")->required();
  predict_cmd->add_option("--out", predict.out, "Output CSV (default: standard output)");
  predict_cmd->add_option("--target", predict.target, "Column to drop before scoring");
  predict_cmd->add_flag("--no-header", predict.no_header);
  predict_cmd->add_option("--iterations", predict.iterations, "Use only the first M iterations")
      ->check(CLI::NonNegativeNumber);

  PredictFlags evaluate;
  auto* evaluate_cmd = app.add_subcommand("evaluate", "Test metric of a saved model on labelled data");
  evaluate_cmd->add_option("--model", evaluate.model)->required();
  evaluate_cmd->add_option("--data", evaluate.data)->required();
  evaluate_cmd->add_option("--target", evaluate.target);
  evaluate_cmd->add_flag("--no-header", evaluate.no_header);
  evaluate_cmd->add_option("--iterations", evaluate.iterations)->check(CLI::NonNegativeNumber);

  SimulateFlags simulate;
  auto* simulate_cmd = app.add_subcommand("simulate", "Write a jump-plus-sine regression dataset");
  simulate_cmd->add_option("--n", simulate.n)->check(CLI::PositiveNumber);
  simulate_cmd->add_option("--seed", simulate.seed, "Data seed");
  auto* function_seed = simulate_cmd->add_option("--function-seed", simulate.function_seed,
                                                 "Seed of the jumps (default: --seed)");
  simulate_cmd->add_option("--noise-sd", simulate.noise_sd)->check(CLI::NonNegativeNumber);
  simulate_cmd->add_option("--out", simulate.out)->required();

  BenchmarkFlags bench_flags;
  auto* bench_cmd =
      app.add_subcommand("benchmark", "Grid-searched comparison over random splits or simulations");
  bench_cmd->add_option("--data", bench_flags.data, "Dataset CSV (repeatable)");
  add_input_flags(bench_cmd, bench_flags.input);
  bench_cmd->add_option("--methods", bench_flags.methods, "Comma-separated methods")
      ->delimiter(',')
      ->check(CLI::IsMember({"ktboost", "tree", "kernel"}));
  bench_cmd->add_option("--splits", bench_flags.splits)->check(CLI::PositiveNumber);
  bench_cmd->add_option("--seed", bench_flags.seed);
  bench_cmd->add_option("--jobs", bench_flags.jobs)->check(CLI::PositiveNumber);
  bench_cmd->add_option("--out", bench_flags.out, "Output directory")->required();
  bench_cmd->add_option("--nu", bench_flags.nu, "Shrinkage grid")->delimiter(',');
  bench_cmd->add_option("--max-depth", bench_flags.max_depth, "Depth grid")->delimiter(',');
  bench_cmd->add_option("--lambda", bench_flags.lambda, "Penalty grid")->delimiter(',');
  bench_cmd->add_option("--rho-knn", bench_flags.knn, "Neighbor-count grid")->delimiter(',');
  bench_cmd->add_flag("--no-rho-slow", bench_flags.no_slow, "Drop the slowly decaying range");
  bench_cmd->add_option("--iterations", bench_flags.iterations, "Largest iteration count")
      ->check(CLI::PositiveNumber);
  auto* bench_newton = bench_cmd->add_flag("--newton", bench_flags.newton);
  auto* bench_gradient = bench_cmd->add_flag("--gradient", bench_flags.gradient);
  bench_newton->excludes(bench_gradient);
  bench_cmd->add_option("--nystrom", bench_flags.nystrom)->check(CLI::PositiveNumber);
  bench_cmd->add_option("--selection", bench_flags.selection)
      ->check(CLI::IsMember({"damped", "undamped"}));
  bench_cmd->add_option("--min-leaf", bench_flags.min_leaf)->check(CLI::PositiveNumber);
  bench_cmd->add_flag("--no-standardize", bench_flags.no_standardize);
  bench_cmd->add_flag("--simulation", bench_flags.simulation, "Run the simulation study instead");
  bench_cmd->add_option("--replications", bench_flags.replications)->check(CLI::PositiveNumber);
  bench_cmd->add_option("--n", bench_flags.n, "Rows per simulated split")->check(CLI::PositiveNumber);
  bench_cmd->add_option("--rho", bench_flags.rho, "Kernel range for the simulation study")
      ->check(CLI::PositiveNumber);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitUsage;
  }

  try {
    if (train_cmd->parsed()) return cmd_train(train, out);
    if (predict_cmd->parsed()) return cmd_predict(predict, out);
    if (evaluate_cmd->parsed()) return cmd_evaluate(evaluate, out);
    if (simulate_cmd->parsed()) return cmd_simulate(simulate, function_seed->count() > 0, out);
    if (bench_cmd->parsed()) return cmd_benchmark(bench_flags, out);
  } catch (const UsageError& e) {
    err << "error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const NumericalError& e) {
    err << "numerical error: " << e.what() << '\n';
    return kExitNumerical;
  } catch (const Error& e) {
    err << "error: " << e.what() << '\n';
    return kExitData;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kExitData;
  }
  err << app.help();
  return kExitUsage;
}

}  // namespace ktboost::cli
