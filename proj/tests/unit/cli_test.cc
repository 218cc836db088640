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

#include <sys/wait.h>

#include <cstdlib>
#include <sstream>
#include <string>
#include <vector>

#include <gtest/gtest.h>
#include <nlohmann/json.hpp>

#include "ktboost/bench.h"
#include "ktboost/cli.h"
#include "test_util.h"

namespace ktboost {
namespace {

using testing::read_file;
using testing::TempDir;
using testing::write_file;

struct Outcome {
  int code;
  std::string out;
  std::string err;
};

Outcome run(std::vector<std::string> args) {
  args.insert(args.begin(), "ktboost");
  std::vector<const char*> argv;
  for (const auto& a : args) argv.push_back(a.c_str());
  std::ostringstream out, err;
  const int code = cli::run(static_cast<int>(argv.size()), argv.data(), out, err);
  return {code, out.str(), err.str()};
}

std::vector<std::vector<double>> read_numbers(const std::string& csv, std::string* header) {
  std::istringstream in(csv);
  std::string line;
  std::getline(in, line);
  if (header) *header = line;
  std::vector<std::vector<double>> rows;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::vector<double> row;
    std::istringstream cells(line);
    std::string cell;
    while (std::getline(cells, cell, ',')) row.push_back(std::stod(cell));
    rows.push_back(row);
  }
  return rows;
}

// Three classes in two features.
std::string class_csv(int n, int p) {
  std::ostringstream s;
  for (int j = 0; j < p; ++j) s << "x" << j << ",";
  s << "label\n";
  for (int i = 0; i < n; ++i) {
    const double a = std::sin(i * 0.37) * 2;
    const double b = std::cos(i * 0.91) * 2;
    s << a << "," << b;
    for (int j = 2; j < p; ++j) s << "," << (i % 7) * 0.1;
    s << "," << (a + b > 1 ? "hi" : (a - b > 0 ? "mid" : "lo")) << "\n";
  }
  return s.str();
}

TEST(Cli, MissingDataIsUsageError) {
  TempDir dir;
  const Outcome r = run({"train", "--out", (dir / "m.json").string()});
  EXPECT_EQ(r.code, cli::kExitUsage);
  EXPECT_NE(r.err.find("--data"), std::string::npos);
  EXPECT_EQ(run({}).code, cli::kExitUsage);
  EXPECT_EQ(run({"bogus"}).code, cli::kExitUsage);
  EXPECT_EQ(run({"train", "--data", "x.csv", "--out", "m", "--learner", "forest"}).code,
            cli::kExitUsage);
  EXPECT_EQ(run({"train", "--data", "x.csv", "--out", "m", "--newton", "--gradient"}).code,
            cli::kExitUsage);
  EXPECT_EQ(run({"train", "--data", "x.csv", "--out", "m", "--early-stopping", "3"}).code,
            cli::kExitUsage);
}

TEST(Cli, ToolBinaryReportsExitCodes) {
  const char* tool = std::getenv("KTBOOST_TOOL");
  if (tool == nullptr) GTEST_SKIP() << "tool path not provided";
  const std::string quiet = " >/dev/null 2>&1";
  int status = std::system((std::string(tool) + " train --out /dev/null" + quiet).c_str());
  EXPECT_EQ(WEXITSTATUS(status), cli::kExitUsage);
  status = std::system((std::string(tool) + " predict --model /nonexistent/m.json --data /nonexistent.csv" + quiet).c_str());
  EXPECT_EQ(WEXITSTATUS(status), cli::kExitData);
  status = std::system((std::string(tool) + " --help" + quiet).c_str());
  EXPECT_EQ(WEXITSTATUS(status), cli::kExitOk);
}

TEST(Cli, TrainThenPredictReproducesTrainingRisk) {
  TempDir dir;
  ASSERT_EQ(run({"simulate", "--n", "200", "--seed", "3", "--out", (dir / "sim.csv").string()}).code, 0);
  const Outcome train = run({"train", "--data", (dir / "sim.csv").string(), "--task", "regression",
                         "--loss", "squared", "--learner", "ktboost", "--nu", "0.1", "--max-depth",
                         "1", "--rho", "0.1", "--lambda", "1", "--iterations", "50", "--out",
                         (dir / "model.json").string(), "--trace", (dir / "trace.csv").string(),
                         "--no-standardize"});
  ASSERT_EQ(train.code, 0) << train.err;
  EXPECT_TRUE(std::filesystem::exists(dir / "model.json"));
  const auto report = nlohmann::json::parse(train.out);
  EXPECT_EQ(report.at("completed_iterations").get<int>(), 50);
  EXPECT_EQ(report.at("rho").get<double>(), 0.1);

  const Outcome predict = run({"predict", "--model", (dir / "model.json").string(), "--data",
                           (dir / "sim.csv").string(), "--target", "target"});
  ASSERT_EQ(predict.code, 0) << predict.err;
  std::string header;
  const auto scores = read_numbers(predict.out, &header);
  EXPECT_EQ(header, "score");
  const Dataset data = load_csv(dir / "sim.csv", CsvOptions{.target_column = std::string("target")});
  ASSERT_EQ(scores.size(), static_cast<std::size_t>(data.n()));
  double risk = 0.0;
  for (Index i = 0; i < data.n(); ++i) {
    const double e = data.targets()[i] - scores[static_cast<std::size_t>(i)][0];
    risk += 0.5 * e * e;
  }
  EXPECT_NEAR(risk, report.at("train_risk").get<double>(), 1e-10 * std::max(1.0, risk));

  const auto trace = bench::read_traces(dir / "trace.csv");
  EXPECT_EQ(trace.size(), 50u);
  const Outcome eval = run({"evaluate", "--model", (dir / "model.json").string(), "--data",
                        (dir / "sim.csv").string(), "--target", "target"});
  ASSERT_EQ(eval.code, 0) << eval.err;
  const auto metrics = nlohmann::json::parse(eval.out);
  EXPECT_EQ(metrics.at("metric"), "mse");
  EXPECT_NEAR(metrics.at("value").get<double>(), 2 * risk / data.n(), 1e-10);
}

TEST(Cli, ClassificationProbabilitiesSumToOne) {
  TempDir dir;
  write_file(dir / "c.csv", class_csv(90, 2));
  const Outcome train = run({"train", "--data", (dir / "c.csv").string(), "--task", "multiclass",
                         "--iterations", "20", "--nu", "0.3", "--max-depth", "2", "--rho-knn",
                         "5", "--out", (dir / "m.json").string()});
  ASSERT_EQ(train.code, 0) << train.err;
  const Outcome predict = run({"predict", "--model", (dir / "m.json").string(), "--data",
                           (dir / "c.csv").string(), "--target", "label", "--out",
                           (dir / "p.csv").string()});
  ASSERT_EQ(predict.code, 0) << predict.err;
  const std::string csv = read_file(dir / "p.csv");
  EXPECT_EQ(csv.substr(0, csv.find('\n')), "p_hi,p_lo,p_mid,label");
  std::istringstream in(csv);
  std::string line;
  std::getline(in, line);
  int rows = 0;
  while (std::getline(in, line)) {
    std::istringstream cells(line);
    std::string cell;
    double total = 0.0;
    for (int k = 0; k < 3; ++k) {
      std::getline(cells, cell, ',');
      total += std::stod(cell);
    }
    std::getline(cells, cell, ',');
    EXPECT_TRUE(cell == "hi" || cell == "lo" || cell == "mid") << cell;
    EXPECT_NEAR(total, 1.0, 1e-12);
    ++rows;
  }
  EXPECT_EQ(rows, 90);
  // Wrong loss for the task is a usage error.
  EXPECT_EQ(run({"train", "--data", (dir / "c.csv").string(), "--task", "multiclass", "--loss",
                 "squared", "--out", (dir / "x.json").string()})
                .code,
            cli::kExitUsage);
}

TEST(Cli, FeatureCountMismatchIsDataError) {
  TempDir dir;
  write_file(dir / "two.csv", class_csv(40, 2));
  write_file(dir / "three.csv", class_csv(40, 3));
  ASSERT_EQ(run({"train", "--data", (dir / "two.csv").string(), "--task", "multiclass",
                 "--iterations", "5", "--rho", "1", "--out", (dir / "m.json").string()})
                .code,
            0);
  const Outcome r = run({"predict", "--model", (dir / "m.json").string(), "--data",
                     (dir / "three.csv").string(), "--target", "label"});
  EXPECT_EQ(r.code, cli::kExitData);
  EXPECT_FALSE(r.err.empty());
  EXPECT_EQ(run({"train", "--data", (dir / "missing.csv").string(), "--out",
                 (dir / "m2.json").string()})
                .code,
            cli::kExitData);
}

TEST(Cli, ConstantModelGivesIdenticalRows) {
  TempDir dir;
  ASSERT_EQ(run({"simulate", "--n", "30", "--seed", "1", "--out", (dir / "s.csv").string()}).code, 0);
  // Depth-0 trees only: every prediction equals the same constant.
  ASSERT_EQ(run({"train", "--data", (dir / "s.csv").string(), "--learner", "tree", "--max-depth",
                 "0", "--iterations", "3", "--out", (dir / "m.json").string()})
                .code,
            0);
  const Outcome p = run({"predict", "--model", (dir / "m.json").string(), "--data",
                     (dir / "s.csv").string(), "--target", "target"});
  ASSERT_EQ(p.code, 0) << p.err;
  const auto rows = read_numbers(p.out, nullptr);
  for (const auto& row : rows) EXPECT_EQ(row[0], rows[0][0]);
}

TEST(Cli, SimulateIsByteIdentical) {
  TempDir dir;
  ASSERT_EQ(run({"simulate", "--n", "1000", "--seed", "7", "--out", (dir / "a.csv").string()}).code, 0);
  ASSERT_EQ(run({"simulate", "--n", "1000", "--seed", "7", "--out", (dir / "b.csv").string()}).code, 0);
  EXPECT_EQ(read_file(dir / "a.csv"), read_file(dir / "b.csv"));
  ASSERT_EQ(run({"simulate", "--n", "1000", "--seed", "8", "--out", (dir / "c.csv").string()}).code, 0);
  EXPECT_NE(read_file(dir / "a.csv"), read_file(dir / "c.csv"));
}

TEST(Cli, TrainingIsByteIdentical) {
  TempDir dir;
  ASSERT_EQ(run({"simulate", "--n", "150", "--seed", "2", "--out", (dir / "s.csv").string()}).code, 0);
  for (const char* name : {"a.json", "b.json"}) {
    ASSERT_EQ(run({"train", "--data", (dir / "s.csv").string(), "--iterations", "20", "--nystrom",
                   "40", "--seed", "4", "--out", (dir / name).string()})
                  .code,
              0);
  }
  EXPECT_EQ(read_file(dir / "a.json"), read_file(dir / "b.json"));
}

TEST(Cli, BenchmarkWritesOneRecordPerMethodAndSplit) {
  TempDir dir;
  ASSERT_EQ(run({"simulate", "--n", "90", "--seed", "5", "--out", (dir / "s.csv").string()}).code, 0);
  const std::vector<std::string> args{
      "benchmark", "--data", (dir / "s.csv").string(), "--methods", "ktboost,tree,kernel",
      "--splits", "10", "--seed", "1", "--nu", "0.5", "--max-depth", "1", "--lambda", "1",
      "--rho-knn", "5", "--no-rho-slow", "--iterations", "10"};
  std::vector<std::string> first = args;
  first.insert(first.end(), {"--out", (dir / "run1").string()});
  const Outcome r = run(first);
  ASSERT_EQ(r.code, 0) << r.err;
  const auto manifest = nlohmann::json::parse(read_file(dir / "run1" / "manifest.json"));
  ASSERT_EQ(manifest.size(), 30u);
  EXPECT_TRUE(std::filesystem::exists(dir / "run1" / "table.csv"));
  EXPECT_TRUE(std::filesystem::exists(dir / "run1" / "summary.json"));
  std::vector<std::string> second = args;
  second.insert(second.end(), {"--out", (dir / "run2").string(), "--jobs", "2"});
  ASSERT_EQ(run(second).code, 0);
  EXPECT_EQ(read_file(dir / "run1" / "manifest.json"), read_file(dir / "run2" / "manifest.json"));
}

TEST(Cli, SimulationBenchmarkWritesCurves) {
  TempDir dir;
  const Outcome r = run({"benchmark", "--simulation", "--replications", "2", "--n", "60",
                     "--iterations", "15", "--seed", "3", "--out", (dir / "sim").string()});
  ASSERT_EQ(r.code, 0) << r.err;
  const auto curves = bench::read_traces(dir / "sim" / "pointwise_mse.csv");
  EXPECT_EQ(curves.size(), 3u * 200u);
  EXPECT_TRUE(std::filesystem::exists(dir / "sim" / "test_mse.csv"));
  EXPECT_TRUE(std::filesystem::exists(dir / "sim" / "manifest.json"));
}

}  // namespace
}  // namespace ktboost
