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

#include <charconv>
#include <fstream>
#include <sstream>

#include "ktboost/bench.h"
#include "ktboost/format.h"

namespace ktboost::bench {
namespace {

std::vector<std::string> split_fields(const std::string& line) {
  std::vector<std::string> fields;
  std::stringstream stream(line);
  std::string field;
  while (std::getline(stream, field, ',')) fields.push_back(field);
  if (!line.empty() && line.back() == ',') fields.emplace_back();
  return fields;
}

template <typename T>
T parse_number(const std::string& text, std::size_t line) {
  T value{};
  const auto [end, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
  if (ec != std::errc() || end != text.data() + text.size()) {
    throw FormatError("trace line " + std::to_string(line) + ": bad number '" + text + "'");
  }
  return value;
}

}  // namespace

void write_traces(std::span<const TraceRow> rows, const std::filesystem::path& path,
                  const std::string& step_name) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write trace file '" + path.string() + "'");
  out << step_name << ",method,value,replication\n";
  for (const TraceRow& row : rows) {
    if (row.method.find_first_of(",\n\r") != std::string::npos) {
      throw DataError("method name '" + row.method + "' cannot be written to CSV");
    }
    out << format_double(row.step) << ',' << row.method << ',' << format_double(row.value) << ','
        << row.replication << '\n';
  }
  if (!out) throw DataError("write failure on '" + path.string() + "'");
}

std::vector<TraceRow> read_traces(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open trace file '" + path.string() + "'");
  std::string line;
  if (!std::getline(in, line)) throw FormatError("trace file '" + path.string() + "' is empty");
  if (split_fields(line).size() != 4) throw FormatError("trace header must have four columns");
  std::vector<TraceRow> rows;
  for (std::size_t number = 2; std::getline(in, line); ++number) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const auto fields = split_fields(line);
    if (fields.size() != 4) {
      throw FormatError("trace line " + std::to_string(number) + " must have four fields");
    }
    rows.push_back({parse_number<double>(fields[0], number), fields[1],
                    parse_number<double>(fields[2], number), parse_number<int>(fields[3], number)});
  }
  return rows;
}

std::vector<TraceRow> report_traces(const FitReport& report, const std::string& method,
                                    int replication, TraceSeries series) {
  const std::vector<double>& values =
      series == TraceSeries::kTrainRisk ? report.train_risk : report.validation_risk;
  std::vector<TraceRow> rows;
  rows.reserve(values.size());
  for (std::size_t m = 0; m < values.size(); ++m) {
    rows.push_back({static_cast<double>(m + 1), method, values[m], replication});
  }
  return rows;
}

std::vector<TraceRow> test_metric_traces(const Ensemble& model, const Dataset& test,
                                         const std::string& method, int replication) {
  std::vector<TraceRow> rows;
  model.staged_predict(test.features(), [&](int m, const Matrix& scores) {
    if (m == 0) return;
    rows.push_back({static_cast<double>(m), method, metric(test.task(), test.targets(), scores),
                    replication});
  });
  return rows;
}

}  // namespace ktboost::bench
