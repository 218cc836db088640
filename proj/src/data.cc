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

#include "ktboost/data.h"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <map>
#include <numeric>
#include <random>
#include <sstream>

#include "ktboost/format.h"

namespace ktboost {
namespace {

std::string trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r\n");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r\n");
  return std::string(s.substr(first, last - first + 1));
}

std::vector<std::string> split_line(const std::string& line) {
  std::vector<std::string> cells;
  std::size_t start = 0;
  while (true) {
    const auto comma = line.find(',', start);
    if (comma == std::string::npos) {
      cells.push_back(trim(std::string_view(line).substr(start)));
      break;
    }
    cells.push_back(trim(std::string_view(line).substr(start, comma - start)));
    start = comma + 1;
  }
  return cells;
}

std::optional<double> parse_number(const std::string& cell) {
  if (cell.empty()) return std::nullopt;
  const char* begin = cell.data();
  const char* end = cell.data() + cell.size();
  if (*begin == '+') ++begin;
  double value = 0.0;
  const auto [ptr, ec] = std::from_chars(begin, end, value);
  if (ec != std::errc() || ptr != end) return std::nullopt;
  return value;
}

struct RawTable {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;
};

RawTable read_table(const std::filesystem::path& path, bool header) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open '" + path.string() + "'");
  RawTable table;
  std::string line;
  std::size_t line_no = 0;
  std::size_t width = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line_no == 1 && line.size() >= 3 &&
        line.compare(0, 3, "\xEF\xBB\xBF") == 0) {
      line.erase(0, 3);
    }
    if (trim(line).empty()) continue;
    auto cells = split_line(line);
    if (width == 0) width = cells.size();
    if (cells.size() != width) {
      throw DataError(path.string() + ":" + std::to_string(line_no) +
                      ": expected " + std::to_string(width) +
                      " columns, found " + std::to_string(cells.size()));
    }
    if (header && table.header.empty()) {
      table.header = std::move(cells);
    } else {
      table.rows.push_back(std::move(cells));
    }
  }
  if (in.bad()) throw DataError("read failure on '" + path.string() + "'");
  if (table.rows.empty()) {
    throw DataError("'" + path.string() + "' contains no data rows");
  }
  return table;
}

double parse_feature(const std::string& cell, const std::filesystem::path& path,
                     std::size_t row, std::size_t col) {
  const auto where = [&] {
    return path.string() + ": row " + std::to_string(row + 1) + ", column " +
           std::to_string(col + 1);
  };
  if (cell.empty()) throw DataError(where() + ": missing value");
  const auto value = parse_number(cell);
  if (!value) throw DataError(where() + ": non-numeric value '" + cell + "'");
  if (!std::isfinite(*value)) {
    throw DataError(where() + ": missing value '" + cell + "'");
  }
  return *value;
}

// Sorted label list: numeric order when all labels parse as finite numbers.
std::vector<std::string> enumerate_labels(std::vector<std::string> labels) {
  std::sort(labels.begin(), labels.end());
  labels.erase(std::unique(labels.begin(), labels.end()), labels.end());
  const bool numeric = std::all_of(labels.begin(), labels.end(), [](auto& s) {
    const auto v = parse_number(s);
    return v && std::isfinite(*v);
  });
  if (numeric) {
    std::stable_sort(labels.begin(), labels.end(), [](auto& a, auto& b) {
      return *parse_number(a) < *parse_number(b);
    });
  }
  return labels;
}

std::size_t resolve_column(const RawTable& table,
                           const std::variant<std::string, int>& column, bool header) {
  const std::size_t width = table.rows.front().size();
  if (const auto* name = std::get_if<std::string>(&column)) {
    if (!header) throw DataError("target column by name requires a header row");
    const auto it = std::find(table.header.begin(), table.header.end(), *name);
    if (it == table.header.end()) throw DataError("target column '" + *name + "' not found");
    return static_cast<std::size_t>(it - table.header.begin());
  }
  const int index = std::get<int>(column);
  const long resolved = index < 0 ? static_cast<long>(width) + index : index;
  if (resolved < 0 || resolved >= static_cast<long>(width)) {
    throw DataError("target column index " + std::to_string(index) + " out of range");
  }
  return static_cast<std::size_t>(resolved);
}

}  // namespace

std::string to_string(Task task) {
  switch (task) {
    case Task::kRegression:
      return "regression";
    case Task::kBinary:
      return "binary";
    case Task::kMulticlass:
      return "multiclass";
  }
  return "unknown";
}

Task parse_task(const std::string& name) {
  if (name == "regression") return Task::kRegression;
  if (name == "binary") return Task::kBinary;
  if (name == "multiclass") return Task::kMulticlass;
  throw DataError("unknown task '" + name + "'");
}

Dataset::Dataset(RowMatrix features, Vector targets, Task task,
                 int num_classes, std::vector<std::string> feature_names,
                 std::vector<std::string> label_map)
    : features_(std::move(features)),
      targets_(std::move(targets)),
      task_(task),
      num_classes_(num_classes),
      feature_names_(std::move(feature_names)),
      label_map_(std::move(label_map)) {
  if (features_.rows() < 1 || features_.cols() < 1) {
    throw DataError("dataset needs at least one row and one feature");
  }
  if (targets_.size() != features_.rows()) {
    throw DataError("target length does not match the number of rows");
  }
  if (!features_.allFinite() || !targets_.allFinite()) {
    throw DataError("dataset contains non-finite values");
  }
  if (!feature_names_.empty() &&
      feature_names_.size() != static_cast<std::size_t>(features_.cols())) {
    throw DataError("feature name count does not match the feature count");
  }
  switch (task_) {
    case Task::kRegression:
      num_classes_ = 1;
      break;
    case Task::kBinary:
      num_classes_ = 2;
      break;
    case Task::kMulticlass:
      if (num_classes_ < 2) throw DataError("multiclass needs at least 2 classes");
      break;
  }
  if (task_ != Task::kRegression) {
    for (Index i = 0; i < targets_.size(); ++i) {
      const double t = targets_[i];
      if (t != std::floor(t) || t < 0 || t >= num_classes_) {
        throw DataError("class target " + format_double(t) + " outside {0,...," +
                        std::to_string(num_classes_ - 1) + "}");
      }
    }
    if (!label_map_.empty() &&
        label_map_.size() != static_cast<std::size_t>(num_classes_)) {
      throw DataError("label map size does not match the class count");
    }
  }
}

Dataset Dataset::subset(const std::vector<Index>& rows) const {
  RowMatrix x(static_cast<Index>(rows.size()), p());
  Vector y(static_cast<Index>(rows.size()));
  for (std::size_t i = 0; i < rows.size(); ++i) {
    x.row(static_cast<Index>(i)) = features_.row(rows[i]);
    y[static_cast<Index>(i)] = targets_[rows[i]];
  }
  return Dataset(std::move(x), std::move(y), task_, num_classes_,
                 feature_names_, label_map_);
}

Dataset Dataset::with_features(RowMatrix features) const {
  if (features.rows() != n() || features.cols() != p()) {
    throw DataError("replacement features have a different shape");
  }
  return Dataset(std::move(features), targets_, task_, num_classes_,
                 feature_names_, label_map_);
}

Dataset load_csv(const std::filesystem::path& path, const CsvOptions& options) {
  const RawTable table = read_table(path, options.header);
  const std::size_t width = table.rows.front().size();
  if (width < 2) throw DataError("need at least one feature and a target");

  const std::size_t target = resolve_column(table, options.target_column, options.header);

  const auto n = static_cast<Index>(table.rows.size());
  const auto p = static_cast<Index>(width - 1);
  RowMatrix x(n, p);
  Vector y(n);
  std::vector<std::string> names;
  if (options.header) {
    for (std::size_t c = 0; c < width; ++c) {
      if (c != target) names.push_back(table.header[c]);
    }
  }
  std::vector<std::string> labels;
  for (Index i = 0; i < n; ++i) {
    const auto& row = table.rows[static_cast<std::size_t>(i)];
    Index col = 0;
    for (std::size_t c = 0; c < width; ++c) {
      if (c == target) continue;
      x(i, col++) = parse_feature(row[c], path, static_cast<std::size_t>(i), c);
    }
    if (options.task == Task::kRegression) {
      y[i] = parse_feature(row[target], path, static_cast<std::size_t>(i), target);
    } else {
      if (row[target].empty()) {
        throw DataError(path.string() + ": row " + std::to_string(i + 1) +
                        ": missing label");
      }
      labels.push_back(row[target]);
    }
  }

  int num_classes = 1;
  std::vector<std::string> label_map;
  if (options.task != Task::kRegression) {
    if (options.label_map) {
      label_map = *options.label_map;
      for (const auto& label : labels) {
        if (std::find(label_map.begin(), label_map.end(), label) == label_map.end()) {
          throw DataError("label '" + label + "' is not in the label map");
        }
      }
      num_classes = static_cast<int>(label_map.size());
      if (options.task == Task::kBinary && num_classes != 2) {
        throw DataError("binary label map must have two entries");
      }
    } else if (options.task == Task::kBinary) {
      label_map = enumerate_labels(labels);
      if (label_map.size() > 2) {
        throw DataError("binary task but " + std::to_string(label_map.size()) +
                        " distinct labels");
      }
      num_classes = 2;
      // A single observed class keeps a two-entry map for prediction output.
      if (label_map.size() == 1) {
        if (label_map.front() == "1") {
          label_map.insert(label_map.begin(), "0");
        } else {
          label_map.push_back(label_map.front() == "0" ? "1" : label_map.front() + "_other");
        }
      }
    } else {
      label_map = enumerate_labels(labels);
      num_classes = options.num_classes.value_or(static_cast<int>(label_map.size()));
      if (static_cast<int>(label_map.size()) > num_classes) {
        throw DataError("label '" + label_map[static_cast<std::size_t>(num_classes)] +
                        "' maps outside {0,...," + std::to_string(num_classes - 1) +
                        "}");
      }
      for (int k = static_cast<int>(label_map.size()); k < num_classes; ++k) {
        label_map.push_back("class" + std::to_string(k));
      }
    }
    std::map<std::string, int> index;
    for (std::size_t k = 0; k < label_map.size(); ++k) {
      index.emplace(label_map[k], static_cast<int>(k));
    }
    for (Index i = 0; i < n; ++i) y[i] = index.at(labels[static_cast<std::size_t>(i)]);
  }
  return Dataset(std::move(x), std::move(y), options.task, num_classes,
                 std::move(names), std::move(label_map));
}

RowMatrix load_feature_csv(const std::filesystem::path& path, bool header,
                           const std::optional<std::variant<std::string, int>>& skip) {
  const RawTable table = read_table(path, header);
  const auto n = static_cast<Index>(table.rows.size());
  const std::size_t width = table.rows.front().size();
  const std::size_t skipped = skip ? resolve_column(table, *skip, header) : width;
  const auto p = static_cast<Index>(skip ? width - 1 : width);
  if (p < 1) throw DataError(path.string() + ": no feature columns");
  RowMatrix x(n, p);
  for (Index i = 0; i < n; ++i) {
    const auto& row = table.rows[static_cast<std::size_t>(i)];
    Index col = 0;
    for (std::size_t c = 0; c < width; ++c) {
      if (c == skipped) continue;
      x(i, col++) = parse_feature(row[c], path, static_cast<std::size_t>(i), c);
    }
  }
  return x;
}

void write_csv(const Dataset& data, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write '" + path.string() + "'");
  for (Index j = 0; j < data.p(); ++j) {
    out << (data.feature_names().empty() ? "x" + std::to_string(j)
                                         : data.feature_names()[static_cast<std::size_t>(j)])
        << ',';
  }
  out << "target\n";
  for (Index i = 0; i < data.n(); ++i) {
    for (Index j = 0; j < data.p(); ++j) out << format_double(data.features()(i, j)) << ',';
    const double t = data.targets()[i];
    if (data.task() != Task::kRegression && !data.label_map().empty()) {
      out << data.label_map()[static_cast<std::size_t>(t)];
    } else {
      out << format_double(t);
    }
    out << '\n';
  }
  if (!out) throw DataError("write failure on '" + path.string() + "'");
}

Standardizer::Standardizer(Vector means, Vector scales)
    : means_(std::move(means)), scales_(std::move(scales)) {
  if (means_.size() != scales_.size()) {
    throw DataError("standardizer means and scales differ in length");
  }
  if ((scales_.array() <= 0.0).any() || !scales_.allFinite() || !means_.allFinite()) {
    throw DataError("standardizer scales must be positive and finite");
  }
}

Standardizer Standardizer::identity(Index p) {
  return Standardizer(Vector::Zero(p), Vector::Ones(p));
}

RowMatrix Standardizer::transform(const RowMatrix& x) const {
  if (x.cols() != p()) {
    throw DataError("expected " + std::to_string(p()) + " features, got " +
                    std::to_string(x.cols()));
  }
  RowMatrix z = x;
  z.rowwise() -= means_.transpose();
  z.array().rowwise() /= scales_.transpose().array();
  return z;
}

RowMatrix Standardizer::inverse_transform(const RowMatrix& z) const {
  if (z.cols() != p()) {
    throw DataError("expected " + std::to_string(p()) + " features, got " +
                    std::to_string(z.cols()));
  }
  RowMatrix x = z;
  x.array().rowwise() *= scales_.transpose().array();
  x.rowwise() += means_.transpose();
  return x;
}

Dataset Standardizer::apply(const Dataset& data) const {
  return data.with_features(transform(data.features()));
}

Standardizer fit_standardizer(const Dataset& train) {
  const RowMatrix& x = train.features();
  const Index n = x.rows();
  Vector means = x.colwise().mean().transpose();
  Vector scales(x.cols());
  for (Index j = 0; j < x.cols(); ++j) {
    double sd = 0.0;
    if (n > 1) {
      sd = std::sqrt((x.col(j).array() - means[j]).square().sum() /
                     static_cast<double>(n - 1));
    }
    scales[j] = std::max(sd, kStandardizerScaleFloor);
  }
  return Standardizer(std::move(means), std::move(scales));
}

std::array<std::vector<Index>, 3> split_indices(Index n, const SplitSpec& spec) {
  double total = 0.0;
  for (double f : spec.fractions) {
    if (!(f > 0.0)) throw DataError("split fractions must be positive");
    total += f;
  }
  if (std::abs(total - 1.0) > 1e-9) throw DataError("split fractions must sum to 1");

  std::array<Index, 3> sizes{};
  Index assigned = 0;
  for (std::size_t k = 0; k < 3; ++k) {
    sizes[k] = static_cast<Index>(
        std::floor(spec.fractions[k] * static_cast<double>(n) + 1e-9));
    assigned += sizes[k];
  }
  for (std::size_t k = 0; assigned < n; k = (k + 1) % 3, ++assigned) ++sizes[k];
  for (Index s : sizes) {
    if (s < 1) throw DataError("split produces an empty part");
  }

  std::vector<Index> perm(static_cast<std::size_t>(n));
  std::iota(perm.begin(), perm.end(), Index{0});
  std::mt19937_64 rng(spec.seed);
  std::shuffle(perm.begin(), perm.end(), rng);

  std::array<std::vector<Index>, 3> parts;
  auto it = perm.begin();
  for (std::size_t k = 0; k < 3; ++k) {
    parts[k].assign(it, it + sizes[k]);
    it += sizes[k];
  }
  return parts;
}

std::array<Dataset, 3> split(const Dataset& data, const SplitSpec& spec) {
  const auto parts = split_indices(data.n(), spec);
  return {data.subset(parts[0]), data.subset(parts[1]), data.subset(parts[2])};
}

}  // namespace ktboost
