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

// Datasets, CSV ingestion, standardization and train/validation/test splits.

#ifndef KTBOOST_DATA_H_
#define KTBOOST_DATA_H_

#include <array>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "ktboost/common.h"

namespace ktboost {

enum class Task { kRegression, kBinary, kMulticlass };

std::string to_string(Task task);
// Accepts "regression", "binary" and "multiclass".
Task parse_task(const std::string& name);

// Feature matrix plus target vector. Classification targets are class
// indices stored as doubles; `label_map()[k]` is the original label of
// class k. Immutable after construction.
class Dataset {
 public:
  // Validates the invariants and throws DataError on violation.
  // `num_classes` is ignored for regression, forced to 2 for binary.
  Dataset(RowMatrix features, Vector targets, Task task, int num_classes = 1,
          std::vector<std::string> feature_names = {},
          std::vector<std::string> label_map = {});

  const RowMatrix& features() const { return features_; }
  const Vector& targets() const { return targets_; }
  Task task() const { return task_; }
  int num_classes() const { return num_classes_; }
  const std::vector<std::string>& feature_names() const {
    return feature_names_;
  }
  const std::vector<std::string>& label_map() const { return label_map_; }

  Index n() const { return features_.rows(); }
  Index p() const { return features_.cols(); }

  // Rows in the given order.
  Dataset subset(const std::vector<Index>& rows) const;
  // Same targets and metadata with replaced features (same shape).
  Dataset with_features(RowMatrix features) const;

 private:
  RowMatrix features_;
  Vector targets_;
  Task task_;
  int num_classes_;
  std::vector<std::string> feature_names_;
  std::vector<std::string> label_map_;
};

struct CsvOptions {
  // Column name (requires a header) or zero-based column index.
  std::variant<std::string, int> target_column = -1;  // -1: last column
  Task task = Task::kRegression;
  bool header = true;
  // Expected class count for multiclass; inferred from the labels if unset.
  std::optional<int> num_classes;
  // Fixed label enumeration (e.g. from a trained model); labels not in it
  // are rejected.
  std::optional<std::vector<std::string>> label_map;
};

// Loads a comma-separated file. Missing or non-numeric feature cells are
// rejected. Classification labels are enumerated in sorted order (numeric
// order when every label is a number, lexicographic otherwise).
Dataset load_csv(const std::filesystem::path& path, const CsvOptions& options);

// Writes features followed by the target column, with a header row.
// Numbers use round-trip precision; class targets are written as labels.
void write_csv(const Dataset& data, const std::filesystem::path& path);

// Reads a header-optional numeric matrix (used for prediction inputs). The
// optional column, addressed like CsvOptions::target_column, is skipped
// without being parsed.
RowMatrix load_feature_csv(
    const std::filesystem::path& path, bool header,
    const std::optional<std::variant<std::string, int>>& skip = std::nullopt);

inline constexpr double kStandardizerScaleFloor = 1e-12;

class Standardizer {
 public:
  Standardizer() = default;
  Standardizer(Vector means, Vector scales);

  // Identity transform over p features.
  static Standardizer identity(Index p);

  const Vector& means() const { return means_; }
  const Vector& scales() const { return scales_; }
  Index p() const { return means_.size(); }

  RowMatrix transform(const RowMatrix& x) const;
  RowMatrix inverse_transform(const RowMatrix& z) const;
  Dataset apply(const Dataset& data) const;

 private:
  Vector means_;
  Vector scales_;
};

// Per-feature sample mean and max(sample sd with n-1 denominator, floor).
Standardizer fit_standardizer(const Dataset& train);

struct SplitSpec {
  std::array<double, 3> fractions{1.0 / 3.0, 1.0 / 3.0, 1.0 / 3.0};
  std::uint64_t seed = 0;
};

// Index sets (train, validation, test) of a seeded random permutation.
// Part sizes are floor(fraction * n); leftover rows go to train, then
// validation, then test, one at a time.
std::array<std::vector<Index>, 3> split_indices(Index n, const SplitSpec& spec);

std::array<Dataset, 3> split(const Dataset& data, const SplitSpec& spec);

}  // namespace ktboost

#endif  // KTBOOST_DATA_H_
