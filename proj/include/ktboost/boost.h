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

// Combined kernel and tree boosting.
//
// Starting from the risk-minimizing constant F_0, every iteration computes
// gradients and Hessians of the loss at the current scores, fits a tree
// candidate and a kernel ridge candidate to the second-order expansion of
// the risk, and admits the candidate whose shrunken addition F + nu f has
// the lower training risk (ties admit the tree). The admitted learner is
// added with shrinkage: F_m = F_{m-1} + nu f_m.
//
// Restricting the candidate set to one learner type gives plain tree
// boosting or plain kernel boosting through the same code path.

#ifndef KTBOOST_BOOST_H_
#define KTBOOST_BOOST_H_

#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "ktboost/common.h"
#include "ktboost/data.h"
#include "ktboost/kernels.h"
#include "ktboost/losses.h"
#include "ktboost/tree.h"

namespace ktboost {

enum class LearnerSet { kKTBoost, kTreeOnly, kKernelOnly };
enum class SelectionMode { kDamped, kUndamped };
enum class LearnerTag { kTree, kKernel };

// "ktboost", "tree", "kernel"
std::string to_string(LearnerSet learners);
LearnerSet parse_learner_set(const std::string& name);
// "damped", "undamped"
std::string to_string(SelectionMode mode);
SelectionMode parse_selection_mode(const std::string& name);
std::string to_string(LearnerTag tag);
LearnerTag parse_learner_tag(const std::string& name);

struct BoostConfig {
  int max_iterations = 100;
  double nu = 0.1;
  // Second-order (Newton) updates; false sets every Hessian to 1.
  bool newton = false;
  TreeParams tree;

  // Kernel range: a fixed value, or derived from nearest-neighbor
  // distances of the standardized training rows (the Nystrom samples when
  // Nystrom is enabled).
  std::optional<double> rho;
  RhoMode rho_mode = RhoMode::kDecay01;
  int rho_knn = 5;
  double lambda = 1.0;
  std::optional<Index> nystrom_samples;
  std::uint64_t seed = 0;

  LearnerSet learners = LearnerSet::kKTBoost;
  SelectionMode selection = SelectionMode::kDamped;
  // Standardize features with training statistics before fitting.
  bool standardize = true;
  // Stop once the validation risk has not improved for this many rounds.
  std::optional<int> early_stopping_rounds;

  // Throws DataError on invalid combinations.
  void validate() const;
};

using BaseLearner = std::variant<Tree, KernelLearner>;

struct BoostIteration {
  LearnerTag tag;
  // One learner per score column, all of kind `tag`.
  std::vector<BaseLearner> per_class;
};

class Ensemble {
 public:
  Ensemble(Task task, int num_classes, Vector f0, double nu, Standardizer standardizer,
           std::vector<std::string> label_map, std::vector<BoostIteration> iterations);

  Task task() const { return task_; }
  int num_classes() const { return num_classes_; }
  const LossFunction& loss() const { return loss_; }
  int num_outputs() const { return loss_.num_outputs(); }
  const Vector& f0() const { return f0_; }
  double nu() const { return nu_; }
  const Standardizer& standardizer() const { return standardizer_; }
  const std::vector<std::string>& label_map() const { return label_map_; }
  const std::vector<BoostIteration>& iterations() const { return iterations_; }
  int num_iterations() const { return static_cast<int>(iterations_.size()); }
  Index num_features() const { return standardizer_.p(); }

  // Raw (unstandardized) features to n x d scores F_m, using the first
  // `truncate_at` iterations (all when unset).
  Matrix predict(const RowMatrix& features, std::optional<int> truncate_at = {}) const;
  // Same on already standardized features.
  Matrix predict_standardized(const RowMatrix& z, std::optional<int> truncate_at = {}) const;

  // Class probabilities, n x num_classes. Classification only.
  Matrix predict_proba(const RowMatrix& features, std::optional<int> truncate_at = {}) const;
  // Argmax class indices (ties to the lowest index). Classification only.
  std::vector<int> predict_labels(const RowMatrix& features,
                                  std::optional<int> truncate_at = {}) const;

  // Calls `visit(m, scores)` with F_m for m = 0, ..., num_iterations().
  void staged_predict(const RowMatrix& features,
                      const std::function<void(int, const Matrix&)>& visit) const;

  // The first m iterations.
  Ensemble truncated(int m) const;

 private:
  Task task_;
  int num_classes_;
  LossFunction loss_;
  Vector f0_;
  double nu_;
  Standardizer standardizer_;
  std::vector<std::string> label_map_;
  std::vector<BoostIteration> iterations_;
};

// Class probabilities from scores (sigmoid or softmax).
Matrix scores_to_probabilities(LossKind kind, const Matrix& scores);
// Argmax of probabilities; ties resolve to the lowest class index.
std::vector<int> scores_to_labels(LossKind kind, const Matrix& scores);

struct FitReport {
  double initial_risk = 0.0;
  // Training risk after each iteration.
  std::vector<double> train_risk;
  std::vector<LearnerTag> chosen;
  // Risks used for selection (with or without shrinkage, per the
  // selection mode); empty entries for disabled learner types.
  std::vector<std::optional<double>> tree_risk;
  std::vector<std::optional<double>> kernel_risk;
  // Validation risk after each iteration, when validation data was given.
  std::vector<double> validation_risk;
  // argmin of validation_risk (1-based), or the completed iteration count.
  int selected_iterations = 0;
  // Kernel range actually used (NaN when kernels are disabled).
  double rho = 0.0;
  // Wall-clock timings; not part of any persisted artifact.
  double setup_seconds = 0.0;
  std::vector<double> iteration_seconds;

  int completed_iterations() const { return static_cast<int>(train_risk.size()); }
};

struct FitResult {
  Ensemble ensemble;
  FitReport report;
};

FitResult fit(const Dataset& train, const BoostConfig& config);
FitResult fit(const Dataset& train, const BoostConfig& config, const Dataset& validation);

// Kernel range the configuration resolves to on standardized training
// features; also used by fit.
double resolve_rho(const RowMatrix& standardized_train, const BoostConfig& config);

inline constexpr int kModelFormatVersion = 1;

// Canonical JSON: sorted keys and round-trip number formatting, so saving
// the same model twice yields identical bytes.
std::string to_json(const Ensemble& ensemble);
Ensemble from_json(const std::string& text);
void save(const Ensemble& ensemble, const std::filesystem::path& path);
// Throws FormatError on malformed files or a format version mismatch.
Ensemble load(const std::filesystem::path& path);

}  // namespace ktboost

#endif  // KTBOOST_BOOST_H_
