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

#include "ktboost/boost.h"

#include <chrono>
#include <cmath>
#include <limits>
#include <map>
#include <utility>

namespace ktboost {

std::string to_string(LearnerSet learners) {
  switch (learners) {
    case LearnerSet::kKTBoost:
      return "ktboost";
    case LearnerSet::kTreeOnly:
      return "tree";
    case LearnerSet::kKernelOnly:
      return "kernel";
  }
  return "unknown";
}

LearnerSet parse_learner_set(const std::string& name) {
  if (name == "ktboost") return LearnerSet::kKTBoost;
  if (name == "tree") return LearnerSet::kTreeOnly;
  if (name == "kernel") return LearnerSet::kKernelOnly;
  throw DataError("unknown learner set '" + name + "' (expected ktboost, tree or kernel)");
}

std::string to_string(SelectionMode mode) {
  return mode == SelectionMode::kDamped ? "damped" : "undamped";
}

SelectionMode parse_selection_mode(const std::string& name) {
  if (name == "damped") return SelectionMode::kDamped;
  if (name == "undamped") return SelectionMode::kUndamped;
  throw DataError("unknown selection mode '" + name + "'");
}

std::string to_string(LearnerTag tag) { return tag == LearnerTag::kTree ? "tree" : "kernel"; }

LearnerTag parse_learner_tag(const std::string& name) {
  if (name == "tree") return LearnerTag::kTree;
  if (name == "kernel") return LearnerTag::kKernel;
  throw DataError("unknown learner tag '" + name + "'");
}

void BoostConfig::validate() const {
  if (max_iterations < 1) throw DataError("max_iterations must be >= 1");
  if (!(nu > 0.0) || !std::isfinite(nu)) throw DataError("shrinkage nu must be positive");
  if (tree.max_depth < 0) throw DataError("max_depth must be >= 0");
  if (tree.min_samples_leaf < 1) throw DataError("min_samples_leaf must be >= 1");
  if (rho && (!(*rho > 0.0) || !std::isfinite(*rho))) throw DataError("rho must be positive");
  if (!rho && rho_mode == RhoMode::kDecay01 && rho_knn < 1) {
    throw DataError("nearest-neighbor count must be >= 1");
  }
  if (!(lambda >= 0.0) || !std::isfinite(lambda)) throw DataError("lambda must be nonnegative");
  if (nystrom_samples && *nystrom_samples < 1) throw DataError("Nystrom sample count must be >= 1");
  if (early_stopping_rounds && *early_stopping_rounds < 1) {
    throw DataError("early stopping rounds must be >= 1");
  }
}

Ensemble::Ensemble(Task task, int num_classes, Vector f0, double nu, Standardizer standardizer,
                   std::vector<std::string> label_map, std::vector<BoostIteration> iterations)
    : task_(task),
      num_classes_(task == Task::kRegression ? 1 : num_classes),
      loss_(LossFunction::for_task(task, num_classes)),
      f0_(std::move(f0)),
      nu_(nu),
      standardizer_(std::move(standardizer)),
      label_map_(std::move(label_map)),
      iterations_(std::move(iterations)) {
  const int d = loss_.num_outputs();
  if (f0_.size() != d) throw DataError("ensemble: f0 length does not match the outputs");
  if (!(nu_ > 0.0)) throw DataError("ensemble: nu must be positive");
  if (standardizer_.p() < 1) throw DataError("ensemble: missing standardizer");
  for (const BoostIteration& it : iterations_) {
    if (static_cast<int>(it.per_class.size()) != d) {
      throw DataError("ensemble: iteration has the wrong number of learners");
    }
    for (const BaseLearner& learner : it.per_class) {
      const bool is_tree = std::holds_alternative<Tree>(learner);
      if (is_tree != (it.tag == LearnerTag::kTree)) {
        throw DataError("ensemble: learner kind does not match the iteration tag");
      }
      if (is_tree) {
        if (std::get<Tree>(learner).max_feature() >= standardizer_.p()) {
          throw DataError("ensemble: tree splits on a missing feature");
        }
      } else if (std::get<KernelLearner>(learner).anchors()->cols() != standardizer_.p()) {
        throw DataError("ensemble: kernel anchors have the wrong dimension");
      }
    }
  }
}

namespace {

int resolve_truncation(std::optional<int> truncate_at, int total) {
  if (!truncate_at) return total;
  if (*truncate_at < 0 || *truncate_at > total) {
    throw DataError("truncate_at must lie in [0, " + std::to_string(total) + "]");
  }
  return *truncate_at;
}

Matrix constant_scores(const Vector& f0, Index n) {
  Matrix scores(n, f0.size());
  scores.rowwise() = f0.transpose();
  return scores;
}

// Kernel learners of one run share anchors; their coefficients can be
// summed before evaluating the kernel.
struct AnchorGroup {
  const KernelLearner* representative = nullptr;
  Matrix coefficients;  // anchors x outputs
};

using AnchorKey = std::pair<const RowMatrix*, double>;

AnchorKey anchor_key(const KernelLearner& learner) {
  return {learner.anchors().get(), learner.rho()};
}

}  // namespace

Matrix Ensemble::predict(const RowMatrix& features, std::optional<int> truncate_at) const {
  if (features.cols() != num_features()) {
    throw DataError("expected " + std::to_string(num_features()) + " features, got " +
                    std::to_string(features.cols()));
  }
  return predict_standardized(standardizer_.transform(features), truncate_at);
}

Matrix Ensemble::predict_standardized(const RowMatrix& z, std::optional<int> truncate_at) const {
  if (z.cols() != num_features()) throw DataError("feature dimension mismatch");
  const int m = resolve_truncation(truncate_at, num_iterations());
  const int d = num_outputs();
  Matrix scores = constant_scores(f0_, z.rows());
  std::map<AnchorKey, AnchorGroup> groups;
  for (int it = 0; it < m; ++it) {
    const BoostIteration& iteration = iterations_[static_cast<std::size_t>(it)];
    for (int k = 0; k < d; ++k) {
      const BaseLearner& learner = iteration.per_class[static_cast<std::size_t>(k)];
      if (const auto* tree = std::get_if<Tree>(&learner)) {
        for (Index i = 0; i < z.rows(); ++i) scores(i, k) += nu_ * tree->predict(row_span(z, i));
        continue;
      }
      const auto& kernel = std::get<KernelLearner>(learner);
      AnchorGroup& group = groups[anchor_key(kernel)];
      if (!group.representative) {
        group.representative = &kernel;
        group.coefficients = Matrix::Zero(kernel.alpha().size(), d);
      }
      group.coefficients.col(k) += nu_ * kernel.alpha();
    }
  }
  for (const auto& [key, group] : groups) {
    const Matrix cross = kernel_matrix(z, *group.representative->anchors(), key.second);
    scores.noalias() += cross * group.coefficients;
  }
  return scores;
}

void Ensemble::staged_predict(const RowMatrix& features,
                              const std::function<void(int, const Matrix&)>& visit) const {
  const RowMatrix z = standardizer_.transform(features);
  const int d = num_outputs();
  Matrix scores = constant_scores(f0_, z.rows());
  visit(0, scores);
  std::map<AnchorKey, Matrix> cross_cache;
  for (int it = 0; it < num_iterations(); ++it) {
    const BoostIteration& iteration = iterations_[static_cast<std::size_t>(it)];
    for (int k = 0; k < d; ++k) {
      const BaseLearner& learner = iteration.per_class[static_cast<std::size_t>(k)];
      if (const auto* tree = std::get_if<Tree>(&learner)) {
        for (Index i = 0; i < z.rows(); ++i) scores(i, k) += nu_ * tree->predict(row_span(z, i));
        continue;
      }
      const auto& kernel = std::get<KernelLearner>(learner);
      auto [entry, inserted] = cross_cache.try_emplace(anchor_key(kernel));
      if (inserted) entry->second = kernel_matrix(z, *kernel.anchors(), kernel.rho());
      scores.col(k) += nu_ * (entry->second * kernel.alpha());
    }
    visit(it + 1, scores);
  }
}

Matrix scores_to_probabilities(LossKind kind, const Matrix& scores) {
  if (kind == LossKind::kSquared) throw DataError("probabilities need a classification model");
  if (kind == LossKind::kLogistic) {
    Matrix prob(scores.rows(), 2);
    for (Index i = 0; i < scores.rows(); ++i) {
      const double p = sigmoid(scores(i, 0));
      prob(i, 0) = 1.0 - p;
      prob(i, 1) = p;
    }
    return prob;
  }
  Matrix prob = scores;
  std::vector<double> row(static_cast<std::size_t>(scores.cols()));
  for (Index i = 0; i < scores.rows(); ++i) {
    for (Index k = 0; k < scores.cols(); ++k) row[static_cast<std::size_t>(k)] = scores(i, k);
    softmax_inplace(row);
    for (Index k = 0; k < scores.cols(); ++k) prob(i, k) = row[static_cast<std::size_t>(k)];
  }
  return prob;
}

std::vector<int> scores_to_labels(LossKind kind, const Matrix& scores) {
  std::vector<int> labels(static_cast<std::size_t>(scores.rows()));
  for (Index i = 0; i < scores.rows(); ++i) {
    if (kind == LossKind::kLogistic) {
      labels[static_cast<std::size_t>(i)] = scores(i, 0) > 0.0 ? 1 : 0;
      continue;
    }
    Index best = 0;
    for (Index k = 1; k < scores.cols(); ++k) {
      if (scores(i, k) > scores(i, best)) best = k;
    }
    labels[static_cast<std::size_t>(i)] = static_cast<int>(best);
  }
  return labels;
}

Matrix Ensemble::predict_proba(const RowMatrix& features, std::optional<int> truncate_at) const {
  return scores_to_probabilities(loss_.kind(), predict(features, truncate_at));
}

std::vector<int> Ensemble::predict_labels(const RowMatrix& features,
                                          std::optional<int> truncate_at) const {
  if (task_ == Task::kRegression) throw DataError("labels need a classification model");
  return scores_to_labels(loss_.kind(), predict(features, truncate_at));
}

Ensemble Ensemble::truncated(int m) const {
  const int keep = resolve_truncation(m, num_iterations());
  std::vector<BoostIteration> head(iterations_.begin(), iterations_.begin() + keep);
  return Ensemble(task_, num_classes_, f0_, nu_, standardizer_, label_map_, std::move(head));
}

double resolve_rho(const RowMatrix& standardized_train, const BoostConfig& config) {
  if (config.rho) return *config.rho;
  return select_rho(standardized_train, config.rho_knn, config.rho_mode);
}

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

void check_finite_risk(double risk, int iteration) {
  if (!std::isfinite(risk)) {
    throw NumericalError("non-finite empirical risk at iteration " + std::to_string(iteration) +
                         "; the configuration diverges");
  }
}

FitResult fit_impl(const Dataset& train, const BoostConfig& config, const Dataset* validation) {
  const auto setup_start = Clock::now();
  config.validate();
  if (train.n() < 2) throw DataError("training needs at least two rows");
  if (validation &&
      (validation->p() != train.p() || validation->task() != train.task() ||
       validation->num_classes() != train.num_classes())) {
    throw DataError("validation data does not match the training data");
  }

  const LossFunction loss = LossFunction::for_task(train.task(), train.num_classes());
  const int d = loss.num_outputs();
  const Standardizer standardizer =
      config.standardize ? fit_standardizer(train) : Standardizer::identity(train.p());
  const RowMatrix x = standardizer.transform(train.features());
  const Vector& y = train.targets();
  const Index n = x.rows();
  RowMatrix x_val;
  if (validation) x_val = standardizer.transform(validation->features());

  const Vector f0 = optimal_constant(loss, y);
  Matrix scores = constant_scores(f0, n);
  Matrix val_scores;
  if (validation) val_scores = constant_scores(f0, x_val.rows());

  const bool use_tree = config.learners != LearnerSet::kKernelOnly;
  const bool use_kernel = config.learners != LearnerSet::kTreeOnly;

  FitReport report;
  report.initial_risk = empirical_risk(loss, y, scores);
  report.rho = std::numeric_limits<double>::quiet_NaN();

  std::optional<FeatureOrder> order;
  if (use_tree) order.emplace(x);
  std::optional<KernelFitter> kernel;
  Matrix val_cross;
  if (use_kernel) {
    if (config.nystrom_samples) {
      if (*config.nystrom_samples > n) throw DataError("more Nystrom samples than training rows");
      auto rows = sample_nystrom_rows(n, *config.nystrom_samples, config.seed);
      double rho = 0.0;
      if (config.rho) {
        rho = *config.rho;
      } else {
        RowMatrix samples(static_cast<Index>(rows.size()), x.cols());
        for (std::size_t i = 0; i < rows.size(); ++i) samples.row(static_cast<Index>(i)) = x.row(rows[i]);
        rho = resolve_rho(samples, config);
      }
      kernel.emplace(NystromFactor(x, std::move(rows), rho), config.lambda, config.newton);
    } else {
      KernelConfig kc{resolve_rho(x, config), config.lambda, std::nullopt, config.seed};
      kernel.emplace(x, kc, config.newton);
    }
    report.rho = kernel->rho();
    if (validation) val_cross = kernel->cross_kernel(x_val);
  }
  report.setup_seconds = seconds_since(setup_start);

  const double step = config.selection == SelectionMode::kDamped ? config.nu : 1.0;
  std::vector<BoostIteration> iterations;
  double best_val = std::numeric_limits<double>::infinity();
  int best_iteration = 0;

  for (int m = 1; m <= config.max_iterations; ++m) {
    const auto iteration_start = Clock::now();
    const GradHess gh = gradient_hessian(loss, y, scores, config.newton);

    std::vector<BaseLearner> tree_learners;
    std::vector<BaseLearner> kernel_learners;
    Matrix tree_pred(n, d);
    Matrix kernel_pred(n, d);
    std::optional<double> tree_risk;
    std::optional<double> kernel_risk;
    Matrix tree_scores;
    Matrix kernel_scores;
    if (use_tree) {
      for (int k = 0; k < d; ++k) {
        Tree tree = fit_tree(x, *order, gh.g.col(k), gh.h.col(k), config.tree);
        tree_pred.col(k) = tree.predict(x);
        tree_learners.emplace_back(std::move(tree));
      }
      tree_scores = scores + step * tree_pred;
      tree_risk = empirical_risk(loss, y, tree_scores);
    }
    if (use_kernel) {
      for (int k = 0; k < d; ++k) {
        KernelFit kf = kernel->fit(gh.g.col(k), gh.h.col(k));
        kernel_pred.col(k) = kf.train_predictions;
        kernel_learners.emplace_back(std::move(kf.learner));
      }
      kernel_scores = scores + step * kernel_pred;
      kernel_risk = empirical_risk(loss, y, kernel_scores);
    }

    const bool take_tree = use_tree && (!use_kernel || *tree_risk <= *kernel_risk);
    const LearnerTag tag = take_tree ? LearnerTag::kTree : LearnerTag::kKernel;
    if (step == config.nu) {
      scores = take_tree ? std::move(tree_scores) : std::move(kernel_scores);
    } else {
      scores += config.nu * (take_tree ? tree_pred : kernel_pred);
    }
    const double risk = empirical_risk(loss, y, scores);
    check_finite_risk(risk, m);

    BoostIteration iteration{tag, take_tree ? std::move(tree_learners) : std::move(kernel_learners)};
    if (validation) {
      for (int k = 0; k < d; ++k) {
        const BaseLearner& learner = iteration.per_class[static_cast<std::size_t>(k)];
        if (take_tree) {
          val_scores.col(k) += config.nu * std::get<Tree>(learner).predict(x_val);
        } else {
          val_scores.col(k) += config.nu * (val_cross * std::get<KernelLearner>(learner).alpha());
        }
      }
      const double val_risk = empirical_risk(loss, validation->targets(), val_scores);
      check_finite_risk(val_risk, m);
      report.validation_risk.push_back(val_risk);
      if (val_risk < best_val) {
        best_val = val_risk;
        best_iteration = m;
      }
    }
    iterations.push_back(std::move(iteration));
    report.train_risk.push_back(risk);
    report.chosen.push_back(tag);
    report.tree_risk.push_back(tree_risk);
    report.kernel_risk.push_back(kernel_risk);
    report.iteration_seconds.push_back(seconds_since(iteration_start));

    if (validation && config.early_stopping_rounds &&
        m - best_iteration >= *config.early_stopping_rounds) {
      break;
    }
  }
  report.selected_iterations = validation ? best_iteration : report.completed_iterations();

  Ensemble ensemble(train.task(), train.num_classes(), f0, config.nu, standardizer,
                    train.label_map(), std::move(iterations));
  return {std::move(ensemble), std::move(report)};
}

}  // namespace

FitResult fit(const Dataset& train, const BoostConfig& config) {
  return fit_impl(train, config, nullptr);
}

FitResult fit(const Dataset& train, const BoostConfig& config, const Dataset& validation) {
  return fit_impl(train, config, &validation);
}

}  // namespace ktboost
