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

// Loss functions with first and second derivatives in the score.
//
//   squared   L(y, F) = (y - F)^2 / 2
//   logistic  L(y, F) = log(1 + e^F) - y F,            y in {0, 1}
//   softmax   L(y, F) = log sum_k e^{F_k} - F_y,        y in {0, ..., d-1}
//
// Scores are stored as an n x d matrix with d = 1 for squared and logistic.

#ifndef KTBOOST_LOSSES_H_
#define KTBOOST_LOSSES_H_

#include <span>
#include <string>

#include "ktboost/common.h"
#include "ktboost/data.h"

namespace ktboost {

enum class LossKind { kSquared, kLogistic, kSoftmax };

std::string to_string(LossKind kind);
LossKind parse_loss(const std::string& name);

// Newton-mode Hessians are clamped from below to this value.
inline constexpr double kHessianFloor = 1e-10;
// Class frequencies are clipped to [eps, 1 - eps] for the initial constant.
inline constexpr double kProbabilityClip = 1e-15;

class LossFunction {
 public:
  LossFunction(LossKind kind, int num_classes);

  // Squared for regression, logistic for binary, softmax for multiclass.
  static LossFunction for_task(Task task, int num_classes);

  LossKind kind() const { return kind_; }
  // Number of score columns d.
  int num_outputs() const { return kind_ == LossKind::kSoftmax ? num_classes_ : 1; }
  int num_classes() const { return num_classes_; }

  // `scores` has num_outputs() entries.
  double value(double y, std::span<const double> scores) const;

 private:
  LossKind kind_;
  int num_classes_;
};

// Gradients and Hessians, both n x d.
struct GradHess {
  Matrix g;
  Matrix h;
};

// With newton == false every Hessian entry is 1 (gradient boosting).
GradHess gradient_hessian(const LossFunction& loss, const Vector& targets,
                          const Matrix& scores, bool newton);

// argmin over constants c of sum_i L(y_i, c).
Vector optimal_constant(const LossFunction& loss, const Vector& targets);

// sum_i L(y_i, F_i). A sum, not a mean.
double empirical_risk(const LossFunction& loss, const Vector& targets,
                      const Matrix& scores);

// Numerically stable helpers shared with prediction code.
double sigmoid(double x);
double log1p_exp(double x);
void softmax_inplace(std::span<double> scores);

}  // namespace ktboost

#endif  // KTBOOST_LOSSES_H_
