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

#include "ktboost/losses.h"

#include <algorithm>
#include <cmath>
#include <vector>

namespace ktboost {

std::string to_string(LossKind kind) {
  switch (kind) {
    case LossKind::kSquared:
      return "squared";
    case LossKind::kLogistic:
      return "logistic";
    case LossKind::kSoftmax:
      return "softmax";
  }
  return "unknown";
}

LossKind parse_loss(const std::string& name) {
  if (name == "squared") return LossKind::kSquared;
  if (name == "logistic") return LossKind::kLogistic;
  if (name == "softmax") return LossKind::kSoftmax;
  throw DataError("unknown loss '" + name + "'");
}

double sigmoid(double x) {
  if (x >= 0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

double log1p_exp(double x) {
  return x > 0 ? x + std::log1p(std::exp(-x)) : std::log1p(std::exp(x));
}

void softmax_inplace(std::span<double> scores) {
  const double top = *std::max_element(scores.begin(), scores.end());
  double total = 0.0;
  for (double& s : scores) {
    s = std::exp(s - top);
    total += s;
  }
  for (double& s : scores) s /= total;
}

LossFunction::LossFunction(LossKind kind, int num_classes)
    : kind_(kind), num_classes_(num_classes) {
  if (kind_ == LossKind::kSquared) num_classes_ = 1;
  if (kind_ == LossKind::kLogistic) num_classes_ = 2;
  if (kind_ == LossKind::kSoftmax && num_classes_ < 2) {
    throw DataError("softmax loss needs at least 2 classes");
  }
}

LossFunction LossFunction::for_task(Task task, int num_classes) {
  switch (task) {
    case Task::kRegression:
      return {LossKind::kSquared, 1};
    case Task::kBinary:
      return {LossKind::kLogistic, 2};
    case Task::kMulticlass:
      return {LossKind::kSoftmax, num_classes};
  }
  throw DataError("unknown task");
}

double LossFunction::value(double y, std::span<const double> scores) const {
  switch (kind_) {
    case LossKind::kSquared: {
      const double r = y - scores[0];
      return 0.5 * r * r;
    }
    case LossKind::kLogistic:
      return log1p_exp(scores[0]) - y * scores[0];
    case LossKind::kSoftmax: {
      const double top = *std::max_element(scores.begin(), scores.end());
      double total = 0.0;
      for (double s : scores) total += std::exp(s - top);
      return top + std::log(total) - scores[static_cast<std::size_t>(y)];
    }
  }
  return 0.0;
}

GradHess gradient_hessian(const LossFunction& loss, const Vector& targets,
                          const Matrix& scores, bool newton) {
  const Index n = targets.size();
  const int d = loss.num_outputs();
  if (scores.rows() != n || scores.cols() != d) {
    throw DataError("score matrix shape does not match the targets");
  }
  GradHess gh{Matrix(n, d), Matrix(n, d)};
  switch (loss.kind()) {
    case LossKind::kSquared:
      gh.g.col(0) = scores.col(0) - targets;
      gh.h.setOnes();
      break;
    case LossKind::kLogistic:
      for (Index i = 0; i < n; ++i) {
        const double p = sigmoid(scores(i, 0));
        gh.g(i, 0) = p - targets[i];
        gh.h(i, 0) = p * (1.0 - p);
      }
      break;
    case LossKind::kSoftmax: {
      std::vector<double> prob(static_cast<std::size_t>(d));
      for (Index i = 0; i < n; ++i) {
        for (int k = 0; k < d; ++k) prob[static_cast<std::size_t>(k)] = scores(i, k);
        softmax_inplace(prob);
        const auto label = static_cast<int>(targets[i]);
        for (int k = 0; k < d; ++k) {
          const double p = prob[static_cast<std::size_t>(k)];
          gh.g(i, k) = p - (k == label ? 1.0 : 0.0);
          gh.h(i, k) = p * (1.0 - p);
        }
      }
      break;
    }
  }
  if (newton) {
    gh.h = gh.h.cwiseMax(kHessianFloor);
  } else {
    gh.h.setOnes();
  }
  return gh;
}

Vector optimal_constant(const LossFunction& loss, const Vector& targets) {
  const Index n = targets.size();
  if (n == 0) throw DataError("optimal constant of an empty dataset");
  const auto clip = [](double p) {
    return std::clamp(p, kProbabilityClip, 1.0 - kProbabilityClip);
  };
  switch (loss.kind()) {
    case LossKind::kSquared:
      return Vector::Constant(1, targets.mean());
    case LossKind::kLogistic: {
      const double p = clip(targets.mean());
      return Vector::Constant(1, std::log(p / (1.0 - p)));
    }
    case LossKind::kSoftmax: {
      const int d = loss.num_outputs();
      Vector counts = Vector::Zero(d);
      for (Index i = 0; i < n; ++i) counts[static_cast<Index>(targets[i])] += 1.0;
      Vector f0(d);
      for (int k = 0; k < d; ++k) f0[k] = std::log(clip(counts[k] / static_cast<double>(n)));
      f0.array() -= f0.mean();
      return f0;
    }
  }
  return Vector::Zero(1);
}

double empirical_risk(const LossFunction& loss, const Vector& targets,
                      const Matrix& scores) {
  const Index n = targets.size();
  const int d = loss.num_outputs();
  if (scores.rows() != n || scores.cols() != d) {
    throw DataError("score matrix shape does not match the targets");
  }
  double risk = 0.0;
  if (d == 1) {
    for (Index i = 0; i < n; ++i) risk += loss.value(targets[i], {&scores(i, 0), 1});
    return risk;
  }
  std::vector<double> row(static_cast<std::size_t>(d));
  for (Index i = 0; i < n; ++i) {
    for (int k = 0; k < d; ++k) row[static_cast<std::size_t>(k)] = scores(i, k);
    risk += loss.value(targets[i], row);
  }
  return risk;
}

}  // namespace ktboost
