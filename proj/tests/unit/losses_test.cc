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

#include <cmath>
#include <functional>
#include <random>

#include <gtest/gtest.h>

#include "ktboost/losses.h"
#include "oracles.h"

namespace ktboost {
namespace {

Vector vec(std::initializer_list<double> values) {
  Vector v(static_cast<Index>(values.size()));
  Index i = 0;
  for (double x : values) v[i++] = x;
  return v;
}

Matrix column(std::initializer_list<double> values) { return vec(values); }

const LossFunction kSquared(LossKind::kSquared, 1);
const LossFunction kLogistic(LossKind::kLogistic, 2);

TEST(LossValue, HandValues) {
  const double f = 0.5;
  EXPECT_DOUBLE_EQ(kSquared.value(2.0, {&f, 1}), 1.125);
  const double zero = 0.0;
  EXPECT_NEAR(kLogistic.value(1.0, {&zero, 1}), std::log(2.0), 1e-15);
  const LossFunction softmax(LossKind::kSoftmax, 3);
  const double scores[3] = {0.0, 0.0, 0.0};
  EXPECT_NEAR(softmax.value(1.0, scores), std::log(3.0), 1e-15);
}

TEST(LossValue, StableForExtremeScores) {
  const double big = 800.0;
  EXPECT_NEAR(kLogistic.value(0.0, {&big, 1}), 800.0, 1e-12);
  EXPECT_NEAR(kLogistic.value(1.0, {&big, 1}), 0.0, 1e-12);
  const LossFunction softmax(LossKind::kSoftmax, 2);
  const double scores[2] = {1000.0, -1000.0};
  EXPECT_TRUE(std::isfinite(softmax.value(1.0, scores)));
  EXPECT_NEAR(softmax.value(1.0, scores), 2000.0, 1e-9);
}

TEST(GradientHessian, HandValues) {
  GradHess gh = gradient_hessian(kLogistic, vec({1.0}), column({0.0}), true);
  EXPECT_DOUBLE_EQ(gh.g(0, 0), -0.5);
  EXPECT_DOUBLE_EQ(gh.h(0, 0), 0.25);
  gh = gradient_hessian(kSquared, vec({2.0}), column({0.5}), false);
  EXPECT_DOUBLE_EQ(gh.g(0, 0), -1.5);
  EXPECT_DOUBLE_EQ(gh.h(0, 0), 1.0);
}

TEST(GradientHessian, LogisticMatchesFiniteDifferenceValues) {
  // y = 0, F = 2: finite differences of the loss with step 1e-5.
  const GradHess gh = gradient_hessian(kLogistic, vec({0.0}), column({2.0}), true);
  const auto loss = [](double f) { return kLogistic.value(0.0, {&f, 1}); };
  const double eps = 1e-5;
  const double g_fd = (loss(2.0 + eps) - loss(2.0 - eps)) / (2 * eps);
  EXPECT_NEAR(gh.g(0, 0), 0.8807971, 1e-7);
  EXPECT_NEAR(gh.h(0, 0), 0.1049936, 1e-7);
  EXPECT_NEAR(gh.g(0, 0), g_fd, 1e-9);
}

TEST(GradientHessian, GradientModeHasUnitHessians) {
  const LossFunction softmax(LossKind::kSoftmax, 3);
  Matrix scores(2, 3);
  scores << 0.1, -0.2, 0.3, 2.0, 1.0, 0.0;
  const GradHess gh = gradient_hessian(softmax, vec({0.0, 2.0}), scores, false);
  EXPECT_TRUE((gh.h.array() == 1.0).all());
}

TEST(GradientHessian, NewtonHessianIsFloored) {
  const GradHess gh = gradient_hessian(kLogistic, vec({1.0}), column({60.0}), true);
  EXPECT_EQ(gh.h(0, 0), kHessianFloor);
}

TEST(GradientHessian, AllLossesMatchCentralDifferences) {
  std::mt19937_64 rng(11);
  const auto result = oracles::check_derivatives(rng, 1000);
  EXPECT_LE(result.worst_relative_error, 1e-5) << result.where;
}

TEST(GradientHessian, HessianRanges) {
  std::mt19937_64 rng(12);
  std::uniform_real_distribution<double> unit(-8.0, 8.0);
  const LossFunction softmax(LossKind::kSoftmax, 4);
  Matrix scores(200, 4);
  Vector y(200);
  Matrix binary_scores(200, 1);
  Vector binary_y(200);
  for (Index i = 0; i < 200; ++i) {
    for (Index k = 0; k < 4; ++k) scores(i, k) = unit(rng);
    y[i] = static_cast<double>(rng() % 4);
    binary_scores(i, 0) = unit(rng);
    binary_y[i] = static_cast<double>(rng() % 2);
  }
  const GradHess s = gradient_hessian(softmax, y, scores, true);
  EXPECT_GT(s.h.minCoeff(), 0.0);
  EXPECT_LE(s.h.maxCoeff(), 0.25);
  const GradHess b = gradient_hessian(kLogistic, binary_y, binary_scores, true);
  EXPECT_GT(b.h.minCoeff(), 0.0);
  EXPECT_LE(b.h.maxCoeff(), 0.25);
}

TEST(GradientHessian, TwoClassSoftmaxAgreesWithLogistic) {
  std::mt19937_64 rng(13);
  std::uniform_real_distribution<double> unit(-4.0, 4.0);
  const LossFunction softmax(LossKind::kSoftmax, 2);
  Matrix scores(50, 2);
  Matrix diff(50, 1);
  Vector y(50);
  for (Index i = 0; i < 50; ++i) {
    scores(i, 0) = unit(rng);
    scores(i, 1) = unit(rng);
    diff(i, 0) = scores(i, 1) - scores(i, 0);
    y[i] = static_cast<double>(rng() % 2);
  }
  const GradHess s = gradient_hessian(softmax, y, scores, true);
  const GradHess l = gradient_hessian(kLogistic, y, diff, true);
  EXPECT_LE((s.g.col(1) - l.g.col(0)).cwiseAbs().maxCoeff(), 1e-14);
  EXPECT_LE((s.h.col(1) - l.h.col(0)).cwiseAbs().maxCoeff(), 1e-14);
}

TEST(OptimalConstant, HandValues) {
  EXPECT_DOUBLE_EQ(optimal_constant(kSquared, vec({1, 2, 3}))[0], 2.0);
  EXPECT_NEAR(optimal_constant(kLogistic, vec({1, 1, 0, 0}))[0], 0.0, 1e-15);
  EXPECT_NEAR(optimal_constant(kLogistic, vec({1, 1, 1, 0}))[0], std::log(3.0), 1e-12);
}

TEST(OptimalConstant, LogisticMatchesGoldenSectionSearch) {
  const Vector y = vec({1, 1, 1, 0});
  const double c = oracles::golden_section_minimize(
      [&](double v) { return empirical_risk(kLogistic, y, Matrix::Constant(4, 1, v)); }, -10.0,
      10.0, 1e-10);
  EXPECT_NEAR(c, std::log(3.0), 1e-7);
  EXPECT_NEAR(optimal_constant(kLogistic, y)[0], c, 1e-7);
}

TEST(OptimalConstant, SoftmaxIsCenteredLogFrequency) {
  const LossFunction softmax(LossKind::kSoftmax, 3);
  const Vector c = optimal_constant(softmax, vec({0, 1, 1, 2}));
  const double mean = (std::log(0.25) + std::log(0.5) + std::log(0.25)) / 3.0;
  EXPECT_NEAR(c[0], std::log(0.25) - mean, 1e-14);
  EXPECT_NEAR(c[1], std::log(0.5) - mean, 1e-14);
  EXPECT_NEAR(c.sum(), 0.0, 1e-14);
}

TEST(OptimalConstant, PureClassIsClippedAndFinite) {
  const Vector c = optimal_constant(kLogistic, vec({1, 1, 1}));
  EXPECT_TRUE(std::isfinite(c[0]));
  // The clipped probability is rounded to a double before taking log-odds.
  const double p = 1.0 - kProbabilityClip;
  EXPECT_NEAR(c[0], std::log(p / (1.0 - p)), 1e-12);
  const LossFunction softmax(LossKind::kSoftmax, 3);
  EXPECT_TRUE(optimal_constant(softmax, vec({0, 0})).allFinite());
}

TEST(OptimalConstant, EmptyTargetsThrow) {
  EXPECT_THROW(optimal_constant(kSquared, Vector(0)), DataError);
}

TEST(OptimalConstant, IsLocalMinimumOfRisk) {
  std::mt19937_64 rng(14);
  std::normal_distribution<double> normal(0.0, 2.0);
  for (int trial = 0; trial < 30; ++trial) {
    const Index n = 5 + static_cast<Index>(rng() % 40);
    Vector reg(n), bin(n), multi(n);
    for (Index i = 0; i < n; ++i) {
      reg[i] = normal(rng);
      bin[i] = static_cast<double>(rng() % 2);
      multi[i] = static_cast<double>(rng() % 3);
    }
    const LossFunction softmax(LossKind::kSoftmax, 3);
    const std::vector<std::pair<const LossFunction*, const Vector*>> cases{
        {&kSquared, &reg}, {&kLogistic, &bin}, {&softmax, &multi}};
    for (const auto& [loss, y] : cases) {
      const Vector c = optimal_constant(*loss, *y);
      const auto risk = [&](const Vector& v) {
        return empirical_risk(*loss, *y, v.transpose().replicate(n, 1));
      };
      const double base = risk(c);
      for (Index k = 0; k < c.size(); ++k) {
        for (double delta : {-1e-3, 1e-3}) {
          Vector moved = c;
          moved[k] += delta;
          EXPECT_LE(base, risk(moved) + 1e-12);
        }
      }
    }
  }
}

TEST(EmpiricalRisk, HandValues) {
  EXPECT_DOUBLE_EQ(empirical_risk(kSquared, vec({1, 2}), column({1, 2})), 0.0);
  EXPECT_DOUBLE_EQ(empirical_risk(kSquared, vec({0, 2}), column({1, 1})), 1.0);
  EXPECT_NEAR(empirical_risk(kLogistic, vec({1, 0}), column({0, 0})), 2 * std::log(2.0), 1e-15);
}

TEST(EmpiricalRisk, ShapeMismatchThrows) {
  EXPECT_THROW(empirical_risk(kSquared, vec({1, 2}), column({1})), DataError);
}

TEST(LossKind, ParseRoundTrip) {
  for (LossKind k : {LossKind::kSquared, LossKind::kLogistic, LossKind::kSoftmax}) {
    EXPECT_EQ(parse_loss(to_string(k)), k);
  }
  EXPECT_THROW(parse_loss("huber"), DataError);
}

}  // namespace
}  // namespace ktboost
