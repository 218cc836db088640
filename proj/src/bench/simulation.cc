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
#include <numbers>
#include <random>

#include "ktboost/bench.h"

namespace ktboost::bench {

SimFunction SimFunction::draw(std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> location(0.0, 0.5);
  std::uniform_real_distribution<double> size(0.0, 5.0);
  SimFunction sim;
  for (std::size_t i = 0; i < sim.jump_locations.size(); ++i) {
    sim.jump_locations[i] = location(rng);
    sim.jump_sizes[i] = size(rng);
  }
  return sim;
}

double SimFunction::operator()(double x) const {
  double value = std::sin(8.0 * std::numbers::pi * x);
  for (std::size_t i = 0; i < jump_locations.size(); ++i) {
    if (jump_locations[i] < x && x <= 1.0) value += jump_sizes[i];
  }
  return value;
}

Dataset simulate(const SimFunction& sim, Index n, std::uint64_t data_seed) {
  if (n < 1) throw DataError("simulation needs at least one row");
  std::mt19937_64 rng(data_seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::normal_distribution<double> noise(0.0, sim.noise_sd);
  RowMatrix x(n, 1);
  Vector y(n);
  for (Index i = 0; i < n; ++i) {
    x(i, 0) = unit(rng);
    y[i] = sim(x(i, 0)) + noise(rng);
  }
  return Dataset(std::move(x), std::move(y), Task::kRegression);
}

Vector unit_grid(int count) {
  if (count < 1) throw DataError("grid needs at least one point");
  Vector grid(count);
  for (int i = 0; i < count; ++i) grid[i] = (i + 0.5) / count;
  return grid;
}

Vector pointwise_squared_error(const Ensemble& model, const SimFunction& sim, const Vector& grid,
                               std::optional<int> truncate_at) {
  RowMatrix x(grid.size(), 1);
  x.col(0) = grid;
  const Matrix scores = model.predict(x, truncate_at);
  Vector out(grid.size());
  for (Index i = 0; i < grid.size(); ++i) {
    const double e = scores(i, 0) - sim(grid[i]);
    out[i] = e * e;
  }
  return out;
}

PointwiseMse::PointwiseMse(Vector grid) : grid_(std::move(grid)), total_(Vector::Zero(grid_.size())) {}

void PointwiseMse::add(const Ensemble& model, const SimFunction& sim,
                       std::optional<int> truncate_at) {
  add_squared_errors(pointwise_squared_error(model, sim, grid_, truncate_at));
}

void PointwiseMse::add_squared_errors(const Vector& squared_errors) {
  if (squared_errors.size() != grid_.size()) throw DataError("grid size mismatch");
  total_ += squared_errors;
  ++count_;
}

Vector PointwiseMse::mean() const {
  if (count_ == 0) throw DataError("no replications were added");
  return total_ / static_cast<double>(count_);
}

Vector pointwise_mse(std::span<const Ensemble> models, std::span<const SimFunction> sims,
                     const Vector& grid) {
  if (models.size() != sims.size()) throw DataError("one simulation function per model expected");
  PointwiseMse acc(grid);
  for (std::size_t r = 0; r < models.size(); ++r) acc.add(models[r], sims[r]);
  return acc.mean();
}

double metric(Task task, const Vector& targets, const Matrix& scores) {
  if (scores.rows() != targets.size()) throw DataError("score and target row counts differ");
  if (targets.size() == 0) throw DataError("metric of an empty set");
  if (task == Task::kRegression) {
    return (targets - scores.col(0)).squaredNorm() / static_cast<double>(targets.size());
  }
  const LossKind kind = task == Task::kBinary ? LossKind::kLogistic : LossKind::kSoftmax;
  const std::vector<int> labels = scores_to_labels(kind, scores);
  Index wrong = 0;
  for (Index i = 0; i < targets.size(); ++i) {
    if (labels[static_cast<std::size_t>(i)] != static_cast<int>(targets[i])) ++wrong;
  }
  return static_cast<double>(wrong) / static_cast<double>(targets.size());
}

}  // namespace ktboost::bench
