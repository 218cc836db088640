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

#include <algorithm>
#include <atomic>
#include <exception>
#include <mutex>
#include <thread>

#include "ktboost/bench.h"

namespace ktboost::bench {
namespace {

struct RhoChoice {
  double rho;
  RhoMode mode;
  int knn;
  std::string label;
};

std::vector<RhoChoice> rho_choices(const GridSpec& grid, const RowMatrix& rows) {
  const Index m = rows.rows();
  if (m < 2) throw DataError("range selection needs at least two rows");
  const Vector profile = mean_knn_distance_profile(rows);
  const int all = static_cast<int>(m - 1);

  std::vector<int> ks;
  for (int k : grid.knn) {
    if (k < 1) throw DataError("neighbor counts must be positive");
    ks.push_back(std::min(k, all));
  }
  ks.push_back(all);
  std::sort(ks.begin(), ks.end());
  ks.erase(std::unique(ks.begin(), ks.end()), ks.end());

  std::vector<RhoChoice> out;
  for (int k : ks) {
    out.push_back({rho_from_distance(profile[k - 1], RhoMode::kDecay01), RhoMode::kDecay01, k,
                   "decay01:k=" + std::to_string(k)});
  }
  if (grid.include_slow) {
    out.push_back({rho_from_distance(profile[all - 1], RhoMode::kSlow), RhoMode::kSlow, all,
                   "slow"});
  }
  return out;
}

}  // namespace

RowMatrix rho_reference_rows(const Dataset& train, const BoostConfig& base) {
  RowMatrix x = base.standardize ? fit_standardizer(train).transform(train.features())
                                 : train.features();
  if (!base.nystrom_samples) return x;
  const auto rows = sample_nystrom_rows(x.rows(), *base.nystrom_samples, base.seed);
  RowMatrix samples(static_cast<Index>(rows.size()), x.cols());
  for (std::size_t i = 0; i < rows.size(); ++i) samples.row(static_cast<Index>(i)) = x.row(rows[i]);
  return samples;
}

std::vector<GridConfig> enumerate_grid(const GridSpec& grid, LearnerSet method,
                                       const RowMatrix& rho_rows) {
  const bool trees = method != LearnerSet::kKernelOnly;
  const bool kernels = method != LearnerSet::kTreeOnly;
  const std::vector<int> depths = trees ? grid.max_depth : std::vector<int>{grid.base.tree.max_depth};
  const std::vector<double> lambdas = kernels ? grid.lambda : std::vector<double>{grid.base.lambda};
  std::vector<RhoChoice> rhos;
  if (kernels) {
    rhos = rho_choices(grid, rho_rows);
  } else {
    rhos.push_back({0.0, RhoMode::kDecay01, 0, ""});
  }

  std::vector<GridConfig> out;
  for (double nu : grid.nu) {
    for (int depth : depths) {
      for (double lambda : lambdas) {
        for (const RhoChoice& choice : rhos) {
          BoostConfig config = grid.base;
          config.learners = method;
          config.max_iterations = grid.max_iterations;
          config.nu = nu;
          config.tree.max_depth = depth;
          config.lambda = lambda;
          if (kernels) {
            config.rho = choice.rho;
            config.rho_mode = choice.mode;
            config.rho_knn = choice.knn;
          } else {
            config.rho.reset();
          }
          out.push_back({config, choice.label});
        }
      }
    }
  }
  return out;
}

GridResult grid_search(const Dataset& train, const Dataset& validation,
                       const std::vector<GridConfig>& configs, int jobs) {
  if (configs.empty()) throw DataError("empty configuration grid");
  std::vector<GridEntry> entries(configs.size());
  std::vector<std::exception_ptr> failures(configs.size());
  std::mutex best_mutex;
  std::optional<Ensemble> best_ensemble;
  std::size_t best_index = configs.size();

  parallel_for(configs.size(), jobs, [&](std::size_t i) {
    GridEntry& entry = entries[i];
    entry.grid_config = configs[i];
    try {
      FitResult result = fit(train, configs[i].config, validation);
      const int m = result.report.selected_iterations;
      entry.selected_iterations = m;
      entry.validation_trace = result.report.validation_risk;
      entry.validation_risk = m > 0 ? entry.validation_trace[static_cast<std::size_t>(m - 1)]
                                    : result.report.initial_risk;
      entry.validation_metric = metric(validation.task(), validation.targets(),
                                       result.ensemble.predict(validation.features(), m));
      std::lock_guard lock(best_mutex);
      const bool better = best_index == configs.size() ||
                          entry.validation_metric < entries[best_index].validation_metric ||
                          (entry.validation_metric == entries[best_index].validation_metric &&
                           i < best_index);
      if (better) {
        best_index = i;
        best_ensemble.emplace(result.ensemble.truncated(m));
      }
    } catch (const Error& e) {
      entry.error = e.what();
      failures[i] = std::current_exception();
    }
  });

  if (best_index == configs.size()) std::rethrow_exception(failures.front());
  const GridEntry& best = entries[best_index];
  return GridResult{best_index,           best.grid_config,        best.selected_iterations,
                    best.validation_metric, std::move(*best_ensemble), std::move(entries)};
}

GridResult grid_search(const Dataset& train, const Dataset& validation, const GridSpec& grid,
                       LearnerSet method, int jobs) {
  const RowMatrix rows = method == LearnerSet::kTreeOnly ? RowMatrix()
                                                         : rho_reference_rows(train, grid.base);
  return grid_search(train, validation, enumerate_grid(grid, method, rows), jobs);
}

void parallel_for(std::size_t count, int jobs, const std::function<void(std::size_t)>& body) {
  const auto workers = static_cast<std::size_t>(std::max(1, jobs));
  if (workers == 1 || count <= 1) {
    for (std::size_t i = 0; i < count; ++i) body(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::vector<std::exception_ptr> errors(count);
  auto work = [&] {
    for (std::size_t i = next++; i < count; i = next++) {
      try {
        body(i);
      } catch (...) {
        errors[i] = std::current_exception();
      }
    }
  };
  std::vector<std::jthread> threads;
  for (std::size_t t = 0; t < std::min(workers, count); ++t) threads.emplace_back(work);
  threads.clear();  // joins
  for (const auto& error : errors) {
    if (error) std::rethrow_exception(error);
  }
}

std::uint64_t derive_seed(std::uint64_t base, std::uint64_t a, std::uint64_t b) {
  // splitmix64 finalizer over a simple combination of the inputs.
  auto mix = [](std::uint64_t z) {
    z += 0x9e3779b97f4a7c15ULL;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  };
  return mix(mix(mix(base) ^ a) ^ (b * 0x632be59bd9b4e019ULL));
}

}  // namespace ktboost::bench
