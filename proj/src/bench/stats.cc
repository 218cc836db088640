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
#include <cmath>
#include <fstream>
#include <numeric>

#include <boost/math/distributions/binomial.hpp>
#include <boost/math/distributions/fisher_f.hpp>

#include "ktboost/bench.h"
#include "ktboost/format.h"

namespace ktboost::bench {

Matrix mid_ranks(const Matrix& metrics) {
  const Index k = metrics.cols();
  Matrix ranks(metrics.rows(), k);
  std::vector<Index> order(static_cast<std::size_t>(k));
  for (Index d = 0; d < metrics.rows(); ++d) {
    std::iota(order.begin(), order.end(), Index{0});
    std::stable_sort(order.begin(), order.end(),
                     [&](Index a, Index b) { return metrics(d, a) < metrics(d, b); });
    for (Index start = 0; start < k;) {
      Index end = start + 1;
      while (end < k && metrics(d, order[end]) == metrics(d, order[start])) ++end;
      // Positions start..end-1 hold ranks start+1..end; each gets the mean.
      const double rank = 0.5 * static_cast<double>(start + 1 + end);
      for (Index i = start; i < end; ++i) ranks(d, order[i]) = rank;
      start = end;
    }
  }
  return ranks;
}

double friedman_chi_square(const Vector& average_ranks, int num_datasets) {
  const auto k = static_cast<double>(average_ranks.size());
  const auto n = static_cast<double>(num_datasets);
  const double spread = (average_ranks.array() - (k + 1.0) / 2.0).square().sum();
  return 12.0 * n / (k * (k + 1.0)) * spread;
}

FriedmanResult friedman_iman_davenport(const Vector& average_ranks, int num_datasets) {
  if (num_datasets < 2) throw DataError("the Friedman test needs at least two datasets");
  if (average_ranks.size() < 2) throw DataError("the Friedman test needs at least two methods");
  const auto k = static_cast<double>(average_ranks.size());
  const auto n = static_cast<double>(num_datasets);
  FriedmanResult out;
  out.chi_square = friedman_chi_square(average_ranks, num_datasets);
  const double denominator = n * (k - 1.0) - out.chi_square;
  if (std::abs(denominator) <= 1e-12 * n * (k - 1.0)) {
    throw NumericalError("degenerate Friedman statistic: identical rankings on every dataset");
  }
  out.f_statistic = (n - 1.0) * out.chi_square / denominator;
  out.df1 = k - 1.0;
  out.df2 = (k - 1.0) * (n - 1.0);
  if (out.f_statistic <= 0.0) {
    out.p_value = 1.0;
  } else {
    const boost::math::fisher_f_distribution<double> dist(out.df1, out.df2);
    out.p_value = boost::math::cdf(boost::math::complement(dist, out.f_statistic));
  }
  return out;
}

FriedmanResult friedman_iman_davenport(const Matrix& ranks) {
  if (ranks.rows() == 0) throw DataError("the Friedman test needs at least two datasets");
  const Vector average = ranks.colwise().mean().transpose();
  return friedman_iman_davenport(average, static_cast<int>(ranks.rows()));
}

double sign_test(int wins, int losses) {
  if (wins < 0 || losses < 0) throw DataError("negative win or loss count");
  const int n = wins + losses;
  if (n == 0) throw DataError("sign test with zero effective comparisons");
  const boost::math::binomial_distribution<double> dist(n, 0.5);
  const double tail = boost::math::cdf(dist, static_cast<double>(std::min(wins, losses)));
  return std::min(1.0, 2.0 * tail);
}

std::vector<double> holm_adjust(std::span<const double> p_values) {
  const std::size_t m = p_values.size();
  std::vector<std::size_t> order(m);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return p_values[a] < p_values[b]; });
  std::vector<double> adjusted(m);
  double running = 0.0;
  for (std::size_t j = 0; j < m; ++j) {
    const double scaled = std::min(1.0, static_cast<double>(m - j) * p_values[order[j]]);
    running = std::max(running, scaled);
    adjusted[order[j]] = running;
  }
  return adjusted;
}

std::vector<double> sign_test_holm(std::span<const std::pair<int, int>> wins_losses) {
  std::vector<double> raw;
  raw.reserve(wins_losses.size());
  for (const auto& [wins, losses] : wins_losses) raw.push_back(sign_test(wins, losses));
  return holm_adjust(raw);
}

ComparisonTable build_comparison(std::vector<std::string> datasets,
                                 std::vector<std::string> methods,
                                 const std::vector<std::vector<std::vector<double>>>& metrics) {
  const auto nd = static_cast<Index>(datasets.size());
  const auto nm = static_cast<Index>(methods.size());
  if (static_cast<Index>(metrics.size()) != nd) throw DataError("one metric row per dataset expected");
  ComparisonTable table;
  table.mean.resize(nd, nm);
  table.sd.resize(nd, nm);
  for (Index d = 0; d < nd; ++d) {
    const auto& row = metrics[static_cast<std::size_t>(d)];
    if (static_cast<Index>(row.size()) != nm) throw DataError("one metric list per method expected");
    for (Index m = 0; m < nm; ++m) {
      const auto& values = row[static_cast<std::size_t>(m)];
      if (values.empty()) throw DataError("no metric values for " + datasets[d] + "/" + methods[m]);
      const double mean = std::accumulate(values.begin(), values.end(), 0.0) /
                          static_cast<double>(values.size());
      double ss = 0.0;
      for (double v : values) ss += (v - mean) * (v - mean);
      table.mean(d, m) = mean;
      table.sd(d, m) = values.size() > 1 ? std::sqrt(ss / static_cast<double>(values.size() - 1))
                                         : 0.0;
    }
  }
  table.ranks = mid_ranks(table.mean);
  table.average_ranks = nd > 0 ? Vector(table.ranks.colwise().mean().transpose()) : Vector::Zero(nm);
  if (nd >= 2 && nm >= 2) {
    try {
      table.friedman = friedman_iman_davenport(table.ranks);
    } catch (const NumericalError&) {
      table.friedman.reset();
    }
  }

  // methods[0] against each other method, Holm over the testable pairs.
  std::vector<std::pair<int, int>> pairs;
  std::vector<Index> testable;
  for (Index m = 1; m < nm; ++m) {
    int wins = 0;
    int losses = 0;
    for (Index d = 0; d < nd; ++d) {
      if (table.mean(d, 0) < table.mean(d, m)) ++wins;
      if (table.mean(d, 0) > table.mean(d, m)) ++losses;
    }
    if (wins + losses > 0) {
      pairs.emplace_back(wins, losses);
      testable.push_back(m);
    }
  }
  table.sign_test_adjusted.assign(static_cast<std::size_t>(std::max<Index>(nm - 1, 0)), std::nullopt);
  const std::vector<double> adjusted = sign_test_holm(pairs);
  for (std::size_t i = 0; i < testable.size(); ++i) {
    table.sign_test_adjusted[static_cast<std::size_t>(testable[i] - 1)] = adjusted[i];
  }
  table.datasets = std::move(datasets);
  table.methods = std::move(methods);
  return table;
}

void write_comparison_csv(const ComparisonTable& table, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write '" + path.string() + "'");
  out << "dataset,method,mean,sd,rank\n";
  for (std::size_t d = 0; d < table.datasets.size(); ++d) {
    for (std::size_t m = 0; m < table.methods.size(); ++m) {
      const auto di = static_cast<Index>(d);
      const auto mi = static_cast<Index>(m);
      out << table.datasets[d] << ',' << table.methods[m] << ',' << format_double(table.mean(di, mi))
          << ',' << format_double(table.sd(di, mi)) << ',' << format_double(table.ranks(di, mi))
          << '\n';
    }
  }
  if (!out) throw DataError("write failure on '" + path.string() + "'");
}

}  // namespace ktboost::bench
