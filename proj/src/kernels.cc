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

#include "ktboost/kernels.h"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

namespace ktboost {
namespace {

double squared_distance(const double* a, const double* b, Index p) {
  double sq = 0.0;
  for (Index j = 0; j < p; ++j) {
    const double d = a[j] - b[j];
    sq += d * d;
  }
  return sq;
}

void check_rho(double rho) {
  if (!(rho > 0.0) || !std::isfinite(rho)) throw DataError("kernel range rho must be positive");
}

}  // namespace

double gaussian_kernel(std::span<const double> a, std::span<const double> b, double rho) {
  if (a.size() != b.size()) throw DataError("gaussian_kernel: dimension mismatch");
  const double sq = squared_distance(a.data(), b.data(), static_cast<Index>(a.size()));
  return std::exp(-sq / (rho * rho));
}

Matrix kernel_matrix(const RowMatrix& a, const RowMatrix& b, double rho) {
  check_rho(rho);
  if (a.cols() != b.cols()) throw DataError("kernel_matrix: dimension mismatch");
  const Index p = a.cols();
  const double inv = 1.0 / (rho * rho);
  Matrix k(a.rows(), b.rows());
  for (Index j = 0; j < b.rows(); ++j) {
    const double* bj = b.data() + j * p;
    for (Index i = 0; i < a.rows(); ++i) {
      k(i, j) = std::exp(-squared_distance(a.data() + i * p, bj, p) * inv);
    }
  }
  return k;
}

Matrix kernel_matrix(const RowMatrix& x, double rho) {
  check_rho(rho);
  const Index n = x.rows();
  const Index p = x.cols();
  const double inv = 1.0 / (rho * rho);
  Matrix k(n, n);
  for (Index j = 0; j < n; ++j) {
    const double* xj = x.data() + j * p;
    k(j, j) = 1.0;
    for (Index i = j + 1; i < n; ++i) {
      const double v = std::exp(-squared_distance(x.data() + i * p, xj, p) * inv);
      k(i, j) = v;
      k(j, i) = v;
    }
  }
  return k;
}

SpdFactor SpdFactor::factorize(Matrix a) {
  const Index dim = a.rows();
  if (dim == 0 || a.cols() != dim) throw DataError("factorize: matrix must be square and nonempty");
  if (!a.allFinite()) throw NumericalError("factorize: non-finite matrix entries");
  const double scale = a.trace() / static_cast<double>(dim);
  if (!(scale > 0.0)) throw NumericalError("factorize: matrix trace is not positive");
  const Vector diagonal = a.diagonal();
  Eigen::LLT<Matrix> llt(dim);
  for (double rel = kJitterStart; rel <= kJitterMax * (1.0 + 1e-9); rel *= 10.0) {
    const double jitter = rel * scale;
    a.diagonal() = diagonal.array() + jitter;
    llt.compute(a);
    if (llt.info() == Eigen::Success) return SpdFactor(std::move(llt), jitter);
  }
  throw NumericalError(
      "kernel system is not positive definite after maximal jitter; "
      "rho/lambda make it too ill-conditioned");
}

std::string to_string(KernelMode mode) {
  return mode == KernelMode::kExact ? "exact" : "nystrom";
}

KernelMode parse_kernel_mode(const std::string& name) {
  if (name == "exact") return KernelMode::kExact;
  if (name == "nystrom") return KernelMode::kNystrom;
  throw DataError("unknown kernel mode '" + name + "'");
}

void KernelConfig::validate(Index n) const {
  check_rho(rho);
  if (!(lambda >= 0.0) || !std::isfinite(lambda)) {
    throw DataError("kernel ridge penalty lambda must be nonnegative");
  }
  if (nystrom_samples && (*nystrom_samples < 1 || *nystrom_samples > n)) {
    throw DataError("Nystrom sample count must lie in [1, n]");
  }
}

KernelLearner::KernelLearner(std::shared_ptr<const RowMatrix> anchors, Vector alpha,
                             double rho, double lambda, KernelMode mode)
    : anchors_(std::move(anchors)),
      alpha_(std::move(alpha)),
      rho_(rho),
      lambda_(lambda),
      mode_(mode) {
  if (!anchors_ || anchors_->rows() != alpha_.size()) {
    throw DataError("kernel learner: anchor count does not match coefficients");
  }
  check_rho(rho_);
  if (!alpha_.allFinite()) throw NumericalError("kernel learner: non-finite coefficients");
}

double KernelLearner::predict(std::span<const double> x) const {
  const RowMatrix& a = *anchors_;
  if (static_cast<Index>(x.size()) != a.cols()) {
    throw DataError("kernel learner: feature dimension mismatch");
  }
  const double inv = 1.0 / (rho_ * rho_);
  double out = 0.0;
  for (Index j = 0; j < a.rows(); ++j) {
    out += alpha_[j] * std::exp(-squared_distance(a.data() + j * a.cols(), x.data(), a.cols()) * inv);
  }
  return out;
}

Vector KernelLearner::predict(const RowMatrix& x) const {
  return kernel_matrix(x, *anchors_, rho_) * alpha_;
}

std::vector<Index> sample_nystrom_rows(Index n, Index l, std::uint64_t seed) {
  if (l < 1 || l > n) throw DataError("Nystrom sample count must lie in [1, n]");
  std::vector<Index> perm(static_cast<std::size_t>(n));
  std::iota(perm.begin(), perm.end(), Index{0});
  std::mt19937_64 rng(seed);
  for (Index i = 0; i < l; ++i) {
    std::uniform_int_distribution<Index> pick(i, n - 1);
    std::swap(perm[static_cast<std::size_t>(i)], perm[static_cast<std::size_t>(pick(rng))]);
  }
  perm.resize(static_cast<std::size_t>(l));
  return perm;
}

namespace {

std::shared_ptr<const RowMatrix> gather_rows(const RowMatrix& x, const std::vector<Index>& rows) {
  auto out = std::make_shared<RowMatrix>(static_cast<Index>(rows.size()), x.cols());
  for (std::size_t i = 0; i < rows.size(); ++i) out->row(static_cast<Index>(i)) = x.row(rows[i]);
  return out;
}

}  // namespace

NystromFactor::NystromFactor(const RowMatrix& x, std::vector<Index> sample_rows, double rho)
    : samples_(gather_rows(x, sample_rows)),
      sample_rows_(std::move(sample_rows)),
      rho_(rho),
      cross_(kernel_matrix(x, *samples_, rho)),
      inner_(kernel_matrix(*samples_, rho)),
      inner_factor_(SpdFactor::factorize(inner_)) {}

Matrix NystromFactor::approximate_kernel() const {
  const Matrix half = inner_factor_.llt().matrixL().solve(cross_.transpose());
  return half.transpose() * half;
}

NystromFactor build_nystrom(const RowMatrix& x, const KernelConfig& config) {
  config.validate(x.rows());
  if (!config.nystrom_samples) throw DataError("build_nystrom: no sample count configured");
  return NystromFactor(x, sample_nystrom_rows(x.rows(), *config.nystrom_samples, config.seed),
                       config.rho);
}

KernelFitter::KernelFitter(const RowMatrix& x, const KernelConfig& config, bool newton)
    : mode_(config.nystrom_samples ? KernelMode::kNystrom : KernelMode::kExact),
      newton_(newton),
      rho_(config.rho),
      lambda_(config.lambda) {
  config.validate(x.rows());
  if (mode_ == KernelMode::kNystrom) {
    NystromFactor factor = build_nystrom(x, config);
    anchors_ = factor.shared_samples();
    cross_ = factor.cross();
    inner_ = factor.inner();
    if (!newton_) {
      Matrix system = cross_.transpose() * cross_;
      system += lambda_ * inner_;
      gradient_factor_ = SpdFactor::factorize(std::move(system));
    }
    return;
  }
  anchors_ = std::make_shared<const RowMatrix>(x);
  cross_ = kernel_matrix(x, rho_);
  if (!newton_) {
    Matrix system = cross_;
    system.diagonal().array() += lambda_;
    gradient_factor_ = SpdFactor::factorize(std::move(system));
  }
}

KernelFitter::KernelFitter(NystromFactor factor, double lambda, bool newton)
    : anchors_(factor.shared_samples()),
      mode_(KernelMode::kNystrom),
      newton_(newton),
      rho_(factor.rho()),
      lambda_(lambda),
      cross_(factor.cross()),
      inner_(factor.inner()) {
  if (!(lambda_ >= 0.0)) throw DataError("kernel ridge penalty lambda must be nonnegative");
  if (!newton_) {
    Matrix system = cross_.transpose() * cross_;
    system += lambda_ * inner_;
    gradient_factor_ = SpdFactor::factorize(std::move(system));
  }
}

KernelFit KernelFitter::finish(Vector coefficients) const {
  Vector train = cross_ * coefficients;
  return {KernelLearner(anchors_, std::move(coefficients), rho_, lambda_, mode_),
          std::move(train)};
}

KernelFit KernelFitter::fit(const Eigen::Ref<const Vector>& g,
                            const Eigen::Ref<const Vector>& h) const {
  if (g.size() != cross_.rows()) throw DataError("kernel fit: gradient length mismatch");
  if (!g.allFinite()) throw NumericalError("kernel fit: non-finite gradients");
  if (!newton_) {
    const Vector rhs = mode_ == KernelMode::kExact ? Vector(-g) : Vector(cross_.transpose() * (-g));
    return finish(gradient_factor_->solve(rhs));
  }
  if (h.size() != g.size()) throw DataError("kernel fit: Hessian length mismatch");
  if (!(h.array() > 0.0).all() || !h.allFinite()) {
    throw NumericalError("kernel Newton fit requires strictly positive Hessians");
  }
  return mode_ == KernelMode::kExact ? fit_exact_newton(g, h) : fit_nystrom_newton(g, h);
}

KernelFit KernelFitter::fit_exact_newton(const Eigen::Ref<const Vector>& g,
                                         const Eigen::Ref<const Vector>& h) const {
  const Vector root_h = h.array().sqrt();
  Matrix system = root_h.asDiagonal() * cross_ * root_h.asDiagonal();
  system.diagonal().array() += lambda_;
  const SpdFactor factor = SpdFactor::factorize(std::move(system));
  // D y_m = -g / sqrt(h)
  const Vector rhs = -g.array() / root_h.array();
  Vector alpha = root_h.cwiseProduct(factor.solve(rhs));
  return finish(std::move(alpha));
}

KernelFit KernelFitter::fit_nystrom_newton(const Eigen::Ref<const Vector>& g,
                                           const Eigen::Ref<const Vector>& h) const {
  const Matrix weighted = h.asDiagonal() * cross_;
  Matrix system = cross_.transpose() * weighted;
  system += lambda_ * inner_;
  const SpdFactor factor = SpdFactor::factorize(std::move(system));
  Vector beta = factor.solve(Vector(cross_.transpose() * (-g)));
  return finish(std::move(beta));
}

Matrix KernelFitter::cross_kernel(const RowMatrix& rows) const {
  return kernel_matrix(rows, *anchors_, rho_);
}

KernelLearner fit_kernel_newton(const RowMatrix& x, const Eigen::Ref<const Vector>& g,
                                const Eigen::Ref<const Vector>& h, const KernelConfig& config) {
  return KernelFitter(x, config, /*newton=*/true).fit(g, h).learner;
}

KernelLearner fit_kernel_gradient(const KernelFitter& cache, const Eigen::Ref<const Vector>& g) {
  if (cache.newton()) throw DataError("fit_kernel_gradient needs a gradient-mode cache");
  return cache.fit(g, Vector::Ones(g.size())).learner;
}

Vector mean_knn_distance_profile(const RowMatrix& x) {
  const Index m = x.rows();
  if (m < 2) throw DataError("nearest-neighbor distances need at least two rows");
  const Index p = x.cols();
  Vector total = Vector::Zero(m - 1);
  std::vector<double> dist(static_cast<std::size_t>(m - 1));
  for (Index i = 0; i < m; ++i) {
    std::size_t c = 0;
    for (Index j = 0; j < m; ++j) {
      if (j == i) continue;
      dist[c++] = std::sqrt(squared_distance(x.data() + i * p, x.data() + j * p, p));
    }
    std::sort(dist.begin(), dist.end());
    double prefix = 0.0;
    for (Index k = 1; k < m; ++k) {
      prefix += dist[static_cast<std::size_t>(k - 1)];
      total[k - 1] += prefix / static_cast<double>(k);
    }
  }
  return total / static_cast<double>(m);
}

double rho_from_distance(double mean_distance, RhoMode mode) {
  if (!(mean_distance > 0.0) || !std::isfinite(mean_distance)) {
    throw DataError("nearest-neighbor distance must be positive (duplicate rows?)");
  }
  return mode == RhoMode::kDecay01 ? mean_distance / std::sqrt(std::log(100.0)) : mean_distance;
}

double select_rho(const RowMatrix& x, int k, RhoMode mode) {
  const Index m = x.rows();
  if (m < 2) throw DataError("nearest-neighbor distances need at least two rows");
  if (mode == RhoMode::kDecay01 && (k < 1 || k > m - 1)) {
    throw DataError("neighbor count k must lie in [1, m - 1]");
  }
  const Vector profile = mean_knn_distance_profile(x);
  const Index index = mode == RhoMode::kSlow ? m - 2 : k - 1;
  return rho_from_distance(profile[index], mode);
}

}  // namespace ktboost
