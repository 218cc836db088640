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

// Gaussian-kernel ridge learners fitted to a second-order risk expansion.
//
// For gradients g and Hessians h > 0 the kernel learner minimizes
//
//   sum_i g_i f(x_i) + h_i f(x_i)^2 / 2 + lambda ||f||_H^2 / 2
//
// over the RKHS. With D = diag(sqrt(h)) and targets y_i = -g_i / h_i the
// minimizer is f(x) = k(x)^T alpha with
//
//   alpha = D (D K D + lambda I)^{-1} D y.
//
// In gradient mode (h = 1) this is alpha = (K + lambda I)^{-1} (-g), whose
// factorization is reused across iterations. With a Nystrom approximation
// K ~ C W^{-1} C^T (C = K_{n,l}, W = K_{l,l}) the learner is expressed in
// the l sampled anchors: f(x) = k_l(x)^T beta with
//
//   beta = (lambda W + C^T diag(h) C)^{-1} C^T (-g).

#ifndef KTBOOST_KERNELS_H_
#define KTBOOST_KERNELS_H_

#include <cstdint>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Cholesky>

#include "ktboost/common.h"

namespace ktboost {

// exp(-||a - b||^2 / rho^2)
double gaussian_kernel(std::span<const double> a, std::span<const double> b, double rho);

Matrix kernel_matrix(const RowMatrix& a, const RowMatrix& b, double rho);
// Symmetric kernel matrix of x with itself; the diagonal is exactly 1.
Matrix kernel_matrix(const RowMatrix& x, double rho);

// Cholesky factor of a symmetric positive semi-definite matrix A + jitter I.
// The jitter starts at 1e-10 * trace(A) / dim and grows tenfold up to
// 1e-4 * trace(A) / dim; failure beyond that throws NumericalError.
class SpdFactor {
 public:
  static SpdFactor factorize(Matrix a);

  Vector solve(const Vector& b) const { return llt_.solve(b); }
  Matrix solve(const Matrix& b) const { return llt_.solve(b); }
  const Eigen::LLT<Matrix>& llt() const { return llt_; }
  double jitter() const { return jitter_; }
  Index dim() const { return llt_.rows(); }

 private:
  SpdFactor(Eigen::LLT<Matrix> llt, double jitter) : llt_(std::move(llt)), jitter_(jitter) {}
  Eigen::LLT<Matrix> llt_;
  double jitter_ = 0.0;
};

inline constexpr double kJitterStart = 1e-10;
inline constexpr double kJitterMax = 1e-4;

enum class KernelMode { kExact, kNystrom };

std::string to_string(KernelMode mode);
KernelMode parse_kernel_mode(const std::string& name);

struct KernelConfig {
  double rho = 1.0;
  double lambda = 1.0;
  std::optional<Index> nystrom_samples;
  std::uint64_t seed = 0;

  // Throws DataError unless rho > 0, lambda >= 0 and 1 <= l <= n.
  void validate(Index n) const;
};

// f(x) = sum_j alpha_j K(anchor_j, x). Anchors are shared between the
// learners of one boosting run.
class KernelLearner {
 public:
  KernelLearner(std::shared_ptr<const RowMatrix> anchors, Vector alpha, double rho,
                double lambda, KernelMode mode);

  double predict(std::span<const double> x) const;
  Vector predict(const RowMatrix& x) const;

  const std::shared_ptr<const RowMatrix>& anchors() const { return anchors_; }
  const Vector& alpha() const { return alpha_; }
  double rho() const { return rho_; }
  double lambda() const { return lambda_; }
  KernelMode mode() const { return mode_; }

 private:
  std::shared_ptr<const RowMatrix> anchors_;
  Vector alpha_;
  double rho_;
  double lambda_;
  KernelMode mode_;
};

// l rows drawn uniformly without replacement, in draw order.
std::vector<Index> sample_nystrom_rows(Index n, Index l, std::uint64_t seed);

class NystromFactor {
 public:
  NystromFactor(const RowMatrix& x, std::vector<Index> sample_rows, double rho);

  const RowMatrix& samples() const { return *samples_; }
  const std::shared_ptr<const RowMatrix>& shared_samples() const { return samples_; }
  const std::vector<Index>& sample_rows() const { return sample_rows_; }
  // K_{n,l}
  const Matrix& cross() const { return cross_; }
  // K_{l,l}
  const Matrix& inner() const { return inner_; }
  const SpdFactor& inner_factor() const { return inner_factor_; }
  double rho() const { return rho_; }

  // C W^{-1} C^T, rank at most l.
  Matrix approximate_kernel() const;

 private:
  std::shared_ptr<const RowMatrix> samples_;
  std::vector<Index> sample_rows_;
  double rho_;
  Matrix cross_;
  Matrix inner_;
  SpdFactor inner_factor_;
};

// Samples config.nystrom_samples rows with config.seed.
NystromFactor build_nystrom(const RowMatrix& x, const KernelConfig& config);

struct KernelFit {
  KernelLearner learner;
  // Learner evaluated at the training rows.
  Vector train_predictions;
};

// Holds everything about the training rows that does not change between
// boosting iterations: the kernel (or Nystrom cross) matrix and, in
// gradient mode, the factorization of the ridge system.
class KernelFitter {
 public:
  KernelFitter(const RowMatrix& x, const KernelConfig& config, bool newton);
  // Nystrom fitter around an existing factor.
  KernelFitter(NystromFactor factor, double lambda, bool newton);

  // Newton solve when built with newton == true, otherwise the cached
  // gradient solve (h is ignored).
  KernelFit fit(const Eigen::Ref<const Vector>& g, const Eigen::Ref<const Vector>& h) const;

  // Kernel between arbitrary rows and the anchors.
  Matrix cross_kernel(const RowMatrix& rows) const;

  const std::shared_ptr<const RowMatrix>& anchors() const { return anchors_; }
  KernelMode mode() const { return mode_; }
  bool newton() const { return newton_; }
  double rho() const { return rho_; }
  double lambda() const { return lambda_; }
  // Training rows by anchors: K in exact mode, K_{n,l} with Nystrom.
  const Matrix& train_kernel() const { return cross_; }

 private:
  KernelFit fit_exact_newton(const Eigen::Ref<const Vector>& g,
                             const Eigen::Ref<const Vector>& h) const;
  KernelFit fit_nystrom_newton(const Eigen::Ref<const Vector>& g,
                               const Eigen::Ref<const Vector>& h) const;
  KernelFit finish(Vector coefficients) const;

  std::shared_ptr<const RowMatrix> anchors_;
  KernelMode mode_;
  bool newton_;
  double rho_;
  double lambda_;
  Matrix cross_;
  Matrix inner_;  // K_{l,l}, Nystrom only
  std::optional<SpdFactor> gradient_factor_;
};

// alpha = D (D K D + lambda I)^{-1} D y. Uses the Nystrom path when
// config.nystrom_samples is set. Requires h > 0.
KernelLearner fit_kernel_newton(const RowMatrix& x, const Eigen::Ref<const Vector>& g,
                                const Eigen::Ref<const Vector>& h, const KernelConfig& config);

// alpha = (K + lambda I)^{-1} (-g) with the factorization cached in `cache`,
// which must have been built with newton == false.
KernelLearner fit_kernel_gradient(const KernelFitter& cache, const Eigen::Ref<const Vector>& g);

enum class RhoMode { kDecay01, kSlow };

// Entry k - 1 is the mean over rows of the mean distance to the k nearest
// other rows, for k = 1, ..., m - 1. Throws DataError when m < 2.
Vector mean_knn_distance_profile(const RowMatrix& x);

// decay01: the kernel equals 0.01 at distance d, rho = d / sqrt(ln 100).
// slow: rho = d.
double rho_from_distance(double mean_distance, RhoMode mode);

// `k` is used by decay01 only; slow mode uses k = m - 1.
double select_rho(const RowMatrix& x, int k, RhoMode mode);

}  // namespace ktboost

#endif  // KTBOOST_KERNELS_H_
