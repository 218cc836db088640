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

#ifndef KTBOOST_COMMON_H_
#define KTBOOST_COMMON_H_

#include <span>
#include <stdexcept>
#include <string>

#include <Eigen/Core>

namespace ktboost {

// Feature matrices are row-major so that a sample is a contiguous span.
using RowMatrix =
    Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;
using Index = Eigen::Index;

inline std::span<const double> row_span(const RowMatrix& m, Index i) {
  return {m.data() + i * m.cols(), static_cast<std::size_t>(m.cols())};
}

// Base class of every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Invalid input data: unreadable files, malformed values, shape mismatches.
class DataError : public Error {
 public:
  using Error::Error;
};

// A model file that cannot be parsed or has the wrong format version.
class FormatError : public DataError {
 public:
  using DataError::DataError;
};

// Factorization failures, non-finite risks and other numerical breakdowns.
class NumericalError : public Error {
 public:
  using Error::Error;
};

}  // namespace ktboost

#endif  // KTBOOST_COMMON_H_
