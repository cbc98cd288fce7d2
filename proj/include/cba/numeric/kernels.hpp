// Copyright (c) 2026 The CBA Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

// Scalar-generic dense kernels shared by the autodiff graph and the
// inference paths. All functions accept any Eigen expression.

#ifndef CBA_NUMERIC_KERNELS_HPP_
#define CBA_NUMERIC_KERNELS_HPP_

#include <cmath>
#include <limits>

#include <Eigen/Dense>

namespace cba::nn {

template <typename Scalar>
using MatrixX = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
template <typename Scalar>
using RowVectorX = Eigen::Matrix<Scalar, 1, Eigen::Dynamic>;

using Matrix = MatrixX<double>;
using RowVector = RowVectorX<double>;
using Vector = Eigen::VectorXd;

template <typename Scalar>
constexpr Scalar neg_inf() {
  return -std::numeric_limits<Scalar>::infinity();
}

/// log(exp(a) + exp(b)) without overflow; -inf is the additive identity.
template <typename Scalar>
Scalar log_add(Scalar a, Scalar b) {
  if (a == neg_inf<Scalar>()) return b;
  if (b == neg_inf<Scalar>()) return a;
  if (a < b) std::swap(a, b);
  return a + std::log1p(std::exp(b - a));
}

template <typename Derived>
typename Derived::Scalar log_sum_exp(const Eigen::DenseBase<Derived>& x) {
  using Scalar = typename Derived::Scalar;
  const Scalar m = x.maxCoeff();
  if (m == neg_inf<Scalar>()) return m;
  return m + std::log((x.derived().array() - m).exp().sum());
}

template <typename Derived>
MatrixX<typename Derived::Scalar> softmax_rows(
    const Eigen::MatrixBase<Derived>& x) {
  using Scalar = typename Derived::Scalar;
  MatrixX<Scalar> out(x.rows(), x.cols());
  for (Eigen::Index r = 0; r < x.rows(); ++r) {
    const Scalar m = x.row(r).maxCoeff();
    out.row(r) = (x.row(r).array() - m).exp().matrix();
    out.row(r) /= out.row(r).sum();
  }
  return out;
}

template <typename Derived>
MatrixX<typename Derived::Scalar> log_softmax_rows(
    const Eigen::MatrixBase<Derived>& x) {
  using Scalar = typename Derived::Scalar;
  MatrixX<Scalar> out(x.rows(), x.cols());
  for (Eigen::Index r = 0; r < x.rows(); ++r) {
    out.row(r) = x.row(r).array() - log_sum_exp(x.row(r));
  }
  return out;
}

template <typename Scalar>
Scalar sigmoid(Scalar v) {
  return v >= 0 ? Scalar(1) / (Scalar(1) + std::exp(-v))
                : std::exp(v) / (Scalar(1) + std::exp(v));
}

/// Fixed sinusoidal position table, rows = positions.
template <typename Scalar = double>
MatrixX<Scalar> sinusoidal_positions(Eigen::Index length, Eigen::Index dim) {
  MatrixX<Scalar> pe(length, dim);
  for (Eigen::Index p = 0; p < length; ++p) {
    for (Eigen::Index i = 0; i < dim; ++i) {
      const Scalar rate = std::pow(Scalar(10000), -Scalar(2 * (i / 2)) / Scalar(dim));
      pe(p, i) = (i % 2 == 0) ? std::sin(Scalar(p) * rate) : std::cos(Scalar(p) * rate);
    }
  }
  return pe;
}

}  // namespace cba::nn

#endif  // CBA_NUMERIC_KERNELS_HPP_
