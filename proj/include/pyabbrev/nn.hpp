// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <Eigen/Core>
#include <cmath>

namespace pyab {

template <class Scalar>
using Mat = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
template <class Scalar>
using Vec = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

// Additive attention bias for masked-out keys. Large enough that the
// post-softmax weight underflows to exactly zero.
template <class Scalar>
constexpr Scalar kMaskedScore = Scalar(-1e9);

template <class Scalar>
Vec<Scalar> softmax(const Vec<Scalar>& x) {
  const Scalar m = x.maxCoeff();
  Vec<Scalar> e = (x.array() - m).exp();
  return e / e.sum();
}

template <class Scalar>
void softmax_rows_inplace(Mat<Scalar>& x) {
  for (Eigen::Index i = 0; i < x.rows(); ++i) {
    const Scalar m = x.row(i).maxCoeff();
    x.row(i) = (x.row(i).array() - m).exp();
    x.row(i) /= x.row(i).sum();
  }
}

template <class Scalar>
Mat<Scalar> log_softmax_rows(const Mat<Scalar>& x) {
  Mat<Scalar> out(x.rows(), x.cols());
  for (Eigen::Index i = 0; i < x.rows(); ++i) {
    const Scalar m = x.row(i).maxCoeff();
    const Scalar lse = std::log((x.row(i).array() - m).exp().sum());
    out.row(i) = x.row(i).array() - m - lse;
  }
  return out;
}

// Backward of p = softmax(s) for one row: ds = p .* (dp - <dp, p>).
template <class Scalar, class D1, class D2>
Vec<Scalar> softmax_backward(const Eigen::MatrixBase<D1>& p,
                             const Eigen::MatrixBase<D2>& dp) {
  const Scalar dot = (p.array() * dp.array()).sum();
  return (p.array() * (dp.array() - dot)).matrix();
}

// Exact (erf-based) GELU and its derivative.
template <class Scalar>
Scalar gelu(Scalar x) {
  return Scalar(0.5) * x * (Scalar(1) + std::erf(x * Scalar(M_SQRT1_2)));
}

template <class Scalar>
Scalar gelu_grad(Scalar x) {
  const Scalar cdf = Scalar(0.5) * (Scalar(1) + std::erf(x * Scalar(M_SQRT1_2)));
  const Scalar pdf =
      std::exp(Scalar(-0.5) * x * x) * Scalar(0.3989422804014326779);
  return cdf + x * pdf;
}

template <class Scalar>
Mat<Scalar> gelu(const Mat<Scalar>& x) {
  return x.unaryExpr([](Scalar v) { return gelu(v); });
}

template <class Scalar>
Mat<Scalar> gelu_grad(const Mat<Scalar>& x) {
  return x.unaryExpr([](Scalar v) { return gelu_grad(v); });
}

}  // namespace pyab
