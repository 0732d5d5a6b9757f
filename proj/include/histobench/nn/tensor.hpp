#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <string>

#include "histobench/errors.hpp"

namespace histobench::nn {

template <typename Scalar>
using MatrixX = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

/// Engine arithmetic is 64-bit throughout.
using Matrix = MatrixX<double>;

inline constexpr double kLogFloor = 1e-12;

/// A trainable tensor with its gradient and Adam moments, all the same shape.
struct Param {
  std::string name;
  Matrix value;
  Matrix grad;
  Matrix moment1;
  Matrix moment2;

  Param() = default;
  Param(std::string n, Matrix v)
      : name(std::move(n)), value(std::move(v)), grad(Matrix::Zero(value.rows(), value.cols())),
        moment1(grad), moment2(grad) {}

  void zero_grad() { grad.setZero(); }
  void reset_moments() {
    moment1.setZero();
    moment2.setZero();
  }
};

/// Row-wise softmax of logits/τ, max-subtracted for stability.
template <typename Derived>
MatrixX<typename Derived::Scalar> softmax_rows(const Eigen::MatrixBase<Derived>& logits,
                                               typename Derived::Scalar tau) {
  using Scalar = typename Derived::Scalar;
  if (!(tau > Scalar(0))) {
    throw ArgumentError("softmax temperature must be positive");
  }
  MatrixX<Scalar> shifted = (logits.colwise() - logits.rowwise().maxCoeff()) / tau;
  shifted = shifted.array().exp().matrix();
  const auto sums = shifted.rowwise().sum().eval();
  return shifted.array().colwise() / sums.array();
}

/// Mean over rows of −Σ_j t_ij · log softmax(logits/τ)_ij. When `grad_logits`
/// is given it receives (softmax − targets)/(τ·rows).
template <typename DerivedL, typename DerivedT>
typename DerivedL::Scalar cross_entropy_rows(const Eigen::MatrixBase<DerivedL>& logits,
                                             const Eigen::MatrixBase<DerivedT>& targets,
                                             typename DerivedL::Scalar tau,
                                             MatrixX<typename DerivedL::Scalar>* grad_logits = nullptr) {
  using Scalar = typename DerivedL::Scalar;
  if (logits.rows() != targets.rows() || logits.cols() != targets.cols()) {
    throw ArgumentError("cross_entropy_rows: logits and targets differ in shape");
  }
  const MatrixX<Scalar> probs = softmax_rows(logits, tau);
  const auto rows = static_cast<Scalar>(logits.rows());
  const Scalar loss =
      -(targets.array() * probs.array().max(Scalar(kLogFloor)).log()).sum() / rows;
  if (grad_logits != nullptr) {
    *grad_logits = (probs - targets) / (tau * rows);
  }
  return loss;
}

/// Mean row entropy −Σ p log p of a row-stochastic matrix.
template <typename Derived>
typename Derived::Scalar entropy_rows(const Eigen::MatrixBase<Derived>& probs) {
  using Scalar = typename Derived::Scalar;
  const auto logp = probs.array().max(Scalar(kLogFloor)).log();
  return -(probs.array() * logp).sum() / static_cast<Scalar>(probs.rows());
}

/// Each row scaled to unit Euclidean norm; zero rows are a numeric error.
template <typename Derived>
MatrixX<typename Derived::Scalar> l2_normalize_rows(const Eigen::MatrixBase<Derived>& m) {
  using Scalar = typename Derived::Scalar;
  const auto norms = m.rowwise().norm().eval();
  if (norms.size() > 0 && norms.minCoeff() < Scalar(1e-12)) {
    throw NumericError("cannot normalise a zero row");
  }
  return m.array().colwise() / norms.array();
}

/// Backward of row normalisation: given z = u/‖u‖ and dL/dz, returns dL/du.
template <typename Scalar>
MatrixX<Scalar> l2_normalize_rows_backward(const MatrixX<Scalar>& normalized, const MatrixX<Scalar>& raw,
                                           const MatrixX<Scalar>& grad_normalized) {
  const auto norms = raw.rowwise().norm().eval();
  const auto dots = (normalized.array() * grad_normalized.array()).rowwise().sum().eval();
  MatrixX<Scalar> out = grad_normalized - (normalized.array().colwise() * dots).matrix();
  return out.array().colwise() / norms.array();
}

/// Row index of the largest entry per row; ties go to the lowest index.
template <typename Derived>
Eigen::VectorXi argmax_rows(const Eigen::MatrixBase<Derived>& m) {
  Eigen::VectorXi out(m.rows());
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    Eigen::Index best = 0;
    for (Eigen::Index j = 1; j < m.cols(); ++j) {
      if (m(i, j) > m(i, best)) {
        best = j;
      }
    }
    out[i] = static_cast<int>(best);
  }
  return out;
}

} // namespace histobench::nn
