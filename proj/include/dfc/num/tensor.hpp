#pragma once

#include <Eigen/Dense>
#include <array>
#include <string>

#include "dfc/error.hpp"

namespace dfc::num {

using Index = Eigen::Index;

// Dense row-major matrix; rows are sequence positions, columns features.
template <typename Scalar>
using Matrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

template <typename Scalar>
using RowVector = Eigen::Matrix<Scalar, 1, Eigen::Dynamic>;

using Shape = std::array<Index, 2>;

template <typename Derived>
Shape shape_of(const Eigen::MatrixBase<Derived>& m) {
  return {m.rows(), m.cols()};
}

inline std::string shape_string(Shape s) {
  return "(" + std::to_string(s[0]) + ", " + std::to_string(s[1]) + ")";
}

[[noreturn]] inline void shape_mismatch(const char* op, Shape a, Shape b) {
  fail(ErrorKind::shape, std::string(op) + ": incompatible shapes " + shape_string(a) + " and " + shape_string(b));
}

// Row-wise softmax with max subtraction.
template <typename Derived>
Matrix<typename Derived::Scalar> softmax_rows(const Eigen::MatrixBase<Derived>& logits) {
  using S = typename Derived::Scalar;
  Matrix<S> out = logits;
  for (Index r = 0; r < out.rows(); ++r) {
    auto row = out.row(r);
    row.array() -= row.maxCoeff();
    row = row.array().exp().matrix();
    row /= row.sum();
  }
  return out;
}

template <typename Derived>
Matrix<typename Derived::Scalar> log_softmax_rows(const Eigen::MatrixBase<Derived>& logits) {
  using S = typename Derived::Scalar;
  Matrix<S> out = logits;
  for (Index r = 0; r < out.rows(); ++r) {
    auto row = out.row(r);
    const S mx = row.maxCoeff();
    const S lse = mx + std::log((row.array() - mx).exp().sum());
    row.array() -= lse;
  }
  return out;
}

template <typename To, typename From>
Matrix<To> cast(const Matrix<From>& m) {
  return m.template cast<To>();
}

}  // namespace dfc::num
