#pragma once

#include <Eigen/Core>

#include "tensorstick/common.hpp"

namespace tensorstick {

using RowMajorMatrixMap =
    Eigen::Map<Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>;
using ConstRowMajorMatrixMap =
    Eigen::Map<const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>;

// Dense 3-way array, row-major over (i, j, h): h fastest, then j, then i.
// The mode-1 matricization below flattens (j, h) in the same j-major order,
// so slice A[i,:,:] is contiguous in memory.
struct Array3 {
  int n1 = 0, n2 = 0, n3 = 0;
  Eigen::VectorXd v;

  Array3() = default;
  Array3(int d1, int d2, int d3) : n1(d1), n2(d2), n3(d3) {
    if (d1 < 0 || d2 < 0 || d3 < 0)
      throw input_error("Array3: negative dimension");
    v = Eigen::VectorXd::Zero(static_cast<long>(d1) * d2 * d3);
  }

  double& operator()(int i, int j, int h) {
    return v[(static_cast<long>(i) * n2 + j) * n3 + h];
  }
  double operator()(int i, int j, int h) const {
    return v[(static_cast<long>(i) * n2 + j) * n3 + h];
  }

  // Mode-1 matricized view: n1 x (n2*n3), row i = vec(A[i,:,:]) j-major.
  RowMajorMatrixMap mat1() { return {v.data(), n1, static_cast<long>(n2) * n3}; }
  ConstRowMajorMatrixMap mat1() const {
    return {v.data(), n1, static_cast<long>(n2) * n3};
  }

  bool all_finite() const { return v.allFinite(); }
  void set_zero() { v.setZero(); }
};

// CP factor triplet: F1: n1 x R, F2: n2 x R, F3: n3 x R.
struct CpFactors {
  Eigen::MatrixXd F1, F2, F3;

  int rank() const { return static_cast<int>(F1.cols()); }
  void check_consistent() const {
    if (F1.cols() != F2.cols() || F1.cols() != F3.cols())
      throw input_error("CpFactors: factor column counts differ");
    if (F1.cols() < 1) throw input_error("CpFactors: rank must be >= 1");
  }
};

// out[d,j,h] = sum_r F1[d,r] F2[j,r] F3[h,r]
Array3 cp_compose(const CpFactors& f);

// out[i,j,h] = sum_d X[i,d] B[d,j,h]
Array3 contract_mode1(const Eigen::MatrixXd& X, const Array3& B);

// Row i = vec(A[i,:,:]) with (j,h) flattened j-major (h fastest).
Eigen::MatrixXd matricize_mode1(const Array3& A);

// Inverse of matricize_mode1 given the trailing dimensions.
Array3 unmatricize_mode1(const Eigen::MatrixXd& M, int n2, int n3);

// Column r = vec(F2[:,r] outer F3[:,r]), same j-major flattening, so that
// matricize_mode1(cp_compose(f)) == f.F1 * factor_column_outer(f.F2, f.F3)^T.
Eigen::MatrixXd factor_column_outer(const Eigen::MatrixXd& F2,
                                    const Eigen::MatrixXd& F3);

}  // namespace tensorstick
