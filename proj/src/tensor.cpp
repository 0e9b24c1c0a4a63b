#include "tensorstick/tensor.hpp"

namespace tensorstick {

Array3 cp_compose(const CpFactors& f) {
  f.check_consistent();
  const int n1 = static_cast<int>(f.F1.rows());
  const int n2 = static_cast<int>(f.F2.rows());
  const int n3 = static_cast<int>(f.F3.rows());
  Array3 out(n1, n2, n3);
  // mat1(out) = F1 * (F2 ⊙ F3)^T, with ⊙ the column-wise outer flattening.
  out.mat1() = f.F1 * factor_column_outer(f.F2, f.F3).transpose();
  return out;
}

Array3 contract_mode1(const Eigen::MatrixXd& X, const Array3& B) {
  if (X.cols() != B.n1)
    throw input_error("contract_mode1: inner dimension mismatch (X cols " +
                      std::to_string(X.cols()) + " vs tensor dim " +
                      std::to_string(B.n1) + ")");
  Array3 out(static_cast<int>(X.rows()), B.n2, B.n3);
  out.mat1() = X * B.mat1();
  return out;
}

Eigen::MatrixXd matricize_mode1(const Array3& A) { return A.mat1(); }

Array3 unmatricize_mode1(const Eigen::MatrixXd& M, int n2, int n3) {
  if (M.cols() != static_cast<long>(n2) * n3)
    throw input_error("unmatricize_mode1: column count does not factor as n2*n3");
  Array3 out(static_cast<int>(M.rows()), n2, n3);
  out.mat1() = M;
  return out;
}

Eigen::MatrixXd factor_column_outer(const Eigen::MatrixXd& F2,
                                    const Eigen::MatrixXd& F3) {
  if (F2.cols() != F3.cols())
    throw input_error("factor_column_outer: factor column counts differ");
  const int n2 = static_cast<int>(F2.rows());
  const int n3 = static_cast<int>(F3.rows());
  const int R = static_cast<int>(F2.cols());
  Eigen::MatrixXd out(static_cast<long>(n2) * n3, R);
  for (int r = 0; r < R; ++r)
    for (int j = 0; j < n2; ++j)
      out.col(r).segment(static_cast<long>(j) * n3, n3) = F2(j, r) * F3.col(r);
  return out;
}

}  // namespace tensorstick
