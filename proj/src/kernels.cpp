#include "adatrans/kernels.hpp"

#ifdef _OPENMP
#include <omp.h>
#endif

namespace adatrans::kernels {

namespace {
// Below this many multiply-adds a parallel region costs more than it saves.
constexpr long kParallelCutoff = 1 << 16;
}  // namespace

namespace serial {

Vector matvec(const Matrix& A, const Vector& x) {
  Vector out(A.rows());
  for (Eigen::Index i = 0; i < A.rows(); ++i) out[i] = A.row(i).dot(x);
  return out;
}

Vector tmatvec(const Matrix& A, const Vector& x) {
  Vector out(A.cols());
  for (Eigen::Index j = 0; j < A.cols(); ++j) out[j] = A.col(j).dot(x);
  return out;
}

Vector col_sq_norms(const Matrix& A, const Vector* row_weights) {
  Vector out(A.cols());
  for (Eigen::Index j = 0; j < A.cols(); ++j) {
    if (row_weights)
      out[j] = A.col(j).cwiseProduct(A.col(j)).dot(*row_weights);
    else
      out[j] = A.col(j).squaredNorm();
  }
  return out;
}

Matrix scale_rows_into(const Matrix& Z, const Matrix& L) {
  Matrix out(Z.rows(), L.rows());
  for (Eigen::Index i = 0; i < Z.rows(); ++i)
    out.row(i) = (L * Z.row(i).transpose()).transpose();
  return out;
}

}  // namespace serial

namespace par {

#ifdef _OPENMP

Vector matvec(const Matrix& A, const Vector& x) {
  Vector out(A.rows());
  const Eigen::Index n = A.rows();
#pragma omp parallel for schedule(static)
  for (Eigen::Index i = 0; i < n; ++i) out[i] = A.row(i).dot(x);
  return out;
}

Vector tmatvec(const Matrix& A, const Vector& x) {
  Vector out(A.cols());
  const Eigen::Index d = A.cols();
#pragma omp parallel for schedule(static)
  for (Eigen::Index j = 0; j < d; ++j) out[j] = A.col(j).dot(x);
  return out;
}

Vector col_sq_norms(const Matrix& A, const Vector* row_weights) {
  Vector out(A.cols());
  const Eigen::Index d = A.cols();
#pragma omp parallel for schedule(static)
  for (Eigen::Index j = 0; j < d; ++j) {
    if (row_weights)
      out[j] = A.col(j).cwiseProduct(A.col(j)).dot(*row_weights);
    else
      out[j] = A.col(j).squaredNorm();
  }
  return out;
}

Matrix scale_rows_into(const Matrix& Z, const Matrix& L) {
  Matrix out(Z.rows(), L.rows());
  const Eigen::Index n = Z.rows();
#pragma omp parallel for schedule(static)
  for (Eigen::Index i = 0; i < n; ++i)
    out.row(i) = (L * Z.row(i).transpose()).transpose();
  return out;
}

#else

Vector matvec(const Matrix& A, const Vector& x) { return serial::matvec(A, x); }
Vector tmatvec(const Matrix& A, const Vector& x) { return serial::tmatvec(A, x); }
Vector col_sq_norms(const Matrix& A, const Vector* row_weights) {
  return serial::col_sq_norms(A, row_weights);
}
Matrix scale_rows_into(const Matrix& Z, const Matrix& L) {
  return serial::scale_rows_into(Z, L);
}

#endif  // _OPENMP

}  // namespace par

int max_threads() {
#ifdef _OPENMP
  return omp_get_max_threads();
#else
  return 1;
#endif
}

namespace {
inline bool big(long rows, long cols) {
  return max_threads() > 1 && rows * cols >= kParallelCutoff;
}
}  // namespace

Vector matvec(const Matrix& A, const Vector& x) {
  return big(A.rows(), A.cols()) ? par::matvec(A, x) : serial::matvec(A, x);
}

Vector tmatvec(const Matrix& A, const Vector& x) {
  return big(A.rows(), A.cols()) ? par::tmatvec(A, x) : serial::tmatvec(A, x);
}

Vector col_sq_norms(const Matrix& A, const Vector* row_weights) {
  return big(A.rows(), A.cols()) ? par::col_sq_norms(A, row_weights)
                                 : serial::col_sq_norms(A, row_weights);
}

Matrix scale_rows_into(const Matrix& Z, const Matrix& L) {
  return big(Z.rows(), Z.cols() * L.rows()) ? par::scale_rows_into(Z, L)
                                            : serial::scale_rows_into(Z, L);
}

}  // namespace adatrans::kernels
