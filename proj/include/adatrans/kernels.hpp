#pragma once

#include "adatrans/types.hpp"

namespace adatrans::kernels {

// Dense kernels used in the solver and generator hot paths. Each has a serial
// reference implementation and an OpenMP variant that partitions work so every
// output element is computed by exactly one thread with the serial summation
// order; the two variants therefore produce bitwise-identical results.

namespace serial {
Vector matvec(const Matrix& A, const Vector& x);            // A * x
Vector tmatvec(const Matrix& A, const Vector& x);           // A^T * x
Vector col_sq_norms(const Matrix& A, const Vector* row_weights);
Matrix scale_rows_into(const Matrix& Z, const Matrix& L);   // Z * L^T, row blocked
}  // namespace serial

namespace par {
Vector matvec(const Matrix& A, const Vector& x);
Vector tmatvec(const Matrix& A, const Vector& x);
Vector col_sq_norms(const Matrix& A, const Vector* row_weights);
Matrix scale_rows_into(const Matrix& Z, const Matrix& L);
}  // namespace par

// Dispatchers: pick the parallel variant when OpenMP is available and the
// work is large enough to amortize the fork/join overhead.
Vector matvec(const Matrix& A, const Vector& x);
Vector tmatvec(const Matrix& A, const Vector& x);
Vector col_sq_norms(const Matrix& A, const Vector* row_weights = nullptr);
Matrix scale_rows_into(const Matrix& Z, const Matrix& L);

int max_threads();

}  // namespace adatrans::kernels
