#pragma once

#include <cstddef>

// Register-blocked double-precision matrix products used by the layer
// kernels. B operands are given as arrays of row pointers so convolution
// taps can be passed as shifted views of the input without copying.
// Summation order is fixed for a given build, so results are reproducible.

namespace rigscan::gemm {

// C[i][j] += sum_k A[i*lda + k] * B[k][j]     for i < m, j < n, k < depth
void rows(std::size_t m, std::size_t n, std::size_t depth, const double* a, std::size_t lda,
          const double* const* b, double* c, std::size_t ldc);

// C[i][j] += sum_t A[i][t] * B[j][t]          for i < m, j < n, t < length
void dots(std::size_t m, std::size_t n, std::size_t length, const double* const* a, const double* const* b,
          double* c, std::size_t ldc);

}  // namespace rigscan::gemm
