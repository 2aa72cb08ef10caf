#pragma once

#include "abn/tensor.hpp"

// Row-parallel OpenMP kernels. Every output element is accumulated in a fixed
// order that does not depend on the thread count, so results are bitwise
// reproducible for any OMP_NUM_THREADS.
namespace abn::kernels {

// sparse (n x m) * dense (m x k), ascending column order within each row
Tensor spmm(const CsrMatrix& a, const Tensor& b);
// a * b
Tensor matmul(const Tensor& a, const Tensor& b);
// a^T * b
Tensor matmul_tn(const Tensor& a, const Tensor& b);
// a * b^T
Tensor matmul_nt(const Tensor& a, const Tensor& b);

// Number of threads the kernels would use for a large parallel region.
int max_threads();

}  // namespace abn::kernels

// Plain serial loops with the same accumulation order as the parallel kernels.
// Kept for tests and the kernel benchmark.
namespace abn::reference {

Tensor spmm(const CsrMatrix& a, const Tensor& b);
Tensor matmul(const Tensor& a, const Tensor& b);
Tensor matmul_tn(const Tensor& a, const Tensor& b);
Tensor matmul_nt(const Tensor& a, const Tensor& b);

}  // namespace abn::reference
