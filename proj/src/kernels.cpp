#include "abn/kernels.hpp"

#include <omp.h>

#include <cstdint>

namespace abn::kernels {
namespace {

// Below this many multiply-adds the fork/join overhead dominates.
constexpr std::size_t kParallelWork = 1u << 15;

void check(bool ok, const char* what, const Tensor& a, const Tensor& b) {
  if (!ok) throw ShapeError(std::string(what) + ": shape mismatch " + a.shape_string() + " vs " + b.shape_string());
}

}  // namespace

int max_threads() { return omp_get_max_threads(); }

Tensor spmm(const CsrMatrix& a, const Tensor& b) {
  if (a.cols != b.rows()) {
    throw ShapeError("spmm: sparse (" + std::to_string(a.rows) + "x" + std::to_string(a.cols) +
                     ") times dense " + b.shape_string());
  }
  const std::size_t k = b.cols();
  Tensor out(a.rows, k);
  const auto rows = static_cast<std::int64_t>(a.rows);
  const bool par = a.nnz() * k >= kParallelWork;
#pragma omp parallel for schedule(static) if (par)
  for (std::int64_t r = 0; r < rows; ++r) {
    double* dst = out.data() + r * k;
    for (std::size_t e = a.row_ptr[r]; e < a.row_ptr[r + 1]; ++e) {
      const double v = a.values[e];
      const double* src = b.data() + static_cast<std::size_t>(a.col_idx[e]) * k;
      for (std::size_t j = 0; j < k; ++j) dst[j] += v * src[j];
    }
  }
  return out;
}

Tensor matmul(const Tensor& a, const Tensor& b) {
  check(a.cols() == b.rows(), "matmul", a, b);
  const std::size_t n = a.rows(), inner = a.cols(), m = b.cols();
  Tensor out(n, m);
  const bool par = n * inner * m >= kParallelWork;
#pragma omp parallel for schedule(static) if (par)
  for (std::int64_t i = 0; i < static_cast<std::int64_t>(n); ++i) {
    double* dst = out.data() + i * m;
    const double* arow = a.data() + i * inner;
    for (std::size_t p = 0; p < inner; ++p) {
      const double v = arow[p];
      if (v == 0.0) continue;
      const double* brow = b.data() + p * m;
      for (std::size_t j = 0; j < m; ++j) dst[j] += v * brow[j];
    }
  }
  return out;
}

Tensor matmul_tn(const Tensor& a, const Tensor& b) {
  check(a.rows() == b.rows(), "matmul_tn", a, b);
  const std::size_t n = a.rows(), p_dim = a.cols(), m = b.cols();
  Tensor out(p_dim, m);
  const bool par = n * p_dim * m >= kParallelWork;
#pragma omp parallel for schedule(static) if (par)
  for (std::int64_t p = 0; p < static_cast<std::int64_t>(p_dim); ++p) {
    double* dst = out.data() + p * m;
    for (std::size_t i = 0; i < n; ++i) {
      const double v = a.data()[i * p_dim + p];
      if (v == 0.0) continue;
      const double* brow = b.data() + i * m;
      for (std::size_t j = 0; j < m; ++j) dst[j] += v * brow[j];
    }
  }
  return out;
}

Tensor matmul_nt(const Tensor& a, const Tensor& b) {
  check(a.cols() == b.cols(), "matmul_nt", a, b);
  const std::size_t n = a.rows(), inner = a.cols(), m = b.rows();
  Tensor out(n, m);
  const bool par = n * inner * m >= kParallelWork;
#pragma omp parallel for schedule(static) if (par)
  for (std::int64_t i = 0; i < static_cast<std::int64_t>(n); ++i) {
    const double* arow = a.data() + i * inner;
    for (std::size_t q = 0; q < m; ++q) {
      const double* brow = b.data() + q * inner;
      double acc = 0.0;
      for (std::size_t j = 0; j < inner; ++j) acc += arow[j] * brow[j];
      out.data()[i * m + q] = acc;
    }
  }
  return out;
}

}  // namespace abn::kernels
