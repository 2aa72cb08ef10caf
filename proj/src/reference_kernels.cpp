#include "abn/kernels.hpp"

namespace abn::reference {

Tensor spmm(const CsrMatrix& a, const Tensor& b) {
  if (a.cols != b.rows()) throw ShapeError("reference::spmm: shape mismatch");
  Tensor out(a.rows, b.cols());
  for (std::size_t r = 0; r < a.rows; ++r) {
    for (std::size_t e = a.row_ptr[r]; e < a.row_ptr[r + 1]; ++e) {
      for (std::size_t j = 0; j < b.cols(); ++j) out(r, j) += a.values[e] * b(a.col_idx[e], j);
    }
  }
  return out;
}

Tensor matmul(const Tensor& a, const Tensor& b) {
  if (a.cols() != b.rows()) throw ShapeError("reference::matmul: shape mismatch");
  Tensor out(a.rows(), b.cols());
  for (std::size_t i = 0; i < a.rows(); ++i) {
    for (std::size_t p = 0; p < a.cols(); ++p) {
      for (std::size_t j = 0; j < b.cols(); ++j) out(i, j) += a(i, p) * b(p, j);
    }
  }
  return out;
}

Tensor matmul_tn(const Tensor& a, const Tensor& b) {
  if (a.rows() != b.rows()) throw ShapeError("reference::matmul_tn: shape mismatch");
  Tensor out(a.cols(), b.cols());
  for (std::size_t p = 0; p < a.cols(); ++p) {
    for (std::size_t i = 0; i < a.rows(); ++i) {
      for (std::size_t j = 0; j < b.cols(); ++j) out(p, j) += a(i, p) * b(i, j);
    }
  }
  return out;
}

Tensor matmul_nt(const Tensor& a, const Tensor& b) {
  if (a.cols() != b.cols()) throw ShapeError("reference::matmul_nt: shape mismatch");
  Tensor out(a.rows(), b.rows());
  for (std::size_t i = 0; i < a.rows(); ++i) {
    for (std::size_t q = 0; q < b.rows(); ++q) {
      double acc = 0.0;
      for (std::size_t j = 0; j < a.cols(); ++j) acc += a(i, j) * b(q, j);
      out(i, q) = acc;
    }
  }
  return out;
}

}  // namespace abn::reference
