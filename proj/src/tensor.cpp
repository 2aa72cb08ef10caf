#include "abn/tensor.hpp"

#include <algorithm>
#include <cmath>

namespace abn {

Tensor::Tensor(std::size_t rows, std::size_t cols, std::vector<double> data)
    : rows_(rows), cols_(cols), data_(std::move(data)) {
  if (data_.size() != rows_ * cols_) {
    throw ShapeError("tensor data length " + std::to_string(data_.size()) +
                     " does not match shape " + shape_string());
  }
}

Tensor::Tensor(std::initializer_list<std::initializer_list<double>> rows) {
  rows_ = rows.size();
  cols_ = rows_ == 0 ? 0 : rows.begin()->size();
  data_.reserve(rows_ * cols_);
  for (const auto& r : rows) {
    if (r.size() != cols_) throw ShapeError("ragged tensor literal");
    data_.insert(data_.end(), r.begin(), r.end());
  }
}

void Tensor::fill(double v) { std::fill(data_.begin(), data_.end(), v); }

void Tensor::axpy(double scale, const Tensor& other) {
  if (!same_shape(other)) {
    throw ShapeError("axpy shape mismatch " + shape_string() + " vs " + other.shape_string());
  }
  for (std::size_t i = 0; i < data_.size(); ++i) data_[i] += scale * other.data_[i];
}

bool Tensor::all_finite() const {
  return std::all_of(data_.begin(), data_.end(), [](double v) { return std::isfinite(v); });
}

std::string Tensor::shape_string() const {
  return "(" + std::to_string(rows_) + "x" + std::to_string(cols_) + ")";
}

void CsrMatrix::validate() const {
  if (row_ptr.size() != rows + 1) throw ShapeError("csr: row_ptr length must be rows+1");
  if (row_ptr.front() != 0) throw ShapeError("csr: row_ptr must start at 0");
  if (row_ptr.back() != col_idx.size() || col_idx.size() != values.size()) {
    throw ShapeError("csr: nnz mismatch between row_ptr, col_idx and values");
  }
  for (std::size_t r = 0; r < rows; ++r) {
    if (row_ptr[r] > row_ptr[r + 1]) throw ShapeError("csr: row_ptr not monotone at row " + std::to_string(r));
    for (std::size_t k = row_ptr[r]; k < row_ptr[r + 1]; ++k) {
      if (col_idx[k] >= cols) throw ShapeError("csr: column index out of range in row " + std::to_string(r));
      if (k > row_ptr[r] && col_idx[k] <= col_idx[k - 1]) {
        throw ShapeError("csr: column indices not strictly ascending in row " + std::to_string(r));
      }
    }
  }
}

CsrMatrix CsrMatrix::transposed() const {
  CsrMatrix t;
  t.rows = cols;
  t.cols = rows;
  t.row_ptr.assign(cols + 1, 0);
  for (auto c : col_idx) ++t.row_ptr[c + 1];
  for (std::size_t c = 0; c < cols; ++c) t.row_ptr[c + 1] += t.row_ptr[c];
  t.col_idx.resize(nnz());
  t.values.resize(nnz());
  std::vector<std::size_t> cursor(t.row_ptr.begin(), t.row_ptr.end() - 1);
  // Visiting rows in ascending order keeps each transposed row sorted.
  for (std::size_t r = 0; r < rows; ++r) {
    for (std::size_t k = row_ptr[r]; k < row_ptr[r + 1]; ++k) {
      auto dst = cursor[col_idx[k]]++;
      t.col_idx[dst] = static_cast<std::uint32_t>(r);
      t.values[dst] = values[k];
    }
  }
  return t;
}

Tensor CsrMatrix::to_dense() const {
  Tensor d(rows, cols);
  for (std::size_t r = 0; r < rows; ++r) {
    for (std::size_t k = row_ptr[r]; k < row_ptr[r + 1]; ++k) d(r, col_idx[k]) = values[k];
  }
  return d;
}

CsrMatrix CsrMatrix::from_dense(const Tensor& dense) {
  CsrMatrix m;
  m.rows = dense.rows();
  m.cols = dense.cols();
  m.row_ptr.assign(1, 0);
  for (std::size_t r = 0; r < m.rows; ++r) {
    for (std::size_t c = 0; c < m.cols; ++c) {
      if (dense(r, c) != 0.0) {
        m.col_idx.push_back(static_cast<std::uint32_t>(c));
        m.values.push_back(dense(r, c));
      }
    }
    m.row_ptr.push_back(m.col_idx.size());
  }
  return m;
}

}  // namespace abn
