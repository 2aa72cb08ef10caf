#include "abn/tape.hpp"

#include <algorithm>
#include <cassert>
#include <cmath>
#include <stdexcept>

#include "abn/kernels.hpp"

namespace abn::ad {
namespace {

void require(bool ok, const std::string& msg) {
  if (!ok) throw ShapeError(msg);
}

}  // namespace

SparseOperand SparseOperand::symmetric(std::shared_ptr<const CsrMatrix> m) {
  require(m && m->rows == m->cols, "symmetric sparse operand must be square");
  return SparseOperand{std::move(m), nullptr};
}

SparseOperand SparseOperand::general(CsrMatrix m) {
  auto t = std::make_shared<const CsrMatrix>(m.transposed());
  return SparseOperand{std::make_shared<const CsrMatrix>(std::move(m)), std::move(t)};
}

const Tape::Node& Tape::at(Var v) const {
  if (v.id >= nodes_.size()) throw std::out_of_range("tape: unknown node id " + std::to_string(v.id));
  return nodes_[v.id];
}

Var Tape::push(Node node) {
  assert(node.value.all_finite() && "non-finite value entered the tape");
  if (node.lhs != kNone) node.needs_grad = nodes_[node.lhs].needs_grad;
  if (node.rhs != kNone) node.needs_grad = node.needs_grad || nodes_[node.rhs].needs_grad;
  nodes_.push_back(std::move(node));
  return Var{nodes_.size() - 1};
}

Var Tape::parameter(Tensor value) {
  Node n{Op::Parameter};
  n.value = std::move(value);
  n.needs_grad = true;
  nodes_.push_back(std::move(n));
  assert(nodes_.back().value.all_finite());
  return Var{nodes_.size() - 1};
}

Var Tape::constant(Tensor value) {
  Node n{Op::Constant};
  n.value = std::move(value);
  return push(std::move(n));
}

Var Tape::matmul(Var a, Var b) {
  const auto& x = at(a).value;
  const auto& y = at(b).value;
  require(x.cols() == y.rows(), "matmul: " + x.shape_string() + " * " + y.shape_string());
  Node n{Op::MatMul, a.id, b.id};
  n.value = kernels::matmul(x, y);
  return push(std::move(n));
}

Var Tape::spmm(const SparseOperand& a, Var b) {
  const auto& y = at(b).value;
  require(a.matrix != nullptr, "spmm: missing sparse operand");
  require(a.forward().cols == y.rows(), "spmm: sparse (" + std::to_string(a.forward().rows) + "x" +
                                            std::to_string(a.forward().cols) + ") * " + y.shape_string());
  Node n{Op::SpMM, b.id};
  n.value = kernels::spmm(a.forward(), y);
  n.sparse = a;
  return push(std::move(n));
}

Var Tape::add(Var a, Var b) {
  const auto& x = at(a).value;
  const auto& y = at(b).value;
  require(x.same_shape(y), "add: " + x.shape_string() + " + " + y.shape_string());
  Node n{Op::Add, a.id, b.id};
  n.value = x;
  n.value.axpy(1.0, y);
  return push(std::move(n));
}

Var Tape::hadamard(Var a, Var b) {
  const auto& x = at(a).value;
  const auto& y = at(b).value;
  require(x.same_shape(y), "hadamard: " + x.shape_string() + " . " + y.shape_string());
  Node n{Op::Hadamard, a.id, b.id};
  n.value = x;
  for (std::size_t i = 0; i < x.size(); ++i) n.value[i] *= y[i];
  return push(std::move(n));
}

Var Tape::relu(Var a) {
  Node n{Op::Relu, a.id};
  n.value = at(a).value;
  for (auto& v : n.value.values()) v = v > 0.0 ? v : 0.0;
  return push(std::move(n));
}

Var Tape::sigmoid(Var a) {
  Node n{Op::Sigmoid, a.id};
  n.value = at(a).value;
  for (auto& v : n.value.values()) {
    v = v >= 0.0 ? 1.0 / (1.0 + std::exp(-v)) : std::exp(v) / (1.0 + std::exp(v));
  }
  return push(std::move(n));
}

Var Tape::row_softmax(Var a) {
  const auto& x = at(a).value;
  require(x.cols() >= 1, "row_softmax: needs at least one column");
  Node n{Op::RowSoftmax, a.id};
  n.value = Tensor(x.rows(), x.cols());
  for (std::size_t r = 0; r < x.rows(); ++r) {
    auto in = x.row(r);
    auto out = n.value.row(r);
    const double mx = *std::max_element(in.begin(), in.end());
    double total = 0.0;
    for (std::size_t j = 0; j < in.size(); ++j) total += out[j] = std::exp(in[j] - mx);
    for (auto& v : out) v /= total;
  }
  return push(std::move(n));
}

Var Tape::log(Var a) {
  Node n{Op::Log, a.id};
  n.value = at(a).value;
  for (auto& v : n.value.values()) v = std::log(std::max(v, kLogEpsilon));
  return push(std::move(n));
}

Var Tape::scale(Var a, double factor) {
  Node n{Op::Scale, a.id};
  n.value = at(a).value;
  for (auto& v : n.value.values()) v *= factor;
  n.factor = factor;
  return push(std::move(n));
}

Var Tape::row_broadcast(Var a, std::size_t cols) {
  const auto& x = at(a).value;
  require(x.cols() == 1, "row_broadcast: expected a column vector, got " + x.shape_string());
  require(cols >= 1, "row_broadcast: target width must be >= 1");
  Node n{Op::RowBroadcast, a.id};
  n.value = Tensor(x.rows(), cols);
  for (std::size_t r = 0; r < x.rows(); ++r) {
    for (std::size_t j = 0; j < cols; ++j) n.value(r, j) = x[r];
  }
  return push(std::move(n));
}

Var Tape::sum(Var a) {
  Node n{Op::Sum, a.id};
  double total = 0.0;
  for (double v : at(a).value.values()) total += v;
  n.value = Tensor::scalar(total);
  return push(std::move(n));
}

Var Tape::select_rows(Var a, std::vector<std::size_t> rows) {
  const auto& x = at(a).value;
  Node n{Op::SelectRows, a.id};
  n.value = Tensor(rows.size(), x.cols());
  for (std::size_t k = 0; k < rows.size(); ++k) {
    require(rows[k] < x.rows(), "select_rows: row " + std::to_string(rows[k]) + " out of range for " +
                                    x.shape_string());
    std::copy(x.row(rows[k]).begin(), x.row(rows[k]).end(), n.value.row(k).begin());
  }
  n.rows = std::move(rows);
  return push(std::move(n));
}

Var Tape::one_minus(Var a) {
  Node n{Op::OneMinus, a.id};
  n.value = at(a).value;
  for (auto& v : n.value.values()) v = 1.0 - v;
  return push(std::move(n));
}

const Tensor& Tape::grad(Var v) const { return at(v).grad; }

void Tape::accumulate(std::size_t id, const Tensor& g) {
  auto& node = nodes_[id];
  if (!node.needs_grad) return;
  if (node.grad.empty()) {
    node.grad = g;
  } else {
    node.grad.axpy(1.0, g);
  }
}

void Tape::backward(Var loss) {
  const auto& l = at(loss);
  require(l.value.rows() == 1 && l.value.cols() == 1,
          "backward: loss must be 1x1, got " + l.value.shape_string());
  for (auto& node : nodes_) node.grad = Tensor();
  if (l.needs_grad) {
    nodes_[loss.id].grad = Tensor::scalar(1.0);
    for (std::size_t id = loss.id + 1; id-- > 0;) {
      if (!nodes_[id].grad.empty()) backprop_node(id);
    }
  }
  for (auto& node : nodes_) {
    if (node.op == Op::Parameter && node.grad.empty()) node.grad = Tensor(node.value.rows(), node.value.cols());
  }
}

void Tape::backprop_node(std::size_t id) {
  const Node& n = nodes_[id];
  const Tensor& g = n.grad;
  switch (n.op) {
    case Op::Parameter:
    case Op::Constant:
      return;
    case Op::MatMul: {
      const auto& a = nodes_[n.lhs].value;
      const auto& b = nodes_[n.rhs].value;
      if (nodes_[n.lhs].needs_grad) accumulate(n.lhs, kernels::matmul_nt(g, b));
      if (nodes_[n.rhs].needs_grad) accumulate(n.rhs, kernels::matmul_tn(a, g));
      return;
    }
    case Op::SpMM:
      if (nodes_[n.lhs].needs_grad) accumulate(n.lhs, kernels::spmm(n.sparse.backward(), g));
      return;
    case Op::Add:
      accumulate(n.lhs, g);
      accumulate(n.rhs, g);
      return;
    case Op::Hadamard: {
      const auto& a = nodes_[n.lhs].value;
      const auto& b = nodes_[n.rhs].value;
      if (nodes_[n.lhs].needs_grad) {
        Tensor d = g;
        for (std::size_t i = 0; i < d.size(); ++i) d[i] *= b[i];
        accumulate(n.lhs, d);
      }
      if (nodes_[n.rhs].needs_grad) {
        Tensor d = g;
        for (std::size_t i = 0; i < d.size(); ++i) d[i] *= a[i];
        accumulate(n.rhs, d);
      }
      return;
    }
    case Op::Relu: {
      const auto& x = nodes_[n.lhs].value;
      Tensor d = g;
      for (std::size_t i = 0; i < d.size(); ++i) {
        if (!(x[i] > 0.0)) d[i] = 0.0;
      }
      accumulate(n.lhs, d);
      return;
    }
    case Op::Sigmoid: {
      Tensor d = g;
      for (std::size_t i = 0; i < d.size(); ++i) d[i] *= n.value[i] * (1.0 - n.value[i]);
      accumulate(n.lhs, d);
      return;
    }
    case Op::RowSoftmax: {
      const auto& y = n.value;
      Tensor d(y.rows(), y.cols());
      for (std::size_t r = 0; r < y.rows(); ++r) {
        double dot = 0.0;
        for (std::size_t j = 0; j < y.cols(); ++j) dot += g(r, j) * y(r, j);
        for (std::size_t j = 0; j < y.cols(); ++j) d(r, j) = y(r, j) * (g(r, j) - dot);
      }
      accumulate(n.lhs, d);
      return;
    }
    case Op::Log: {
      const auto& x = nodes_[n.lhs].value;
      Tensor d = g;
      for (std::size_t i = 0; i < d.size(); ++i) d[i] = x[i] > kLogEpsilon ? d[i] / x[i] : 0.0;
      accumulate(n.lhs, d);
      return;
    }
    case Op::Scale: {
      Tensor d = g;
      for (auto& v : d.values()) v *= n.factor;
      accumulate(n.lhs, d);
      return;
    }
    case Op::RowBroadcast: {
      Tensor d(g.rows(), 1);
      for (std::size_t r = 0; r < g.rows(); ++r) {
        double acc = 0.0;
        for (std::size_t j = 0; j < g.cols(); ++j) acc += g(r, j);
        d[r] = acc;
      }
      accumulate(n.lhs, d);
      return;
    }
    case Op::Sum: {
      const auto& x = nodes_[n.lhs].value;
      accumulate(n.lhs, Tensor(x.rows(), x.cols(), g[0]));
      return;
    }
    case Op::SelectRows: {
      const auto& x = nodes_[n.lhs].value;
      Tensor d(x.rows(), x.cols());
      for (std::size_t k = 0; k < n.rows.size(); ++k) {
        auto src = g.row(k);
        auto dst = d.row(n.rows[k]);
        for (std::size_t j = 0; j < src.size(); ++j) dst[j] += src[j];
      }
      accumulate(n.lhs, d);
      return;
    }
    case Op::OneMinus: {
      Tensor d = g;
      for (auto& v : d.values()) v = -v;
      accumulate(n.lhs, d);
      return;
    }
  }
}

Tensor dropout_mask(std::size_t rows, std::size_t cols, double rate, Rng& rng) {
  if (!(rate >= 0.0 && rate < 1.0)) {
    throw std::invalid_argument("dropout rate must lie in [0, 1), got " + std::to_string(rate));
  }
  Tensor mask(rows, cols, 1.0);
  if (rate == 0.0) return mask;
  const double keep = 1.0 / (1.0 - rate);
  for (auto& v : mask.values()) v = rng.uniform() < rate ? 0.0 : keep;
  return mask;
}

CsrMatrix sparse_dropout(const CsrMatrix& m, double rate, Rng& rng) {
  if (!(rate >= 0.0 && rate < 1.0)) {
    throw std::invalid_argument("dropout rate must lie in [0, 1), got " + std::to_string(rate));
  }
  if (rate == 0.0) return m;
  const double keep = 1.0 / (1.0 - rate);
  CsrMatrix out;
  out.rows = m.rows;
  out.cols = m.cols;
  out.row_ptr.reserve(m.rows + 1);
  out.col_idx.reserve(m.nnz());
  out.values.reserve(m.nnz());
  for (std::size_t r = 0; r < m.rows; ++r) {
    for (std::size_t e = m.row_begin(r); e < m.row_end(r); ++e) {
      if (rng.uniform() < rate) continue;
      out.col_idx.push_back(m.col_idx[e]);
      out.values.push_back(m.values[e] * keep);
    }
    out.row_ptr.push_back(out.col_idx.size());
  }
  return out;
}

}  // namespace abn::ad
