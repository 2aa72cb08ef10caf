#pragma once

#include <cstddef>
#include <memory>
#include <vector>

#include "abn/rng.hpp"
#include "abn/tensor.hpp"

namespace abn::ad {

/// Clamp applied before every logarithm so that ln never sees zero.
inline constexpr double kLogEpsilon = 1e-12;

enum class Op {
  Parameter,
  Constant,
  MatMul,
  SpMM,
  Add,
  Hadamard,
  Relu,
  Sigmoid,
  RowSoftmax,
  Log,
  Scale,
  RowBroadcast,
  Sum,
  SelectRows,
  OneMinus,
};

/// Handle to a node on a Tape.
struct Var {
  std::size_t id = 0;
};

/// Sparse constant operand of spmm. The transpose is kept for the backward
/// product; symmetric operands share one matrix.
struct SparseOperand {
  std::shared_ptr<const CsrMatrix> matrix;
  std::shared_ptr<const CsrMatrix> transpose;

  static SparseOperand symmetric(std::shared_ptr<const CsrMatrix> m);
  static SparseOperand general(CsrMatrix m);

  const CsrMatrix& forward() const { return *matrix; }
  const CsrMatrix& backward() const { return transpose ? *transpose : *matrix; }
};

/// Reverse-mode differentiation over dense matrices. Values are evaluated
/// eagerly when a node is recorded; backward() walks the nodes in strict
/// reverse recording order. Shape errors are raised at recording time.
///
/// A Tape is single-threaded; independent tapes may live on different threads.
class Tape {
 public:
  Var parameter(Tensor value);
  Var constant(Tensor value);

  Var matmul(Var a, Var b);
  Var spmm(const SparseOperand& a, Var b);
  Var add(Var a, Var b);
  Var hadamard(Var a, Var b);
  Var relu(Var a);
  Var sigmoid(Var a);
  Var row_softmax(Var a);
  /// ln(max(x, kLogEpsilon)); gradient is zero where the clamp is active.
  Var log(Var a);
  Var scale(Var a, double factor);
  /// n x 1 -> n x cols by repeating the single column.
  Var row_broadcast(Var a, std::size_t cols);
  /// Sum of all entries, 1 x 1.
  Var sum(Var a);
  /// Gathers rows in the given order; duplicate indices are allowed.
  Var select_rows(Var a, std::vector<std::size_t> rows);
  Var one_minus(Var a);

  /// Computes d(loss)/d(node) for every node that depends on a parameter.
  /// Throws ShapeError when loss is not 1 x 1.
  void backward(Var loss);

  const Tensor& value(Var v) const { return nodes_.at(v.id).value; }
  /// Gradient accumulated by the last backward(). Parameters the loss does not
  /// reach hold zeros; other unreached nodes hold an empty tensor.
  const Tensor& grad(Var v) const;
  Op op(Var v) const { return nodes_.at(v.id).op; }
  std::size_t size() const { return nodes_.size(); }

 private:
  struct Node {
    Op op;
    std::size_t lhs = kNone;
    std::size_t rhs = kNone;
    Tensor value;
    Tensor grad;
    bool needs_grad = false;
    double factor = 0.0;
    std::vector<std::size_t> rows;
    SparseOperand sparse;
  };
  static constexpr std::size_t kNone = static_cast<std::size_t>(-1);

  Var push(Node node);
  const Node& at(Var v) const;
  void accumulate(std::size_t id, const Tensor& g);
  void backprop_node(std::size_t id);

  std::vector<Node> nodes_;
};

/// Inverted-dropout mask: each entry is 0 with probability `rate`, otherwise
/// 1/(1-rate). Throws std::invalid_argument unless 0 <= rate < 1.
Tensor dropout_mask(std::size_t rows, std::size_t cols, double rate, Rng& rng);

/// Inverted dropout applied to the stored entries of a sparse matrix. Dropped
/// entries are removed from the structure (one uniform draw per stored entry,
/// in storage order).
CsrMatrix sparse_dropout(const CsrMatrix& m, double rate, Rng& rng);

}  // namespace abn::ad
