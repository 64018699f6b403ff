#pragma once

#include <Eigen/Dense>

#include <functional>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

namespace feslab::dynamo {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

/// Trainable tensor: a named value with a persistent gradient accumulator.
struct Parameter {
  std::string name;
  Matrix value;
  Matrix grad;

  Parameter(std::string n, Matrix v)
      : name(std::move(n)), value(std::move(v)), grad(Matrix::Zero(value.rows(), value.cols())) {}

  // Movable but not copyable: optimizers and tapes hold Parameter pointers,
  // so a parameter must stay put once registered anywhere.
  Parameter(const Parameter&) = delete;
  Parameter& operator=(const Parameter&) = delete;
  Parameter(Parameter&&) = default;
  Parameter& operator=(Parameter&&) = default;

  void zero_grad() { grad.setZero(); }
};

/// Handle to a node on a Tape.
struct Var {
  int id = -1;
};

/// Record of primitive matrix operations for reverse-mode differentiation.
/// Nodes are appended in execution order; backward() replays the record once
/// in reverse, accumulating gradients into node buffers and Parameter::grad.
/// A tape is single-use: build one loss, call backward, discard.
///
/// Values are matrices throughout; a vector is a one-column matrix and a
/// mini-batch is stored column-per-sample so layer math becomes GEMM.
class Tape {
 public:
  Tape() = default;
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  /// Parameter leaf. Repeated calls with the same parameter return the same
  /// node; gradients accumulate into p.grad.
  Var leaf(Parameter& p);
  /// Value with no gradient flow.
  Var constant(Matrix value);

  Var matmul(Var a, Var b);
  Var add(Var a, Var b);
  Var sub(Var a, Var b);
  /// Elementwise product.
  Var mul(Var a, Var b);
  /// Elementwise minimum; ties route the gradient to the first argument.
  Var cmin(Var a, Var b);
  /// Adds a column vector to every column of m (bias broadcast).
  Var add_col(Var m, Var col);
  /// scale * a + shift, elementwise.
  Var affine(Var a, double scale, double shift);
  Var tanh(Var a);
  Var sigmoid(Var a);
  Var relu(Var a);
  Var exp(Var a);
  Var log(Var a);
  Var softplus(Var a);
  /// Hard clamp; gradient passes only where lo < x < hi.
  Var clamp(Var a, double lo, double hi);
  Var square(Var a);
  /// Stacks a on top of b (row concatenation).
  Var vcat(Var a, Var b);
  /// Per-column sum: (rows x cols) -> (1 x cols).
  Var colsum(Var a);
  /// Sum of all entries -> 1x1.
  Var sum(Var a);
  /// Mean of all entries -> 1x1.
  Var mean(Var a);

  const Matrix& value(Var v) const { return node(v).value; }
  int node_count() const { return static_cast<int>(nodes_.size()); }

  /// Reverse sweep from a scalar loss node; visits every node recorded before
  /// the loss exactly once. Throws if the loss is not 1x1 or if backward has
  /// already run on this tape.
  void backward(Var loss);

 private:
  struct Node {
    Matrix value;
    Matrix grad;  // allocated on first accumulation during backward
    // back(tape, grad_out, own_value): pushes gradients into input nodes.
    std::function<void(Tape&, const Matrix&, const Matrix&)> back;
    bool requires_grad = false;
  };

  Var push(Matrix value, bool requires_grad,
           std::function<void(Tape&, const Matrix&, const Matrix&)> back);
  void accumulate(int id, const Matrix& g);
  const Node& node(Var v) const;
  Node& node(Var v);
  bool needs_grad(Var v) const { return node(v).requires_grad; }
  const Matrix& val(int id) const { return nodes_[static_cast<std::size_t>(id)].value; }

  static void check_same_shape(const Matrix& a, const Matrix& b, const char* op);

  std::vector<Node> nodes_;
  std::unordered_map<const Parameter*, int> param_leaves_;
  bool backward_done_ = false;
};

}  // namespace feslab::dynamo
