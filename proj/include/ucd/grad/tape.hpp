#pragma once

// Minimal reverse-mode automatic differentiation over dense matrices.
//
// Values are Eigen matrices; a scalar is a 1x1 matrix. Every operation is
// evaluated eagerly and appended to a Tape, so the tape order is a valid
// topological order and backward() is a single reverse sweep.

#include <Eigen/Dense>

#include <cstddef>
#include <span>
#include <string_view>
#include <vector>

namespace ucd::grad {

using Matrix = Eigen::MatrixXd;
using Index = Eigen::Index;

enum class Op {
  Leaf,
  Constant,
  Add,
  Sub,
  Mul,
  Div,
  Neg,
  Exp,
  Log,
  Sigmoid,
  Softplus,
  LogSigmoid,
  Affine,      // W * X + b (b broadcast over columns)
  MulRow,      // X with column j scaled by v(0, j)
  Sum,         // reduce to 1x1
  ColSum,      // reduce each column, r x c -> 1 x c
  GatherCols,  // table.col(idx[k]) for each k
};

std::string_view op_name(Op op);

class Tape;

/// Handle to a node on a Tape. Cheap to copy; valid while the tape lives
/// and has not been cleared.
class Var {
 public:
  Var() = default;

  bool valid() const { return tape_ != nullptr; }
  Tape& tape() const;
  std::size_t id() const { return id_; }

  const Matrix& value() const;
  /// Adjoint after the most recent backward(); zero-sized before.
  const Matrix& grad() const;
  double scalar() const;
  Index rows() const { return value().rows(); }
  Index cols() const { return value().cols(); }

 private:
  friend class Tape;
  Var(Tape* tape, std::size_t id) : tape_(tape), id_(id) {}

  Tape* tape_ = nullptr;
  std::size_t id_ = 0;
};

class Tape {
 public:
  Tape() = default;
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  /// Differentiable input.
  Var leaf(Matrix value);
  Var leaf(double value);
  /// Input that never receives a gradient.
  Var constant(Matrix value);
  Var constant(double value);

  /// Reverse sweep from a 1x1 output. Every node reachable from a leaf gets
  /// its adjoint reset and recomputed.
  void backward(Var output);

  void clear();
  std::size_t size() const { return nodes_.size(); }
  bool backward_done() const { return backward_done_; }

  // Primitive constructors; the free functions below forward here.
  Var binary(Op op, Var a, Var b);
  Var unary(Op op, Var a);
  Var affine(Var w, Var x, Var b);
  Var mul_row(Var x, Var row);
  Var gather_cols(Var table, std::span<const Index> columns);

 private:
  friend class Var;

  struct Node {
    Op op = Op::Constant;
    Matrix value;
    Matrix grad;
    std::size_t parents[3] = {0, 0, 0};
    int num_parents = 0;
    bool needs_grad = false;
    std::vector<Index> columns;  // GatherCols only
  };

  Var push(Node node);
  const Node& node(Var v) const;
  void check_owned(Var v) const;
  void propagate(std::size_t id);
  void accumulate(std::size_t id, const Matrix& contribution);

  std::vector<Node> nodes_;
  bool backward_done_ = false;
};

Var operator+(Var a, Var b);
Var operator-(Var a, Var b);
Var operator*(Var a, Var b);
Var operator/(Var a, Var b);
Var operator-(Var a);
Var operator+(Var a, double b);
Var operator+(double a, Var b);
Var operator-(Var a, double b);
Var operator-(double a, Var b);
Var operator*(Var a, double b);
Var operator*(double a, Var b);
Var operator/(Var a, double b);
Var operator/(double a, Var b);

Var exp(Var x);
Var log(Var x);
Var sigmoid(Var x);
Var softplus(Var x);
Var log_sigmoid(Var x);
Var affine(Var w, Var x, Var b);
Var mul_row(Var x, Var row);
Var sum(Var x);
Var col_sum(Var x);
Var gather_cols(Var table, std::span<const Index> columns);

// Numerically stable scalar kernels shared with non-graph code.
double stable_sigmoid(double x);
double stable_softplus(double x);
double stable_log_sigmoid(double x);

}  // namespace ucd::grad
