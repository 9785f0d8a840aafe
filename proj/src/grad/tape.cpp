#include "ucd/grad/tape.hpp"

#include "ucd/errors.hpp"

#include <cmath>
#include <sstream>
#include <utility>

namespace ucd::grad {

std::string_view op_name(Op op) {
  switch (op) {
    case Op::Leaf: return "leaf";
    case Op::Constant: return "constant";
    case Op::Add: return "add";
    case Op::Sub: return "subtract";
    case Op::Mul: return "multiply";
    case Op::Div: return "divide";
    case Op::Neg: return "negate";
    case Op::Exp: return "exp";
    case Op::Log: return "log";
    case Op::Sigmoid: return "sigmoid";
    case Op::Softplus: return "softplus";
    case Op::LogSigmoid: return "log_sigmoid";
    case Op::Affine: return "affine";
    case Op::MulRow: return "mul_row";
    case Op::Sum: return "sum";
    case Op::ColSum: return "col_sum";
    case Op::GatherCols: return "gather_cols";
  }
  return "unknown";
}

double stable_sigmoid(double x) {
  if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

double stable_softplus(double x) {
  return std::max(x, 0.0) + std::log1p(std::exp(-std::abs(x)));
}

double stable_log_sigmoid(double x) { return -stable_softplus(-x); }

namespace {

bool is_scalar(const Matrix& m) { return m.rows() == 1 && m.cols() == 1; }

// Reduces an upstream adjoint to the shape of an operand that may have been
// broadcast from 1x1.
Matrix reduce_to(const Matrix& g, const Matrix& operand) {
  if (is_scalar(operand) && !is_scalar(g)) return Matrix::Constant(1, 1, g.sum());
  return g;
}

Matrix broadcast(const Matrix& m, Index rows, Index cols) {
  if (m.rows() == rows && m.cols() == cols) return m;
  return Matrix::Constant(rows, cols, m(0, 0));
}

std::string shape(const Matrix& m) {
  std::ostringstream os;
  os << m.rows() << "x" << m.cols();
  return os.str();
}

}  // namespace

Tape& Var::tape() const {
  if (!tape_) throw UsageError("use of an empty Var handle");
  return *tape_;
}

const Matrix& Var::value() const { return tape().node(*this).value; }

const Matrix& Var::grad() const { return tape().node(*this).grad; }

double Var::scalar() const {
  const Matrix& v = value();
  if (!is_scalar(v)) throw UsageError("scalar() on a " + shape(v) + " value");
  return v(0, 0);
}

Var Tape::leaf(Matrix value) {
  Node n;
  n.op = Op::Leaf;
  n.value = std::move(value);
  n.needs_grad = true;
  return push(std::move(n));
}

Var Tape::leaf(double value) { return leaf(Matrix::Constant(1, 1, value)); }

Var Tape::constant(Matrix value) {
  Node n;
  n.op = Op::Constant;
  n.value = std::move(value);
  return push(std::move(n));
}

Var Tape::constant(double value) { return constant(Matrix::Constant(1, 1, value)); }

void Tape::clear() {
  nodes_.clear();
  backward_done_ = false;
}

Var Tape::push(Node n) {
  if (!n.value.allFinite()) {
    throw NumericError("non-finite value produced by op '" + std::string(op_name(n.op)) +
                       "' (node " + std::to_string(nodes_.size()) + ", shape " +
                       shape(n.value) + ")");
  }
  nodes_.push_back(std::move(n));
  return Var(this, nodes_.size() - 1);
}

const Tape::Node& Tape::node(Var v) const {
  check_owned(v);
  return nodes_[v.id_];
}

void Tape::check_owned(Var v) const {
  if (v.tape_ != this) throw UsageError("Var belongs to a different tape");
  if (v.id_ >= nodes_.size()) throw UsageError("Var refers to a cleared tape node");
}

Var Tape::binary(Op op, Var a, Var b) {
  check_owned(a);
  check_owned(b);
  const Matrix& x = nodes_[a.id_].value;
  const Matrix& y = nodes_[b.id_].value;
  Index rows = x.rows(), cols = x.cols();
  if (x.rows() != y.rows() || x.cols() != y.cols()) {
    if (is_scalar(x)) {
      rows = y.rows();
      cols = y.cols();
    } else if (!is_scalar(y)) {
      throw UsageError("shape mismatch in " + std::string(op_name(op)) + ": " + shape(x) +
                       " vs " + shape(y));
    }
  }
  const Matrix xb = broadcast(x, rows, cols);
  const Matrix yb = broadcast(y, rows, cols);
  Node n;
  n.op = op;
  switch (op) {
    case Op::Add: n.value = xb + yb; break;
    case Op::Sub: n.value = xb - yb; break;
    case Op::Mul: n.value = xb.cwiseProduct(yb); break;
    case Op::Div: n.value = xb.cwiseQuotient(yb); break;
    default: throw UsageError("not a binary op: " + std::string(op_name(op)));
  }
  n.parents[0] = a.id_;
  n.parents[1] = b.id_;
  n.num_parents = 2;
  n.needs_grad = nodes_[a.id_].needs_grad || nodes_[b.id_].needs_grad;
  return push(std::move(n));
}

Var Tape::unary(Op op, Var a) {
  check_owned(a);
  const Matrix& x = nodes_[a.id_].value;
  Node n;
  n.op = op;
  switch (op) {
    case Op::Neg: n.value = -x; break;
    case Op::Exp: n.value = x.array().exp().matrix(); break;
    case Op::Log:
      if ((x.array() <= 0.0).any()) {
        throw NumericError("log of a non-positive value (node " + std::to_string(a.id_) + ")");
      }
      n.value = x.array().log().matrix();
      break;
    case Op::Sigmoid: n.value = x.unaryExpr(&stable_sigmoid); break;
    case Op::Softplus: n.value = x.unaryExpr(&stable_softplus); break;
    case Op::LogSigmoid: n.value = x.unaryExpr(&stable_log_sigmoid); break;
    case Op::Sum: n.value = Matrix::Constant(1, 1, x.sum()); break;
    case Op::ColSum: n.value = x.colwise().sum(); break;
    default: throw UsageError("not a unary op: " + std::string(op_name(op)));
  }
  n.parents[0] = a.id_;
  n.num_parents = 1;
  n.needs_grad = nodes_[a.id_].needs_grad;
  return push(std::move(n));
}

Var Tape::affine(Var w, Var x, Var b) {
  check_owned(w);
  check_owned(x);
  check_owned(b);
  const Matrix& wv = nodes_[w.id_].value;
  const Matrix& xv = nodes_[x.id_].value;
  const Matrix& bv = nodes_[b.id_].value;
  if (wv.cols() != xv.rows() || bv.rows() != wv.rows() || bv.cols() != 1) {
    throw UsageError("shape mismatch in affine: W " + shape(wv) + ", X " + shape(xv) +
                     ", b " + shape(bv));
  }
  Node n;
  n.op = Op::Affine;
  n.value.noalias() = wv * xv;
  n.value.colwise() += bv.col(0);
  n.parents[0] = w.id_;
  n.parents[1] = x.id_;
  n.parents[2] = b.id_;
  n.num_parents = 3;
  n.needs_grad = nodes_[w.id_].needs_grad || nodes_[x.id_].needs_grad || nodes_[b.id_].needs_grad;
  return push(std::move(n));
}

Var Tape::mul_row(Var x, Var row) {
  check_owned(x);
  check_owned(row);
  const Matrix& xv = nodes_[x.id_].value;
  const Matrix& rv = nodes_[row.id_].value;
  if (rv.rows() != 1 || rv.cols() != xv.cols()) {
    throw UsageError("shape mismatch in mul_row: " + shape(xv) + " vs " + shape(rv));
  }
  Node n;
  n.op = Op::MulRow;
  n.value = (xv.array().rowwise() * rv.row(0).array()).matrix();
  n.parents[0] = x.id_;
  n.parents[1] = row.id_;
  n.num_parents = 2;
  n.needs_grad = nodes_[x.id_].needs_grad || nodes_[row.id_].needs_grad;
  return push(std::move(n));
}

Var Tape::gather_cols(Var table, std::span<const Index> columns) {
  check_owned(table);
  const Matrix& tv = nodes_[table.id_].value;
  Node n;
  n.op = Op::GatherCols;
  n.value.resize(tv.rows(), static_cast<Index>(columns.size()));
  for (std::size_t k = 0; k < columns.size(); ++k) {
    const Index c = columns[k];
    if (c < 0 || c >= tv.cols()) {
      throw UsageError("gather_cols index " + std::to_string(c) + " out of range for " +
                       shape(tv));
    }
    n.value.col(static_cast<Index>(k)) = tv.col(c);
  }
  n.columns.assign(columns.begin(), columns.end());
  n.parents[0] = table.id_;
  n.num_parents = 1;
  n.needs_grad = nodes_[table.id_].needs_grad;
  return push(std::move(n));
}

void Tape::accumulate(std::size_t id, const Matrix& contribution) {
  Node& n = nodes_[id];
  if (!n.needs_grad) return;
  n.grad += contribution;
}

void Tape::backward(Var output) {
  if (!output.valid()) throw UsageError("backward() on an empty Var: run the forward pass first");
  check_owned(output);
  const Node& out = nodes_[output.id_];
  if (!is_scalar(out.value)) {
    throw UsageError("backward() requires a 1x1 output, got " + shape(out.value));
  }
  for (std::size_t i = 0; i <= output.id_; ++i) {
    Node& n = nodes_[i];
    if (n.needs_grad) {
      n.grad.setZero(n.value.rows(), n.value.cols());
    } else {
      n.grad.resize(0, 0);
    }
  }
  if (nodes_[output.id_].needs_grad) nodes_[output.id_].grad(0, 0) = 1.0;
  for (std::size_t i = output.id_ + 1; i-- > 0;) {
    if (nodes_[i].needs_grad && nodes_[i].num_parents > 0) propagate(i);
  }
  backward_done_ = true;
}

void Tape::propagate(std::size_t id) {
  // Copies keep references valid while parents' adjoints are updated.
  const Node& n = nodes_[id];
  const Matrix& g = n.grad;
  const std::size_t pa = n.parents[0];
  const std::size_t pb = n.parents[1];
  switch (n.op) {
    case Op::Add: {
      accumulate(pa, reduce_to(g, nodes_[pa].value));
      accumulate(pb, reduce_to(g, nodes_[pb].value));
      break;
    }
    case Op::Sub: {
      accumulate(pa, reduce_to(g, nodes_[pa].value));
      accumulate(pb, reduce_to(-g, nodes_[pb].value));
      break;
    }
    case Op::Mul: {
      const Matrix& a = nodes_[pa].value;
      const Matrix& b = nodes_[pb].value;
      const Matrix ab = broadcast(a, g.rows(), g.cols());
      const Matrix bb = broadcast(b, g.rows(), g.cols());
      if (nodes_[pa].needs_grad) accumulate(pa, reduce_to(g.cwiseProduct(bb), a));
      if (nodes_[pb].needs_grad) accumulate(pb, reduce_to(g.cwiseProduct(ab), b));
      break;
    }
    case Op::Div: {
      const Matrix& a = nodes_[pa].value;
      const Matrix& b = nodes_[pb].value;
      const Matrix bb = broadcast(b, g.rows(), g.cols());
      if (nodes_[pa].needs_grad) accumulate(pa, reduce_to(g.cwiseQuotient(bb), a));
      if (nodes_[pb].needs_grad) {
        const Matrix local = -(g.cwiseProduct(n.value)).cwiseQuotient(bb);
        accumulate(pb, reduce_to(local, b));
      }
      break;
    }
    case Op::Neg: accumulate(pa, -g); break;
    case Op::Exp: accumulate(pa, g.cwiseProduct(n.value)); break;
    case Op::Log: accumulate(pa, g.cwiseQuotient(nodes_[pa].value)); break;
    case Op::Sigmoid: {
      const Matrix local = (n.value.array() * (1.0 - n.value.array())).matrix();
      accumulate(pa, g.cwiseProduct(local));
      break;
    }
    case Op::Softplus: {
      accumulate(pa, g.cwiseProduct(nodes_[pa].value.unaryExpr(&stable_sigmoid)));
      break;
    }
    case Op::LogSigmoid: {
      const Matrix local = (-nodes_[pa].value).unaryExpr(&stable_sigmoid);
      accumulate(pa, g.cwiseProduct(local));
      break;
    }
    case Op::Affine: {
      const std::size_t pc = n.parents[2];
      const Matrix& w = nodes_[pa].value;
      const Matrix& x = nodes_[pb].value;
      if (nodes_[pa].needs_grad) nodes_[pa].grad.noalias() += g * x.transpose();
      if (nodes_[pb].needs_grad) nodes_[pb].grad.noalias() += w.transpose() * g;
      if (nodes_[pc].needs_grad) nodes_[pc].grad += g.rowwise().sum();
      break;
    }
    case Op::MulRow: {
      const Matrix& x = nodes_[pa].value;
      const Matrix& r = nodes_[pb].value;
      if (nodes_[pa].needs_grad) {
        accumulate(pa, (g.array().rowwise() * r.row(0).array()).matrix());
      }
      if (nodes_[pb].needs_grad) accumulate(pb, g.cwiseProduct(x).colwise().sum());
      break;
    }
    case Op::Sum: {
      const Matrix& a = nodes_[pa].value;
      accumulate(pa, Matrix::Constant(a.rows(), a.cols(), g(0, 0)));
      break;
    }
    case Op::ColSum: {
      const Matrix& a = nodes_[pa].value;
      Matrix local(a.rows(), a.cols());
      local.rowwise() = g.row(0);
      accumulate(pa, local);
      break;
    }
    case Op::GatherCols: {
      Node& parent = nodes_[pa];
      if (!parent.needs_grad) break;
      for (std::size_t k = 0; k < n.columns.size(); ++k) {
        parent.grad.col(n.columns[k]) += g.col(static_cast<Index>(k));
      }
      break;
    }
    case Op::Leaf:
    case Op::Constant: break;
  }
}

Var operator+(Var a, Var b) { return a.tape().binary(Op::Add, a, b); }
Var operator-(Var a, Var b) { return a.tape().binary(Op::Sub, a, b); }
Var operator*(Var a, Var b) { return a.tape().binary(Op::Mul, a, b); }
Var operator/(Var a, Var b) { return a.tape().binary(Op::Div, a, b); }
Var operator-(Var a) { return a.tape().unary(Op::Neg, a); }
Var operator+(Var a, double b) { return a + a.tape().constant(b); }
Var operator+(double a, Var b) { return b.tape().constant(a) + b; }
Var operator-(Var a, double b) { return a - a.tape().constant(b); }
Var operator-(double a, Var b) { return b.tape().constant(a) - b; }
Var operator*(Var a, double b) { return a * a.tape().constant(b); }
Var operator*(double a, Var b) { return b.tape().constant(a) * b; }
Var operator/(Var a, double b) { return a / a.tape().constant(b); }
Var operator/(double a, Var b) { return b.tape().constant(a) / b; }

Var exp(Var x) { return x.tape().unary(Op::Exp, x); }
Var log(Var x) { return x.tape().unary(Op::Log, x); }
Var sigmoid(Var x) { return x.tape().unary(Op::Sigmoid, x); }
Var softplus(Var x) { return x.tape().unary(Op::Softplus, x); }
Var log_sigmoid(Var x) { return x.tape().unary(Op::LogSigmoid, x); }
Var affine(Var w, Var x, Var b) { return w.tape().affine(w, x, b); }
Var mul_row(Var x, Var row) { return x.tape().mul_row(x, row); }
Var sum(Var x) { return x.tape().unary(Op::Sum, x); }
Var col_sum(Var x) { return x.tape().unary(Op::ColSum, x); }
Var gather_cols(Var table, std::span<const Index> columns) {
  return table.tape().gather_cols(table, columns);
}

}  // namespace ucd::grad
