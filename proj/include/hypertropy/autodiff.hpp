#pragma once

// Reverse-mode automatic differentiation over dense matrices.
//
// A Tape records every operation in creation order, which is also a valid
// topological order, so backward() is a single reverse sweep. Values live in a
// deque so references handed out by Var::value() stay valid while recording.

#include <cstddef>
#include <deque>
#include <functional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <Eigen/SparseCore>

namespace hypertropy::ad {

using Matrix = Eigen::MatrixXd;
using SparseMatrix = Eigen::SparseMatrix<double, Eigen::RowMajor>;

class Tape;

/// Handle to a node on a tape.
class Var {
 public:
  Var() = default;

  const Matrix& value() const;
  /// Accumulated gradient; an empty (0x0) matrix means "no gradient reached this node".
  const Matrix& grad() const;
  Eigen::Index rows() const { return value().rows(); }
  Eigen::Index cols() const { return value().cols(); }
  double scalar() const;
  std::size_t id() const { return id_; }
  Tape* tape() const { return tape_; }
  bool valid() const { return tape_ != nullptr; }

 private:
  friend class Tape;
  Var(Tape* tape, std::size_t id) : tape_(tape), id_(id) {}
  Tape* tape_ = nullptr;
  std::size_t id_ = 0;
};

/// Raised when a shape rule is violated at record time.
class ShapeError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Raised by backward() when a gradient becomes NaN or infinite. `op_id` is the
/// tape index of the first operation whose backward rule produced it.
class NonFiniteGradient : public std::runtime_error {
 public:
  NonFiniteGradient(std::size_t op_id, std::string op_name)
      : std::runtime_error("non-finite gradient produced by op #" + std::to_string(op_id) + " (" +
                           op_name + ")"),
        op_id_(op_id),
        op_name_(std::move(op_name)) {}
  std::size_t op_id() const { return op_id_; }
  const std::string& op_name() const { return op_name_; }

 private:
  std::size_t op_id_;
  std::string op_name_;
};

class Tape {
 public:
  using BackwardFn = std::function<void(Tape&, const Matrix& grad_out)>;

  Tape() = default;
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  /// Leaf that receives a gradient.
  Var parameter(Matrix value);
  /// Leaf that never receives a gradient.
  Var constant(Matrix value);
  Var scalar_constant(double v) { return constant(Matrix::Constant(1, 1, v)); }

  /// Records an op. `backward` is only invoked if some input requires a gradient.
  Var record(const char* op, Matrix value, std::initializer_list<Var> inputs, BackwardFn backward);

  /// Propagates d(loss)/d(node) to every node that depends on a parameter.
  /// Throws std::logic_error if called twice without zero_grad().
  void backward(const Var& loss);
  void zero_grad();

  bool requires_grad(const Var& v) const { return nodes_[v.id_].requires_grad; }
  void accumulate(const Var& v, const Matrix& g);

  const Matrix& value(const Var& v) const { return nodes_[v.id_].value; }
  const Matrix& grad(const Var& v) const { return nodes_[v.id_].grad; }
  const char* op_name(std::size_t id) const { return nodes_[id].op; }
  std::size_t size() const { return nodes_.size(); }
  const std::vector<Var>& parameters() const { return parameters_; }

 private:
  struct Node {
    Matrix value;
    Matrix grad;
    bool requires_grad = false;
    const char* op = "";
    std::vector<std::size_t> inputs;
    BackwardFn backward;
  };
  std::deque<Node> nodes_;
  std::vector<Var> parameters_;
  bool backward_done_ = false;
};

// ---------------------------------------------------------------------------
// Primitives. Binary elementwise ops accept a second operand of the same
// shape, a 1 x cols row, a rows x 1 column, or a 1 x 1 scalar; it is broadcast
// against the first operand.
// ---------------------------------------------------------------------------

Var add(const Var& a, const Var& b);
Var sub(const Var& a, const Var& b);
Var mul(const Var& a, const Var& b);
Var div(const Var& a, const Var& b);
Var neg(const Var& a);
Var scale(const Var& a, double s);
Var add_scalar(const Var& a, double s);

Var matmul(const Var& a, const Var& b);
/// Constant sparse matrix times a variable; cost proportional to nnz * cols.
Var sparse_matmul(const SparseMatrix& a, const Var& b);
Var transpose(const Var& a);

Var exp(const Var& a);
Var log(const Var& a);
Var log2(const Var& a);
Var sqrt(const Var& a);
Var square(const Var& a);
Var tanh(const Var& a);
Var leaky_relu(const Var& a, double slope);
/// acosh with its argument clamped to >= 1 + 1e-15 (value and derivative).
Var acosh(const Var& a);
/// log(sigmoid(x)), evaluated stably.
Var log_sigmoid(const Var& a);
/// Clamps into [lo, hi]; gradient is identity strictly inside, zero where clamped.
Var clamp(const Var& a, double lo, double hi);

Var sum(const Var& a);
Var row_sum(const Var& a);
Var col_sum(const Var& a);
Var row_softmax(const Var& a);

/// Minkowski bilinear form between point rows: out(i,j) = <a_i, b_j>_L.
Var minkowski(const Var& a, const Var& b);
Var slice_cols(const Var& a, Eigen::Index start, Eigen::Index count);
Var concat_cols(const Var& a, const Var& b);

inline Var operator+(const Var& a, const Var& b) { return add(a, b); }
inline Var operator-(const Var& a, const Var& b) { return sub(a, b); }
inline Var operator*(const Var& a, const Var& b) { return mul(a, b); }
inline Var operator/(const Var& a, const Var& b) { return div(a, b); }
inline Var operator-(const Var& a) { return neg(a); }

/// Supported primitive names, in declaration order.
std::vector<std::string> op_set();

// ---------------------------------------------------------------------------
// Finite-difference gradient checking.
// ---------------------------------------------------------------------------

using ExpressionBuilder = std::function<Var(Tape&, std::span<const Var>)>;

struct GradCheckReport {
  /// Per parameter: max_i |analytic_i - numeric_i| / max(max|analytic|, max|numeric|, 1e-12).
  std::vector<double> max_rel_error;
  double worst = 0.0;
  bool passed = false;
};

/// Compares backward() against central differences for every parameter entry.
GradCheckReport grad_check(const ExpressionBuilder& f, std::span<const Matrix> params,
                           double step = 1e-5, double tol = 1e-6);

/// Evaluates f once and returns the analytic gradients of all parameters.
std::vector<Matrix> gradients(const ExpressionBuilder& f, std::span<const Matrix> params,
                              double* value = nullptr);

}  // namespace hypertropy::ad
