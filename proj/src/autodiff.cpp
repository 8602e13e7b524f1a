#include "hypertropy/autodiff.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

namespace hypertropy::ad {

const Matrix& Var::value() const { return tape_->value(*this); }
const Matrix& Var::grad() const { return tape_->grad(*this); }

double Var::scalar() const {
  const Matrix& v = value();
  if (v.size() != 1) throw ShapeError("scalar() on a non-scalar variable");
  return v(0, 0);
}

Var Tape::parameter(Matrix value) {
  Node& n = nodes_.emplace_back();
  n.value = std::move(value);
  n.requires_grad = true;
  n.op = "parameter";
  Var v(this, nodes_.size() - 1);
  parameters_.push_back(v);
  return v;
}

Var Tape::constant(Matrix value) {
  Node& n = nodes_.emplace_back();
  n.value = std::move(value);
  n.op = "constant";
  return {this, nodes_.size() - 1};
}

Var Tape::record(const char* op, Matrix value, std::initializer_list<Var> inputs,
                 BackwardFn backward) {
  Node n;
  n.value = std::move(value);
  n.op = op;
  for (const Var& in : inputs) {
    if (in.tape_ != this) throw std::invalid_argument("variables from different tapes mixed");
    n.inputs.push_back(in.id_);
    n.requires_grad = n.requires_grad || nodes_[in.id_].requires_grad;
  }
  if (n.requires_grad) n.backward = std::move(backward);
  nodes_.push_back(std::move(n));
  return {this, nodes_.size() - 1};
}

void Tape::accumulate(const Var& v, const Matrix& g) {
  Node& n = nodes_[v.id_];
  if (!n.requires_grad) return;
  if (g.rows() != n.value.rows() || g.cols() != n.value.cols())
    throw ShapeError(std::string("gradient shape mismatch at op ") + n.op);
  if (n.grad.size() == 0)
    n.grad = g;
  else
    n.grad += g;
}

void Tape::backward(const Var& loss) {
  if (loss.tape_ != this) throw std::invalid_argument("loss belongs to another tape");
  if (backward_done_) throw std::logic_error("backward() called twice without zero_grad()");
  if (nodes_[loss.id_].value.size() != 1) throw ShapeError("backward() needs a scalar loss");
  backward_done_ = true;
  if (!nodes_[loss.id_].requires_grad) return;
  nodes_[loss.id_].grad = Matrix::Ones(1, 1);
  for (std::size_t id = loss.id_ + 1; id-- > 0;) {
    Node& n = nodes_[id];
    if (!n.backward || n.grad.size() == 0) continue;
    const Matrix grad_out = n.grad;
    n.backward(*this, grad_out);
    for (std::size_t in : n.inputs) {
      const Matrix& g = nodes_[in].grad;
      if (g.size() != 0 && !g.allFinite()) throw NonFiniteGradient(id, n.op);
    }
  }
}

void Tape::zero_grad() {
  for (Node& n : nodes_) n.grad.resize(0, 0);
  backward_done_ = false;
}

namespace {

enum class Broadcast { Same, Row, Col, Scalar };

Broadcast broadcast_kind(const Matrix& a, const Matrix& b, const char* op) {
  if (b.rows() == a.rows() && b.cols() == a.cols()) return Broadcast::Same;
  if (b.rows() == 1 && b.cols() == 1) return Broadcast::Scalar;
  if (b.rows() == 1 && b.cols() == a.cols()) return Broadcast::Row;
  if (b.cols() == 1 && b.rows() == a.rows()) return Broadcast::Col;
  throw ShapeError(std::string(op) + ": cannot broadcast " + std::to_string(b.rows()) + "x" +
                   std::to_string(b.cols()) + " against " + std::to_string(a.rows()) + "x" +
                   std::to_string(a.cols()));
}

Matrix expand(const Matrix& b, Broadcast kind, Eigen::Index rows, Eigen::Index cols) {
  switch (kind) {
    case Broadcast::Same:
      return b;
    case Broadcast::Scalar:
      return Matrix::Constant(rows, cols, b(0, 0));
    case Broadcast::Row:
      return b.replicate(rows, 1);
    case Broadcast::Col:
      return b.replicate(1, cols);
  }
  return b;
}

Matrix reduce_to(const Matrix& g, Broadcast kind) {
  switch (kind) {
    case Broadcast::Same:
      return g;
    case Broadcast::Scalar:
      return Matrix::Constant(1, 1, g.sum());
    case Broadcast::Row:
      return g.colwise().sum();
    case Broadcast::Col:
      return g.rowwise().sum();
  }
  return g;
}

template <typename Fn>
Var unary(const char* op, const Var& a, Matrix value, Fn local_grad) {
  return a.tape()->record(op, std::move(value), {a},
                          [a, local_grad](Tape& t, const Matrix& g) {
                            t.accumulate(a, local_grad(g));
                          });
}

}  // namespace

Var add(const Var& a, const Var& b) {
  const Broadcast k = broadcast_kind(a.value(), b.value(), "add");
  Matrix v = a.value() + expand(b.value(), k, a.rows(), a.cols());
  return a.tape()->record("add", std::move(v), {a, b}, [a, b, k](Tape& t, const Matrix& g) {
    t.accumulate(a, g);
    if (t.requires_grad(b)) t.accumulate(b, reduce_to(g, k));
  });
}

Var sub(const Var& a, const Var& b) {
  const Broadcast k = broadcast_kind(a.value(), b.value(), "sub");
  Matrix v = a.value() - expand(b.value(), k, a.rows(), a.cols());
  return a.tape()->record("sub", std::move(v), {a, b}, [a, b, k](Tape& t, const Matrix& g) {
    t.accumulate(a, g);
    if (t.requires_grad(b)) t.accumulate(b, -reduce_to(g, k));
  });
}

Var mul(const Var& a, const Var& b) {
  const Broadcast k = broadcast_kind(a.value(), b.value(), "mul");
  Matrix bx = expand(b.value(), k, a.rows(), a.cols());
  Matrix v = a.value().cwiseProduct(bx);
  return a.tape()->record("mul", std::move(v), {a, b},
                          [a, b, k, bx = std::move(bx)](Tape& t, const Matrix& g) {
                            if (t.requires_grad(a)) t.accumulate(a, g.cwiseProduct(bx));
                            if (t.requires_grad(b))
                              t.accumulate(b, reduce_to(g.cwiseProduct(a.value()), k));
                          });
}

Var div(const Var& a, const Var& b) {
  const Broadcast k = broadcast_kind(a.value(), b.value(), "div");
  Matrix bx = expand(b.value(), k, a.rows(), a.cols());
  Matrix v = a.value().cwiseQuotient(bx);
  return a.tape()->record("div", v, {a, b},
                          [a, b, k, bx = std::move(bx), v](Tape& t, const Matrix& g) {
                            const Matrix ga = g.cwiseQuotient(bx);
                            if (t.requires_grad(a)) t.accumulate(a, ga);
                            if (t.requires_grad(b))
                              t.accumulate(b, reduce_to(-ga.cwiseProduct(v), k));
                          });
}

Var neg(const Var& a) {
  return unary("neg", a, -a.value(), [](const Matrix& g) -> Matrix { return -g; });
}

Var scale(const Var& a, double s) {
  return unary("scale", a, a.value() * s, [s](const Matrix& g) -> Matrix { return g * s; });
}

Var add_scalar(const Var& a, double s) {
  return unary("add_scalar", a, (a.value().array() + s).matrix(),
               [](const Matrix& g) -> Matrix { return g; });
}

Var matmul(const Var& a, const Var& b) {
  if (a.cols() != b.rows())
    throw ShapeError("matmul: " + std::to_string(a.rows()) + "x" + std::to_string(a.cols()) +
                     " times " + std::to_string(b.rows()) + "x" + std::to_string(b.cols()));
  Matrix v = a.value() * b.value();
  return a.tape()->record("matmul", std::move(v), {a, b}, [a, b](Tape& t, const Matrix& g) {
    if (t.requires_grad(a)) t.accumulate(a, g * b.value().transpose());
    if (t.requires_grad(b)) t.accumulate(b, a.value().transpose() * g);
  });
}

Var sparse_matmul(const SparseMatrix& a, const Var& b) {
  if (a.cols() != b.rows()) throw ShapeError("sparse_matmul: inner dimensions differ");
  Matrix v = a * b.value();
  return b.tape()->record("sparse_matmul", std::move(v), {b},
                          [&a, b](Tape& t, const Matrix& g) {
                            t.accumulate(b, a.transpose() * g);
                          });
}

Var transpose(const Var& a) {
  return unary("transpose", a, a.value().transpose(),
               [](const Matrix& g) -> Matrix { return g.transpose(); });
}

Var exp(const Var& a) {
  Matrix v = a.value().array().exp().matrix();
  return unary("exp", a, v, [v](const Matrix& g) -> Matrix { return g.cwiseProduct(v); });
}

Var log(const Var& a) {
  return unary("log", a, a.value().array().log().matrix(),
               [x = a.value()](const Matrix& g) -> Matrix { return g.cwiseQuotient(x); });
}

Var log2(const Var& a) {
  static constexpr double inv_ln2 = 1.0 / std::numbers::ln2;
  return unary("log2", a, (a.value().array().log() * inv_ln2).matrix(),
               [x = a.value()](const Matrix& g) -> Matrix {
                 return (g.array() / x.array() * inv_ln2).matrix();
               });
}

Var sqrt(const Var& a) {
  Matrix v = a.value().array().sqrt().matrix();
  return unary("sqrt", a, v, [v](const Matrix& g) -> Matrix {
    return (g.array() / (2.0 * v.array())).matrix();
  });
}

Var square(const Var& a) {
  return unary("square", a, a.value().array().square().matrix(),
               [x = a.value()](const Matrix& g) -> Matrix {
                 return (2.0 * g.array() * x.array()).matrix();
               });
}

Var tanh(const Var& a) {
  Matrix v = a.value().array().tanh().matrix();
  return unary("tanh", a, v, [v](const Matrix& g) -> Matrix {
    return (g.array() * (1.0 - v.array().square())).matrix();
  });
}

Var leaky_relu(const Var& a, double slope) {
  const Matrix& x = a.value();
  Matrix v = x.unaryExpr([slope](double e) { return e > 0.0 ? e : slope * e; });
  return unary("leaky_relu", a, std::move(v), [x, slope](const Matrix& g) -> Matrix {
    return g.binaryExpr(x, [slope](double ge, double xe) { return xe > 0.0 ? ge : slope * ge; });
  });
}

Var acosh(const Var& a) {
  constexpr double lo = 1.0 + 1e-15;
  Matrix x = a.value().cwiseMax(lo);
  Matrix v = x.unaryExpr([](double e) { return std::acosh(e); });
  return unary("acosh", a, std::move(v), [x](const Matrix& g) -> Matrix {
    return g.binaryExpr(x, [](double ge, double xe) { return ge / std::sqrt(xe * xe - 1.0); });
  });
}

Var log_sigmoid(const Var& a) {
  const Matrix& x = a.value();
  // log sigmoid(x) = min(x, 0) - log1p(exp(-|x|))
  Matrix v = x.unaryExpr(
      [](double e) { return std::min(e, 0.0) - std::log1p(std::exp(-std::abs(e))); });
  return unary("log_sigmoid", a, std::move(v), [x](const Matrix& g) -> Matrix {
    // d/dx log sigmoid(x) = sigmoid(-x)
    return g.binaryExpr(x, [](double ge, double xe) {
      const double s = xe >= 0.0 ? std::exp(-xe) / (1.0 + std::exp(-xe)) : 1.0 / (1.0 + std::exp(xe));
      return ge * s;
    });
  });
}

Var clamp(const Var& a, double lo, double hi) {
  const Matrix& x = a.value();
  Matrix v = x.cwiseMax(lo).cwiseMin(hi);
  return unary("clamp", a, std::move(v), [x, lo, hi](const Matrix& g) -> Matrix {
    return g.binaryExpr(x, [lo, hi](double ge, double xe) {
      return (xe > lo && xe < hi) ? ge : 0.0;
    });
  });
}

Var sum(const Var& a) {
  const Eigen::Index r = a.rows(), c = a.cols();
  return unary("sum", a, Matrix::Constant(1, 1, a.value().sum()),
               [r, c](const Matrix& g) -> Matrix { return Matrix::Constant(r, c, g(0, 0)); });
}

Var row_sum(const Var& a) {
  const Eigen::Index c = a.cols();
  return unary("row_sum", a, a.value().rowwise().sum(),
               [c](const Matrix& g) -> Matrix { return g.replicate(1, c); });
}

Var col_sum(const Var& a) {
  const Eigen::Index r = a.rows();
  return unary("col_sum", a, a.value().colwise().sum(),
               [r](const Matrix& g) -> Matrix { return g.replicate(r, 1); });
}

Var row_softmax(const Var& a) {
  const Matrix& x = a.value();
  Matrix v = (x.colwise() - x.rowwise().maxCoeff()).array().exp().matrix();
  v.array().colwise() /= v.rowwise().sum().array();
  return unary("row_softmax", a, v, [v](const Matrix& g) -> Matrix {
    const Eigen::VectorXd dots = g.cwiseProduct(v).rowwise().sum();
    return v.cwiseProduct(g.colwise() - dots);
  });
}

Var minkowski(const Var& a, const Var& b) {
  if (a.cols() != b.cols() || a.cols() < 2) throw ShapeError("minkowski: column count mismatch");
  auto flip_time = [](Matrix m) {
    m.col(0) *= -1.0;
    return m;
  };
  Matrix v = a.value() * flip_time(b.value()).transpose();
  return a.tape()->record("minkowski", std::move(v), {a, b},
                          [a, b, flip_time](Tape& t, const Matrix& g) {
                            if (t.requires_grad(a)) t.accumulate(a, g * flip_time(b.value()));
                            if (t.requires_grad(b))
                              t.accumulate(b, g.transpose() * flip_time(a.value()));
                          });
}

Var slice_cols(const Var& a, Eigen::Index start, Eigen::Index count) {
  if (start < 0 || count < 0 || start + count > a.cols()) throw ShapeError("slice_cols: out of range");
  const Eigen::Index r = a.rows(), c = a.cols();
  return unary("slice_cols", a, a.value().middleCols(start, count),
               [r, c, start, count](const Matrix& g) -> Matrix {
                 Matrix out = Matrix::Zero(r, c);
                 out.middleCols(start, count) = g;
                 return out;
               });
}

Var concat_cols(const Var& a, const Var& b) {
  if (a.rows() != b.rows()) throw ShapeError("concat_cols: row count mismatch");
  Matrix v(a.rows(), a.cols() + b.cols());
  v << a.value(), b.value();
  const Eigen::Index ca = a.cols(), cb = b.cols();
  return a.tape()->record("concat_cols", std::move(v), {a, b},
                          [a, b, ca, cb](Tape& t, const Matrix& g) {
                            if (t.requires_grad(a)) t.accumulate(a, g.leftCols(ca));
                            if (t.requires_grad(b)) t.accumulate(b, g.rightCols(cb));
                          });
}

std::vector<std::string> op_set() {
  return {"add",     "sub",       "mul",         "div",        "neg",        "scale",
          "add_scalar", "matmul", "sparse_matmul", "transpose", "exp",       "log",
          "log2",    "sqrt",      "square",      "tanh",       "leaky_relu", "acosh",
          "log_sigmoid", "clamp", "sum",         "row_sum",    "col_sum",    "row_softmax",
          "minkowski", "slice_cols", "concat_cols"};
}

std::vector<Matrix> gradients(const ExpressionBuilder& f, std::span<const Matrix> params,
                              double* value) {
  Tape tape;
  std::vector<Var> leaves;
  leaves.reserve(params.size());
  for (const Matrix& p : params) leaves.push_back(tape.parameter(p));
  Var loss = f(tape, leaves);
  tape.backward(loss);
  if (value) *value = loss.scalar();
  std::vector<Matrix> out;
  out.reserve(params.size());
  for (std::size_t i = 0; i < params.size(); ++i) {
    const Matrix& g = leaves[i].grad();
    out.push_back(g.size() == 0 ? Matrix::Zero(params[i].rows(), params[i].cols()) : g);
  }
  return out;
}

GradCheckReport grad_check(const ExpressionBuilder& f, std::span<const Matrix> params, double step,
                           double tol) {
  const std::vector<Matrix> analytic = gradients(f, params);
  std::vector<Matrix> work(params.begin(), params.end());
  auto evaluate = [&]() {
    Tape tape;
    std::vector<Var> leaves;
    leaves.reserve(work.size());
    for (const Matrix& p : work) leaves.push_back(tape.constant(p));
    return f(tape, leaves).scalar();
  };

  GradCheckReport report;
  for (std::size_t p = 0; p < work.size(); ++p) {
    Matrix numeric(work[p].rows(), work[p].cols());
    for (Eigen::Index i = 0; i < work[p].size(); ++i) {
      const double orig = work[p].data()[i];
      work[p].data()[i] = orig + step;
      const double up = evaluate();
      work[p].data()[i] = orig - step;
      const double down = evaluate();
      work[p].data()[i] = orig;
      numeric.data()[i] = (up - down) / (2.0 * step);
    }
    double err = 0.0;
    if (work[p].size() > 0) {
      const double scale =
          std::max({analytic[p].cwiseAbs().maxCoeff(), numeric.cwiseAbs().maxCoeff(), 1e-12});
      err = (analytic[p] - numeric).cwiseAbs().maxCoeff() / scale;
    }
    report.max_rel_error.push_back(err);
    report.worst = std::max(report.worst, err);
  }
  report.passed = report.worst < tol;
  return report;
}

}  // namespace hypertropy::ad
