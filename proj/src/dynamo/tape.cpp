#include "feslab/dynamo/tape.hpp"

#include <cmath>
#include <stdexcept>

namespace feslab::dynamo {

namespace {

double softplus_stable(double x) {
  // max(x,0) + log1p(exp(-|x|)) avoids overflow on either tail.
  return std::max(x, 0.0) + std::log1p(std::exp(-std::abs(x)));
}

double sigmoid_scalar(double x) { return 1.0 / (1.0 + std::exp(-x)); }

}  // namespace

Var Tape::push(Matrix value, bool requires_grad,
               std::function<void(Tape&, const Matrix&, const Matrix&)> back) {
  Node n;
  n.value = std::move(value);
  n.back = std::move(back);
  n.requires_grad = requires_grad;
  nodes_.push_back(std::move(n));
  return Var{static_cast<int>(nodes_.size()) - 1};
}

const Tape::Node& Tape::node(Var v) const {
  if (v.id < 0 || v.id >= static_cast<int>(nodes_.size()))
    throw std::invalid_argument("tape: invalid node handle");
  return nodes_[static_cast<std::size_t>(v.id)];
}

Tape::Node& Tape::node(Var v) {
  if (v.id < 0 || v.id >= static_cast<int>(nodes_.size()))
    throw std::invalid_argument("tape: invalid node handle");
  return nodes_[static_cast<std::size_t>(v.id)];
}

void Tape::accumulate(int id, const Matrix& g) {
  Node& n = nodes_[static_cast<std::size_t>(id)];
  if (!n.requires_grad) return;
  if (n.grad.size() == 0)
    n.grad = g;
  else
    n.grad += g;
}

void Tape::check_same_shape(const Matrix& a, const Matrix& b, const char* op) {
  if (a.rows() != b.rows() || a.cols() != b.cols())
    throw std::invalid_argument(std::string("tape: shape mismatch in ") + op);
}

Var Tape::leaf(Parameter& p) {
  auto it = param_leaves_.find(&p);
  if (it != param_leaves_.end()) return Var{it->second};
  Parameter* pp = &p;
  Var v = push(p.value, true, [pp](Tape&, const Matrix& g, const Matrix&) { pp->grad += g; });
  param_leaves_.emplace(pp, v.id);
  return v;
}

Var Tape::constant(Matrix value) { return push(std::move(value), false, nullptr); }

Var Tape::matmul(Var a, Var b) {
  const Matrix& A = val(a.id);
  const Matrix& B = val(b.id);
  if (A.cols() != B.rows()) throw std::invalid_argument("tape: shape mismatch in matmul");
  bool rg = needs_grad(a) || needs_grad(b);
  return push(A * B, rg, [ai = a.id, bi = b.id](Tape& t, const Matrix& g, const Matrix&) {
    t.accumulate(ai, g * t.val(bi).transpose());
    t.accumulate(bi, t.val(ai).transpose() * g);
  });
}

Var Tape::add(Var a, Var b) {
  check_same_shape(val(a.id), val(b.id), "add");
  bool rg = needs_grad(a) || needs_grad(b);
  return push(val(a.id) + val(b.id), rg, [ai = a.id, bi = b.id](Tape& t, const Matrix& g, const Matrix&) {
    t.accumulate(ai, g);
    t.accumulate(bi, g);
  });
}

Var Tape::sub(Var a, Var b) {
  check_same_shape(val(a.id), val(b.id), "sub");
  bool rg = needs_grad(a) || needs_grad(b);
  return push(val(a.id) - val(b.id), rg, [ai = a.id, bi = b.id](Tape& t, const Matrix& g, const Matrix&) {
    t.accumulate(ai, g);
    t.accumulate(bi, -g);
  });
}

Var Tape::mul(Var a, Var b) {
  check_same_shape(val(a.id), val(b.id), "mul");
  bool rg = needs_grad(a) || needs_grad(b);
  return push(val(a.id).cwiseProduct(val(b.id)), rg,
              [ai = a.id, bi = b.id](Tape& t, const Matrix& g, const Matrix&) {
                t.accumulate(ai, g.cwiseProduct(t.val(bi)));
                t.accumulate(bi, g.cwiseProduct(t.val(ai)));
              });
}

Var Tape::cmin(Var a, Var b) {
  check_same_shape(val(a.id), val(b.id), "cmin");
  bool rg = needs_grad(a) || needs_grad(b);
  return push(val(a.id).cwiseMin(val(b.id)), rg,
              [ai = a.id, bi = b.id](Tape& t, const Matrix& g, const Matrix&) {
                Matrix take_a = (t.val(ai).array() <= t.val(bi).array()).cast<double>();
                t.accumulate(ai, g.cwiseProduct(take_a));
                t.accumulate(bi, g.cwiseProduct(Matrix(1.0 - take_a.array())));
              });
}

Var Tape::add_col(Var m, Var col) {
  const Matrix& M = val(m.id);
  const Matrix& c = val(col.id);
  if (c.cols() != 1 || c.rows() != M.rows())
    throw std::invalid_argument("tape: shape mismatch in add_col");
  bool rg = needs_grad(m) || needs_grad(col);
  return push(M.colwise() + c.col(0), rg,
              [mi = m.id, ci = col.id](Tape& t, const Matrix& g, const Matrix&) {
                t.accumulate(mi, g);
                t.accumulate(ci, g.rowwise().sum());
              });
}

Var Tape::affine(Var a, double scale, double shift) {
  bool rg = needs_grad(a);
  Matrix y = (val(a.id).array() * scale + shift).matrix();
  return push(std::move(y), rg, [ai = a.id, scale](Tape& t, const Matrix& g, const Matrix&) {
    t.accumulate(ai, scale * g);
  });
}

Var Tape::tanh(Var a) {
  Matrix y = val(a.id).array().tanh().matrix();
  return push(std::move(y), needs_grad(a), [ai = a.id](Tape& t, const Matrix& g, const Matrix& y) {
    t.accumulate(ai, (g.array() * (1.0 - y.array().square())).matrix());
  });
}

Var Tape::sigmoid(Var a) {
  Matrix y = val(a.id).unaryExpr([](double x) { return sigmoid_scalar(x); });
  return push(std::move(y), needs_grad(a), [ai = a.id](Tape& t, const Matrix& g, const Matrix& y) {
    t.accumulate(ai, (g.array() * y.array() * (1.0 - y.array())).matrix());
  });
}

Var Tape::relu(Var a) {
  Matrix y = val(a.id).cwiseMax(0.0);
  return push(std::move(y), needs_grad(a), [ai = a.id](Tape& t, const Matrix& g, const Matrix&) {
    Matrix mask = (t.val(ai).array() > 0.0).cast<double>();
    t.accumulate(ai, g.cwiseProduct(mask));
  });
}

Var Tape::exp(Var a) {
  Matrix y = val(a.id).array().exp().matrix();
  return push(std::move(y), needs_grad(a), [ai = a.id](Tape& t, const Matrix& g, const Matrix& y) {
    t.accumulate(ai, g.cwiseProduct(y));
  });
}

Var Tape::log(Var a) {
  Matrix y = val(a.id).array().log().matrix();
  return push(std::move(y), needs_grad(a), [ai = a.id](Tape& t, const Matrix& g, const Matrix&) {
    t.accumulate(ai, g.cwiseQuotient(t.val(ai)));
  });
}

Var Tape::softplus(Var a) {
  Matrix y = val(a.id).unaryExpr([](double x) { return softplus_stable(x); });
  return push(std::move(y), needs_grad(a), [ai = a.id](Tape& t, const Matrix& g, const Matrix&) {
    Matrix s = t.val(ai).unaryExpr([](double x) { return sigmoid_scalar(x); });
    t.accumulate(ai, g.cwiseProduct(s));
  });
}

Var Tape::clamp(Var a, double lo, double hi) {
  Matrix y = val(a.id).cwiseMax(lo).cwiseMin(hi);
  return push(std::move(y), needs_grad(a), [ai = a.id, lo, hi](Tape& t, const Matrix& g, const Matrix&) {
    Matrix mask = ((t.val(ai).array() > lo) && (t.val(ai).array() < hi)).cast<double>();
    t.accumulate(ai, g.cwiseProduct(mask));
  });
}

Var Tape::square(Var a) {
  Matrix y = val(a.id).array().square().matrix();
  return push(std::move(y), needs_grad(a), [ai = a.id](Tape& t, const Matrix& g, const Matrix&) {
    t.accumulate(ai, (2.0 * g.array() * t.val(ai).array()).matrix());
  });
}

Var Tape::vcat(Var a, Var b) {
  const Matrix& A = val(a.id);
  const Matrix& B = val(b.id);
  if (A.cols() != B.cols()) throw std::invalid_argument("tape: shape mismatch in vcat");
  Matrix y(A.rows() + B.rows(), A.cols());
  y.topRows(A.rows()) = A;
  y.bottomRows(B.rows()) = B;
  bool rg = needs_grad(a) || needs_grad(b);
  const int ra = static_cast<int>(A.rows());
  const int rb = static_cast<int>(B.rows());
  return push(std::move(y), rg, [ai = a.id, bi = b.id, ra, rb](Tape& t, const Matrix& g, const Matrix&) {
    t.accumulate(ai, g.topRows(ra));
    t.accumulate(bi, g.bottomRows(rb));
  });
}

Var Tape::colsum(Var a) {
  Matrix y = val(a.id).colwise().sum();
  const int r = static_cast<int>(val(a.id).rows());
  return push(std::move(y), needs_grad(a), [ai = a.id, r](Tape& t, const Matrix& g, const Matrix&) {
    t.accumulate(ai, Matrix::Ones(r, 1) * g);
  });
}

Var Tape::sum(Var a) {
  Matrix y(1, 1);
  y(0, 0) = val(a.id).sum();
  return push(std::move(y), needs_grad(a), [ai = a.id](Tape& t, const Matrix& g, const Matrix&) {
    const Matrix& x = t.val(ai);
    t.accumulate(ai, Matrix::Constant(x.rows(), x.cols(), g(0, 0)));
  });
}

Var Tape::mean(Var a) {
  const double n = static_cast<double>(val(a.id).size());
  Matrix y(1, 1);
  y(0, 0) = val(a.id).sum() / n;
  return push(std::move(y), needs_grad(a), [ai = a.id, n](Tape& t, const Matrix& g, const Matrix&) {
    const Matrix& x = t.val(ai);
    t.accumulate(ai, Matrix::Constant(x.rows(), x.cols(), g(0, 0) / n));
  });
}

void Tape::backward(Var loss) {
  if (backward_done_) throw std::logic_error("tape: backward already ran");
  const Node& l = node(loss);
  if (l.value.rows() != 1 || l.value.cols() != 1)
    throw std::invalid_argument("tape: backward requires a scalar (1x1) loss");
  backward_done_ = true;
  nodes_[static_cast<std::size_t>(loss.id)].grad = Matrix::Ones(1, 1);
  for (int i = loss.id; i >= 0; --i) {
    Node& n = nodes_[static_cast<std::size_t>(i)];
    if (n.back && n.requires_grad && n.grad.size() != 0) n.back(*this, n.grad, n.value);
  }
}

}  // namespace feslab::dynamo
