#include "feslab/dynamo/layers.hpp"

#include <cmath>
#include <stdexcept>

namespace feslab::dynamo {

void init_uniform(Parameter& p, int fan_in, Rng& rng) {
  const double bound = 1.0 / std::sqrt(static_cast<double>(fan_in));
  for (Eigen::Index r = 0; r < p.value.rows(); ++r)
    for (Eigen::Index c = 0; c < p.value.cols(); ++c) p.value(r, c) = rng.uniform(-bound, bound);
}

void DenseParams::init_uniform(Rng& rng) {
  dynamo::init_uniform(weights, in_size(), rng);
  dynamo::init_uniform(bias, in_size(), rng);
}

void GruParams::init_uniform(Rng& rng) {
  dynamo::init_uniform(w_z, input_size, rng);
  dynamo::init_uniform(w_r, input_size, rng);
  dynamo::init_uniform(w_h, input_size, rng);
  dynamo::init_uniform(u_z, hidden_size, rng);
  dynamo::init_uniform(u_r, hidden_size, rng);
  dynamo::init_uniform(u_h, hidden_size, rng);
  dynamo::init_uniform(b_z, hidden_size, rng);
  dynamo::init_uniform(b_r, hidden_size, rng);
  dynamo::init_uniform(b_h, hidden_size, rng);
}

namespace {

Matrix apply_activation(Activation act, Matrix z) {
  switch (act) {
    case Activation::identity:
      return z;
    case Activation::tanh:
      return z.array().tanh().matrix();
    case Activation::relu:
      return z.cwiseMax(0.0);
    case Activation::sigmoid:
      return z.unaryExpr([](double x) { return 1.0 / (1.0 + std::exp(-x)); });
  }
  throw std::logic_error("unknown activation");
}

Var apply_activation(Tape& t, Activation act, Var z) {
  switch (act) {
    case Activation::identity:
      return z;
    case Activation::tanh:
      return t.tanh(z);
    case Activation::relu:
      return t.relu(z);
    case Activation::sigmoid:
      return t.sigmoid(z);
  }
  throw std::logic_error("unknown activation");
}

}  // namespace

Matrix dense_forward(const DenseParams& p, const Matrix& x) {
  if (x.rows() != p.weights.value.cols())
    throw std::invalid_argument("dense_forward: input length " + std::to_string(x.rows()) +
                                " does not match weight columns " +
                                std::to_string(p.weights.value.cols()));
  Matrix z = (p.weights.value * x).colwise() + p.bias.value.col(0);
  return apply_activation(p.activation, std::move(z));
}

Var dense_forward(Tape& tape, DenseParams& p, Var x) {
  if (tape.value(x).rows() != p.weights.value.cols())
    throw std::invalid_argument("dense_forward: input length does not match weight columns");
  Var z = tape.add_col(tape.matmul(tape.leaf(p.weights), x), tape.leaf(p.bias));
  return apply_activation(tape, p.activation, z);
}

Matrix gru_step(const GruParams& p, const Matrix& x, const Matrix& h) {
  if (x.rows() != p.input_size)
    throw std::invalid_argument("gru_step: input length " + std::to_string(x.rows()) +
                                " does not match input_size " + std::to_string(p.input_size));
  if (h.rows() != p.hidden_size)
    throw std::invalid_argument("gru_step: hidden length " + std::to_string(h.rows()) +
                                " does not match hidden_size " + std::to_string(p.hidden_size));
  if (x.cols() != h.cols()) throw std::invalid_argument("gru_step: batch size mismatch");

  auto sigm = [](double v) { return 1.0 / (1.0 + std::exp(-v)); };
  Matrix z = ((p.w_z.value * x + p.u_z.value * h).colwise() + p.b_z.value.col(0)).unaryExpr(sigm);
  Matrix r = ((p.w_r.value * x + p.u_r.value * h).colwise() + p.b_r.value.col(0)).unaryExpr(sigm);
  Matrix cand = ((p.w_h.value * x + p.u_h.value * r.cwiseProduct(h)).colwise() + p.b_h.value.col(0))
                    .array()
                    .tanh()
                    .matrix();
  return (1.0 - z.array()).matrix().cwiseProduct(h) + z.cwiseProduct(cand);
}

Var gru_step(Tape& t, GruParams& p, Var x, Var h) {
  if (t.value(x).rows() != p.input_size || t.value(h).rows() != p.hidden_size)
    throw std::invalid_argument("gru_step: shape mismatch");
  Var z = t.sigmoid(t.add_col(t.add(t.matmul(t.leaf(p.w_z), x), t.matmul(t.leaf(p.u_z), h)),
                              t.leaf(p.b_z)));
  Var r = t.sigmoid(t.add_col(t.add(t.matmul(t.leaf(p.w_r), x), t.matmul(t.leaf(p.u_r), h)),
                              t.leaf(p.b_r)));
  Var cand = t.tanh(t.add_col(
      t.add(t.matmul(t.leaf(p.w_h), x), t.matmul(t.leaf(p.u_h), t.mul(r, h))), t.leaf(p.b_h)));
  Var keep = t.mul(t.affine(z, -1.0, 1.0), h);
  return t.add(keep, t.mul(z, cand));
}

}  // namespace feslab::dynamo
