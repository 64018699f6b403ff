#pragma once

#include "feslab/common/rng.hpp"
#include "feslab/dynamo/tape.hpp"

#include <string>

namespace feslab::dynamo {

enum class Activation { identity, tanh, relu, sigmoid };

/// Fully-connected layer: activation(W x + b). Batched inputs are column-per-
/// sample matrices.
struct DenseParams {
  Parameter weights;  // out x in
  Parameter bias;     // out x 1
  Activation activation;

  DenseParams(const std::string& prefix, int out, int in, Activation act)
      : weights(prefix + ".W", Matrix::Zero(out, in)),
        bias(prefix + ".b", Matrix::Zero(out, 1)),
        activation(act) {}

  int in_size() const { return static_cast<int>(weights.value.cols()); }
  int out_size() const { return static_cast<int>(weights.value.rows()); }

  /// Uniform init in [-1/sqrt(fan_in), +1/sqrt(fan_in)] for both tensors.
  void init_uniform(Rng& rng);
};

Matrix dense_forward(const DenseParams& p, const Matrix& x);
Var dense_forward(Tape& tape, DenseParams& p, Var x);

/// Gated recurrent unit cell. Convention: the update gate z multiplies the
/// candidate, h' = (1-z) . h + z . tanh(W_h x + U_h (r . h) + b_h).
struct GruParams {
  int input_size;
  int hidden_size;
  Parameter w_z, w_r, w_h;  // hidden x input
  Parameter u_z, u_r, u_h;  // hidden x hidden
  Parameter b_z, b_r, b_h;  // hidden x 1

  GruParams(const std::string& prefix, int input, int hidden)
      : input_size(input),
        hidden_size(hidden),
        w_z(prefix + ".W_z", Matrix::Zero(hidden, input)),
        w_r(prefix + ".W_r", Matrix::Zero(hidden, input)),
        w_h(prefix + ".W_h", Matrix::Zero(hidden, input)),
        u_z(prefix + ".U_z", Matrix::Zero(hidden, hidden)),
        u_r(prefix + ".U_r", Matrix::Zero(hidden, hidden)),
        u_h(prefix + ".U_h", Matrix::Zero(hidden, hidden)),
        b_z(prefix + ".b_z", Matrix::Zero(hidden, 1)),
        b_r(prefix + ".b_r", Matrix::Zero(hidden, 1)),
        b_h(prefix + ".b_h", Matrix::Zero(hidden, 1)) {}

  void init_uniform(Rng& rng);
};

Matrix gru_step(const GruParams& p, const Matrix& x, const Matrix& h);
Var gru_step(Tape& tape, GruParams& p, Var x, Var h);

/// Fills a parameter with U[-1/sqrt(fan_in), +1/sqrt(fan_in)] draws, row-major
/// order so the draw sequence is part of the determinism contract.
void init_uniform(Parameter& p, int fan_in, Rng& rng);

}  // namespace feslab::dynamo
