#pragma once

#include "feslab/common/rng.hpp"
#include "feslab/dynamo/checkpoint.hpp"
#include "feslab/dynamo/layers.hpp"
#include "feslab/dynamo/optimizer.hpp"
#include "feslab/episode_trace.hpp"
#include "feslab/neurosim/env.hpp"

#include <span>
#include <vector>

namespace feslab::staterep {

using dynamo::Matrix;
using dynamo::Vector;

struct StateRepConfig {
  int hidden_size = 20;
  int bptt_window = 50;
  double learning_rate = 1e-3;
};

/// Recurrent state-representation unit: a GRU consuming the normalized
/// (observation, previous action) pair whose hidden state stands in for the
/// unobservable muscle state, trained with a dense head to predict the next
/// observation. The hidden state is the controller's learned state; the head
/// exists only for the supervised target.
class StateRepUnit {
 public:
  StateRepUnit(int obs_dim, int action_dim, const neurosim::Normalization& norm,
               const StateRepConfig& cfg, Rng& init_rng);

  StateRepUnit(const StateRepUnit&) = delete;
  StateRepUnit& operator=(const StateRepUnit&) = delete;

  int obs_dim() const { return obs_dim_; }
  int action_dim() const { return action_dim_; }
  int hidden_size() const { return cfg_.hidden_size; }

  Vector initial_hidden() const { return Vector::Zero(cfg_.hidden_size); }

  /// One recurrent step on the normalized concatenation [obs; prev_action].
  /// Deterministic; h must come from the same episode (zeros at t = 0).
  Vector encode_step(const Vector& obs, const Vector& prev_action, const Vector& h) const;

  /// De-normalized dense-head readout of the predicted next observation.
  Vector predict_next(const Vector& h) const;

  /// Minimizes one-step prediction MSE (normalized space, equal channel
  /// weights) with truncated backpropagation through time; the hidden state
  /// carries across window boundaries detached. Returns per-epoch training
  /// loss. Throws on an empty episode list; zero epochs is a no-op.
  std::vector<double> train_supervised(std::span<const EpisodeTrace* const> episodes, int epochs,
                                       Rng& rng);
  std::vector<double> train_supervised(std::span<const EpisodeTrace> episodes, int epochs,
                                       Rng& rng);

  /// Recomputes h_0..h_{T-1} for a trace with the current parameters, from a
  /// zero initial hidden state. Matches the online encoding bit-exactly as
  /// long as parameters have not changed in between.
  std::vector<Vector> regenerate_hidden(const EpisodeTrace& trace) const;

  /// Mean squared one-step prediction error over a trace, normalized space.
  double prediction_mse(const EpisodeTrace& trace) const;

  const neurosim::Normalization& normalization() const { return norm_; }

  dynamo::GruParams& gru() { return gru_; }
  dynamo::DenseParams& head() { return head_; }
  dynamo::AdamState& optimizer() { return opt_; }

  void add_to_checkpoint(dynamo::Checkpoint& ckpt, const std::string& prefix) const;
  void restore_from_checkpoint(const dynamo::Checkpoint& ckpt, const std::string& prefix);

 private:
  Vector normalized_input(const Vector& obs, const Vector& prev_action) const;
  std::vector<dynamo::Parameter*> parameters();

  int obs_dim_;
  int action_dim_;
  StateRepConfig cfg_;
  neurosim::Normalization norm_;
  dynamo::GruParams gru_;
  dynamo::DenseParams head_;
  dynamo::AdamState opt_;
};

}  // namespace feslab::staterep
