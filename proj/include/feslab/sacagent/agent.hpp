#pragma once

#include "feslab/common/rng.hpp"
#include "feslab/dynamo/checkpoint.hpp"
#include "feslab/dynamo/layers.hpp"
#include "feslab/dynamo/optimizer.hpp"
#include "feslab/episode_trace.hpp"
#include "feslab/neurosim/env.hpp"

#include <memory>
#include <string>
#include <vector>

namespace feslab::sacagent {

using dynamo::Matrix;
using dynamo::Vector;

struct AgentConfig {
  double gamma = 0.99;
  double tau_polyak = 0.005;
  double learning_rate = 3e-4;
  double alpha_init = 0.2;
  double target_entropy_per_dim = -1.0;
  int hidden_width = 64;
  int batch_size = 256;
  int updates_per_episode = 400;
  std::size_t buffer_capacity = 400000;
};

/// (hidden state (+) target, action, reward, next state, done) tuple.
struct AgentTransition {
  Vector x;
  Vector a;
  double r = 0.0;
  Vector x_next;
  bool done = false;
};

/// Flat transition store rebuilt from regenerated hidden states at every
/// episode end; nothing in it survives an episode boundary.
class TempReplayBuffer {
 public:
  explicit TempReplayBuffer(std::size_t capacity) : capacity_(capacity) {}

  void clear() { items_.clear(); }
  void add(AgentTransition t) {
    if (items_.size() < capacity_) items_.push_back(std::move(t));
  }
  std::size_t size() const { return items_.size(); }
  std::size_t capacity() const { return capacity_; }
  bool empty() const { return items_.empty(); }
  const AgentTransition& at(std::size_t i) const { return items_[i]; }

 private:
  std::size_t capacity_;
  std::vector<AgentTransition> items_;
};

/// Squashed-Gaussian policy: two tanh layers, mean and log-std heads, actions
/// mapped into [0,1] per channel via 0.5 (tanh(z) + 1).
class GaussianPolicy {
 public:
  static constexpr double kLogStdMin = -5.0;
  static constexpr double kLogStdMax = 2.0;

  GaussianPolicy(const std::string& prefix, int x_dim, int action_dim, int width, Rng& init_rng);

  int x_dim() const { return l1.in_size(); }
  int action_dim() const { return mean_head.out_size(); }

  /// Trunk + heads; log-std arrives already clamped.
  void heads(const Matrix& x, Matrix& mu, Matrix& log_std) const;

  std::vector<dynamo::Parameter*> parameters();

  dynamo::DenseParams l1, l2, mean_head, logstd_head;
};

/// Reparametrized sample squashed into [0,1], with the tanh Jacobian folded
/// into the log-probability.
std::pair<Vector, double> sample_action(const GaussianPolicy& policy, const Vector& x, Rng& rng);

/// Mean action through the squash; used for all reported evaluations.
Vector act_deterministic(const GaussianPolicy& policy, const Vector& x);

/// One Q network: relu trunk over [x; a], scalar head.
class QNetwork {
 public:
  QNetwork(const std::string& prefix, int x_dim, int action_dim, int width, Rng& init_rng);

  Matrix value(const Matrix& x, const Matrix& a) const;  // 1 x batch
  dynamo::Var value(dynamo::Tape& tape, dynamo::Var xa);

  std::vector<dynamo::Parameter*> parameters();
  void copy_values_from(QNetwork& other);
  /// target <- (1 - tau) target + tau online, exactly.
  void polyak_from(QNetwork& online, double tau);

  dynamo::DenseParams l1, l2, head;
};

struct UpdateDiagnostics {
  double critic_loss = 0.0;
  double actor_loss = 0.0;
  double alpha = 0.0;
  int updates = 0;
};

/// Soft Actor-Critic learner over (hidden state (+) target) inputs. The
/// objective adds an entropy bonus -alpha log pi to the reward; alpha is
/// learned toward a fixed target entropy. Twin critics with Polyak-averaged
/// target copies; updates are single-threaded and strictly phased with
/// rollouts.
class SacAgent {
 public:
  SacAgent(int x_dim, int action_dim, const AgentConfig& cfg, Rng& init_rng);

  SacAgent(const SacAgent&) = delete;
  SacAgent& operator=(const SacAgent&) = delete;

  int x_dim() const { return policy_.x_dim(); }
  int action_dim() const { return policy_.action_dim(); }
  const AgentConfig& config() const { return cfg_; }

  Vector act(const Vector& x, Rng& rng) const;
  Vector act_deterministic(const Vector& x) const;

  /// Mini-batch training sweep against the temporary buffer. Critics regress
  /// to r + gamma (min target Q - alpha log pi) with done masking, the actor
  /// ascends min-critic Q minus alpha log pi, alpha descends toward the
  /// entropy target, and targets Polyak-average after every step.
  UpdateDiagnostics update(const TempReplayBuffer& buffer, int n_updates, int batch_size,
                           Rng& rng);

  double alpha() const { return std::exp(log_alpha_.value(0, 0)); }
  double target_entropy() const { return target_entropy_; }

  GaussianPolicy& policy() { return policy_; }
  QNetwork& critic1() { return critic1_; }
  QNetwork& critic2() { return critic2_; }
  QNetwork& target1() { return target1_; }
  QNetwork& target2() { return target2_; }

  struct Batch {
    Matrix x;      // x_dim x B
    Matrix a;      // action_dim x B
    Matrix r;      // 1 x B
    Matrix x_next; // x_dim x B
    Matrix done;   // 1 x B, {0,1}
  };

  Batch sample_batch(const TempReplayBuffer& buffer, int batch_size, Rng& rng) const;
  /// Bellman targets r + gamma (1 - done) (min target Q - alpha log pi).
  Matrix critic_targets(const Batch& batch, Rng& rng) const;

  void add_to_checkpoint(dynamo::Checkpoint& ckpt, const std::string& prefix) const;
  void restore_from_checkpoint(const dynamo::Checkpoint& ckpt, const std::string& prefix);

 private:
  /// log-density of pre-squash draws z = mu + sigma * xi minus the squash
  /// Jacobian, per column.
  Matrix log_prob_columns(const Matrix& mu, const Matrix& log_std, const Matrix& z) const;

  AgentConfig cfg_;
  double target_entropy_;
  GaussianPolicy policy_;
  QNetwork critic1_, critic2_, target1_, target2_;
  dynamo::Parameter log_alpha_;
  dynamo::AdamState actor_opt_, critic_opt_, alpha_opt_;
};

/// Copy of a trace whose target equals the achieved value at every step, so
/// every reward is exactly zero; the source trace is untouched.
EpisodeTrace hindsight_relabel(const EpisodeTrace& trace);

/// Pairs consecutive regenerated hidden states into transitions:
/// x_t = h_t (+) normalized target_t, reward from the arrival step, done only
/// at the end of the series. hidden must be as long as the trace.
std::vector<AgentTransition> build_agent_transitions(const std::vector<Vector>& hidden,
                                                     const EpisodeTrace& trace,
                                                     const neurosim::Normalization& norm);

}  // namespace feslab::sacagent
