#include "feslab/staterep/state_rep.hpp"

#include "feslab/common/errors.hpp"
#include "feslab/dynamo/tape.hpp"

#include <algorithm>
#include <map>
#include <stdexcept>

namespace feslab::staterep {

using dynamo::Tape;
using dynamo::Var;

namespace {

// Stimulation commands live in [0,1]; map them to [-1,1] like the other
// input channels.
constexpr double kActionMean = 0.5;
constexpr double kActionScale = 0.5;

}  // namespace

StateRepUnit::StateRepUnit(int obs_dim, int action_dim, const neurosim::Normalization& norm,
                           const StateRepConfig& cfg, Rng& init_rng)
    : obs_dim_(obs_dim),
      action_dim_(action_dim),
      cfg_(cfg),
      norm_(norm),
      gru_("staterep.gru", obs_dim + action_dim, cfg.hidden_size),
      head_("staterep.head", obs_dim, cfg.hidden_size, dynamo::Activation::identity),
      opt_({}, dynamo::AdamConfig{.lr = cfg.learning_rate}) {
  if (norm_.obs_mean.size() != obs_dim)
    throw std::invalid_argument("staterep: normalization does not match observation dim");
  gru_.init_uniform(init_rng);
  head_.init_uniform(init_rng);
  opt_ = dynamo::AdamState(parameters(), dynamo::AdamConfig{.lr = cfg.learning_rate});
}

std::vector<dynamo::Parameter*> StateRepUnit::parameters() {
  return {&gru_.w_z, &gru_.w_r, &gru_.w_h, &gru_.u_z,      &gru_.u_r,
          &gru_.u_h, &gru_.b_z, &gru_.b_r, &gru_.b_h,      &head_.weights,
          &head_.bias};
}

Vector StateRepUnit::normalized_input(const Vector& obs, const Vector& prev_action) const {
  if (obs.size() != obs_dim_ || prev_action.size() != action_dim_)
    throw std::invalid_argument("staterep: input dimensions do not match the unit");
  Vector x(obs_dim_ + action_dim_);
  x.head(obs_dim_) = norm_.normalize_obs(obs);
  x.tail(action_dim_) = (prev_action.array() - kActionMean) / kActionScale;
  return x;
}

Vector StateRepUnit::encode_step(const Vector& obs, const Vector& prev_action,
                                 const Vector& h) const {
  return dynamo::gru_step(gru_, normalized_input(obs, prev_action), h);
}

Vector StateRepUnit::predict_next(const Vector& h) const {
  return norm_.denormalize_obs(dynamo::dense_forward(head_, h));
}

std::vector<Vector> StateRepUnit::regenerate_hidden(const EpisodeTrace& trace) const {
  std::vector<Vector> hidden;
  hidden.reserve(trace.length());
  Vector h = initial_hidden();
  Vector prev_action = Vector::Zero(action_dim_);
  for (std::size_t t = 0; t < trace.length(); ++t) {
    h = encode_step(trace.observations[t], prev_action, h);
    hidden.push_back(h);
    prev_action = trace.actions[t];
  }
  return hidden;
}

double StateRepUnit::prediction_mse(const EpisodeTrace& trace) const {
  if (trace.length() < 2) throw std::invalid_argument("prediction_mse: trace too short");
  Vector h = initial_hidden();
  Vector prev_action = Vector::Zero(action_dim_);
  double sq_sum = 0.0;
  std::size_t count = 0;
  for (std::size_t t = 0; t + 1 < trace.length(); ++t) {
    h = encode_step(trace.observations[t], prev_action, h);
    prev_action = trace.actions[t];
    Vector pred = dynamo::dense_forward(head_, h);
    Vector want = norm_.normalize_obs(trace.observations[t + 1]);
    sq_sum += (pred - want).squaredNorm();
    count += static_cast<std::size_t>(obs_dim_);
  }
  return sq_sum / static_cast<double>(count);
}

std::vector<double> StateRepUnit::train_supervised(std::span<const EpisodeTrace> episodes,
                                                   int epochs, Rng& rng) {
  std::vector<const EpisodeTrace*> ptrs;
  ptrs.reserve(episodes.size());
  for (const auto& e : episodes) ptrs.push_back(&e);
  return train_supervised(std::span<const EpisodeTrace* const>(ptrs), epochs, rng);
}

std::vector<double> StateRepUnit::train_supervised(std::span<const EpisodeTrace* const> episodes,
                                                   int epochs, Rng& rng) {
  (void)rng;  // full deterministic sweep; kept for interface stability
  if (episodes.empty()) throw std::invalid_argument("train_supervised: empty episode list");
  for (const auto* e : episodes)
    if (!e->aligned() || e->length() < 2)
      throw std::invalid_argument("train_supervised: trace too short or misaligned");
  if (epochs <= 0) return {};

  // Group traces of equal length so each group batches into clean matrices.
  std::map<std::size_t, std::vector<const EpisodeTrace*>> groups;
  for (const auto* e : episodes) groups[e->length()].push_back(e);

  struct GroupData {
    std::vector<Matrix> inputs;   // per step: (obs+act) x batch
    std::vector<Matrix> targets;  // per step: obs x batch
  };
  std::vector<GroupData> data;
  for (const auto& [len, traces] : groups) {
    GroupData g;
    const int batch = static_cast<int>(traces.size());
    g.inputs.reserve(len - 1);
    g.targets.reserve(len - 1);
    for (std::size_t t = 0; t + 1 < len; ++t) {
      Matrix x(obs_dim_ + action_dim_, batch);
      Matrix y(obs_dim_, batch);
      for (int b = 0; b < batch; ++b) {
        const EpisodeTrace& tr = *traces[static_cast<std::size_t>(b)];
        Vector prev = t == 0 ? Vector::Zero(action_dim_) : tr.actions[t - 1];
        x.col(b) = normalized_input(tr.observations[t], prev);
        y.col(b) = norm_.normalize_obs(tr.observations[t + 1]);
      }
      g.inputs.push_back(std::move(x));
      g.targets.push_back(std::move(y));
    }
    data.push_back(std::move(g));
  }

  std::vector<double> history;
  history.reserve(static_cast<std::size_t>(epochs));
  for (int epoch = 0; epoch < epochs; ++epoch) {
    double sq_sum = 0.0;
    std::size_t count = 0;
    for (const GroupData& g : data) {
      const std::size_t steps = g.inputs.size();
      const Eigen::Index batch = g.inputs[0].cols();
      Matrix h_carry = Matrix::Zero(cfg_.hidden_size, batch);
      for (std::size_t start = 0; start < steps; start += cfg_.bptt_window) {
        const std::size_t stop = std::min(steps, start + cfg_.bptt_window);
        Tape tape;
        Var h = tape.constant(h_carry);
        Var total = tape.constant(Matrix::Zero(1, 1));
        for (std::size_t t = start; t < stop; ++t) {
          h = dynamo::gru_step(tape, gru_, tape.constant(g.inputs[t]), h);
          Var err = tape.sub(dynamo::dense_forward(tape, head_, h),
                             tape.constant(g.targets[t]));
          total = tape.add(total, tape.sum(tape.square(err)));
        }
        const double elems =
            static_cast<double>((stop - start) * static_cast<std::size_t>(obs_dim_) *
                                static_cast<std::size_t>(batch));
        Var loss = tape.affine(total, 1.0 / elems, 0.0);
        sq_sum += tape.value(total)(0, 0);
        count += static_cast<std::size_t>(elems);
        h_carry = tape.value(h);  // detach across the window boundary
        opt_.zero_grads();
        tape.backward(loss);
        if (auto bad = opt_.step())
          throw NumericError("train_supervised: non-finite gradient in " + *bad);
      }
    }
    history.push_back(sq_sum / static_cast<double>(count));
  }
  return history;
}

void StateRepUnit::add_to_checkpoint(dynamo::Checkpoint& ckpt, const std::string& prefix) const {
  auto* self = const_cast<StateRepUnit*>(this);
  for (dynamo::Parameter* p : self->parameters()) ckpt.add_tensor(prefix + p->name, p->value);
  for (const auto& [name, tensor] : self->opt_.named_tensors())
    ckpt.add_tensor(prefix + name, *tensor);
  ckpt.add_tensor(prefix + "norm.obs_mean", norm_.obs_mean);
  ckpt.add_tensor(prefix + "norm.obs_scale", norm_.obs_scale);
  Matrix target_norm(2, 1);
  target_norm << norm_.target_mean, norm_.target_scale;
  ckpt.add_tensor(prefix + "norm.target", target_norm);
}

void StateRepUnit::restore_from_checkpoint(const dynamo::Checkpoint& ckpt,
                                           const std::string& prefix) {
  for (dynamo::Parameter* p : parameters()) p->value = ckpt.tensor(prefix + p->name);
  for (const auto& [name, tensor] : opt_.named_tensors())
    opt_.restore_tensor(name, ckpt.tensor(prefix + name));
  norm_.obs_mean = ckpt.tensor(prefix + "norm.obs_mean");
  norm_.obs_scale = ckpt.tensor(prefix + "norm.obs_scale");
  const Matrix& target_norm = ckpt.tensor(prefix + "norm.target");
  norm_.target_mean = target_norm(0, 0);
  norm_.target_scale = target_norm(1, 0);
}

}  // namespace feslab::staterep
