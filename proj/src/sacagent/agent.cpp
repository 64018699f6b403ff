#include "feslab/sacagent/agent.hpp"

#include "feslab/common/errors.hpp"
#include "feslab/dynamo/tape.hpp"

#include <cmath>
#include <stdexcept>

namespace feslab::sacagent {

using dynamo::Tape;
using dynamo::Var;

namespace {

constexpr double kHalfLog2Pi = 0.9189385332046727;  // 0.5 log(2 pi)
constexpr double kLog2 = 0.6931471805599453;

double softplus_stable(double x) { return std::max(x, 0.0) + std::log1p(std::exp(-std::abs(x))); }

// log |da/dz| for a = 0.5 (tanh(z) + 1), numerically stable form:
// log(0.5 (1 - tanh^2 z)) = log 2 - 2 z - 2 softplus(-2 z).
double log_squash_jacobian(double z) { return kLog2 - 2.0 * z - 2.0 * softplus_stable(-2.0 * z); }

Matrix fill_normals(Eigen::Index rows, Eigen::Index cols, Rng& rng) {
  Matrix m(rows, cols);
  for (Eigen::Index c = 0; c < cols; ++c)
    for (Eigen::Index r = 0; r < rows; ++r) m(r, c) = rng.normal();
  return m;
}

}  // namespace

GaussianPolicy::GaussianPolicy(const std::string& prefix, int x_dim, int action_dim, int width,
                               Rng& init_rng)
    : l1(prefix + ".l1", width, x_dim, dynamo::Activation::tanh),
      l2(prefix + ".l2", width, width, dynamo::Activation::tanh),
      mean_head(prefix + ".mean", action_dim, width, dynamo::Activation::identity),
      logstd_head(prefix + ".logstd", action_dim, width, dynamo::Activation::identity) {
  l1.init_uniform(init_rng);
  l2.init_uniform(init_rng);
  mean_head.init_uniform(init_rng);
  logstd_head.init_uniform(init_rng);
}

void GaussianPolicy::heads(const Matrix& x, Matrix& mu, Matrix& log_std) const {
  Matrix h = dynamo::dense_forward(l2, dynamo::dense_forward(l1, x));
  mu = dynamo::dense_forward(mean_head, h);
  log_std = dynamo::dense_forward(logstd_head, h).cwiseMax(kLogStdMin).cwiseMin(kLogStdMax);
}

std::vector<dynamo::Parameter*> GaussianPolicy::parameters() {
  return {&l1.weights,        &l1.bias,        &l2.weights,          &l2.bias,
          &mean_head.weights, &mean_head.bias, &logstd_head.weights, &logstd_head.bias};
}

std::pair<Vector, double> sample_action(const GaussianPolicy& policy, const Vector& x, Rng& rng) {
  Matrix mu, log_std;
  policy.heads(x, mu, log_std);
  const int dim = policy.action_dim();
  Vector a(dim);
  double log_prob = 0.0;
  for (int i = 0; i < dim; ++i) {
    const double xi = rng.normal();
    const double sigma = std::exp(log_std(i, 0));
    const double z = mu(i, 0) + sigma * xi;
    a(i) = 0.5 * (std::tanh(z) + 1.0);
    log_prob += -0.5 * xi * xi - log_std(i, 0) - kHalfLog2Pi - log_squash_jacobian(z);
  }
  return {std::move(a), log_prob};
}

Vector act_deterministic(const GaussianPolicy& policy, const Vector& x) {
  Matrix mu, log_std;
  policy.heads(x, mu, log_std);
  return (0.5 * (mu.col(0).array().tanh() + 1.0)).matrix();
}

QNetwork::QNetwork(const std::string& prefix, int x_dim, int action_dim, int width, Rng& init_rng)
    : l1(prefix + ".l1", width, x_dim + action_dim, dynamo::Activation::relu),
      l2(prefix + ".l2", width, width, dynamo::Activation::relu),
      head(prefix + ".q", 1, width, dynamo::Activation::identity) {
  l1.init_uniform(init_rng);
  l2.init_uniform(init_rng);
  head.init_uniform(init_rng);
}

Matrix QNetwork::value(const Matrix& x, const Matrix& a) const {
  Matrix xa(x.rows() + a.rows(), x.cols());
  xa.topRows(x.rows()) = x;
  xa.bottomRows(a.rows()) = a;
  return dynamo::dense_forward(head, dynamo::dense_forward(l2, dynamo::dense_forward(l1, xa)));
}

Var QNetwork::value(Tape& tape, Var xa) {
  return dynamo::dense_forward(tape, head,
                               dynamo::dense_forward(tape, l2, dynamo::dense_forward(tape, l1, xa)));
}

std::vector<dynamo::Parameter*> QNetwork::parameters() {
  return {&l1.weights, &l1.bias, &l2.weights, &l2.bias, &head.weights, &head.bias};
}

void QNetwork::copy_values_from(QNetwork& other) {
  auto mine = parameters();
  auto theirs = other.parameters();
  for (std::size_t i = 0; i < mine.size(); ++i) mine[i]->value = theirs[i]->value;
}

void QNetwork::polyak_from(QNetwork& online, double tau) {
  auto mine = parameters();
  auto theirs = online.parameters();
  for (std::size_t i = 0; i < mine.size(); ++i)
    mine[i]->value = (1.0 - tau) * mine[i]->value + tau * theirs[i]->value;
}

SacAgent::SacAgent(int x_dim, int action_dim, const AgentConfig& cfg, Rng& init_rng)
    : cfg_(cfg),
      target_entropy_(cfg.target_entropy_per_dim * action_dim),
      policy_("actor", x_dim, action_dim, cfg.hidden_width, init_rng),
      critic1_("critic1", x_dim, action_dim, cfg.hidden_width, init_rng),
      critic2_("critic2", x_dim, action_dim, cfg.hidden_width, init_rng),
      target1_("target1", x_dim, action_dim, cfg.hidden_width, init_rng),
      target2_("target2", x_dim, action_dim, cfg.hidden_width, init_rng),
      log_alpha_("log_alpha", Matrix::Constant(1, 1, std::log(cfg.alpha_init))),
      actor_opt_(policy_.parameters(), dynamo::AdamConfig{.lr = cfg.learning_rate}),
      critic_opt_({}, dynamo::AdamConfig{.lr = cfg.learning_rate}),
      alpha_opt_({&log_alpha_}, dynamo::AdamConfig{.lr = cfg.learning_rate}) {
  target1_.copy_values_from(critic1_);
  target2_.copy_values_from(critic2_);
  std::vector<dynamo::Parameter*> critic_params = critic1_.parameters();
  for (auto* p : critic2_.parameters()) critic_params.push_back(p);
  critic_opt_ = dynamo::AdamState(critic_params, dynamo::AdamConfig{.lr = cfg.learning_rate});
}

Vector SacAgent::act(const Vector& x, Rng& rng) const {
  return sample_action(policy_, x, rng).first;
}

Vector SacAgent::act_deterministic(const Vector& x) const {
  return sacagent::act_deterministic(policy_, x);
}

Matrix SacAgent::log_prob_columns(const Matrix& mu, const Matrix& log_std,
                                  const Matrix& z) const {
  Matrix lp = Matrix::Zero(1, mu.cols());
  for (Eigen::Index c = 0; c < mu.cols(); ++c) {
    double acc = 0.0;
    for (Eigen::Index r = 0; r < mu.rows(); ++r) {
      const double sigma = std::exp(log_std(r, c));
      const double xi = (z(r, c) - mu(r, c)) / sigma;
      acc += -0.5 * xi * xi - log_std(r, c) - kHalfLog2Pi - log_squash_jacobian(z(r, c));
    }
    lp(0, c) = acc;
  }
  return lp;
}

SacAgent::Batch SacAgent::sample_batch(const TempReplayBuffer& buffer, int batch_size,
                                       Rng& rng) const {
  if (buffer.empty()) throw std::invalid_argument("sac update: empty buffer");
  Batch b;
  b.x.resize(x_dim(), batch_size);
  b.a.resize(action_dim(), batch_size);
  b.r.resize(1, batch_size);
  b.x_next.resize(x_dim(), batch_size);
  b.done.resize(1, batch_size);
  for (int i = 0; i < batch_size; ++i) {
    const AgentTransition& t = buffer.at(rng.uniform_index(buffer.size()));
    b.x.col(i) = t.x;
    b.a.col(i) = t.a;
    b.r(0, i) = t.r;
    b.x_next.col(i) = t.x_next;
    b.done(0, i) = t.done ? 1.0 : 0.0;
  }
  return b;
}

Matrix SacAgent::critic_targets(const Batch& batch, Rng& rng) const {
  Matrix mu, log_std;
  policy_.heads(batch.x_next, mu, log_std);
  const Matrix xi = fill_normals(mu.rows(), mu.cols(), rng);
  const Matrix z = mu + log_std.array().exp().matrix().cwiseProduct(xi);
  const Matrix a_next = (0.5 * (z.array().tanh() + 1.0)).matrix();
  const Matrix log_pi = log_prob_columns(mu, log_std, z);
  Matrix q = target1_.value(batch.x_next, a_next).cwiseMin(target2_.value(batch.x_next, a_next));
  const double a = alpha();
  Matrix soft = q - a * log_pi;
  return batch.r + cfg_.gamma * (1.0 - batch.done.array()).matrix().cwiseProduct(soft);
}

UpdateDiagnostics SacAgent::update(const TempReplayBuffer& buffer, int n_updates, int batch_size,
                                   Rng& rng) {
  if (buffer.empty()) throw std::invalid_argument("sac update: empty buffer");
  UpdateDiagnostics diag;
  for (int u = 0; u < n_updates; ++u) {
    Batch batch = sample_batch(buffer, batch_size, rng);
    const Matrix y = critic_targets(batch, rng);

    // Critic regression toward the Bellman targets.
    {
      Tape tape;
      Matrix xa(batch.x.rows() + batch.a.rows(), batch.x.cols());
      xa.topRows(batch.x.rows()) = batch.x;
      xa.bottomRows(batch.a.rows()) = batch.a;
      Var xa_v = tape.constant(std::move(xa));
      Var y_v = tape.constant(y);
      Var q1 = critic1_.value(tape, xa_v);
      Var q2 = critic2_.value(tape, xa_v);
      Var loss = tape.add(tape.mean(tape.square(tape.sub(q1, y_v))),
                          tape.mean(tape.square(tape.sub(q2, y_v))));
      const double loss_val = tape.value(loss)(0, 0);
      if (!std::isfinite(loss_val))
        throw NumericError("sac update: non-finite critic loss at update " + std::to_string(u));
      diag.critic_loss += loss_val;
      critic_opt_.zero_grads();
      tape.backward(loss);
      if (auto bad = critic_opt_.step())
        throw NumericError("sac update: non-finite gradient in " + *bad + " at update " +
                           std::to_string(u));
    }

    // Actor ascent on min-critic Q with the entropy bonus; gradients reach the
    // policy through the reparametrized action, never the critic weights.
    double log_pi_mean = 0.0;
    {
      Tape tape;
      Var x_v = tape.constant(batch.x);
      Var h1 = dynamo::dense_forward(tape, policy_.l1, x_v);
      Var h2 = dynamo::dense_forward(tape, policy_.l2, h1);
      Var mu = dynamo::dense_forward(tape, policy_.mean_head, h2);
      Var log_std = tape.clamp(dynamo::dense_forward(tape, policy_.logstd_head, h2),
                               GaussianPolicy::kLogStdMin, GaussianPolicy::kLogStdMax);
      Var sigma = tape.exp(log_std);
      const Matrix xi = fill_normals(action_dim(), batch_size, rng);
      Var z = tape.add(mu, tape.mul(sigma, tape.constant(xi)));
      Var a_new = tape.affine(tape.tanh(z), 0.5, 0.5);

      // log pi = sum_i [ -xi^2/2 - log sigma - log sqrt(2 pi) ] - sum_i log |da/dz|
      Matrix gauss_const = (-0.5 * xi.array().square() - kHalfLog2Pi).matrix();
      Var gauss = tape.add(tape.constant(gauss_const.colwise().sum()),
                           tape.affine(tape.colsum(log_std), -1.0, 0.0));
      Var jac_terms = tape.add(tape.affine(z, -2.0, kLog2),
                               tape.affine(tape.softplus(tape.affine(z, -2.0, 0.0)), -2.0, 0.0));
      Var log_pi = tape.sub(gauss, tape.colsum(jac_terms));

      Var xa_new = tape.vcat(x_v, a_new);
      Var q_min = tape.cmin(critic1_.value(tape, xa_new), critic2_.value(tape, xa_new));
      Var loss = tape.mean(tape.sub(tape.affine(log_pi, alpha(), 0.0), q_min));
      const double loss_val = tape.value(loss)(0, 0);
      if (!std::isfinite(loss_val))
        throw NumericError("sac update: non-finite actor loss at update " + std::to_string(u));
      diag.actor_loss += loss_val;
      log_pi_mean = tape.value(log_pi).mean();
      actor_opt_.zero_grads();
      critic_opt_.zero_grads();  // critic leaves accumulate here; discard
      tape.backward(loss);
      if (auto bad = actor_opt_.step())
        throw NumericError("sac update: non-finite gradient in " + *bad + " at update " +
                           std::to_string(u));
    }

    // Temperature: d/d(log alpha) of -log alpha (log pi + target entropy).
    log_alpha_.grad(0, 0) = -(log_pi_mean + target_entropy_);
    if (auto bad = alpha_opt_.step())
      throw NumericError("sac update: non-finite gradient in " + *bad);

    target1_.polyak_from(critic1_, cfg_.tau_polyak);
    target2_.polyak_from(critic2_, cfg_.tau_polyak);
    ++diag.updates;
  }
  if (diag.updates > 0) {
    diag.critic_loss /= diag.updates;
    diag.actor_loss /= diag.updates;
  }
  diag.alpha = alpha();
  return diag;
}

void SacAgent::add_to_checkpoint(dynamo::Checkpoint& ckpt, const std::string& prefix) const {
  auto* self = const_cast<SacAgent*>(this);
  auto dump = [&](std::vector<dynamo::Parameter*> params) {
    for (auto* p : params) ckpt.add_tensor(prefix + p->name, p->value);
  };
  dump(self->policy_.parameters());
  dump(self->critic1_.parameters());
  dump(self->critic2_.parameters());
  dump(self->target1_.parameters());
  dump(self->target2_.parameters());
  ckpt.add_tensor(prefix + "log_alpha", log_alpha_.value);
  for (auto* opt : {&self->actor_opt_, &self->critic_opt_, &self->alpha_opt_})
    for (const auto& [name, tensor] : opt->named_tensors()) ckpt.add_tensor(prefix + name, *tensor);
}

void SacAgent::restore_from_checkpoint(const dynamo::Checkpoint& ckpt, const std::string& prefix) {
  auto restore = [&](std::vector<dynamo::Parameter*> params) {
    for (auto* p : params) p->value = ckpt.tensor(prefix + p->name);
  };
  restore(policy_.parameters());
  restore(critic1_.parameters());
  restore(critic2_.parameters());
  restore(target1_.parameters());
  restore(target2_.parameters());
  log_alpha_.value = ckpt.tensor(prefix + "log_alpha");
  for (auto* opt : {&actor_opt_, &critic_opt_, &alpha_opt_})
    for (const auto& [name, tensor] : opt->named_tensors())
      opt->restore_tensor(name, ckpt.tensor(prefix + name));
}

EpisodeTrace hindsight_relabel(const EpisodeTrace& trace) {
  EpisodeTrace out = trace;
  for (std::size_t t = 0; t < out.length(); ++t) {
    out.targets[t] = out.observations[t](0);
    out.rewards[t] = neurosim::reward(out.observations[t], out.targets[t]);
  }
  return out;
}

std::vector<AgentTransition> build_agent_transitions(const std::vector<Vector>& hidden,
                                                     const EpisodeTrace& trace,
                                                     const neurosim::Normalization& norm) {
  if (hidden.size() != trace.length())
    throw std::invalid_argument("build_agent_transitions: hidden length " +
                                std::to_string(hidden.size()) + " != trace length " +
                                std::to_string(trace.length()));
  std::vector<AgentTransition> out;
  if (trace.length() < 2) return out;
  out.reserve(trace.length() - 1);
  const Eigen::Index h_dim = hidden[0].size();
  for (std::size_t t = 0; t + 1 < trace.length(); ++t) {
    AgentTransition tr;
    tr.x.resize(h_dim + 1);
    tr.x.head(h_dim) = hidden[t];
    tr.x(h_dim) = norm.normalize_target(trace.targets[t]);
    tr.x_next.resize(h_dim + 1);
    tr.x_next.head(h_dim) = hidden[t + 1];
    tr.x_next(h_dim) = norm.normalize_target(trace.targets[t + 1]);
    tr.a = trace.actions[t];
    tr.r = trace.rewards[t + 1];
    tr.done = (t + 2 == trace.length());
    out.push_back(std::move(tr));
  }
  return out;
}

}  // namespace feslab::sacagent
