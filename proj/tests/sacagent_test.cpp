#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "feslab/neurosim/defaults.hpp"
#include "feslab/sacagent/agent.hpp"
#include "feslab/staterep/state_rep.hpp"
#include "test_helpers.hpp"

#include <cmath>
#include <vector>

using namespace feslab;
using namespace feslab::sacagent;
using feslab::testing::make_env_trace;
using feslab::testing::unit_normalization;

namespace {

AgentConfig fast_cfg() {
  AgentConfig cfg;
  cfg.hidden_width = 16;
  cfg.batch_size = 16;
  cfg.learning_rate = 3e-3;
  return cfg;
}

// Policy whose trunk is inert: mean/log-std come straight from head biases.
GaussianPolicy flat_policy(double mean_bias, double logstd_bias, int x_dim = 3) {
  Rng rng(0);
  GaussianPolicy p("p", x_dim, 1, 8, rng);
  p.l1.weights.value.setZero();
  p.l1.bias.value.setZero();
  p.l2.weights.value.setZero();
  p.l2.bias.value.setZero();
  p.mean_head.weights.value.setZero();
  p.mean_head.bias.value.setConstant(mean_bias);
  p.logstd_head.weights.value.setZero();
  p.logstd_head.bias.value.setConstant(logstd_bias);
  return p;
}

double squash(double z) { return 0.5 * (std::tanh(z) + 1.0); }

TempReplayBuffer single_transition_buffer(int x_dim, int a_dim) {
  TempReplayBuffer buf(100);
  AgentTransition t;
  t.x = Vector::Zero(x_dim);
  t.a = Vector::Constant(a_dim, 0.5);
  t.r = 0.0;
  t.x_next = Vector::Zero(x_dim);
  t.done = true;
  buf.add(t);
  return buf;
}

}  // namespace

TEST_CASE("sample_action collapses to the squashed mean as sigma -> 0") {
  GaussianPolicy p = flat_policy(0.4, -12.0);  // clamps to log-std -5
  Rng rng(1);
  Vector x = Vector::Zero(3);
  for (int i = 0; i < 200; ++i) {
    auto [a, logp] = sample_action(p, x, rng);
    CHECK(std::abs(a(0) - squash(0.4)) < 0.02);
    CHECK(std::isfinite(logp));
  }
}

TEST_CASE("sample_action density matches a histogram over 1e5 draws") {
  const double mean_bias = 0.3;
  const double logstd_bias = std::log(0.5);
  GaussianPolicy p = flat_policy(mean_bias, logstd_bias);
  Rng rng(2);
  Vector x = Vector::Zero(3);

  const int n = 100000;
  const double lo = 0.0, hi = 1.0;
  const int bins = 50;
  const double width = (hi - lo) / bins;
  std::vector<int> counts(bins, 0);
  for (int i = 0; i < n; ++i) {
    auto [a, logp] = sample_action(p, x, rng);
    CHECK(a(0) > 0.0);
    CHECK(a(0) < 1.0);
    int b = static_cast<int>((a(0) - lo) / width);
    b = std::clamp(b, 0, bins - 1);
    ++counts[b];
  }
  // analytic density: p(a) = N(z; mu, sigma) / |da/dz|, z = atanh(2a - 1)
  const double sigma = 0.5;
  auto pdf = [&](double a) {
    const double z = std::atanh(2.0 * a - 1.0);
    const double gauss = std::exp(-0.5 * std::pow((z - mean_bias) / sigma, 2)) /
                         (sigma * std::sqrt(2.0 * 3.141592653589793));
    const double jac = 0.5 * (1.0 - std::tanh(z) * std::tanh(z));
    return gauss / jac;
  };
  int checked = 0;
  for (int b = 0; b < bins; ++b) {
    const double center = lo + (b + 0.5) * width;
    const double expected = pdf(center) * width * n;
    if (expected < 2000.0) continue;  // skip bins where sampling noise dominates
    ++checked;
    CHECK(std::abs(counts[b] - expected) / expected < 0.05);
  }
  CHECK(checked >= 5);
}

TEST_CASE("sample_action is deterministic given the rng seed") {
  Rng init(3);
  GaussianPolicy p("p", 4, 2, 8, init);
  Vector x(4);
  x << 0.1, -0.2, 0.3, 0.4;
  Rng a(7), b(7);
  auto [a1, lp1] = sample_action(p, x, a);
  auto [a2, lp2] = sample_action(p, x, b);
  CHECK((a1 - a2).norm() == 0.0);
  CHECK(lp1 == lp2);
}

TEST_CASE("act_deterministic repeats itself and centers a zero network") {
  GaussianPolicy p = flat_policy(0.0, 0.0);
  Vector x = Vector::Zero(3);
  Vector a1 = act_deterministic(p, x);
  Vector a2 = act_deterministic(p, x);
  CHECK((a1 - a2).norm() == 0.0);
  CHECK(a1(0) == doctest::Approx(0.5));
}

TEST_CASE("deterministic action agrees with the stochastic mean at small sigma") {
  GaussianPolicy p = flat_policy(0.2, std::log(0.05));
  Vector x = Vector::Zero(3);
  Rng rng(4);
  double mean = 0.0;
  const int n = 100000;
  for (int i = 0; i < n; ++i) mean += sample_action(p, x, rng).first(0);
  mean /= n;
  CHECK(std::abs(mean - act_deterministic(p, x)(0)) < 0.02);
}

TEST_CASE("hindsight_relabel zeroes every reward and copies the trace") {
  auto env = neurosim::make_environment(
      neurosim::default_plant_config(neurosim::PlantType::vertical_arm));
  Rng rng(5);
  EpisodeTrace trace = make_env_trace(*env, rng, 80);
  EpisodeTrace original = trace;
  EpisodeTrace relabeled = hindsight_relabel(trace);

  for (std::size_t t = 0; t < relabeled.length(); ++t) {
    CHECK(relabeled.rewards[t] == 0.0);
    CHECK(relabeled.targets[t] == relabeled.observations[t](0));
  }
  // source untouched
  for (std::size_t t = 0; t < trace.length(); ++t) {
    CHECK(trace.targets[t] == original.targets[t]);
    CHECK(trace.rewards[t] == original.rewards[t]);
  }
  // idempotent
  EpisodeTrace twice = hindsight_relabel(relabeled);
  for (std::size_t t = 0; t < twice.length(); ++t) {
    CHECK(twice.targets[t] == relabeled.targets[t]);
    CHECK(twice.rewards[t] == 0.0);
  }
}

TEST_CASE("build_agent_transitions pairs consecutive steps") {
  auto norm = unit_normalization(2);
  EpisodeTrace trace;
  for (int t = 0; t < 2; ++t) {
    Vector obs(2);
    obs << 0.1 * t, 0.0;
    trace.observations.push_back(obs);
    trace.actions.push_back(Vector::Constant(1, 0.3));
    trace.targets.push_back(0.5);
    trace.rewards.push_back(-0.1 * t);
  }
  std::vector<Vector> hidden = {Vector::Zero(20), Vector::Ones(20)};
  auto transitions = build_agent_transitions(hidden, trace, norm);
  REQUIRE(transitions.size() == 1);
  CHECK(transitions[0].x.size() == 21);  // 20 hidden + 1 target
  CHECK(transitions[0].r == doctest::Approx(-0.1));
  CHECK(transitions[0].done);

  std::vector<Vector> wrong = {Vector::Zero(20)};
  CHECK_THROWS_AS(build_agent_transitions(wrong, trace, norm), std::invalid_argument);
}

TEST_CASE("transitions from a relabeled trace carry zero reward") {
  auto env = neurosim::make_environment(
      neurosim::default_plant_config(neurosim::PlantType::vertical_arm));
  Rng rng(6);
  EpisodeTrace trace = hindsight_relabel(make_env_trace(*env, rng, 60));
  std::vector<Vector> hidden(trace.length(), Vector::Zero(20));
  auto transitions = build_agent_transitions(hidden, trace, env->normalization());
  REQUIRE(transitions.size() == trace.length() - 1);
  for (const auto& t : transitions) CHECK(t.r == 0.0);
}

TEST_CASE("critic targets for a single terminal zero-reward transition are zero") {
  Rng init(8);
  SacAgent agent(3, 1, fast_cfg(), init);
  TempReplayBuffer buf = single_transition_buffer(3, 1);
  Rng rng(9);
  auto batch = agent.sample_batch(buf, 8, rng);
  auto targets = agent.critic_targets(batch, rng);
  CHECK(targets.norm() == 0.0);
}

TEST_CASE("critic loss decays toward zero on the degenerate buffer") {
  Rng init(10);
  SacAgent agent(3, 1, fast_cfg(), init);
  TempReplayBuffer buf = single_transition_buffer(3, 1);
  Rng rng(11);
  UpdateDiagnostics last;
  for (int round = 0; round < 6; ++round) last = agent.update(buf, 100, 8, rng);
  CHECK(last.critic_loss < 1e-3);
  CHECK(last.alpha > 0.0);
}

TEST_CASE("gamma = 0 reduces the critic target to the reward") {
  AgentConfig cfg = fast_cfg();
  cfg.gamma = 0.0;
  Rng init(12);
  SacAgent agent(4, 1, cfg, init);
  TempReplayBuffer buf(100);
  Rng data(13);
  for (int i = 0; i < 20; ++i) {
    AgentTransition t;
    t.x = Vector::Zero(4);
    for (int k = 0; k < 4; ++k) t.x(k) = data.uniform(-1, 1);
    t.a = Vector::Constant(1, data.uniform01());
    t.r = data.uniform(-2, 0);
    t.x_next = t.x;
    t.done = false;
    buf.add(t);
  }
  Rng rng(14);
  auto batch = agent.sample_batch(buf, 16, rng);
  auto targets = agent.critic_targets(batch, rng);
  for (int i = 0; i < 16; ++i) CHECK(targets(0, i) == doctest::Approx(batch.r(0, i)));
}

TEST_CASE("alpha falls when entropy exceeds the target and rises otherwise") {
  auto run_alpha = [](double target_per_dim) {
    AgentConfig cfg = fast_cfg();
    cfg.target_entropy_per_dim = target_per_dim;
    Rng init(15);
    SacAgent agent(3, 1, cfg, init);
    TempReplayBuffer buf = single_transition_buffer(3, 1);
    const double alpha0 = agent.alpha();
    Rng rng(16);
    agent.update(buf, 50, 8, rng);
    return std::make_pair(alpha0, agent.alpha());
  };
  // fresh policy entropy sits far above -10 nats -> alpha decreases
  auto [a0_low, a1_low] = run_alpha(-10.0);
  CHECK(a1_low < a0_low);
  // and far below +10 nats -> alpha increases
  auto [a0_high, a1_high] = run_alpha(10.0);
  CHECK(a1_high > a0_high);
}

TEST_CASE("actions stay in [0,1] in both modes (property)") {
  Rng init(17);
  SacAgent agent(5, 3, fast_cfg(), init);
  Rng rng(18);
  for (int i = 0; i < 300; ++i) {
    Vector x(5);
    for (int k = 0; k < 5; ++k) x(k) = rng.uniform(-3, 3);
    Vector a = agent.act(x, rng);
    Vector d = agent.act_deterministic(x);
    for (int k = 0; k < 3; ++k) {
      CHECK(a(k) >= 0.0);
      CHECK(a(k) <= 1.0);
      CHECK(d(k) >= 0.0);
      CHECK(d(k) <= 1.0);
    }
  }
}

TEST_CASE("target networks trail by exactly the Polyak rule") {
  Rng init(19);
  SacAgent agent(3, 1, fast_cfg(), init);
  TempReplayBuffer buf = single_transition_buffer(3, 1);

  std::vector<Matrix> old_target;
  for (auto* p : agent.target1().parameters()) old_target.push_back(p->value);

  Rng rng(20);
  agent.update(buf, 1, 4, rng);

  auto online = agent.critic1().parameters();
  auto target = agent.target1().parameters();
  const double tau = agent.config().tau_polyak;
  for (std::size_t i = 0; i < target.size(); ++i) {
    Matrix expect = (1.0 - tau) * old_target[i] + tau * online[i]->value;
    CHECK((target[i]->value - expect).norm() == 0.0);  // exact
  }
}

TEST_CASE("update is bit-reproducible from identical seeds") {
  auto build = [](std::uint64_t seed) {
    Rng init(seed);
    auto agent = std::make_unique<SacAgent>(3, 1, fast_cfg(), init);
    return agent;
  };
  auto a1 = build(21);
  auto a2 = build(21);
  TempReplayBuffer buf(1000);
  Rng data(22);
  for (int i = 0; i < 50; ++i) {
    AgentTransition t;
    t.x = Vector::Zero(3);
    for (int k = 0; k < 3; ++k) t.x(k) = data.uniform(-1, 1);
    t.a = Vector::Constant(1, data.uniform01());
    t.r = data.uniform(-1, 0);
    t.x_next = t.x;
    t.done = (i == 49);
    buf.add(t);
  }
  Rng r1(23), r2(23);
  auto d1 = a1->update(buf, 20, 8, r1);
  auto d2 = a2->update(buf, 20, 8, r2);
  CHECK(d1.critic_loss == d2.critic_loss);
  CHECK(d1.actor_loss == d2.actor_loss);
  CHECK(d1.alpha == d2.alpha);
  auto p1 = a1->policy().parameters();
  auto p2 = a2->policy().parameters();
  for (std::size_t i = 0; i < p1.size(); ++i) CHECK((p1[i]->value - p2[i]->value).norm() == 0.0);
}

TEST_CASE("agent checkpoint round-trip preserves behavior") {
  Rng init(24);
  SacAgent agent(4, 2, fast_cfg(), init);
  dynamo::Checkpoint ckpt;
  agent.add_to_checkpoint(ckpt, "agent.");

  Rng other(25);
  SacAgent restored(4, 2, fast_cfg(), other);
  restored.restore_from_checkpoint(ckpt, "agent.");
  Vector x(4);
  x << 0.4, -0.1, 0.2, 0.9;
  CHECK((agent.act_deterministic(x) - restored.act_deterministic(x)).norm() == 0.0);
  CHECK(agent.alpha() == restored.alpha());
}
