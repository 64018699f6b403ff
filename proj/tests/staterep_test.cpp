#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "feslab/neurosim/defaults.hpp"
#include "feslab/staterep/state_rep.hpp"
#include "test_helpers.hpp"

#include <cmath>

using namespace feslab;
using namespace feslab::staterep;
using feslab::testing::make_env_trace;
using feslab::testing::unit_normalization;

namespace {

StateRepConfig small_cfg(int hidden = 8) {
  StateRepConfig cfg;
  cfg.hidden_size = hidden;
  cfg.bptt_window = 25;
  cfg.learning_rate = 3e-3;
  return cfg;
}

// Constant observation, random held actions.
EpisodeTrace constant_obs_trace(const Vector& obs, int action_dim, int steps, Rng& rng) {
  EpisodeTrace tr;
  Vector a = Vector::Zero(action_dim);
  for (int t = 0; t < steps; ++t) {
    if (t % 7 == 0)
      for (int c = 0; c < action_dim; ++c) a(c) = rng.uniform01();
    tr.observations.push_back(obs);
    tr.actions.push_back(a);
    tr.targets.push_back(0.0);
    tr.rewards.push_back(0.0);
  }
  return tr;
}

// Stable two-state linear system driven by piecewise-held one-channel input.
EpisodeTrace linear_system_trace(int steps, Rng& rng) {
  Eigen::Matrix2d a;
  a << 0.7, 0.3, -0.2, 0.8;
  Eigen::Vector2d b(0.3, 0.1);
  EpisodeTrace tr;
  Eigen::Vector2d x(rng.uniform(-0.5, 0.5), rng.uniform(-0.5, 0.5));
  Vector u = Vector::Zero(1);
  for (int t = 0; t < steps; ++t) {
    if (t % 10 == 0) u(0) = rng.uniform01();
    tr.observations.push_back(x);
    tr.actions.push_back(u);
    tr.targets.push_back(0.0);
    tr.rewards.push_back(0.0);
    x = a * x + b * u(0);
  }
  return tr;
}

double predict_previous_mse(const EpisodeTrace& tr) {
  double sum = 0.0;
  std::size_t n = 0;
  for (std::size_t t = 0; t + 1 < tr.length(); ++t) {
    sum += (tr.observations[t + 1] - tr.observations[t]).squaredNorm();
    n += static_cast<std::size_t>(tr.observations[t].size());
  }
  return sum / static_cast<double>(n);
}

}  // namespace

TEST_CASE("encode_step with zero parameters keeps the zero hidden state") {
  Rng rng(1);
  StateRepUnit unit(2, 1, unit_normalization(2), small_cfg(), rng);
  unit.gru().w_z.value.setZero();
  unit.gru().w_r.value.setZero();
  unit.gru().w_h.value.setZero();
  unit.gru().u_z.value.setZero();
  unit.gru().u_r.value.setZero();
  unit.gru().u_h.value.setZero();
  unit.gru().b_z.value.setZero();
  unit.gru().b_r.value.setZero();
  unit.gru().b_h.value.setZero();
  Vector obs(2);
  obs << 0.4, -0.2;
  Vector h = unit.encode_step(obs, Vector::Zero(1), unit.initial_hidden());
  CHECK(h.norm() == 0.0);
}

TEST_CASE("encode_step is deterministic") {
  Rng rng(2);
  StateRepUnit unit(2, 1, unit_normalization(2), small_cfg(), rng);
  Vector obs(2);
  obs << 0.3, 0.1;
  Vector act(1);
  act << 0.7;
  Vector h(8);
  for (int i = 0; i < 8; ++i) h(i) = 0.05 * i;
  CHECK((unit.encode_step(obs, act, h) - unit.encode_step(obs, act, h)).norm() == 0.0);
}

TEST_CASE("encode_step over 3 steps matches a manual gru_step unroll") {
  Rng rng(3);
  StateRepUnit unit(2, 1, unit_normalization(2), small_cfg(), rng);
  std::vector<Vector> obs(3, Vector(2)), act(3, Vector(1));
  Rng data(4);
  for (int t = 0; t < 3; ++t) {
    obs[t] << data.uniform(-1, 1), data.uniform(-1, 1);
    act[t] << data.uniform01();
  }
  Vector h = unit.initial_hidden();
  Vector prev = Vector::Zero(1);
  for (int t = 0; t < 3; ++t) {
    h = unit.encode_step(obs[t], prev, h);
    prev = act[t];
  }
  // manual unroll through the raw GRU
  Vector hm = Vector::Zero(8);
  prev = Vector::Zero(1);
  for (int t = 0; t < 3; ++t) {
    Vector x(3);
    x.head(2) = obs[t];
    x(2) = (prev(0) - 0.5) / 0.5;
    hm = dynamo::gru_step(unit.gru(), x, hm);
    prev = act[t];
  }
  CHECK((h - hm).norm() == 0.0);
}

TEST_CASE("predict_next with a zero head returns the channel means") {
  Rng rng(5);
  neurosim::Normalization norm;
  norm.obs_mean = Vector(2);
  norm.obs_mean << 1.5, -2.0;
  norm.obs_scale = Vector(2);
  norm.obs_scale << 2.0, 3.0;
  StateRepUnit unit(2, 1, norm, small_cfg(), rng);
  unit.head().weights.value.setZero();
  unit.head().bias.value.setZero();
  Vector h(8);
  h.setConstant(0.3);
  Vector pred = unit.predict_next(h);
  CHECK(pred(0) == doctest::Approx(1.5));
  CHECK(pred(1) == doctest::Approx(-2.0));
}

TEST_CASE("normalization round-trips to 1e-12") {
  auto cfg = neurosim::default_plant_config(neurosim::PlantType::vertical_arm);
  auto norm = neurosim::make_normalization(cfg);
  Rng rng(6);
  for (int i = 0; i < 100; ++i) {
    Vector obs(2);
    obs << rng.uniform(0.0, 2.6), rng.uniform(-5.0, 5.0);
    Vector back = norm.denormalize_obs(norm.normalize_obs(obs));
    CHECK((back - obs).norm() < 1e-12);
  }
}

TEST_CASE("train_supervised with zero epochs changes nothing") {
  Rng rng(7);
  StateRepUnit unit(2, 1, unit_normalization(2), small_cfg(), rng);
  Matrix before = unit.gru().w_h.value;
  Rng data(8);
  std::vector<EpisodeTrace> traces = {linear_system_trace(40, data)};
  Rng train(9);
  auto history = unit.train_supervised(std::span<const EpisodeTrace>(traces), 0, train);
  CHECK(history.empty());
  CHECK((unit.gru().w_h.value - before).norm() == 0.0);
}

TEST_CASE("train_supervised rejects an empty episode list") {
  Rng rng(10);
  StateRepUnit unit(2, 1, unit_normalization(2), small_cfg(), rng);
  std::vector<EpisodeTrace> traces;
  Rng train(11);
  CHECK_THROWS_AS(unit.train_supervised(std::span<const EpisodeTrace>(traces), 1, train),
                  std::invalid_argument);
}

TEST_CASE("training on a constant-observation stream drives the error to zero") {
  Rng rng(12);
  StateRepUnit unit(2, 1, unit_normalization(2), small_cfg(), rng);
  Vector obs(2);
  obs << 0.25, -0.4;
  Rng data(13);
  std::vector<EpisodeTrace> traces;
  for (int i = 0; i < 4; ++i) traces.push_back(constant_obs_trace(obs, 1, 60, data));
  Rng train(14);
  unit.train_supervised(std::span<const EpisodeTrace>(traces), 300, train);
  CHECK(unit.prediction_mse(traces[0]) < 1e-3);
}

TEST_CASE("30 synthetic vertical episodes, 20 epochs: loss at least halves") {
  auto env = neurosim::make_environment(
      neurosim::default_plant_config(neurosim::PlantType::vertical_arm));
  Rng data(15);
  std::vector<EpisodeTrace> traces;
  for (int i = 0; i < 30; ++i) traces.push_back(make_env_trace(*env, data, 300));
  Rng init(16);
  StateRepConfig cfg;  // production-sized unit
  StateRepUnit unit(2, 1, env->normalization(), cfg, init);
  Rng train(17);
  auto history = unit.train_supervised(std::span<const EpisodeTrace>(traces), 20, train);
  REQUIRE(history.size() == 20);
  CHECK(history.back() <= 0.5 * history.front());

  // loss non-increasing in at least 80% of consecutive epoch pairs
  int non_increasing = 0;
  for (std::size_t i = 1; i < history.size(); ++i)
    if (history[i] <= history[i - 1]) ++non_increasing;
  CHECK(non_increasing >= static_cast<int>(0.8 * (history.size() - 1)));
}

TEST_CASE("training twice from the same seed gives identical loss histories") {
  auto env = neurosim::make_environment(
      neurosim::default_plant_config(neurosim::PlantType::vertical_arm));
  Rng data(18);
  std::vector<EpisodeTrace> traces;
  for (int i = 0; i < 3; ++i) traces.push_back(make_env_trace(*env, data, 120));

  Rng init1(19), init2(19);
  StateRepUnit u1(2, 1, env->normalization(), small_cfg(), init1);
  StateRepUnit u2(2, 1, env->normalization(), small_cfg(), init2);
  Rng t1(20), t2(20);
  auto h1 = u1.train_supervised(std::span<const EpisodeTrace>(traces), 5, t1);
  auto h2 = u2.train_supervised(std::span<const EpisodeTrace>(traces), 5, t2);
  CHECK(h1 == h2);
}

TEST_CASE("after training, held-out prediction beats the untrained unit by half") {
  auto env = neurosim::make_environment(
      neurosim::default_plant_config(neurosim::PlantType::vertical_arm));
  Rng data(21);
  std::vector<EpisodeTrace> traces;
  for (int i = 0; i < 10; ++i) traces.push_back(make_env_trace(*env, data, 200));
  EpisodeTrace held_out = make_env_trace(*env, data, 200);

  Rng init(22);
  StateRepUnit unit(2, 1, env->normalization(), small_cfg(), init);
  const double untrained = unit.prediction_mse(held_out);
  Rng train(23);
  unit.train_supervised(std::span<const EpisodeTrace>(traces), 15, train);
  const double trained = unit.prediction_mse(held_out);
  CHECK(trained <= 0.5 * untrained);
}

TEST_CASE("trained unit beats the predict-previous baseline on a linear system") {
  Rng data(24);
  std::vector<EpisodeTrace> traces;
  for (int i = 0; i < 6; ++i) traces.push_back(linear_system_trace(150, data));
  EpisodeTrace held_out = linear_system_trace(150, data);

  Rng init(25);
  StateRepUnit unit(2, 1, unit_normalization(2), small_cfg(), init);
  Rng train(26);
  unit.train_supervised(std::span<const EpisodeTrace>(traces), 150, train);
  CHECK(unit.prediction_mse(held_out) < predict_previous_mse(held_out));
}

TEST_CASE("regenerate_hidden: empty trace gives an empty sequence") {
  Rng rng(27);
  StateRepUnit unit(2, 1, unit_normalization(2), small_cfg(), rng);
  EpisodeTrace empty;
  CHECK(unit.regenerate_hidden(empty).empty());
}

TEST_CASE("regenerate_hidden is reproducible and matches the online encoding") {
  auto env = neurosim::make_environment(
      neurosim::default_plant_config(neurosim::PlantType::vertical_arm));
  Rng data(28);
  EpisodeTrace trace = make_env_trace(*env, data, 100);
  Rng init(29);
  StateRepUnit unit(2, 1, env->normalization(), small_cfg(), init);

  // online encoding over the same trace
  std::vector<Vector> online;
  Vector h = unit.initial_hidden();
  Vector prev = Vector::Zero(1);
  for (std::size_t t = 0; t < trace.length(); ++t) {
    h = unit.encode_step(trace.observations[t], prev, h);
    online.push_back(h);
    prev = trace.actions[t];
  }

  auto regen1 = unit.regenerate_hidden(trace);
  auto regen2 = unit.regenerate_hidden(trace);
  REQUIRE(regen1.size() == online.size());
  for (std::size_t t = 0; t < regen1.size(); ++t) {
    CHECK((regen1[t] - online[t]).norm() == 0.0);  // bit-exact
    CHECK((regen1[t] - regen2[t]).norm() == 0.0);
  }
}

TEST_CASE("regenerated hidden states move once the unit trains") {
  auto env = neurosim::make_environment(
      neurosim::default_plant_config(neurosim::PlantType::vertical_arm));
  Rng data(30);
  EpisodeTrace trace = make_env_trace(*env, data, 120);
  Rng init(31);
  StateRepUnit unit(2, 1, env->normalization(), small_cfg(), init);
  auto before = unit.regenerate_hidden(trace);
  std::vector<EpisodeTrace> traces = {trace};
  Rng train(32);
  unit.train_supervised(std::span<const EpisodeTrace>(traces), 3, train);
  auto after = unit.regenerate_hidden(trace);
  double diff = 0.0;
  for (std::size_t t = 0; t < before.size(); ++t) diff += (before[t] - after[t]).norm();
  CHECK(diff > 0.0);
}

TEST_CASE("checkpoint round-trip preserves the unit exactly") {
  auto env = neurosim::make_environment(
      neurosim::default_plant_config(neurosim::PlantType::vertical_arm));
  Rng init(33);
  StateRepUnit unit(2, 1, env->normalization(), small_cfg(), init);
  dynamo::Checkpoint ckpt;
  unit.add_to_checkpoint(ckpt, "");

  Rng other(99);
  StateRepUnit restored(2, 1, env->normalization(), small_cfg(), other);
  restored.restore_from_checkpoint(ckpt, "");
  Vector obs(2);
  obs << 0.9, -0.5;
  Vector act(1);
  act << 0.25;
  Vector h(8);
  h.setConstant(0.1);
  CHECK((unit.encode_step(obs, act, h) - restored.encode_step(obs, act, h)).norm() == 0.0);
}
