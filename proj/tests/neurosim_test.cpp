#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "feslab/common/errors.hpp"
#include "feslab/common/rng.hpp"
#include "feslab/neurosim/defaults.hpp"
#include "feslab/neurosim/env.hpp"
#include "feslab/neurosim/muscle.hpp"
#include "feslab/neurosim/plants.hpp"

#include <chrono>
#include <cmath>

using namespace feslab;
using namespace feslab::neurosim;

namespace {

constexpr double kDegToRad = 0.017453292519943295;

MuscleParams test_muscle() {
  MuscleParams p;
  p.f_max = 300.0;
  p.moment_arm = 0.035;
  p.tau_act = 0.05;
  p.tau_deact = 0.08;
  p.fatigue_rate = 0.01;
  p.recovery_rate = 0.002;
  return p;
}

double partition_error(const MuscleState& m) {
  return std::abs(m.m_rested + m.m_active + m.m_fatigued - 1.0);
}

double arm_energy(const ArmPlant& plant, const ArmState& s) {
  // Potential zero at theta = 0 for the theta_ref = pi/2 convention.
  const double kinetic = 0.5 * plant.inertia * s.theta_dot * s.theta_dot;
  const double potential =
      plant.segment_mass * plant.gravity * plant.com_distance * (1.0 - std::cos(s.theta));
  return kinetic + potential;
}

}  // namespace

TEST_CASE("activation: zero input is a fixed point") {
  MuscleParams p = test_muscle();
  MuscleState m;
  m = step_activation(m, 0.0, 0.5, p);
  CHECK(m.activation == 0.0);
}

TEST_CASE("activation matches the closed-form first-order response") {
  MuscleParams p = test_muscle();
  p.tau_act = 0.05;
  MuscleState m;
  m = step_activation(m, 1.0, 0.1, p);
  CHECK(m.activation == doctest::Approx(1.0 - std::exp(-2.0)).epsilon(1e-3));
}

TEST_CASE("activation: full input saturates and stays") {
  MuscleParams p = test_muscle();
  MuscleState m;
  m.activation = 1.0;
  m = step_activation(m, 1.0, 0.2, p);
  CHECK(m.activation == 1.0);
}

TEST_CASE("activation stays in [0,1] for any admissible input (property)") {
  MuscleParams p = test_muscle();
  Rng rng(3);
  MuscleState m;
  for (int i = 0; i < 500; ++i) {
    m = step_activation(m, rng.uniform01(), 0.1, p);
    CHECK(m.activation >= 0.0);
    CHECK(m.activation <= 1.0);
  }
}

TEST_CASE("fatigue: no activation means no fatigue") {
  MuscleParams p = test_muscle();
  MuscleState m;
  m = step_fatigue(m, 30.0, p);
  CHECK(m.m_fatigued == 0.0);
  CHECK(m.m_rested == doctest::Approx(1.0));
}

TEST_CASE("fatigue calibration hits the 50%-capacity window") {
  MuscleParams p = test_muscle();
  const double f_fast = calibrate_fatigue_rate(60.0, p);
  const double f_slow = calibrate_fatigue_rate(120.0, p);
  CHECK(f_fast > f_slow);
  CHECK(time_to_half_capacity(f_fast, p) == doctest::Approx(60.0).epsilon(0.02));
  CHECK(time_to_half_capacity(f_slow, p) == doctest::Approx(120.0).epsilon(0.02));
}

TEST_CASE("fatigue recovers strictly once stimulation stops") {
  MuscleParams p = test_muscle();
  // fatigue the muscle first
  MuscleState m;
  for (int i = 0; i < 300; ++i) {
    m = step_activation(m, 1.0, 0.1, p);
    m = step_fatigue(m, 0.1, p);
  }
  CHECK(m.m_fatigued > 0.05);
  // let activation and the active pool drain, then watch M_F decay
  for (int i = 0; i < 50; ++i) {
    m = step_activation(m, 0.0, 0.1, p);
    m = step_fatigue(m, 0.1, p);
  }
  double prev = m.m_fatigued;
  for (int i = 0; i < 100; ++i) {
    m = step_activation(m, 0.0, 0.1, p);
    m = step_fatigue(m, 0.1, p);
    CHECK(m.m_fatigued < prev);
    prev = m.m_fatigued;
  }
}

TEST_CASE("capacity monotone: non-increasing under u=1, non-decreasing under u=0") {
  MuscleParams p = test_muscle();
  MuscleState m;
  double prev_cap = capacity(m);
  for (int i = 0; i < 200; ++i) {
    m = step_activation(m, 1.0, 0.1, p);
    m = step_fatigue(m, 0.1, p);
    CHECK(capacity(m) <= prev_cap + 1e-12);
    prev_cap = capacity(m);
  }
  // rest from a drained-active state
  MuscleState rested;
  rested.m_fatigued = 0.4;
  rested.m_rested = 0.6;
  prev_cap = capacity(rested);
  for (int i = 0; i < 200; ++i) {
    rested = step_activation(rested, 0.0, 0.1, p);
    rested = step_fatigue(rested, 0.1, p);
    CHECK(capacity(rested) >= prev_cap - 1e-12);
    prev_cap = capacity(rested);
  }
}

TEST_CASE("muscle_force follows the capacity definition") {
  MuscleParams p = test_muscle();
  MuscleState m;
  m.activation = 1.0;
  m.m_fatigued = 0.0;
  m.m_rested = 0.0;
  m.m_active = 1.0;
  CHECK(muscle_force(m, p) == doctest::Approx(p.f_max));
  m.m_fatigued = 0.3;
  m.m_active = 0.7;
  CHECK(muscle_force(m, p) == doctest::Approx(0.7 * p.f_max));
  m.activation = 0.0;
  CHECK(muscle_force(m, p) == 0.0);
}

TEST_CASE("step_arm: equilibrium without stimulation, gravity, damping") {
  PlantConfig cfg = default_plant_config(PlantType::horizontal_arm);
  cfg.arm.damping = 0.0;
  ArmPlant plant = cfg.arm;
  ArmState s;
  s.theta = 1.0;
  s.theta_dot = 0.0;
  s.muscles.assign(plant.muscles.size(), MuscleState{});
  StimCommand cmd = StimCommand::Zero(plant.channels);
  auto [next, obs] = step_arm(plant, s, cmd, 0.1);
  CHECK(obs(0) == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(obs(1) == doctest::Approx(0.0));
}

TEST_CASE("step_arm: gravity pulls the vertical arm down") {
  PlantConfig cfg = default_plant_config(PlantType::vertical_arm);
  ArmPlant plant = cfg.arm;
  ArmState s;
  s.theta = 60.0 * kDegToRad;
  s.muscles.assign(plant.muscles.size(), MuscleState{});
  StimCommand cmd = StimCommand::Zero(plant.channels);
  auto [next, obs] = step_arm(plant, s, cmd, 0.1);
  CHECK(obs(1) < 0.0);
  CHECK(obs(0) < 60.0 * kDegToRad);
}

TEST_CASE("step_arm: passive swing conserves energy within 0.5% over 10 s") {
  PlantConfig cfg = default_plant_config(PlantType::vertical_arm);
  ArmPlant plant = cfg.arm;
  plant.damping = 0.0;
  plant.theta_min = -10.0;  // widen stops so the swing never hits them
  plant.theta_max = 10.0;
  ArmState s;
  s.theta = 100.0 * kDegToRad;
  s.theta_dot = 0.0;
  s.muscles.assign(plant.muscles.size(), MuscleState{});
  StimCommand cmd = StimCommand::Zero(plant.channels);
  const double e0 = arm_energy(plant, s);
  double worst = 0.0;
  for (int step = 0; step < 100; ++step) {
    auto [next, obs] = step_arm(plant, std::move(s), cmd, 0.1);
    s = std::move(next);
    worst = std::max(worst, std::abs(arm_energy(plant, s) - e0) / e0);
  }
  CHECK(worst < 0.005);
}

TEST_CASE("step_arm: joint limits are inelastic stops") {
  PlantConfig cfg = default_plant_config(PlantType::vertical_arm);
  ArmPlant plant = cfg.arm;
  ArmState s;
  s.theta = 5.0 * kDegToRad;
  s.theta_dot = 0.0;
  s.muscles.assign(plant.muscles.size(), MuscleState{});
  StimCommand cmd = StimCommand::Zero(plant.channels);
  for (int i = 0; i < 20; ++i) {
    auto [next, obs] = step_arm(plant, std::move(s), cmd, 0.1);
    s = std::move(next);
  }
  CHECK(s.theta == doctest::Approx(plant.theta_min));
  CHECK(s.theta_dot == 0.0);
}

TEST_CASE("step_arm rejects a wrong channel count") {
  PlantConfig cfg = default_plant_config(PlantType::vertical_arm);
  ArmState s;
  s.muscles.assign(cfg.arm.muscles.size(), MuscleState{});
  StimCommand cmd = StimCommand::Zero(3);
  CHECK_THROWS_AS(step_arm(cfg.arm, s, cmd, 0.1), std::invalid_argument);
}

TEST_CASE("step_crank: rest stays at rest") {
  PlantConfig cfg = default_plant_config(PlantType::cycling);
  CrankState s;
  s.muscles.assign(cfg.crank.muscles.size(), MuscleState{});
  StimCommand cmd = StimCommand::Zero(6);
  auto [next, obs] = step_crank(cfg.crank, s, cmd, 0.1);
  CHECK(obs(0) == 0.0);
  CHECK(next.phi == 0.0);
}

TEST_CASE("step_crank: no torque outside the effectiveness lobe") {
  PlantConfig cfg = default_plant_config(PlantType::cycling);
  const MuscleParams& hams = cfg.crank.muscles[2];  // centered at 170 deg
  CHECK(lobe_effectiveness(0.0, hams) == 0.0);
  CHECK(lobe_effectiveness(hams.lobe_center, hams) == doctest::Approx(1.0));

  // stimulate only the right hamstrings while the crank sits at phi = 0
  CrankState s;
  s.muscles.assign(cfg.crank.muscles.size(), MuscleState{});
  StimCommand cmd = StimCommand::Zero(6);
  cmd(2) = 1.0;
  auto [next, obs] = step_crank(cfg.crank, s, cmd, 0.1);
  CHECK(obs(0) == 0.0);
}

TEST_CASE("step_crank: alternating quadriceps drive yields positive cadence") {
  PlantConfig cfg = default_plant_config(PlantType::cycling);
  CrankState s;
  s.muscles.assign(cfg.crank.muscles.size(), MuscleState{});
  double mean_cadence = 0.0;
  int steps = 0;
  for (int i = 0; i < 100; ++i) {  // 10 s
    StimCommand cmd = StimCommand::Zero(6);
    if (lobe_effectiveness(s.phi, cfg.crank.muscles[0]) > 0.0) cmd(0) = 0.6;
    if (lobe_effectiveness(s.phi, cfg.crank.muscles[3]) > 0.0) cmd(3) = 0.6;
    auto [next, obs] = step_crank(cfg.crank, std::move(s), cmd, 0.1);
    s = std::move(next);
    mean_cadence += obs(0);
    ++steps;
  }
  CHECK(mean_cadence / steps > 0.0);
  CHECK(s.phi_dot > 0.0);
}

TEST_CASE("reward examples") {
  EnvObservation obs(2);
  obs << 70.0 * kDegToRad, 0.0;
  CHECK(reward(obs, 70.0 * kDegToRad) == 0.0);
  obs(0) = 20.0 * kDegToRad;
  CHECK(reward(obs, 70.0 * kDegToRad) == doctest::Approx(-0.8727).epsilon(1e-4));
  // symmetry
  EnvObservation swapped(2);
  swapped << 70.0 * kDegToRad, 0.0;
  CHECK(reward(obs, 70.0 * kDegToRad) == doctest::Approx(reward(swapped, 20.0 * kDegToRad)));
}

TEST_CASE("reset_with_sampled_fatigue is deterministic per seed") {
  auto env = make_environment(default_plant_config(PlantType::vertical_arm));
  Rng a(77), b(77);
  env->reset_with_sampled_fatigue(a);
  auto r1 = env->sampled_fatigue_rates();
  auto f1 = env->sampled_initial_fatigue();
  env->reset_with_sampled_fatigue(b);
  CHECK(env->sampled_fatigue_rates() == r1);
  CHECK(env->sampled_initial_fatigue() == f1);
}

TEST_CASE("reset sampling: initial fatigue is U(0, 0.3)") {
  auto env = make_environment(default_plant_config(PlantType::vertical_arm));
  Rng rng(123);
  double sum = 0.0;
  const int n = 10000;
  for (int i = 0; i < n; ++i) {
    env->reset_with_sampled_fatigue(rng);
    const double mf = env->sampled_initial_fatigue()[0];
    CHECK(mf >= 0.0);
    CHECK(mf <= 0.3);
    sum += mf;
  }
  const double mean = sum / n;
  CHECK(mean > 0.145);
  CHECK(mean < 0.155);
}

TEST_CASE("sampled fatigue rates replay to a 50% time inside [60 s, 120 s]") {
  auto env = make_environment(default_plant_config(PlantType::vertical_arm));
  MuscleParams base = env->config().arm.muscles[0];
  Rng rng(5);
  for (int i = 0; i < 20; ++i) {
    env->reset_with_sampled_fatigue(rng);
    const double rate = env->sampled_fatigue_rates()[0];
    const double t50 = time_to_half_capacity(rate, base);
    CHECK(t50 >= 59.0);
    CHECK(t50 <= 121.0);
  }
}

TEST_CASE("compartment partition holds through a full episode") {
  auto env = make_environment(default_plant_config(PlantType::vertical_arm));
  Rng rng(9);
  env->reset_with_sampled_fatigue(rng);
  StimCommand cmd(1);
  double worst = 0.0;
  // probe via muscle-level integration alongside the env
  MuscleParams p = env->config().arm.muscles[0];
  MuscleState m;
  for (int t = 0; t < 1800; ++t) {
    cmd(0) = rng.uniform01();
    env->step(cmd);
    m = step_activation(m, cmd(0), 0.1, p);
    m = step_fatigue(m, 0.1, p);
    worst = std::max(worst, partition_error(m));
  }
  CHECK(worst < 1e-9);
}

TEST_CASE("trajectories are bit-identical for identical seeds and commands") {
  auto env1 = make_environment(default_plant_config(PlantType::cycling));
  auto env2 = make_environment(default_plant_config(PlantType::cycling));
  Rng a(31), b(31);
  env1->reset_with_sampled_fatigue(a);
  env2->reset_with_sampled_fatigue(b);
  Rng cmd_rng(7);
  for (int t = 0; t < 100; ++t) {
    StimCommand cmd(6);
    for (int c = 0; c < 6; ++c) cmd(c) = cmd_rng.uniform01();
    EnvObservation o1 = env1->step(cmd);
    EnvObservation o2 = env2->step(cmd);
    CHECK((o1 - o2).norm() == 0.0);
  }
}

TEST_CASE("cycling control step fits the time budget") {
  auto env = make_environment(default_plant_config(PlantType::cycling));
  Rng rng(1);
  env->reset_with_sampled_fatigue(rng);
  StimCommand cmd = StimCommand::Constant(6, 0.4);
  // warm up
  for (int t = 0; t < 50; ++t) env->step(cmd);
  const auto start = std::chrono::steady_clock::now();
  const int n = 500;
  for (int t = 0; t < n; ++t) env->step(cmd);
  const auto elapsed = std::chrono::duration<double>(std::chrono::steady_clock::now() - start);
  CHECK(elapsed.count() / n < 1e-3);
}

TEST_CASE("left and right leg lobes are offset by pi") {
  PlantConfig cfg = default_plant_config(PlantType::cycling);
  const double pi = 3.141592653589793;
  for (int i = 0; i < 3; ++i) {
    const double right = cfg.crank.muscles[i].lobe_center;
    const double left = cfg.crank.muscles[i + 3].lobe_center;
    const double diff = std::fmod(std::abs(left - right), 2.0 * pi);
    CHECK(std::min(diff, 2.0 * pi - diff) == doctest::Approx(pi).epsilon(1e-9));
  }
}
