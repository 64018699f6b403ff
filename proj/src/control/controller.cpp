#include "feslab/control/controller.hpp"

#include <cmath>

namespace feslab::control {

RlController::RlController(const sacagent::SacAgent& agent, const staterep::StateRepUnit& unit,
                           const IntensityQuantizer* quantizer)
    : agent_(agent), unit_(unit), quantizer_(quantizer) {
  begin_episode();
}

void RlController::begin_episode() {
  hidden_ = unit_.initial_hidden();
  prev_action_ = Vector::Zero(unit_.action_dim());
}

Vector RlController::act(const neurosim::EnvObservation& obs, double target) {
  hidden_ = unit_.encode_step(obs, prev_action_, hidden_);
  Vector x(unit_.hidden_size() + 1);
  x.head(unit_.hidden_size()) = hidden_;
  x(unit_.hidden_size()) = unit_.normalization().normalize_target(target);
  Vector action = agent_.act_deterministic(x);
  if (quantizer_) action = quantizer_->quantize(action);
  prev_action_ = action;
  return action;
}

PidArmController::PidArmController(PidGains gains, int channels, double control_dt,
                                   const IntensityQuantizer* quantizer)
    : pid_(gains, channels > 1 ? -1.0 : 0.0, 1.0), channels_(channels), dt_(control_dt),
      quantizer_(quantizer) {}

void PidArmController::begin_episode() { pid_.reset(); }

Vector PidArmController::act(const neurosim::EnvObservation& obs, double target) {
  const double demand = pid_.step(target - obs(0), obs(0), dt_);
  Vector u = Vector::Zero(channels_);
  if (channels_ == 1) {
    u(0) = std::clamp(demand, 0.0, 1.0);
  } else {
    u(0) = std::clamp(demand, 0.0, 1.0);    // flexor
    u(1) = std::clamp(-demand, 0.0, 1.0);   // extensor
  }
  if (quantizer_) u = quantizer_->quantize(u);
  return u;
}

PidCyclingController::PidCyclingController(PidGains gains, ActiveMusclePattern pattern,
                                           int channels, double control_dt,
                                           const IntensityQuantizer* quantizer)
    : pid_(gains, 0.0, 1.0), pattern_(std::move(pattern)), channels_(channels), dt_(control_dt),
      quantizer_(quantizer) {}

void PidCyclingController::begin_episode() { pid_.reset(); }

Vector PidCyclingController::act(const neurosim::EnvObservation& obs, double target) {
  const double cadence = obs(0);
  const double phi = std::atan2(obs(1), obs(2)) >= 0.0
                         ? std::atan2(obs(1), obs(2))
                         : std::atan2(obs(1), obs(2)) + 6.283185307179586476925286766559;
  const double demand = pid_.step(target - cadence, cadence, dt_);
  Vector u = Vector::Zero(channels_);
  for (int c = 0; c < channels_; ++c)
    if (pattern_.active(static_cast<std::size_t>(c), phi)) u(c) = demand;
  if (quantizer_) u = quantizer_->quantize(u);
  return u;
}

std::unique_ptr<Controller> make_pid_controller(const neurosim::Environment& env, PidGains gains,
                                                const IntensityQuantizer* quantizer) {
  if (env.type() == neurosim::PlantType::cycling) {
    auto pattern = ActiveMusclePattern::from_lobes(env.config().crank.muscles);
    return std::make_unique<PidCyclingController>(gains, std::move(pattern), env.action_dim(),
                                                  env.control_dt(), quantizer);
  }
  return std::make_unique<PidArmController>(gains, env.action_dim(), env.control_dt(), quantizer);
}

}  // namespace feslab::control
