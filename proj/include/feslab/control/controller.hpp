#pragma once

#include "feslab/control/episode.hpp"
#include "feslab/control/pid.hpp"
#include "feslab/sacagent/agent.hpp"
#include "feslab/staterep/state_rep.hpp"

#include <memory>

namespace feslab::control {

/// Anything that maps (observation, target) to a stimulation command once per
/// control step. Implementations carry their own per-episode state.
class Controller {
 public:
  virtual ~Controller() = default;
  virtual void begin_episode() = 0;
  virtual Vector act(const neurosim::EnvObservation& obs, double target) = 0;
};

/// Deterministic-policy RL controller: state-representation encoding followed
/// by the squashed policy mean.
class RlController final : public Controller {
 public:
  RlController(const sacagent::SacAgent& agent, const staterep::StateRepUnit& unit,
               const IntensityQuantizer* quantizer = nullptr);

  void begin_episode() override;
  Vector act(const neurosim::EnvObservation& obs, double target) override;

 private:
  const sacagent::SacAgent& agent_;
  const staterep::StateRepUnit& unit_;
  const IntensityQuantizer* quantizer_;
  Vector hidden_;
  Vector prev_action_;
};

/// PID on the joint angle. One channel drives the flexor directly; with an
/// antagonist channel the signed demand splits into flexor/extensor commands.
class PidArmController final : public Controller {
 public:
  PidArmController(PidGains gains, int channels, double control_dt,
                   const IntensityQuantizer* quantizer = nullptr);

  void begin_episode() override;
  Vector act(const neurosim::EnvObservation& obs, double target) override;

 private:
  PidController pid_;
  int channels_;
  double dt_;
  const IntensityQuantizer* quantizer_;
};

/// Single PID on cadence whose output is routed through a pre-defined active
/// muscle pattern over the crank angle.
class PidCyclingController final : public Controller {
 public:
  PidCyclingController(PidGains gains, ActiveMusclePattern pattern, int channels,
                       double control_dt, const IntensityQuantizer* quantizer = nullptr);

  void begin_episode() override;
  Vector act(const neurosim::EnvObservation& obs, double target) override;

 private:
  PidController pid_;
  ActiveMusclePattern pattern_;
  int channels_;
  double dt_;
  const IntensityQuantizer* quantizer_;
};

/// PID controller wired for the given plant type.
std::unique_ptr<Controller> make_pid_controller(const neurosim::Environment& env, PidGains gains,
                                                const IntensityQuantizer* quantizer = nullptr);

}  // namespace feslab::control
