#pragma once

#include "feslab/control/config.hpp"
#include "feslab/control/episode.hpp"
#include "feslab/sacagent/agent.hpp"

#include <functional>
#include <memory>
#include <vector>

namespace feslab::control {

struct EpisodeDiagnostics {
  int episode = 0;
  double mean_abs_error = 0.0;  // report units (deg or RPM)
  double actor_loss = 0.0;
  double critic_loss = 0.0;
  double alpha = 0.0;
  double staterep_loss = 0.0;   // last supervised epoch of this episode end
  double wall_seconds = 0.0;
};

struct StateRepLossRow {
  int episode = 0;
  int epoch = 0;
  double mse = 0.0;
};

struct TrainResult {
  std::unique_ptr<neurosim::Environment> env;
  std::unique_ptr<staterep::StateRepUnit> unit;
  std::unique_ptr<sacagent::SacAgent> agent;
  std::vector<double> learning_curve;  // per-episode mean absolute tracking error
  std::vector<EpisodeDiagnostics> diagnostics;
  std::vector<StateRepLossRow> staterep_history;
};

using ProgressFn = std::function<void(const EpisodeDiagnostics&)>;

/// The episodic training protocol. Each episode: roll the stochastic policy
/// for the configured number of steps, then (strictly phased, no learning
/// during the rollout) train the state-representation unit on the stored
/// traces, regenerate every stored trace's hidden states with the fresh
/// parameters, relabel a hindsight copy of each series, rebuild the temporary
/// buffer from both, and run the agent's gradient sweep. Raw traces persist
/// in a FIFO store; agent-level transitions never survive an episode.
TrainResult train_controller(const RunConfig& config, Rng& master,
                             const ProgressFn& progress = {});

}  // namespace feslab::control
