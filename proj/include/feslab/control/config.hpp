#pragma once

#include "feslab/neurosim/env.hpp"
#include "feslab/sacagent/agent.hpp"
#include "feslab/staterep/state_rep.hpp"

#include <string>

namespace feslab::control {

struct QuantizerConfig {
  bool enabled = false;
  int levels = 20;
};

struct TrainerConfig {
  int episodes = 30;
  int episode_steps = 1800;
  int target_hold_steps = 50;
  int trace_store_capacity = 100;
  int staterep_epochs_per_episode = 1;
};

/// Everything a run needs: plant, episode protocol, learner hyperparameters.
/// Loaded from a versioned JSON file; angles arrive in degrees and cadence in
/// RPM and are converted here.
struct RunConfig {
  int schema_version = 1;
  neurosim::PlantConfig plant;
  staterep::StateRepConfig staterep;
  sacagent::AgentConfig agent;
  TrainerConfig trainer;
  QuantizerConfig quantizer;
  std::string source_json;  // verbatim snapshot for manifests and checkpoints
};

RunConfig load_run_config(const std::string& path);
RunConfig parse_run_config(const std::string& json_text, const std::string& origin);

}  // namespace feslab::control
