#pragma once

#include "feslab/common/rng.hpp"
#include "feslab/episode_trace.hpp"
#include "feslab/neurosim/env.hpp"

#include <Eigen/Dense>

namespace feslab::testing {

/// Rolls an environment under piecewise-held random actions and targets,
/// recording a trace with the production alignment: observation, action,
/// target, reward all at index t, reward evaluated on the pre-action
/// observation.
inline EpisodeTrace make_env_trace(neurosim::Environment& env, Rng& rng, int steps,
                                   int action_hold = 10, int target_hold = 50) {
  EpisodeTrace trace;
  env.reset_with_sampled_fatigue(rng);
  Eigen::VectorXd action = Eigen::VectorXd::Zero(env.action_dim());
  Eigen::VectorXd obs = env.observe();
  double target = 0.0;
  for (int t = 0; t < steps; ++t) {
    if (t % target_hold == 0) target = rng.uniform(env.target_min(), env.target_max());
    if (t % action_hold == 0)
      for (int c = 0; c < action.size(); ++c) action(c) = rng.uniform01();
    trace.observations.push_back(obs);
    trace.actions.push_back(action);
    trace.targets.push_back(target);
    trace.rewards.push_back(env.reward(obs, target));
    trace.capacities.push_back(env.capacities());
    obs = env.step(action);
  }
  trace.plant_id = neurosim::plant_type_name(env.type());
  trace.sampled_fatigue_rates = env.sampled_fatigue_rates();
  trace.sampled_initial_fatigue = env.sampled_initial_fatigue();
  return trace;
}

/// Identity normalization for synthetic fixtures.
inline neurosim::Normalization unit_normalization(int obs_dim) {
  neurosim::Normalization n;
  n.obs_mean = Eigen::VectorXd::Zero(obs_dim);
  n.obs_scale = Eigen::VectorXd::Ones(obs_dim);
  n.target_mean = 0.0;
  n.target_scale = 1.0;
  return n;
}

}  // namespace feslab::testing
