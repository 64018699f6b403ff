#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <string>
#include <vector>

namespace feslab {

/// One episode of aligned time series, the unit of storage and hidden-state
/// regeneration. At index t: observations[t] is the pre-action observation,
/// actions[t] the command issued from it, targets[t] the active target, and
/// rewards[t] = -|targets[t] - tracked(observations[t])| so a series whose
/// targets equal its achieved values has reward identically zero. The tracked
/// value is always observation channel 0.
struct EpisodeTrace {
  std::vector<Eigen::VectorXd> observations;
  std::vector<Eigen::VectorXd> actions;
  std::vector<double> targets;
  std::vector<double> rewards;
  std::vector<std::vector<double>> capacities;  // per-muscle (1 - M_F), for export

  std::uint64_t seed = 0;
  std::string plant_id;
  std::vector<double> sampled_fatigue_rates;
  std::vector<double> sampled_initial_fatigue;
  bool valid = true;

  std::size_t length() const { return observations.size(); }

  bool aligned() const {
    return actions.size() == observations.size() && targets.size() == observations.size() &&
           rewards.size() == observations.size();
  }
};

}  // namespace feslab
