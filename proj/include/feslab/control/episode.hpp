#pragma once

#include "feslab/common/rng.hpp"
#include "feslab/episode_trace.hpp"
#include "feslab/neurosim/env.hpp"
#include "feslab/staterep/state_rep.hpp"

#include <functional>
#include <string>
#include <vector>

namespace feslab::control {

using dynamo::Vector;

/// Block-constant random target schedule: a fresh uniform draw every
/// hold_steps steps.
struct TargetSchedule {
  int hold_steps = 50;
  double target_min = 0.0;
  double target_max = 1.0;

  std::vector<double> generate(int n_steps, Rng& rng) const;
};

/// Maps normalized commands onto a fixed ordered table of stimulation
/// intensities (nearest level), mirroring a stimulator's discrete settings.
struct IntensityQuantizer {
  std::vector<double> levels;

  static IntensityQuantizer uniform(int n_levels = 20);
  double quantize(double u) const;
  Vector quantize(const Vector& u) const;
};

/// Policy queried with the agent state x = hidden (+) normalized target; the
/// rng carries any exploration noise.
using PolicyFn = std::function<Vector(const Vector& x, Rng& rng)>;

struct EpisodeOptions {
  int steps = 1800;
  const IntensityQuantizer* quantizer = nullptr;  // applied to commands when set
};

/// Runs one episode against a freshly reset environment: encode the
/// observation, query the policy, step the plant, and record the aligned
/// series. The hidden state starts at zero, as does the previous action. On
/// plant divergence the trace is truncated and marked invalid.
EpisodeTrace run_episode(const PolicyFn& policy, neurosim::Environment& env,
                         const TargetSchedule& schedule, const staterep::StateRepUnit& unit,
                         Rng& rng, const EpisodeOptions& options);

/// Trace export: step, time_s, tracked value (deg or RPM), target, per-channel
/// command, per-muscle capacity percentage, reward.
void write_trace_csv(const std::string& path, const EpisodeTrace& trace,
                     const neurosim::Environment& env);

}  // namespace feslab::control
