#pragma once

#include "feslab/control/controller.hpp"
#include "feslab/neurosim/env.hpp"

#include <optional>
#include <span>
#include <string>
#include <vector>

namespace feslab::control {

/// Fixed evaluation tasks. The arm trajectories are frozen here so reported
/// numbers stay comparable across runs: ramp_trajectory mixes holds at
/// {40, 90, 60, 110} degrees with two 15 s ramps over 180 s; step_70_20
/// alternates 70/20 degree holds; long_horizontal is a 6-minute mixed
/// trajectory; cycling_cadence steps through cadence holds in RPM.
enum class TaskId { ramp_trajectory, step_70_20, long_horizontal, cycling_cadence };

std::vector<std::string> task_names();
std::optional<TaskId> parse_task(const std::string& name);
std::string task_name(TaskId id);
neurosim::PlantType task_plant(TaskId id);

/// Piecewise-linear trajectory segment in native units (rad or rad/s).
struct TaskSegment {
  double t_begin = 0.0;  // s
  double t_end = 0.0;    // s
  double v_begin = 0.0;
  double v_end = 0.0;
  bool is_hold() const { return v_begin == v_end; }
};

std::vector<TaskSegment> task_segments(TaskId id);

/// Per-step targets for the task at the given control period.
std::vector<double> task_targets(TaskId id, double control_dt);

struct EvalMetrics {
  double rmse = 0.0;             // report units (deg or RPM)
  double first_half_err = 0.0;   // mean |error|, report units
  double second_half_err = 0.0;
  std::vector<double> overshoots;      // per upward hold, report units
  std::vector<double> overshoot_times; // s, segment start of each event
};

struct EvalResult {
  EvalMetrics metrics;
  EpisodeTrace trace;
};

/// Runs the controller over the fixed task trajectory on a freshly reset
/// environment (fatigue sampled from rng) and computes tracking metrics.
/// Overshoot is max(tracked - target) during each hold whose target exceeds
/// the previous segment's end value.
EvalResult evaluate_tracking(Controller& controller, neurosim::Environment& env, TaskId task,
                             Rng& rng);

/// Grid search returning the gains with the lowest RMSE over the first minute
/// of the plant's tuning task on a fresh low-fatigue plant. Candidates that
/// diverge are skipped; if every candidate diverges this is a hard error.
PidGains tune_pid(neurosim::Environment& env, std::span<const PidGains> grid, Rng& rng);

std::vector<PidGains> default_pid_grid(neurosim::PlantType type);

}  // namespace feslab::control
