#include "feslab/control/tasks.hpp"

#include "feslab/common/errors.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <initializer_list>
#include <limits>

namespace feslab::control {

namespace {

constexpr double kDegToRad = 0.017453292519943295;
constexpr double kRpmToRadPerSec = 0.10471975511965977;

std::vector<TaskSegment> scaled_segments(
    std::initializer_list<std::array<double, 4>> rows, double unit) {
  std::vector<TaskSegment> out;
  for (const auto& r : rows) out.push_back(TaskSegment{r[0], r[1], r[2] * unit, r[3] * unit});
  return out;
}

}  // namespace

std::vector<std::string> task_names() {
  return {"ramp_trajectory", "step_70_20", "long_horizontal", "cycling_cadence"};
}

std::optional<TaskId> parse_task(const std::string& name) {
  if (name == "ramp_trajectory") return TaskId::ramp_trajectory;
  if (name == "step_70_20") return TaskId::step_70_20;
  if (name == "long_horizontal") return TaskId::long_horizontal;
  if (name == "cycling_cadence") return TaskId::cycling_cadence;
  return std::nullopt;
}

std::string task_name(TaskId id) {
  switch (id) {
    case TaskId::ramp_trajectory:
      return "ramp_trajectory";
    case TaskId::step_70_20:
      return "step_70_20";
    case TaskId::long_horizontal:
      return "long_horizontal";
    case TaskId::cycling_cadence:
      return "cycling_cadence";
  }
  return "unknown";
}

neurosim::PlantType task_plant(TaskId id) {
  switch (id) {
    case TaskId::ramp_trajectory:
    case TaskId::step_70_20:
      return neurosim::PlantType::vertical_arm;
    case TaskId::long_horizontal:
      return neurosim::PlantType::horizontal_arm;
    case TaskId::cycling_cadence:
      return neurosim::PlantType::cycling;
  }
  throw ConfigError("unknown task");
}

std::vector<TaskSegment> task_segments(TaskId id) {
  switch (id) {
    case TaskId::ramp_trajectory:
      return scaled_segments({{0, 30, 40, 40},
                              {30, 45, 40, 90},
                              {45, 75, 90, 90},
                              {75, 105, 60, 60},
                              {105, 120, 60, 110},
                              {120, 150, 110, 110},
                              {150, 180, 60, 60}},
                             kDegToRad);
    case TaskId::step_70_20: {
      std::vector<TaskSegment> out;
      for (int k = 0; k < 15; ++k) {
        const double v = (k % 2 == 0) ? 70.0 : 20.0;
        out.push_back(TaskSegment{12.0 * k, 12.0 * (k + 1), v * kDegToRad, v * kDegToRad});
      }
      return out;
    }
    case TaskId::long_horizontal:
      return scaled_segments({{0, 40, 40, 40},
                              {40, 55, 40, 100},
                              {55, 95, 100, 100},
                              {95, 125, 60, 60},
                              {125, 140, 60, 120},
                              {140, 180, 120, 120},
                              {180, 210, 30, 30},
                              {210, 225, 30, 90},
                              {225, 265, 90, 90},
                              {265, 300, 110, 110},
                              {300, 330, 50, 50},
                              {330, 360, 75, 75}},
                             kDegToRad);
    case TaskId::cycling_cadence:
      return scaled_segments({{0, 30, 35, 35},
                              {30, 60, 50, 50},
                              {60, 90, 40, 40},
                              {90, 120, 60, 60},
                              {120, 150, 30, 30},
                              {150, 180, 45, 45}},
                             kRpmToRadPerSec);
  }
  throw ConfigError("unknown task");
}

std::vector<double> task_targets(TaskId id, double control_dt) {
  const auto segments = task_segments(id);
  const double duration = segments.back().t_end;
  const int steps = static_cast<int>(std::lround(duration / control_dt));
  std::vector<double> targets(static_cast<std::size_t>(steps));
  std::size_t seg = 0;
  for (int t = 0; t < steps; ++t) {
    const double now = t * control_dt;
    while (seg + 1 < segments.size() && now >= segments[seg].t_end) ++seg;
    const TaskSegment& s = segments[seg];
    const double frac = s.t_end > s.t_begin
                            ? std::clamp((now - s.t_begin) / (s.t_end - s.t_begin), 0.0, 1.0)
                            : 0.0;
    targets[static_cast<std::size_t>(t)] = s.v_begin + frac * (s.v_end - s.v_begin);
  }
  return targets;
}

EvalResult evaluate_tracking(Controller& controller, neurosim::Environment& env, TaskId task,
                             Rng& rng) {
  if (task_plant(task) != env.type())
    throw ConfigError("task " + task_name(task) + " expects plant " +
                      neurosim::plant_type_name(task_plant(task)) + ", got " +
                      neurosim::plant_type_name(env.type()));

  const auto targets = task_targets(task, env.control_dt());
  const auto segments = task_segments(task);
  env.reset_with_sampled_fatigue(rng);
  controller.begin_episode();

  EvalResult result;
  EpisodeTrace& trace = result.trace;
  trace.plant_id = neurosim::plant_type_name(env.type());
  trace.seed = rng.seed();
  trace.sampled_fatigue_rates = env.sampled_fatigue_rates();
  trace.sampled_initial_fatigue = env.sampled_initial_fatigue();

  Eigen::VectorXd obs = env.observe();
  for (std::size_t t = 0; t < targets.size(); ++t) {
    Vector action = controller.act(obs, targets[t]).cwiseMax(0.0).cwiseMin(1.0);
    trace.observations.push_back(obs);
    trace.actions.push_back(action);
    trace.targets.push_back(targets[t]);
    trace.rewards.push_back(env.reward(obs, targets[t]));
    trace.capacities.push_back(env.capacities());
    obs = env.step(action);
  }

  const double scale = env.report_scale();
  const std::size_t n = trace.length();
  double sq_sum = 0.0, first = 0.0, second = 0.0;
  const std::size_t half = n / 2;
  for (std::size_t t = 0; t < n; ++t) {
    const double err = trace.targets[t] - trace.observations[t](0);
    sq_sum += err * err;
    (t < half ? first : second) += std::abs(err);
  }
  result.metrics.rmse = std::sqrt(sq_sum / n) * scale;
  result.metrics.first_half_err = first / half * scale;
  result.metrics.second_half_err = second / (n - half) * scale;

  // Overshoot per upward hold: a hold whose target exceeds the previous
  // segment's end value; peak of (tracked - target) within the hold.
  for (std::size_t k = 1; k < segments.size(); ++k) {
    const TaskSegment& s = segments[k];
    if (!s.is_hold() || s.v_begin <= segments[k - 1].v_end) continue;
    const auto begin = static_cast<std::size_t>(std::lround(s.t_begin / env.control_dt()));
    const auto end = std::min(n, static_cast<std::size_t>(std::lround(s.t_end / env.control_dt())));
    double peak = -std::numeric_limits<double>::infinity();
    for (std::size_t t = begin; t < end; ++t)
      peak = std::max(peak, trace.observations[t](0) - s.v_begin);
    result.metrics.overshoots.push_back(peak * scale);
    result.metrics.overshoot_times.push_back(s.t_begin);
  }
  return result;
}

PidGains tune_pid(neurosim::Environment& env, std::span<const PidGains> grid, Rng& rng) {
  if (grid.empty()) throw ConfigError("tune_pid: empty gain grid");
  (void)rng;  // tuning runs on a deterministic nominal plant
  const TaskId task = env.type() == neurosim::PlantType::cycling ? TaskId::cycling_cadence
                                                                 : TaskId::ramp_trajectory;
  const auto targets = task_targets(task, env.control_dt());
  const std::size_t steps = std::min<std::size_t>(targets.size(),
      static_cast<std::size_t>(std::lround(60.0 / env.control_dt())));

  double best_rmse = std::numeric_limits<double>::infinity();
  const PidGains* best = nullptr;
  for (const PidGains& gains : grid) {
    env.reset_nominal(env.fatigue_rate_slow(), 0.0);
    auto controller = make_pid_controller(env, gains);
    controller->begin_episode();
    double sq_sum = 0.0;
    bool diverged = false;
    Eigen::VectorXd obs = env.observe();
    for (std::size_t t = 0; t < steps; ++t) {
      const double err = targets[t] - obs(0);
      sq_sum += err * err;
      try {
        obs = env.step(controller->act(obs, targets[t]));
      } catch (const NumericError&) {
        diverged = true;
        break;
      }
    }
    if (diverged) continue;
    const double rmse = std::sqrt(sq_sum / static_cast<double>(steps));
    if (rmse < best_rmse) {
      best_rmse = rmse;
      best = &gains;
    }
  }
  if (!best) throw NumericError("tune_pid: every candidate diverged");
  return *best;
}

std::vector<PidGains> default_pid_grid(neurosim::PlantType type) {
  std::vector<PidGains> grid;
  if (type == neurosim::PlantType::cycling) {
    for (double kp : {0.05, 0.1, 0.2, 0.4})
      for (double ki : {0.02, 0.05, 0.1, 0.2})
        for (double kd : {0.0, 0.05}) grid.push_back(PidGains{kp, ki, kd});
  } else {
    for (double kp : {1.0, 2.0, 4.0, 8.0})
      for (double ki : {0.0, 0.5, 1.0, 2.0, 4.0})
        for (double kd : {0.0, 0.25, 0.5, 1.0}) grid.push_back(PidGains{kp, ki, kd});
  }
  return grid;
}

}  // namespace feslab::control
