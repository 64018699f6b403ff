#include "feslab/control/episode.hpp"

#include "feslab/common/csv.hpp"
#include "feslab/common/errors.hpp"

#include <algorithm>
#include <cmath>

namespace feslab::control {

std::vector<double> TargetSchedule::generate(int n_steps, Rng& rng) const {
  if (hold_steps <= 0) throw std::invalid_argument("target schedule: hold_steps must be positive");
  std::vector<double> targets(static_cast<std::size_t>(n_steps));
  double current = 0.0;
  for (int t = 0; t < n_steps; ++t) {
    if (t % hold_steps == 0) current = rng.uniform(target_min, target_max);
    targets[static_cast<std::size_t>(t)] = current;
  }
  return targets;
}

IntensityQuantizer IntensityQuantizer::uniform(int n_levels) {
  if (n_levels < 2) throw std::invalid_argument("quantizer needs at least 2 levels");
  IntensityQuantizer q;
  q.levels.reserve(static_cast<std::size_t>(n_levels));
  for (int i = 0; i < n_levels; ++i)
    q.levels.push_back(static_cast<double>(i) / static_cast<double>(n_levels - 1));
  return q;
}

double IntensityQuantizer::quantize(double u) const {
  // levels are monotone; nearest neighbour by binary search
  auto it = std::lower_bound(levels.begin(), levels.end(), u);
  if (it == levels.begin()) return levels.front();
  if (it == levels.end()) return levels.back();
  const double above = *it;
  const double below = *(it - 1);
  return (u - below) <= (above - u) ? below : above;
}

Vector IntensityQuantizer::quantize(const Vector& u) const {
  Vector out(u.size());
  for (Eigen::Index i = 0; i < u.size(); ++i) out(i) = quantize(u(i));
  return out;
}

EpisodeTrace run_episode(const PolicyFn& policy, neurosim::Environment& env,
                         const TargetSchedule& schedule, const staterep::StateRepUnit& unit,
                         Rng& rng, const EpisodeOptions& options) {
  EpisodeTrace trace;
  trace.plant_id = neurosim::plant_type_name(env.type());
  trace.seed = rng.seed();
  trace.sampled_fatigue_rates = env.sampled_fatigue_rates();
  trace.sampled_initial_fatigue = env.sampled_initial_fatigue();
  trace.observations.reserve(static_cast<std::size_t>(options.steps));

  const std::vector<double> targets = schedule.generate(options.steps, rng);
  Vector h = unit.initial_hidden();
  Vector prev_action = Vector::Zero(env.action_dim());
  Eigen::VectorXd obs = env.observe();

  for (int t = 0; t < options.steps; ++t) {
    const double target = targets[static_cast<std::size_t>(t)];
    h = unit.encode_step(obs, prev_action, h);
    Vector x(unit.hidden_size() + 1);
    x.head(unit.hidden_size()) = h;
    x(unit.hidden_size()) = env.normalization().normalize_target(target);

    Vector action = policy(x, rng);
    action = action.cwiseMax(0.0).cwiseMin(1.0);
    if (options.quantizer) action = options.quantizer->quantize(action);

    trace.observations.push_back(obs);
    trace.actions.push_back(action);
    trace.targets.push_back(target);
    trace.rewards.push_back(env.reward(obs, target));
    trace.capacities.push_back(env.capacities());

    try {
      obs = env.step(action);
    } catch (const NumericError&) {
      trace.valid = false;
      return trace;
    }
    prev_action = action;
  }
  return trace;
}

void write_trace_csv(const std::string& path, const EpisodeTrace& trace,
                     const neurosim::Environment& env) {
  std::vector<std::string> header = {"step", "time_s", env.tracked_column(), "target"};
  for (int c = 0; c < env.action_dim(); ++c) header.push_back("u_" + std::to_string(c));
  for (std::size_t m = 0; m < env.muscle_count(); ++m)
    header.push_back("capacity_pct_" + std::to_string(m));
  header.push_back("reward");

  CsvWriter csv(path, header);
  const double scale = env.report_scale();
  for (std::size_t t = 0; t < trace.length(); ++t) {
    std::vector<double> row;
    row.reserve(header.size());
    row.push_back(static_cast<double>(t));
    row.push_back(static_cast<double>(t) * env.control_dt());
    row.push_back(trace.observations[t](0) * scale);
    row.push_back(trace.targets[t] * scale);
    for (int c = 0; c < env.action_dim(); ++c) row.push_back(trace.actions[t](c));
    for (std::size_t m = 0; m < env.muscle_count(); ++m)
      row.push_back(100.0 * trace.capacities[t][m]);
    row.push_back(trace.rewards[t]);
    csv.write_row(row);
  }
}

}  // namespace feslab::control
