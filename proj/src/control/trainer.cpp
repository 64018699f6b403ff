#include "feslab/control/trainer.hpp"

#include "feslab/common/errors.hpp"

#include <chrono>
#include <deque>
#include <numeric>

namespace feslab::control {

TrainResult train_controller(const RunConfig& config, Rng& master, const ProgressFn& progress) {
  TrainResult result;
  result.env = neurosim::make_environment(config.plant);
  neurosim::Environment& env = *result.env;

  Rng init_rng = master.child("init");
  result.unit = std::make_unique<staterep::StateRepUnit>(
      env.observation_dim(), env.action_dim(), env.normalization(), config.staterep, init_rng);
  result.agent = std::make_unique<sacagent::SacAgent>(config.staterep.hidden_size + 1,
                                                      env.action_dim(), config.agent, init_rng);
  staterep::StateRepUnit& unit = *result.unit;
  sacagent::SacAgent& agent = *result.agent;

  TargetSchedule schedule{config.trainer.target_hold_steps, env.target_min(), env.target_max()};
  EpisodeOptions options;
  options.steps = config.trainer.episode_steps;
  IntensityQuantizer quantizer;
  if (config.quantizer.enabled) {
    quantizer = IntensityQuantizer::uniform(config.quantizer.levels);
    options.quantizer = &quantizer;
  }

  sacagent::TempReplayBuffer buffer(config.agent.buffer_capacity);
  std::deque<EpisodeTrace> store;
  Rng staterep_rng = master.child("staterep");
  Rng update_rng = master.child("updates");

  for (int episode = 0; episode < config.trainer.episodes; ++episode) {
    const auto wall_start = std::chrono::steady_clock::now();
    Rng ep_rng = master.child("episode/" + std::to_string(episode));
    env.reset_with_sampled_fatigue(ep_rng);

    PolicyFn policy = [&agent](const Vector& x, Rng& rng) { return agent.act(x, rng); };
    EpisodeTrace trace = run_episode(policy, env, schedule, unit, ep_rng, options);
    if (!trace.valid)
      throw NumericError("training episode " + std::to_string(episode) + " diverged");
    if (static_cast<int>(trace.length()) != config.trainer.episode_steps)
      throw NumericError("episode protocol violated: trace length " +
                         std::to_string(trace.length()));

    const double mean_abs_error =
        -std::accumulate(trace.rewards.begin(), trace.rewards.end(), 0.0) /
        static_cast<double>(trace.length()) * env.report_scale();

    store.push_back(std::move(trace));
    while (static_cast<int>(store.size()) > config.trainer.trace_store_capacity)
      store.pop_front();

    // Supervised phase on every stored series.
    std::vector<const EpisodeTrace*> stored;
    stored.reserve(store.size());
    for (const auto& t : store) stored.push_back(&t);
    const auto staterep_losses = unit.train_supervised(
        std::span<const EpisodeTrace* const>(stored), config.trainer.staterep_epochs_per_episode,
        staterep_rng);
    for (std::size_t e = 0; e < staterep_losses.size(); ++e)
      result.staterep_history.push_back(
          StateRepLossRow{episode, static_cast<int>(e), staterep_losses[e]});

    // Hidden states are stale the moment the unit trains: rebuild the
    // temporary buffer from regenerated encodings plus hindsight copies.
    buffer.clear();
    for (const EpisodeTrace& stored_trace : store) {
      const auto hidden = unit.regenerate_hidden(stored_trace);
      for (auto& t : sacagent::build_agent_transitions(hidden, stored_trace, env.normalization()))
        buffer.add(std::move(t));
      const EpisodeTrace relabeled = sacagent::hindsight_relabel(stored_trace);
      for (auto& t : sacagent::build_agent_transitions(hidden, relabeled, env.normalization()))
        buffer.add(std::move(t));
    }

    const auto diag = agent.update(buffer, config.agent.updates_per_episode,
                                   config.agent.batch_size, update_rng);

    EpisodeDiagnostics row;
    row.episode = episode;
    row.mean_abs_error = mean_abs_error;
    row.actor_loss = diag.actor_loss;
    row.critic_loss = diag.critic_loss;
    row.alpha = diag.alpha;
    row.staterep_loss = staterep_losses.empty() ? 0.0 : staterep_losses.back();
    row.wall_seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - wall_start).count();
    result.learning_curve.push_back(mean_abs_error);
    result.diagnostics.push_back(row);
    if (progress) progress(row);
  }
  return result;
}

}  // namespace feslab::control
