#include "feslab/neurosim/plants.hpp"

#include "feslab/common/errors.hpp"

#include <cmath>

namespace feslab::neurosim {

namespace {

constexpr double kTwoPi = 6.283185307179586476925286766559;

void check_finite(double v, const char* what) {
  if (!std::isfinite(v)) throw NumericError(std::string("plant state non-finite: ") + what);
}

void check_command(const StimCommand& cmd, int channels, const char* plant) {
  if (cmd.size() != channels)
    throw std::invalid_argument(std::string(plant) + ": command has " +
                                std::to_string(cmd.size()) + " channels, plant expects " +
                                std::to_string(channels));
}

double wrap_angle(double phi) {
  phi = std::fmod(phi, kTwoPi);
  if (phi < 0.0) phi += kTwoPi;
  return phi;
}

}  // namespace

std::pair<ArmState, EnvObservation> step_arm(const ArmPlant& plant, ArmState state,
                                             const StimCommand& cmd, double dt) {
  check_command(cmd, plant.channels, "step_arm");
  if (state.muscles.size() != plant.muscles.size())
    throw std::invalid_argument("step_arm: muscle state count mismatch");

  const int n = std::max(1, static_cast<int>(std::lround(dt / plant.substep)));
  const double h = dt / n;
  for (int i = 0; i < n; ++i) {
    double torque = 0.0;
    for (std::size_t m = 0; m < plant.muscles.size(); ++m) {
      const MuscleParams& mp = plant.muscles[m];
      MuscleState& ms = state.muscles[m];
      const double u = std::clamp(cmd(mp.channel), 0.0, 1.0);
      ms = step_activation(ms, u, h, mp, h);
      ms = step_fatigue(ms, h, mp, h);
      torque += mp.moment_arm * muscle_force(ms, mp);
    }
    torque -= plant.damping * state.theta_dot;
    if (plant.gravity_on)
      torque -= plant.segment_mass * plant.gravity * plant.com_distance *
                std::cos(state.theta - plant.theta_ref);

    state.theta_dot += h * torque / plant.inertia;
    state.theta += h * state.theta_dot;
    if (state.theta <= plant.theta_min) {
      state.theta = plant.theta_min;
      if (state.theta_dot < 0.0) state.theta_dot = 0.0;
    } else if (state.theta >= plant.theta_max) {
      state.theta = plant.theta_max;
      if (state.theta_dot > 0.0) state.theta_dot = 0.0;
    }
  }
  check_finite(state.theta, "theta");
  check_finite(state.theta_dot, "theta_dot");

  EnvObservation obs(2);
  obs << state.theta, state.theta_dot;
  return {std::move(state), std::move(obs)};
}

double lobe_effectiveness(double phi, const MuscleParams& p) {
  if (p.lobe_halfwidth <= 0.0) return 0.0;
  double d = wrap_angle(phi) - p.lobe_center;
  if (d > kTwoPi / 2.0) d -= kTwoPi;
  if (d < -kTwoPi / 2.0) d += kTwoPi;
  if (std::abs(d) >= p.lobe_halfwidth) return 0.0;
  return p.lobe_sign * 0.5 * (1.0 + std::cos(d / p.lobe_halfwidth * 3.141592653589793));
}

std::pair<CrankState, EnvObservation> step_crank(const CrankPlant& plant, CrankState state,
                                                 const StimCommand& cmd, double dt) {
  check_command(cmd, plant.channels, "step_crank");
  if (state.muscles.size() != plant.muscles.size())
    throw std::invalid_argument("step_crank: muscle state count mismatch");

  const int n = std::max(1, static_cast<int>(std::lround(dt / plant.substep)));
  const double h = dt / n;
  for (int i = 0; i < n; ++i) {
    double torque = 0.0;
    for (std::size_t m = 0; m < plant.muscles.size(); ++m) {
      const MuscleParams& mp = plant.muscles[m];
      MuscleState& ms = state.muscles[m];
      const double u = std::clamp(cmd(mp.channel), 0.0, 1.0);
      ms = step_activation(ms, u, h, mp, h);
      ms = step_fatigue(ms, h, mp, h);
      torque += lobe_effectiveness(state.phi, mp) * plant.radius * muscle_force(ms, mp);
    }
    torque -= plant.damping * state.phi_dot;
    state.phi_dot += h * torque / plant.inertia;
    state.phi = wrap_angle(state.phi + h * state.phi_dot);
  }
  check_finite(state.phi, "phi");
  check_finite(state.phi_dot, "cadence");

  EnvObservation obs(3);
  obs << state.phi_dot, std::sin(state.phi), std::cos(state.phi);
  return {std::move(state), std::move(obs)};
}

}  // namespace feslab::neurosim
