#include "feslab/neurosim/muscle.hpp"

#include "feslab/common/errors.hpp"

#include <algorithm>
#include <cmath>
#include <iostream>

namespace feslab::neurosim {

namespace {

double clamp01_warn(double u, const char* what) {
  if (u < 0.0 || u > 1.0) {
    if (u < -1e-9 || u > 1.0 + 1e-9)
      std::cerr << "warning: " << what << " " << u << " outside [0,1], clamped\n";
    return std::clamp(u, 0.0, 1.0);
  }
  return u;
}

void activation_substep(MuscleState& m, double u, double h, const MuscleParams& p) {
  const double tau = (u > m.activation) ? p.tau_act : p.tau_deact;
  m.activation += (u - m.activation) * -std::expm1(-h / tau);
  m.activation = std::clamp(m.activation, 0.0, 1.0);
}

void fatigue_substep(MuscleState& m, double h, const MuscleParams& p) {
  const double c = p.drive_gain * (m.activation - m.m_active);
  // Flows evaluated from the state at substep start, each limited by its
  // source compartment so no compartment can go negative.
  double rest_to_active = std::max(c, 0.0) * m.m_rested * h;
  double active_to_rest = std::max(-c, 0.0) * m.m_active * h;
  double active_to_fatigued = p.fatigue_rate * m.m_active * h;
  double fatigued_to_rest = p.recovery_rate * m.m_fatigued * h;
  rest_to_active = std::min(rest_to_active, m.m_rested);
  const double active_out = active_to_rest + active_to_fatigued;
  if (active_out > m.m_active && active_out > 0.0) {
    const double shrink = m.m_active / active_out;
    active_to_rest *= shrink;
    active_to_fatigued *= shrink;
  }
  fatigued_to_rest = std::min(fatigued_to_rest, m.m_fatigued);

  m.m_rested += fatigued_to_rest + active_to_rest - rest_to_active;
  m.m_active += rest_to_active - active_to_rest - active_to_fatigued;
  m.m_fatigued += active_to_fatigued - fatigued_to_rest;
}

}  // namespace

MuscleState step_activation(MuscleState m, double u, double dt, const MuscleParams& p,
                            double substep) {
  if (dt <= 0.0) throw std::invalid_argument("step_activation: dt must be positive");
  u = clamp01_warn(u, "stimulation intensity");
  const int n = std::max(1, static_cast<int>(std::lround(dt / substep)));
  const double h = dt / n;
  for (int i = 0; i < n; ++i) activation_substep(m, u, h, p);
  return m;
}

MuscleState step_fatigue(MuscleState m, double dt, const MuscleParams& p, double substep) {
  if (dt <= 0.0) throw std::invalid_argument("step_fatigue: dt must be positive");
  const int n = std::max(1, static_cast<int>(std::lround(dt / substep)));
  const double h = dt / n;
  for (int i = 0; i < n; ++i) fatigue_substep(m, h, p);
  return m;
}

double time_to_half_capacity(double fatigue_rate, const MuscleParams& base, double substep,
                             double t_limit) {
  MuscleParams p = base;
  p.fatigue_rate = fatigue_rate;
  MuscleState m;
  double t = 0.0;
  while (t < t_limit) {
    activation_substep(m, 1.0, substep, p);
    fatigue_substep(m, substep, p);
    t += substep;
    if (capacity(m) <= 0.5) return t;
  }
  return t_limit;
}

double calibrate_fatigue_rate(double t50_seconds, const MuscleParams& base, double substep) {
  // time_to_half_capacity decreases monotonically in F; bracket then bisect.
  double lo = 1e-5, hi = 1.0;
  if (time_to_half_capacity(hi, base, substep) > t50_seconds ||
      time_to_half_capacity(lo, base, substep, 4.0 * t50_seconds) < t50_seconds)
    throw NumericError("calibrate_fatigue_rate: target time " + std::to_string(t50_seconds) +
                       " s not bracketed");
  for (int it = 0; it < 40; ++it) {
    const double mid = 0.5 * (lo + hi);
    const double t = time_to_half_capacity(mid, base, substep, 4.0 * t50_seconds);
    if (t > t50_seconds)
      lo = mid;
    else
      hi = mid;
  }
  return 0.5 * (lo + hi);
}

}  // namespace feslab::neurosim
