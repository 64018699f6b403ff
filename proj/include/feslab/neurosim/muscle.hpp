#pragma once

#include <string>

namespace feslab::neurosim {

/// Static description of one lumped muscle group.
struct MuscleParams {
  std::string name;
  int channel = 0;          // stimulation channel driving this muscle
  double f_max = 300.0;     // maximum isometric force, N
  double moment_arm = 0.0;  // signed lever arm, m (flexors +, extensors -)
  double tau_act = 0.05;    // activation time constant, s
  double tau_deact = 0.08;  // deactivation time constant, s
  double fatigue_rate = 0.01;   // F, 1/s; usually overwritten per episode
  double recovery_rate = 0.002; // R, 1/s
  double drive_gain = 10.0;     // C, 1/s; rate at which M_A tracks activation
  // Cycling only: torque-effectiveness lobe over crank angle.
  double lobe_center = 0.0;     // rad
  double lobe_halfwidth = 0.0;  // rad; 0 disables the lobe
  double lobe_sign = 1.0;
};

/// Activation level plus the three-compartment motor-unit pool.
/// Invariant: m_rested + m_active + m_fatigued = 1 (within float rounding).
struct MuscleState {
  double activation = 0.0;
  double m_rested = 1.0;
  double m_active = 0.0;
  double m_fatigued = 0.0;
};

/// First-order excitation-activation dynamics: da/dt = (u - a)/tau with tau
/// switching between tau_act (u > a) and tau_deact. Integrated with an exact
/// exponential update per substep; u is clamped to [0,1] with a warning when
/// it arrives outside.
MuscleState step_activation(MuscleState m, double u, double dt, const MuscleParams& p,
                            double substep = 1e-3);

/// Three-compartment fatigue ODEs:
///   dM_A/dt = c(a) M_R - F M_A          (c > 0 recruits from rested)
///   dM_F/dt = F M_A - R M_F
///   dM_R/dt = -c(a) M_R + R M_F
/// with a signed tracking drive c(a) = C (a - M_A); negative drive returns
/// active units to the rested pool, so stopping stimulation lets the muscle
/// recover. Flows are transfer-limited so the partition stays valid.
MuscleState step_fatigue(MuscleState m, double dt, const MuscleParams& p, double substep = 1e-3);

/// Force capacity remaining: 1 - M_F.
inline double capacity(const MuscleState& m) { return 1.0 - m.m_fatigued; }

/// Activation-proportional force with fatigue-scaled ceiling.
inline double muscle_force(const MuscleState& m, const MuscleParams& p) {
  return p.f_max * m.activation * capacity(m);
}

/// Seconds until capacity falls to 50% under sustained u = 1 from a fresh
/// state, simulated with the same integrator as step_fatigue.
double time_to_half_capacity(double fatigue_rate, const MuscleParams& base, double substep = 1e-3,
                             double t_limit = 600.0);

/// Fatigue rate F whose 50%-capacity time under maximal stimulation equals
/// t50_seconds, found by bisection against the simulator above.
double calibrate_fatigue_rate(double t50_seconds, const MuscleParams& base, double substep = 1e-3);

}  // namespace feslab::neurosim
