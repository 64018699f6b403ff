#pragma once

#include "feslab/neurosim/muscle.hpp"

#include <Eigen/Dense>

#include <utility>
#include <vector>

namespace feslab::neurosim {

/// Observation exposed to controllers. Arm plants: [theta, theta_dot];
/// cycling: [cadence, sin(phi), cos(phi)]. Index 0 is always the tracked
/// quantity.
using EnvObservation = Eigen::VectorXd;

/// Per-channel stimulation intensities in [0,1].
using StimCommand = Eigen::VectorXd;

/// Single-joint arm actuated by lumped muscle groups about the elbow.
/// theta = 0 is the hanging rest pose of the vertical case; gravity torque is
/// -m g l_c cos(theta - theta_ref) with theta_ref = pi/2, i.e. -m g l_c sin(theta).
struct ArmPlant {
  double inertia = 0.0625;       // kg m^2
  double segment_mass = 1.5;     // kg
  double com_distance = 0.18;    // m
  double damping = 0.1;          // N m s / rad
  bool gravity_on = true;
  double gravity = 9.81;         // m/s^2
  double theta_ref = 1.5707963267948966;  // rad; gravity phase reference
  double theta_min = 0.0;        // rad
  double theta_max = 2.6179938779914944;  // rad (150 deg)
  double rest_angle = 0.0;       // rad
  double substep = 1e-3;         // physics substep, s
  int channels = 1;
  std::vector<MuscleParams> muscles;
};

struct ArmState {
  double theta = 0.0;
  double theta_dot = 0.0;
  std::vector<MuscleState> muscles;
};

/// Advances the arm by dt (one control step) with semi-implicit Euler
/// substeps; muscles are stepped through activation and fatigue at the same
/// substep. Joint limits act as inelastic stops. Throws NumericError naming
/// the offending quantity if the state stops being finite.
std::pair<ArmState, EnvObservation> step_arm(const ArmPlant& plant, ArmState state,
                                             const StimCommand& cmd, double dt);

/// Crankset driven by six lumped muscles through crank-angle effectiveness
/// lobes; the "inactive muscles" of the modeled task appear as a passive
/// resistive torque proportional to cadence.
struct CrankPlant {
  double inertia = 0.5;          // kg m^2
  double damping = 1.5;          // N m s / rad (passive resistive coefficient)
  double radius = 0.05;          // m; effective force-to-torque radius
  double substep = 1e-3;
  int channels = 6;
  std::vector<MuscleParams> muscles;
};

struct CrankState {
  double phi = 0.0;      // rad, wrapped to [0, 2 pi)
  double phi_dot = 0.0;  // rad/s (cadence)
  std::vector<MuscleState> muscles;
};

/// Raised-cosine torque-effectiveness of a muscle at crank angle phi.
double lobe_effectiveness(double phi, const MuscleParams& p);

std::pair<CrankState, EnvObservation> step_crank(const CrankPlant& plant, CrankState state,
                                                 const StimCommand& cmd, double dt);

/// Tracking reward, shared by all plants: minus the absolute difference
/// between target and tracked value (rad for arms, rad/s for cycling).
inline double reward(const EnvObservation& obs, double target) {
  return -std::abs(target - obs(0));
}

}  // namespace feslab::neurosim
