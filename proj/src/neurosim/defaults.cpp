#include "feslab/neurosim/defaults.hpp"

#include "feslab/common/errors.hpp"

#include <cmath>

namespace feslab::neurosim {

namespace {

constexpr double kDegToRad = 0.017453292519943295;
constexpr double kRpmToRadPerSec = 0.10471975511965977;

MuscleParams arm_muscle(const std::string& name, int channel, double f_max, double moment_arm) {
  MuscleParams m;
  m.name = name;
  m.channel = channel;
  m.f_max = f_max;
  m.moment_arm = moment_arm;
  m.tau_act = 0.05;
  m.tau_deact = 0.08;
  m.recovery_rate = 0.002;
  m.drive_gain = 10.0;
  return m;
}

MuscleParams crank_muscle(const std::string& name, int channel, double center_deg,
                          double halfwidth_deg) {
  MuscleParams m;
  m.name = name;
  m.channel = channel;
  m.f_max = 1000.0;
  m.tau_act = 0.05;
  m.tau_deact = 0.08;
  m.recovery_rate = 0.002;
  m.drive_gain = 10.0;
  m.lobe_center = center_deg * kDegToRad;
  m.lobe_halfwidth = halfwidth_deg * kDegToRad;
  m.lobe_sign = 1.0;
  return m;
}

}  // namespace

PlantConfig default_plant_config(PlantType type) {
  PlantConfig cfg;
  cfg.type = type;
  cfg.control_dt = 0.1;

  switch (type) {
    case PlantType::vertical_arm: {
      cfg.target_min = 20.0 * kDegToRad;
      cfg.target_max = 120.0 * kDegToRad;
      cfg.arm.inertia = 0.0625;
      cfg.arm.segment_mass = 1.5;
      cfg.arm.com_distance = 0.18;
      cfg.arm.damping = 0.1;
      cfg.arm.gravity_on = true;
      cfg.arm.theta_min = 0.0;
      cfg.arm.theta_max = 150.0 * kDegToRad;
      cfg.arm.rest_angle = 0.0;
      cfg.arm.channels = 1;
      cfg.arm.muscles = {arm_muscle("biceps_group", 0, 300.0, 0.035)};
      return cfg;
    }
    case PlantType::horizontal_arm: {
      cfg.target_min = 20.0 * kDegToRad;
      cfg.target_max = 120.0 * kDegToRad;
      cfg.arm.inertia = 0.0625;
      cfg.arm.segment_mass = 1.5;
      cfg.arm.com_distance = 0.18;
      cfg.arm.damping = 0.1;
      cfg.arm.gravity_on = false;
      cfg.arm.theta_min = 0.0;
      cfg.arm.theta_max = 150.0 * kDegToRad;
      cfg.arm.rest_angle = 45.0 * kDegToRad;
      cfg.arm.channels = 2;
      cfg.arm.muscles = {arm_muscle("biceps_group", 0, 300.0, 0.035),
                         arm_muscle("triceps_group", 1, 250.0, -0.028)};
      return cfg;
    }
    case PlantType::cycling: {
      cfg.target_min = 20.0 * kRpmToRadPerSec;
      cfg.target_max = 60.0 * kRpmToRadPerSec;
      cfg.crank.inertia = 0.5;
      cfg.crank.damping = 1.5;
      cfg.crank.radius = 0.05;
      cfg.crank.channels = 6;
      // Right-leg lobes; left leg offset by 180 degrees.
      cfg.crank.muscles = {
          crank_muscle("r_rectus_femoris", 0, 45.0, 70.0),
          crank_muscle("r_gluteus_maximus", 1, 100.0, 60.0),
          crank_muscle("r_hamstrings", 2, 170.0, 70.0),
          crank_muscle("l_rectus_femoris", 3, 225.0, 70.0),
          crank_muscle("l_gluteus_maximus", 4, 280.0, 60.0),
          crank_muscle("l_hamstrings", 5, 350.0, 70.0),
      };
      return cfg;
    }
  }
  throw ConfigError("unknown plant type");
}

}  // namespace feslab::neurosim
