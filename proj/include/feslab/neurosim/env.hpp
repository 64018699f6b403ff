#pragma once

#include "feslab/common/rng.hpp"
#include "feslab/neurosim/plants.hpp"

#include <memory>
#include <string>
#include <vector>

namespace feslab::neurosim {

enum class PlantType { vertical_arm, horizontal_arm, cycling };

std::string plant_type_name(PlantType t);

/// Episode-start randomization ranges: initial fatigue level U(0, max) and a
/// fatigue rate drawn between the rates calibrated to reach 50% capacity
/// after t50_slow_s and t50_fast_s of maximal stimulation.
struct FatigueSampling {
  double initial_fatigue_max = 0.3;
  double t50_fast_s = 60.0;
  double t50_slow_s = 120.0;
};

/// Fixed affine normalization constants derived from plant ranges.
struct Normalization {
  Eigen::VectorXd obs_mean;
  Eigen::VectorXd obs_scale;
  double target_mean = 0.0;
  double target_scale = 1.0;

  Eigen::VectorXd normalize_obs(const EnvObservation& obs) const {
    return ((obs - obs_mean).array() / obs_scale.array()).matrix();
  }
  Eigen::VectorXd denormalize_obs(const Eigen::VectorXd& x) const {
    return (x.array() * obs_scale.array()).matrix() + obs_mean;
  }
  double normalize_target(double t) const { return (t - target_mean) / target_scale; }
};

struct PlantConfig {
  PlantType type = PlantType::vertical_arm;
  double control_dt = 0.1;   // s
  double target_min = 0.0;   // rad (arm) or rad/s (cycling)
  double target_max = 1.0;
  double theta_dot_scale = 4.0;  // normalization scale for angular velocity
  FatigueSampling fatigue;
  ArmPlant arm;      // used when type != cycling
  CrankPlant crank;  // used when type == cycling
};

Normalization make_normalization(const PlantConfig& cfg);

/// One simulated plant with its muscle set. Instances are single-threaded and
/// independent; clone() copies the full current state.
class Environment {
 public:
  explicit Environment(const PlantConfig& cfg);
  virtual ~Environment() = default;

  PlantType type() const { return cfg_.type; }
  const PlantConfig& config() const { return cfg_; }
  const Normalization& normalization() const { return norm_; }
  double control_dt() const { return cfg_.control_dt; }
  double target_min() const { return cfg_.target_min; }
  double target_max() const { return cfg_.target_max; }

  virtual int observation_dim() const = 0;
  virtual int action_dim() const = 0;
  virtual std::size_t muscle_count() const = 0;

  /// Episode reset: pose at rest, per-muscle initial fatigue ~ U(0, max) and
  /// fatigue rate ~ U(rate_slow, rate_fast).
  virtual void reset_with_sampled_fatigue(Rng& rng) = 0;
  /// Deterministic reset with a fixed fatigue rate for all muscles.
  virtual void reset_nominal(double fatigue_rate, double initial_fatigue = 0.0) = 0;

  virtual EnvObservation observe() const = 0;
  virtual EnvObservation step(const StimCommand& cmd) = 0;

  double reward(const EnvObservation& obs, double target) const {
    return neurosim::reward(obs, target);
  }

  virtual std::vector<double> capacities() const = 0;
  const std::vector<double>& sampled_fatigue_rates() const { return sampled_rates_; }
  const std::vector<double>& sampled_initial_fatigue() const { return sampled_initial_; }

  /// Calibrated fatigue-rate bounds (slow = t50_slow_s, fast = t50_fast_s).
  double fatigue_rate_slow() const { return rate_slow_; }
  double fatigue_rate_fast() const { return rate_fast_; }

  /// Rad -> deg for arms, rad/s -> RPM for cycling.
  virtual double report_scale() const = 0;
  virtual const char* tracked_column() const = 0;

  virtual std::unique_ptr<Environment> clone() const = 0;

 protected:
  PlantConfig cfg_;
  Normalization norm_;
  double rate_slow_ = 0.0;
  double rate_fast_ = 0.0;
  std::vector<double> sampled_rates_;
  std::vector<double> sampled_initial_;
};

std::unique_ptr<Environment> make_environment(const PlantConfig& cfg);

}  // namespace feslab::neurosim
