#include "feslab/neurosim/env.hpp"

#include "feslab/common/errors.hpp"

#include <map>
#include <mutex>
#include <tuple>

namespace feslab::neurosim {

namespace {

constexpr double kRadToDeg = 57.29577951308232;
constexpr double kRadPerSecToRpm = 9.549296585513721;

// Calibration is a root-find over a long simulation; memoize per parameter set.
double calibrated_rate(double t50, const MuscleParams& base, double substep) {
  using Key = std::tuple<double, double, double, double, double>;
  static std::map<Key, double> cache;
  static std::mutex mutex;
  const Key key{t50, base.recovery_rate, base.drive_gain, base.tau_act, substep};
  std::lock_guard<std::mutex> lock(mutex);
  auto it = cache.find(key);
  if (it != cache.end()) return it->second;
  const double rate = calibrate_fatigue_rate(t50, base, substep);
  cache.emplace(key, rate);
  return rate;
}

}  // namespace

std::string plant_type_name(PlantType t) {
  switch (t) {
    case PlantType::vertical_arm:
      return "vertical_arm";
    case PlantType::horizontal_arm:
      return "horizontal_arm";
    case PlantType::cycling:
      return "cycling";
  }
  return "unknown";
}

Normalization make_normalization(const PlantConfig& cfg) {
  Normalization n;
  n.target_mean = 0.5 * (cfg.target_min + cfg.target_max);
  n.target_scale = 0.5 * (cfg.target_max - cfg.target_min);
  if (cfg.type == PlantType::cycling) {
    n.obs_mean = Eigen::VectorXd::Zero(3);
    n.obs_scale = Eigen::VectorXd::Ones(3);
    n.obs_mean(0) = cfg.target_max;   // cadence roams [0, ~2 x top target]
    n.obs_scale(0) = cfg.target_max;
  } else {
    n.obs_mean = Eigen::VectorXd::Zero(2);
    n.obs_scale = Eigen::VectorXd::Ones(2);
    n.obs_mean(0) = 0.5 * (cfg.arm.theta_min + cfg.arm.theta_max);
    n.obs_scale(0) = 0.5 * (cfg.arm.theta_max - cfg.arm.theta_min);
    n.obs_scale(1) = cfg.theta_dot_scale;
  }
  return n;
}

Environment::Environment(const PlantConfig& cfg) : cfg_(cfg), norm_(make_normalization(cfg)) {
  const MuscleParams& base =
      cfg.type == PlantType::cycling ? cfg.crank.muscles.at(0) : cfg.arm.muscles.at(0);
  const double substep = cfg.type == PlantType::cycling ? cfg.crank.substep : cfg.arm.substep;
  rate_fast_ = calibrated_rate(cfg.fatigue.t50_fast_s, base, substep);
  rate_slow_ = calibrated_rate(cfg.fatigue.t50_slow_s, base, substep);
}

namespace {

class ArmEnv final : public Environment {
 public:
  explicit ArmEnv(const PlantConfig& cfg) : Environment(cfg) {
    state_.theta = cfg_.arm.rest_angle;
    state_.theta_dot = 0.0;
    state_.muscles.assign(cfg_.arm.muscles.size(), MuscleState{});
    plant_ = cfg_.arm;
  }

  int observation_dim() const override { return 2; }
  int action_dim() const override { return plant_.channels; }
  std::size_t muscle_count() const override { return plant_.muscles.size(); }

  void reset_with_sampled_fatigue(Rng& rng) override {
    state_.theta = plant_.rest_angle;
    state_.theta_dot = 0.0;
    sampled_rates_.clear();
    sampled_initial_.clear();
    for (std::size_t i = 0; i < plant_.muscles.size(); ++i) {
      MuscleState m;
      m.m_fatigued = rng.uniform(0.0, cfg_.fatigue.initial_fatigue_max);
      m.m_active = 0.0;
      m.m_rested = 1.0 - m.m_fatigued;
      m.activation = 0.0;
      state_.muscles[i] = m;
      plant_.muscles[i].fatigue_rate = rng.uniform(rate_slow_, rate_fast_);
      sampled_initial_.push_back(m.m_fatigued);
      sampled_rates_.push_back(plant_.muscles[i].fatigue_rate);
    }
  }

  void reset_nominal(double fatigue_rate, double initial_fatigue) override {
    state_.theta = plant_.rest_angle;
    state_.theta_dot = 0.0;
    sampled_rates_.clear();
    sampled_initial_.clear();
    for (std::size_t i = 0; i < plant_.muscles.size(); ++i) {
      MuscleState m;
      m.m_fatigued = initial_fatigue;
      m.m_rested = 1.0 - initial_fatigue;
      state_.muscles[i] = m;
      plant_.muscles[i].fatigue_rate = fatigue_rate;
      sampled_initial_.push_back(initial_fatigue);
      sampled_rates_.push_back(fatigue_rate);
    }
  }

  EnvObservation observe() const override {
    EnvObservation obs(2);
    obs << state_.theta, state_.theta_dot;
    return obs;
  }

  EnvObservation step(const StimCommand& cmd) override {
    auto [next, obs] = step_arm(plant_, std::move(state_), cmd, cfg_.control_dt);
    state_ = std::move(next);
    return obs;
  }

  std::vector<double> capacities() const override {
    std::vector<double> c;
    c.reserve(state_.muscles.size());
    for (const auto& m : state_.muscles) c.push_back(capacity(m));
    return c;
  }

  double report_scale() const override { return kRadToDeg; }
  const char* tracked_column() const override { return "theta_deg"; }

  std::unique_ptr<Environment> clone() const override { return std::make_unique<ArmEnv>(*this); }

 private:
  ArmPlant plant_;  // fatigue rates mutate per episode
  ArmState state_;
};

class CrankEnv final : public Environment {
 public:
  explicit CrankEnv(const PlantConfig& cfg) : Environment(cfg) {
    state_.muscles.assign(cfg_.crank.muscles.size(), MuscleState{});
    plant_ = cfg_.crank;
  }

  int observation_dim() const override { return 3; }
  int action_dim() const override { return plant_.channels; }
  std::size_t muscle_count() const override { return plant_.muscles.size(); }

  void reset_with_sampled_fatigue(Rng& rng) override {
    state_.phi = 0.0;
    state_.phi_dot = 0.0;
    sampled_rates_.clear();
    sampled_initial_.clear();
    for (std::size_t i = 0; i < plant_.muscles.size(); ++i) {
      MuscleState m;
      m.m_fatigued = rng.uniform(0.0, cfg_.fatigue.initial_fatigue_max);
      m.m_rested = 1.0 - m.m_fatigued;
      state_.muscles[i] = m;
      plant_.muscles[i].fatigue_rate = rng.uniform(rate_slow_, rate_fast_);
      sampled_initial_.push_back(m.m_fatigued);
      sampled_rates_.push_back(plant_.muscles[i].fatigue_rate);
    }
  }

  void reset_nominal(double fatigue_rate, double initial_fatigue) override {
    state_.phi = 0.0;
    state_.phi_dot = 0.0;
    sampled_rates_.clear();
    sampled_initial_.clear();
    for (std::size_t i = 0; i < plant_.muscles.size(); ++i) {
      MuscleState m;
      m.m_fatigued = initial_fatigue;
      m.m_rested = 1.0 - initial_fatigue;
      state_.muscles[i] = m;
      plant_.muscles[i].fatigue_rate = fatigue_rate;
      sampled_initial_.push_back(initial_fatigue);
      sampled_rates_.push_back(fatigue_rate);
    }
  }

  EnvObservation observe() const override {
    EnvObservation obs(3);
    obs << state_.phi_dot, std::sin(state_.phi), std::cos(state_.phi);
    return obs;
  }

  EnvObservation step(const StimCommand& cmd) override {
    auto [next, obs] = step_crank(plant_, std::move(state_), cmd, cfg_.control_dt);
    state_ = std::move(next);
    return obs;
  }

  std::vector<double> capacities() const override {
    std::vector<double> c;
    c.reserve(state_.muscles.size());
    for (const auto& m : state_.muscles) c.push_back(capacity(m));
    return c;
  }

  double report_scale() const override { return kRadPerSecToRpm; }
  const char* tracked_column() const override { return "cadence_rpm"; }

  std::unique_ptr<Environment> clone() const override { return std::make_unique<CrankEnv>(*this); }

 private:
  CrankPlant plant_;
  CrankState state_;
};

}  // namespace

std::unique_ptr<Environment> make_environment(const PlantConfig& cfg) {
  if (cfg.type == PlantType::cycling) {
    if (cfg.crank.muscles.empty()) throw ConfigError("cycling plant has no muscles");
    return std::make_unique<CrankEnv>(cfg);
  }
  if (cfg.arm.muscles.empty())
    throw ConfigError(plant_type_name(cfg.type) + " plant has no muscles");
  return std::make_unique<ArmEnv>(cfg);
}

}  // namespace feslab::neurosim
