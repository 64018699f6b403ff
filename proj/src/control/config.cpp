#include "feslab/control/config.hpp"

#include "feslab/common/errors.hpp"

#include <json.hpp>

#include <cmath>
#include <fstream>
#include <sstream>

namespace feslab::control {

namespace {

using nlohmann::json;

constexpr double kDegToRad = 0.017453292519943295;
constexpr double kRpmToRadPerSec = 0.10471975511965977;
constexpr double kPi = 3.141592653589793;

[[noreturn]] void fail(const std::string& origin, const std::string& what) {
  throw ConfigError(origin + ": " + what);
}

double require_number(const json& j, const std::string& key, const std::string& origin) {
  if (!j.contains(key)) fail(origin, "missing field '" + key + "'");
  if (!j[key].is_number()) fail(origin, "field '" + key + "' must be a number");
  return j[key].get<double>();
}

double number_or(const json& j, const std::string& key, double fallback) {
  return j.contains(key) ? j[key].get<double>() : fallback;
}

int int_or(const json& j, const std::string& key, int fallback) {
  return j.contains(key) ? j[key].get<int>() : fallback;
}

neurosim::MuscleParams parse_muscle(const json& j, bool cycling, const std::string& origin) {
  neurosim::MuscleParams m;
  if (!j.contains("name") || !j["name"].is_string()) fail(origin, "muscle missing 'name'");
  m.name = j["name"].get<std::string>();
  const std::string where = origin + " muscle '" + m.name + "'";
  m.channel = int_or(j, "channel", 0);
  m.f_max = require_number(j, "f_max_n", where);
  m.tau_act = require_number(j, "tau_act_s", where);
  m.tau_deact = require_number(j, "tau_deact_s", where);
  m.recovery_rate = number_or(j, "recovery_rate_per_s", 0.002);
  m.drive_gain = number_or(j, "drive_gain_per_s", 10.0);
  if (m.f_max <= 0.0) fail(where, "f_max_n must be positive");
  if (m.tau_act <= 0.0 || m.tau_deact <= 0.0) fail(where, "time constants must be positive");
  if (m.recovery_rate < 0.0) fail(where, "recovery_rate_per_s must be non-negative");
  if (cycling) {
    m.lobe_center = require_number(j, "lobe_center_deg", where) * kDegToRad;
    m.lobe_halfwidth = require_number(j, "lobe_halfwidth_deg", where) * kDegToRad;
    m.lobe_sign = number_or(j, "lobe_sign", 1.0);
    if (m.lobe_halfwidth <= 0.0 || m.lobe_halfwidth > kPi)
      fail(where, "lobe_halfwidth_deg must be in (0, 180]");
    if (std::abs(m.lobe_sign) > 1.0) fail(where, "lobe_sign must be in [-1, 1]");
  } else {
    m.moment_arm = require_number(j, "moment_arm_m", where);
  }
  return m;
}

void parse_plant(const json& root, neurosim::PlantConfig& plant, const std::string& origin) {
  if (!root.contains("plant") || !root["plant"].is_object()) fail(origin, "missing 'plant' object");
  const json& j = root["plant"];
  const std::string type = j.contains("type") ? j["type"].get<std::string>() : "";
  if (type == "vertical_arm")
    plant.type = neurosim::PlantType::vertical_arm;
  else if (type == "horizontal_arm")
    plant.type = neurosim::PlantType::horizontal_arm;
  else if (type == "cycling")
    plant.type = neurosim::PlantType::cycling;
  else
    fail(origin, "plant.type must be one of vertical_arm|horizontal_arm|cycling");

  plant.control_dt = number_or(j, "control_dt_s", 0.1);
  if (plant.control_dt <= 0.0) fail(origin, "plant.control_dt_s must be positive");

  const bool cycling = plant.type == neurosim::PlantType::cycling;
  if (!j.contains("muscles") || !j["muscles"].is_array() || j["muscles"].empty())
    fail(origin, "plant.muscles must be a non-empty array");

  if (cycling) {
    plant.crank.inertia = require_number(j, "inertia_kgm2", origin);
    plant.crank.damping = require_number(j, "damping_nms", origin);
    plant.crank.radius = require_number(j, "radius_m", origin);
    plant.crank.substep = number_or(j, "physics_substep_s", 1e-3);
    plant.target_min = require_number(j, "target_min_rpm", origin) * kRpmToRadPerSec;
    plant.target_max = require_number(j, "target_max_rpm", origin) * kRpmToRadPerSec;
    if (plant.crank.inertia <= 0.0) fail(origin, "inertia_kgm2 must be positive");
    for (const auto& mj : j["muscles"])
      plant.crank.muscles.push_back(parse_muscle(mj, true, origin));
    plant.crank.channels = static_cast<int>(plant.crank.muscles.size());
    for (std::size_t i = 0; i < plant.crank.muscles.size(); ++i)
      if (plant.crank.muscles[i].channel != static_cast<int>(i))
        fail(origin, "cycling muscles must map one-to-one onto channels 0..n-1");
  } else {
    plant.arm.inertia = require_number(j, "inertia_kgm2", origin);
    plant.arm.segment_mass = require_number(j, "segment_mass_kg", origin);
    plant.arm.com_distance = require_number(j, "com_distance_m", origin);
    plant.arm.damping = require_number(j, "damping_nms", origin);
    plant.arm.gravity_on = plant.type == neurosim::PlantType::vertical_arm;
    if (j.contains("gravity_on")) plant.arm.gravity_on = j["gravity_on"].get<bool>();
    plant.arm.theta_min = require_number(j, "theta_min_deg", origin) * kDegToRad;
    plant.arm.theta_max = require_number(j, "theta_max_deg", origin) * kDegToRad;
    plant.arm.rest_angle = number_or(j, "rest_angle_deg", 0.0) * kDegToRad;
    plant.arm.substep = number_or(j, "physics_substep_s", 1e-3);
    plant.target_min = require_number(j, "target_min_deg", origin) * kDegToRad;
    plant.target_max = require_number(j, "target_max_deg", origin) * kDegToRad;
    plant.theta_dot_scale = number_or(j, "theta_dot_scale", 4.0);
    if (plant.arm.inertia <= 0.0) fail(origin, "inertia_kgm2 must be positive");
    if (plant.arm.theta_min >= plant.arm.theta_max)
      fail(origin, "theta_min_deg must be below theta_max_deg");
    int max_channel = -1;
    for (const auto& mj : j["muscles"]) {
      plant.arm.muscles.push_back(parse_muscle(mj, false, origin));
      max_channel = std::max(max_channel, plant.arm.muscles.back().channel);
    }
    plant.arm.channels = max_channel + 1;
    const int expected = plant.type == neurosim::PlantType::vertical_arm ? 1 : 2;
    if (plant.arm.channels != expected)
      fail(origin, "plant type " + type + " expects " + std::to_string(expected) +
                       " stimulation channels, config has " + std::to_string(plant.arm.channels));
  }
  if (plant.target_min >= plant.target_max) fail(origin, "target range is empty");
  if (!cycling && (plant.target_min < plant.arm.theta_min || plant.target_max > plant.arm.theta_max))
    fail(origin, "target range must sit inside the joint limits");

  if (root.contains("fatigue_sampling")) {
    const json& f = root["fatigue_sampling"];
    plant.fatigue.initial_fatigue_max = number_or(f, "initial_fatigue_max", 0.3);
    plant.fatigue.t50_fast_s = number_or(f, "t50_fast_s", 60.0);
    plant.fatigue.t50_slow_s = number_or(f, "t50_slow_s", 120.0);
    if (plant.fatigue.initial_fatigue_max < 0.0 || plant.fatigue.initial_fatigue_max >= 1.0)
      fail(origin, "fatigue_sampling.initial_fatigue_max must be in [0, 1)");
    if (plant.fatigue.t50_fast_s <= 0.0 || plant.fatigue.t50_slow_s <= plant.fatigue.t50_fast_s)
      fail(origin, "fatigue_sampling t50 bounds must satisfy 0 < fast < slow");
  }
}

}  // namespace

RunConfig parse_run_config(const std::string& json_text, const std::string& origin) {
  json root;
  try {
    root = json::parse(json_text);
  } catch (const json::parse_error& e) {
    throw ConfigError(origin + ": " + e.what());
  }

  RunConfig cfg;
  cfg.source_json = json_text;
  cfg.schema_version = int_or(root, "schema_version", -1);
  if (cfg.schema_version != 1)
    fail(origin, "schema_version must be 1, got " + std::to_string(cfg.schema_version));

  parse_plant(root, cfg.plant, origin);

  if (root.contains("episode")) {
    const json& e = root["episode"];
    cfg.trainer.episode_steps = int_or(e, "steps", 1800);
    cfg.trainer.target_hold_steps = int_or(e, "target_hold_steps", 50);
    if (cfg.trainer.episode_steps <= 1) fail(origin, "episode.steps must exceed 1");
    if (cfg.trainer.target_hold_steps <= 0) fail(origin, "episode.target_hold_steps must be positive");
  }
  if (root.contains("staterep")) {
    const json& s = root["staterep"];
    cfg.staterep.hidden_size = int_or(s, "hidden_size", 20);
    cfg.staterep.bptt_window = int_or(s, "bptt_window", 50);
    cfg.staterep.learning_rate = number_or(s, "learning_rate", 1e-3);
    cfg.trainer.staterep_epochs_per_episode = int_or(s, "epochs_per_episode", 1);
    if (cfg.staterep.hidden_size <= 0) fail(origin, "staterep.hidden_size must be positive");
    if (cfg.staterep.bptt_window <= 0) fail(origin, "staterep.bptt_window must be positive");
  }
  if (root.contains("agent")) {
    const json& a = root["agent"];
    cfg.agent.gamma = number_or(a, "gamma", 0.99);
    cfg.agent.tau_polyak = number_or(a, "tau_polyak", 0.005);
    cfg.agent.learning_rate = number_or(a, "learning_rate", 3e-4);
    cfg.agent.alpha_init = number_or(a, "alpha_init", 0.2);
    cfg.agent.target_entropy_per_dim = number_or(a, "target_entropy_per_dim", -1.0);
    cfg.agent.hidden_width = int_or(a, "hidden_width", 64);
    cfg.agent.batch_size = int_or(a, "batch_size", 256);
    cfg.agent.updates_per_episode = int_or(a, "updates_per_episode", 400);
    if (cfg.agent.gamma < 0.0 || cfg.agent.gamma >= 1.0) fail(origin, "agent.gamma must be in [0, 1)");
    if (cfg.agent.tau_polyak <= 0.0 || cfg.agent.tau_polyak > 1.0)
      fail(origin, "agent.tau_polyak must be in (0, 1]");
    if (cfg.agent.alpha_init <= 0.0) fail(origin, "agent.alpha_init must be positive");
    if (cfg.agent.batch_size <= 0 || cfg.agent.updates_per_episode < 0)
      fail(origin, "agent batch/update counts are invalid");
  }
  if (root.contains("trainer")) {
    const json& t = root["trainer"];
    cfg.trainer.episodes = int_or(t, "episodes", 30);
    cfg.trainer.trace_store_capacity = int_or(t, "trace_store_capacity", 100);
    if (cfg.trainer.episodes < 0) fail(origin, "trainer.episodes must be non-negative");
    if (cfg.trainer.trace_store_capacity <= 0)
      fail(origin, "trainer.trace_store_capacity must be positive");
  }
  if (root.contains("quantizer")) {
    const json& q = root["quantizer"];
    cfg.quantizer.enabled = q.contains("enabled") && q["enabled"].get<bool>();
    cfg.quantizer.levels = int_or(q, "levels", 20);
    if (cfg.quantizer.levels < 2) fail(origin, "quantizer.levels must be at least 2");
  }
  return cfg;
}

RunConfig load_run_config(const std::string& path) {
  std::ifstream in(path);
  if (!in.good()) throw ConfigError(path + ": cannot open config file");
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return parse_run_config(buffer.str(), path);
}

}  // namespace feslab::control
