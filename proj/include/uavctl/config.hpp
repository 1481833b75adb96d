// Plain-text configuration: INI-style sections of key = value pairs.
// The schema is documented in config/README.md; every key has the default
// used by the flight scenarios, so an empty file is a valid configuration.
#pragma once

#include "controller.hpp"
#include "reference.hpp"
#include "tabulated_reference.hpp"
#include "vehicle.hpp"

#include <fstream>
#include <map>
#include <memory>
#include <sstream>
#include <string>
#include <vector>

namespace uavctl {

class ConfigFile {
 public:
  ConfigFile() = default;

  static ConfigFile parse_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("ConfigFile: cannot open " + path);
    std::stringstream ss;
    ss << in.rdbuf();
    return parse(ss.str());
  }

  static ConfigFile parse(const std::string& text) {
    ConfigFile cfg;
    std::istringstream in(text);
    std::string line, section;
    int lineno = 0;
    while (std::getline(in, line)) {
      ++lineno;
      const auto comment = line.find_first_of("#;");
      if (comment != std::string::npos) line = line.substr(0, comment);
      line = trim(line);
      if (line.empty()) continue;
      if (line.front() == '[') {
        if (line.back() != ']') {
          throw std::runtime_error("ConfigFile: unterminated section at line " +
                                   std::to_string(lineno));
        }
        section = trim(line.substr(1, line.size() - 2));
        continue;
      }
      const auto eq = line.find('=');
      if (eq == std::string::npos) {
        throw std::runtime_error("ConfigFile: expected key = value at line " +
                                 std::to_string(lineno));
      }
      cfg.values_[section + "." + trim(line.substr(0, eq))] = trim(line.substr(eq + 1));
    }
    return cfg;
  }

  bool has(const std::string& key) const { return values_.count(key) > 0; }

  std::string get_str(const std::string& key, const std::string& fallback) const {
    const auto it = values_.find(key);
    return it == values_.end() ? fallback : it->second;
  }

  double get_num(const std::string& key, double fallback) const {
    const auto it = values_.find(key);
    if (it == values_.end()) return fallback;
    try {
      size_t pos = 0;
      const double v = std::stod(it->second, &pos);
      if (pos != it->second.size()) throw std::invalid_argument("trailing characters");
      return v;
    } catch (const std::exception&) {
      throw std::runtime_error("ConfigFile: key '" + key + "' is not a number: " + it->second);
    }
  }

  bool get_bool(const std::string& key, bool fallback) const {
    const auto it = values_.find(key);
    if (it == values_.end()) return fallback;
    if (it->second == "true" || it->second == "1" || it->second == "yes") return true;
    if (it->second == "false" || it->second == "0" || it->second == "no") return false;
    throw std::runtime_error("ConfigFile: key '" + key + "' is not a boolean: " + it->second);
  }

  std::vector<double> get_list(const std::string& key, const std::vector<double>& fallback) const {
    const auto it = values_.find(key);
    if (it == values_.end()) return fallback;
    std::vector<double> out;
    std::stringstream ss(it->second);
    std::string cell;
    while (std::getline(ss, cell, ',')) out.push_back(std::stod(trim(cell)));
    return out;
  }

  Vec3 get_vec3(const std::string& key, const Vec3& fallback) const {
    const auto v = get_list(key, {fallback.x(), fallback.y(), fallback.z()});
    if (v.size() != 3) throw std::runtime_error("ConfigFile: key '" + key + "' needs 3 values");
    return Vec3(v[0], v[1], v[2]);
  }

 private:
  static std::string trim(const std::string& s) {
    const auto a = s.find_first_not_of(" \t\r");
    if (a == std::string::npos) return "";
    const auto b = s.find_last_not_of(" \t\r");
    return s.substr(a, b - a + 1);
  }

  std::map<std::string, std::string> values_;
};

// ---------------------------------------------------------------------------

enum class SimMode { kClosedLoop, kAttitudeOnly, kOpenLoop };

/// Synthetic planned motion for attitude-only studies.
struct AttitudeOnlySetup {
  Vec3 axis = Vec3(0, 1, 0);
  double amplitude = 0.5;  // rad
  double rate = 1.0;       // rad/s
  bool random_initial = true;
  double initial_angle = 0.6;          // used when random_initial = false
  Vec3 initial_axis = Vec3(1, 0, 0);   //
  Vec3 initial_rate_error = Vec3::Zero();
};

struct SimConfig {
  CircularScenario scenario;
  std::string trajectory_csv;     // when set, overrides the circle
  double spline_knot_dt = -1.0;   // tabulated-fit bandwidth
  VehicleParams vehicle;
  ControllerConfig controller;    // theta_max derived from the vehicle below
  SimMode mode = SimMode::kClosedLoop;
  bool drag_enabled = true;
  double dt = 1e-3;
  int plant_substeps = 1;
  IntegratorMode integrator = IntegratorMode::kExpMidpoint;
  uint64_t seed = 1;
  int telemetry_stride = 1;
  Vec3 initial_position_offset = Vec3::Zero();
  AttitudeOnlySetup attitude_only;
  std::string wrench_csv;         // open-loop drive table
  std::string telemetry_path = "telemetry.csv";
  std::string summary_path;       // defaults to telemetry path + .summary.json

  std::shared_ptr<Reference> make_reference() const {
    if (!trajectory_csv.empty()) {
      return std::make_shared<TabulatedReference>(
          TabulatedReference::from_csv(trajectory_csv, spline_knot_dt));
    }
    return std::make_shared<CircularReference>(scenario);
  }

  /// Runs the full validator chain; throws with the violated condition.
  void validate() const {
    if (dt <= 0.0) throw std::invalid_argument("SimConfig: dt must be positive");
    if (plant_substeps < 1) throw std::invalid_argument("SimConfig: plant_substeps >= 1");
    if (telemetry_stride < 1) throw std::invalid_argument("SimConfig: telemetry_stride >= 1");
    vehicle.validate();
    const auto ref = make_reference();
    const ScenarioBounds bounds =
        scan_reference(*ref, vehicle.mass, vehicle.inertia, vehicle.gravity);
    if (!(bounds.fss_min > 0.0)) {
      throw std::invalid_argument("SimConfig: nominal force reaches zero along the reference");
    }
    if (!(bounds.fss_max < vehicle.thrust_ceiling())) {
      throw std::invalid_argument(
          "SimConfig: nominal force " + std::to_string(bounds.fss_max) +
          " N exceeds the deliverable ceiling " + std::to_string(vehicle.thrust_ceiling()) +
          " N");
    }
    controller.validate(bounds.min_vert_force);
    if (controller.planner_mode == PlannerMode::kDynamic && controller.cone_active()) {
      const double expect = vehicle.cone_factor * std::abs(vehicle.tilt_angle);
      if (std::abs(controller.theta_max - expect) > 1e-12) {
        throw std::invalid_argument("SimConfig: theta_max must equal cone_factor * tilt_angle");
      }
    }
  }
};

inline SimConfig load_sim_config(const ConfigFile& c) {
  SimConfig s;
  s.scenario.radius = c.get_num("scenario.radius", s.scenario.radius);
  s.scenario.omega_slow = c.get_num("scenario.omega_slow", s.scenario.omega_slow);
  s.scenario.omega_fast = c.get_num("scenario.omega_fast", s.scenario.omega_fast);
  s.scenario.ramp_start = c.get_num("scenario.ramp_start", s.scenario.ramp_start);
  s.scenario.ramp_end = c.get_num("scenario.ramp_end", s.scenario.ramp_end);
  s.scenario.horizon = c.get_num("scenario.horizon", s.scenario.horizon);
  s.scenario.gravity = c.get_num("scenario.gravity", s.scenario.gravity);
  s.scenario.literal_line = c.get_bool("scenario.literal_line", s.scenario.literal_line);
  s.trajectory_csv = c.get_str("scenario.csv_path", "");
  s.spline_knot_dt = c.get_num("scenario.spline_knot_dt", -1.0);

  VehicleParams& v = s.vehicle;
  v.mass = c.get_num("vehicle.mass", v.mass);
  const Vec3 inertia = c.get_vec3("vehicle.inertia", v.inertia.diagonal());
  v.inertia = inertia.asDiagonal();
  v.gravity = s.scenario.gravity;
  v.tilt_angle = c.get_num("vehicle.tilt_angle_deg", v.tilt_angle * 180.0 / M_PI) * M_PI / 180.0;
  const auto signs = c.get_list("vehicle.tilt_signs", {1, -1, 1, -1, 1, -1});
  if (signs.size() != 6) throw std::runtime_error("vehicle.tilt_signs needs 6 entries");
  for (int i = 0; i < 6; ++i) v.tilt_signs[i] = signs[i] < 0 ? -1 : 1;
  v.arm_length = c.get_num("vehicle.arm_length", v.arm_length);
  v.thrust_coeff = c.get_num("vehicle.thrust_coeff", v.thrust_coeff);
  v.torque_thrust_ratio = c.get_num("vehicle.torque_thrust_ratio", v.torque_thrust_ratio);
  v.rotor_speed_max = c.get_num("vehicle.rotor_speed_max", v.rotor_speed_max);
  v.rotor_time_const = c.get_num("vehicle.rotor_time_const", v.rotor_time_const);
  v.cone_factor = c.get_num("vehicle.cone_factor", v.cone_factor);
  const Vec3 damping = c.get_vec3("vehicle.rot_damping", v.rot_damping.diagonal());
  v.rot_damping = damping.asDiagonal();
  v.drag_body = c.get_num("vehicle.drag_body", v.drag_body);
  v.drag_induced = c.get_num("vehicle.drag_induced", v.drag_induced);
  s.drag_enabled = c.get_bool("vehicle.drag_enabled", true);

  ControllerConfig& ctl = s.controller;
  ctl.mass = v.mass;
  ctl.gravity = v.gravity;
  ctl.inertia = v.inertia;
  ctl.position.k1 = c.get_num("gains.k1", ctl.position.k1);
  ctl.position.k2 = c.get_num("gains.k2", ctl.position.k2);
  ctl.position.lambda1 = c.get_num("gains.lambda1", ctl.position.lambda1);
  ctl.position.lambda2 = c.get_num("gains.lambda2", ctl.position.lambda2);
  const Vec3 kr = c.get_vec3("gains.K_R", ctl.attitude.K_R.K.diagonal());
  ctl.attitude.K_R = NavGain::diagonal(kr.x(), kr.y(), kr.z());
  const Vec3 kw = c.get_vec3("gains.K_omega", ctl.attitude.K_omega.diagonal());
  ctl.attitude.K_omega = kw.asDiagonal();
  ctl.attitude.ell = c.get_num("gains.ell", ctl.attitude.ell);
  ctl.attitude.k_d = c.get_num("gains.k_d", ctl.attitude.k_d);
  ctl.attitude.eps = c.get_num("gains.eps", ctl.attitude.eps);
  const std::string scaling = c.get_str("gains.scaling_mode", "angle");
  if (scaling == "angle") {
    ctl.attitude.scaling_mode = ScalingMode::kTiltAngle;
  } else if (scaling == "potential") {
    ctl.attitude.scaling_mode = ScalingMode::kPotential;
    ctl.attitude.psi_M = c.get_num("gains.psi_M", ctl.attitude.ell);
    const Vec3 ks = c.get_vec3("gains.K_scale", Vec3(0, 0, 2));
    ctl.attitude.K_scale = ks.asDiagonal();
  } else {
    throw std::runtime_error("gains.scaling_mode must be angle or potential");
  }

  const std::string planner = c.get_str("sim.planner", "dynamic");
  if (planner == "static") {
    ctl.planner_mode = PlannerMode::kStatic;
  } else if (planner == "dynamic") {
    ctl.planner_mode = PlannerMode::kDynamic;
  } else {
    throw std::runtime_error("sim.planner must be static or dynamic");
  }
  ctl.theta_max = v.cone_factor * std::abs(v.tilt_angle);
  if (ctl.planner_mode == PlannerMode::kDynamic && ctl.theta_max <= 0.0) {
    // Dynamic planning on an untilted vehicle: cone disabled.
    ctl.theta_max = M_PI;
  }
  const std::string diff = c.get_str("sim.omega_r_diff", "backward");
  if (diff == "backward") {
    ctl.omega_r_diff = RateDiff::kBackward;
  } else if (diff == "backward2") {
    ctl.omega_r_diff = RateDiff::kBackward2;
  } else {
    throw std::runtime_error("sim.omega_r_diff must be backward or backward2");
  }

  const std::string mode = c.get_str("sim.mode", "closed_loop");
  if (mode == "closed_loop") {
    s.mode = SimMode::kClosedLoop;
  } else if (mode == "attitude_only") {
    s.mode = SimMode::kAttitudeOnly;
  } else if (mode == "open_loop") {
    s.mode = SimMode::kOpenLoop;
  } else {
    throw std::runtime_error("sim.mode must be closed_loop, attitude_only or open_loop");
  }
  s.dt = c.get_num("sim.dt", s.dt);
  s.plant_substeps = static_cast<int>(c.get_num("sim.plant_substeps", 1));
  const std::string integ = c.get_str("sim.integrator", "exp_midpoint");
  if (integ == "exp_midpoint") {
    s.integrator = IntegratorMode::kExpMidpoint;
  } else if (integ == "matrix_rk4") {
    s.integrator = IntegratorMode::kMatrixRk4;
  } else {
    throw std::runtime_error("sim.integrator must be exp_midpoint or matrix_rk4");
  }
  s.seed = static_cast<uint64_t>(c.get_num("sim.seed", 1));
  s.telemetry_stride = static_cast<int>(c.get_num("sim.telemetry_stride", 1));
  s.initial_position_offset = c.get_vec3("initial.position_offset", Vec3::Zero());

  s.attitude_only.axis = c.get_vec3("attitude_only.axis", s.attitude_only.axis).normalized();
  s.attitude_only.amplitude = c.get_num("attitude_only.amplitude", s.attitude_only.amplitude);
  s.attitude_only.rate = c.get_num("attitude_only.rate", s.attitude_only.rate);
  s.attitude_only.random_initial = c.get_bool("attitude_only.random_initial", true);
  s.attitude_only.initial_angle = c.get_num("attitude_only.initial_angle", 0.6);
  s.attitude_only.initial_axis =
      c.get_vec3("attitude_only.initial_axis", Vec3(1, 0, 0)).normalized();
  s.attitude_only.initial_rate_error =
      c.get_vec3("attitude_only.initial_rate_error", Vec3::Zero());

  s.wrench_csv = c.get_str("open_loop.wrench_csv", "");
  s.telemetry_path = c.get_str("output.telemetry", "telemetry.csv");
  s.summary_path = c.get_str("output.summary", s.telemetry_path + ".summary.json");
  return s;
}

inline SimConfig load_sim_config_file(const std::string& path) {
  return load_sim_config(ConfigFile::parse_file(path));
}

}  // namespace uavctl
