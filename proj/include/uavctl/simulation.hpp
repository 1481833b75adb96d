// Closed-loop simulation driver: reference -> position law -> planner ->
// attitude law -> allocation -> plant, telemetry and summary emission, the
// attitude-only study mode, open-loop plant drive, and trackability reports.
#pragma once

#include "attitude_reference.hpp"
#include "config.hpp"
#include "csv.hpp"
#include "telemetry.hpp"
#include "vehicle.hpp"

#include <chrono>
#include <memory>
#include <optional>
#include <random>

namespace uavctl {

/// Lightweight in-memory trace used by tests and the summary pass.
struct TraceSample {
  double t = 0.0;
  double theta_v = 0.0, theta_c = 0.0, theta_n = 0.0, psi = 0.0;
  double e_x_norm = 0.0, e_v_norm = 0.0;
  double f_c1 = 0.0, f_c2 = 0.0;
  double energy = 0.0;
  bool clamped = false;
};

struct SimOutput {
  RunSummary summary;
  std::vector<TraceSample> trace;  // filled when keep_trace is requested
};

namespace detail {

inline void finish_summary(RunSummary& s, const std::vector<TraceSample>& full,
                           double horizon) {
  s.steady_window = std::min(10.0, horizon / 2.0);
  double sum_sq = 0.0;
  long n_window = 0;
  double peak = -1.0, t_peak = 0.0;
  for (const auto& row : full) {
    if (row.theta_v > peak) {
      peak = row.theta_v;
      t_peak = row.t;
    }
    if (row.t >= horizon - s.steady_window) {
      sum_sq += row.e_x_norm * row.e_x_norm;
      ++n_window;
    }
    if (row.t >= 5.0) s.max_e_x_after_5s = std::max(s.max_e_x_after_5s, row.e_x_norm);
    s.max_abs_psi = std::max(s.max_abs_psi, std::abs(row.psi));
    s.max_theta_c = std::max(s.max_theta_c, row.theta_c);
    s.max_lateral_force =
        std::max({s.max_lateral_force, std::abs(row.f_c1), std::abs(row.f_c2)});
  }
  s.peak_theta_v = peak;
  s.t_peak_theta_v = t_peak;
  const double near = 0.25 * M_PI / 180.0;
  for (const auto& row : full) {
    if (row.theta_v >= peak - near) {
      s.t_first_near_peak = row.t;
      break;
    }
  }
  s.steady_rms_e_x = n_window > 0 ? std::sqrt(sum_sq / n_window) : 0.0;
  if (!full.empty()) s.final_e_x = full.back().e_x_norm;
}

}  // namespace detail

inline SimOutput run_closed_loop(const SimConfig& cfg, bool write_files, bool keep_trace) {
  const auto t_start = std::chrono::steady_clock::now();
  cfg.validate();
  const auto ref = cfg.make_reference();
  const Allocator allocator(cfg.vehicle);
  TrackingController controller(cfg.controller);

  RigidBodyState body;
  body.x = ref->at(0.0).pos + cfg.initial_position_offset;
  body.rotor_speed = hover_trim(cfg.vehicle).speeds;

  std::optional<TelemetryWriter> telemetry;
  if (write_files) telemetry.emplace(cfg.telemetry_path);

  SimOutput out;
  out.summary.dt = cfg.dt;
  out.summary.horizon = ref->duration();
  const long steps = std::lround(ref->duration() / cfg.dt);
  out.summary.steps = steps;
  const double cos_limit = std::cos(cfg.controller.theta_max);

  std::vector<TraceSample> full;
  full.reserve(steps);

  for (long k = 0; k < steps; ++k) {
    const double t = k * cfg.dt;
    const ReferenceSample sample = ref->at(t);
    const ControlStep step = controller.update(t, sample, body.x, body.v, body.R,
                                               body.omega, cfg.dt);
    Wrench command;
    command.force = step.f_c;
    command.torque = step.tau_c;
    const AllocationResult alloc = allocator.allocate(command);

    TraceSample row;
    row.t = t;
    row.theta_v = step.theta_v;
    row.theta_c = step.theta_c;
    row.theta_n = step.theta_n;
    row.psi = step.psi;
    row.e_x_norm = step.e_x.norm();
    row.e_v_norm = step.e_v.norm();
    row.f_c1 = step.f_c.x();
    row.f_c2 = step.f_c.y();
    row.energy = step.energy;
    row.clamped = alloc.clamped;
    full.push_back(row);

    if (alloc.clamped) {
      ++out.summary.clamp_count;
      if (t >= 2.0) ++out.summary.clamp_count_after_2s;
    }
    if (cfg.controller.cone_active()) {
      out.summary.max_cone_violation =
          std::max(out.summary.max_cone_violation, cos_limit - std::cos(step.theta_c));
    }
    if (telemetry && k % cfg.telemetry_stride == 0) {
      telemetry->write_row(t, body, sample, step, alloc.clamped);
    }

    const double h = cfg.dt / cfg.plant_substeps;
    for (int sub = 0; sub < cfg.plant_substeps; ++sub) {
      body = integrate_step(cfg.vehicle, body, alloc.speeds, h, cfg.integrator,
                            cfg.drag_enabled);
    }
  }

  detail::finish_summary(out.summary, full, ref->duration());
  out.summary.wall_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t_start).count();
  if (write_files) out.summary.write(cfg.summary_path);
  if (keep_trace) out.trace = std::move(full);
  return out;
}

// ---------------------------------------------------------------------------
// Attitude-only study: ideal rotational plant, torque applied directly, with
// an analytic planned motion. Used as the energy-monitor harness.

struct AttitudeOnlyResult {
  double min_decrease_margin = 1e300;  // min over steps of V(k) - V(k+1)
  double max_vdot_rel_err = 0.0;       // worst relative mismatch of dV/dt
  double final_error_distance = 0.0;
  double final_rate_error = 0.0;
  double initial_energy = 0.0;
};

inline AttitudeOnlyResult run_attitude_only_case(const ControllerConfig& ctl,
                                                 const AttitudeOnlySetup& setup,
                                                 const Rotation& R_e0, const Vec3& e_omega0,
                                                 double dt, double horizon,
                                                 TelemetryWriter* telemetry = nullptr,
                                                 int stride = 1) {
  const Mat3 inertia = ctl.inertia;
  const Mat3 inertia_inv = inertia.inverse();
  const AttitudeGains& gains = ctl.attitude;

  auto plan_r = [&](double t) {
    return Rotation::exp(setup.axis * (setup.amplitude * std::sin(setup.rate * t)));
  };
  auto plan_w = [&](double t) {
    return Vec3(setup.axis * (setup.amplitude * setup.rate * std::cos(setup.rate * t)));
  };
  auto plan_wdot = [&](double t) {
    return Vec3(-setup.axis *
                (setup.amplitude * setup.rate * setup.rate * std::sin(setup.rate * t)));
  };

  using State = Eigen::Matrix<double, 12, 1>;
  auto pack = [](const Mat3& r, const Vec3& w) {
    State s;
    s.segment<9>(0) = Eigen::Map<const Eigen::Matrix<double, 9, 1>>(r.data());
    s.segment<3>(9) = w;
    return s;
  };
  auto unpack_r = [](const State& s) { return Mat3(Eigen::Map<const Mat3>(s.data())); };
  auto unpack_w = [](const State& s) { return Vec3(s.segment<3>(9)); };

  auto deriv = [&](double t, const State& s) -> State {
    const Mat3 r = unpack_r(s);
    const Vec3 w = unpack_w(s);
    const Rotation rp = plan_r(t);
    const Rotation re = Rotation::project(r * rp.m().transpose());
    const Vec3 tau = control_torque(gains, re, rp, w, plan_w(t), plan_wdot(t), inertia);
    const Mat3 rdot = r * hat(w);
    State d = pack(rdot, inertia_inv * (-w.cross((inertia * w).eval()) + tau));
    return d;
  };
  auto rk4 = [&](State s, double t, double h) -> State {
    const State k1 = deriv(t, s);
    const State k2 = deriv(t + h / 2, s + (h / 2) * k1);
    const State k3 = deriv(t + h / 2, s + (h / 2) * k2);
    const State k4 = deriv(t + h, s + h * k3);
    s += (h / 6.0) * (k1 + 2 * k2 + 2 * k3 + k4);
    s.segment<9>(0) = pack(project_to_so3(unpack_r(s)), Vec3::Zero()).segment<9>(0);
    return s;
  };

  State s = pack(R_e0.m() * plan_r(0).m(), plan_w(0) + e_omega0);
  AttitudeOnlyResult res;
  res.initial_energy = attitude_energy(gains, R_e0, e_omega0, inertia);
  double prev_v = res.initial_energy;
  const long steps = std::lround(horizon / dt);
  for (long k = 0; k < steps; ++k) {
    const double t = k * dt;
    s = rk4(s, t, dt);
    const double tn = (k + 1) * dt;
    const Rotation re = Rotation::project(unpack_r(s) * plan_r(tn).m().transpose());
    const Vec3 e_w = unpack_w(s) - plan_w(tn);
    const double v = attitude_energy(gains, re, e_w, inertia);
    res.min_decrease_margin = std::min(res.min_decrease_margin, prev_v - v);
    prev_v = v;

    // Periodic decrease-rate audit against a short reintegration.
    if (k % 200 == 0) {
      const double h = 1e-5;
      auto v_at = [&](double tt) {
        State ss = s;
        const int sub = 4;
        const double hh = (tt - tn) / sub;
        double cur = tn;
        for (int j = 0; j < sub; ++j) {
          ss = rk4(ss, cur, hh);
          cur += hh;
        }
        const Rotation re2 = Rotation::project(unpack_r(ss) * plan_r(tt).m().transpose());
        return attitude_energy(gains, re2, unpack_w(ss) - plan_w(tt), inertia);
      };
      const double fd = (v_at(tn + h) - v_at(tn - h)) / (2 * h);
      const double expect = -e_w.dot(gains.K_omega * e_w);
      if (std::abs(expect) > 1e-9) {
        res.max_vdot_rel_err =
            std::max(res.max_vdot_rel_err, std::abs(fd - expect) / std::abs(expect));
      }
    }

    if (telemetry && k % stride == 0) {
      RigidBodyState fake;
      fake.R = Rotation::project(unpack_r(s));
      fake.omega = unpack_w(s);
      ControlStep step;
      step.t = tn;
      step.R_p = plan_r(tn);
      step.omega_p = plan_w(tn);
      step.R_e = re;
      step.e_omega = e_w;
      step.energy = v;
      step.potential = nav_potential(gains.K_R, re);
      step.theta_v = acos_clamped(fake.R.m()(2, 2));
      step.psi = std::atan2(fake.R.m()(1, 0), fake.R.m()(0, 0));
      telemetry->write_row(tn, fake, ReferenceSample{}, step, false);
    }

    if (k + 1 == steps) {
      res.final_error_distance = so3_distance(re);
      res.final_rate_error = e_w.norm();
    }
  }
  return res;
}

/// Draw an initial condition strictly inside the certified basin.
inline std::pair<Rotation, Vec3> random_basin_state(const ControllerConfig& ctl,
                                                    std::mt19937_64& rng) {
  std::uniform_real_distribution<double> unit(-1.0, 1.0);
  std::uniform_real_distribution<double> frac(0.05, 0.95);
  const double budget = frac(rng) * basin_threshold(ctl.attitude);
  const double pot_share = frac(rng);
  // Rotation with potential = pot_share * budget about a random axis.
  Vec3 axis(unit(rng), unit(rng), unit(rng));
  while (axis.norm() < 1e-3) axis = Vec3(unit(rng), unit(rng), unit(rng));
  axis.normalize();
  double lo = 0.0, hi = M_PI;
  const double target = pot_share * budget;
  for (int i = 0; i < 60; ++i) {
    const double mid = 0.5 * (lo + hi);
    if (nav_potential(ctl.attitude.K_R, Rotation::axis_angle(axis, mid)) < target) {
      lo = mid;
    } else {
      hi = mid;
    }
  }
  const Rotation r_e = Rotation::axis_angle(axis, lo);
  const double kin = budget - nav_potential(ctl.attitude.K_R, r_e);
  Vec3 dir(unit(rng), unit(rng), unit(rng));
  while (dir.norm() < 1e-3) dir = Vec3(unit(rng), unit(rng), unit(rng));
  dir.normalize();
  const double scale = std::sqrt(2.0 * kin / dir.dot(ctl.inertia * dir));
  return {r_e, scale * dir};
}

inline SimOutput run_attitude_only(const SimConfig& cfg, bool write_files) {
  SimOutput out;
  out.summary.dt = cfg.dt;
  out.summary.horizon = cfg.scenario.horizon;

  Rotation r_e0;
  Vec3 e_w0;
  if (cfg.attitude_only.random_initial) {
    std::mt19937_64 rng(cfg.seed);
    std::tie(r_e0, e_w0) = random_basin_state(cfg.controller, rng);
  } else {
    r_e0 = Rotation::axis_angle(cfg.attitude_only.initial_axis,
                                cfg.attitude_only.initial_angle);
    e_w0 = cfg.attitude_only.initial_rate_error;
  }
  std::optional<TelemetryWriter> telemetry;
  if (write_files) telemetry.emplace(cfg.telemetry_path);
  const AttitudeOnlyResult res = run_attitude_only_case(
      cfg.controller, cfg.attitude_only, r_e0, e_w0, cfg.dt, cfg.scenario.horizon,
      telemetry ? &*telemetry : nullptr, cfg.telemetry_stride);
  out.summary.min_energy_decrease = res.min_decrease_margin;
  out.summary.steps = std::lround(cfg.scenario.horizon / cfg.dt);
  if (write_files) out.summary.write(cfg.summary_path);
  return out;
}

// ---------------------------------------------------------------------------

inline SimOutput run_open_loop(const SimConfig& cfg, bool write_files, bool keep_trace) {
  if (cfg.wrench_csv.empty()) {
    throw std::invalid_argument("run_open_loop: open_loop.wrench_csv not set");
  }
  const CsvTable table = read_csv(cfg.wrench_csv);
  if (table.rows.empty()) throw std::runtime_error("run_open_loop: empty wrench table");
  cfg.vehicle.validate();
  const Allocator allocator(cfg.vehicle);

  RigidBodyState body;
  body.rotor_speed = hover_trim(cfg.vehicle).speeds;
  std::optional<TelemetryWriter> telemetry;
  if (write_files) telemetry.emplace(cfg.telemetry_path);

  SimOutput out;
  const double t_end = table.rows.back().at(0);
  const long steps = std::lround(t_end / cfg.dt);
  out.summary.dt = cfg.dt;
  out.summary.horizon = t_end;
  out.summary.steps = steps;
  size_t cursor = 0;
  std::vector<TraceSample> full;
  full.reserve(steps);
  for (long k = 0; k < steps; ++k) {
    const double t = k * cfg.dt;
    while (cursor + 1 < table.rows.size() && table.rows[cursor + 1].at(0) <= t) ++cursor;
    const auto& r = table.rows[cursor];
    Wrench w;
    w.force = Vec3(r.at(1), r.at(2), r.at(3));
    w.torque = Vec3(r.at(4), r.at(5), r.at(6));
    const AllocationResult alloc = allocator.allocate(w);
    if (alloc.clamped) ++out.summary.clamp_count;

    TraceSample row;
    row.t = t;
    row.theta_v = acos_clamped(body.R.m()(2, 2));
    row.psi = std::atan2(body.R.m()(1, 0), body.R.m()(0, 0));
    row.e_x_norm = body.x.norm();
    row.clamped = alloc.clamped;
    full.push_back(row);

    if (telemetry && k % cfg.telemetry_stride == 0) {
      ControlStep step;
      step.t = t;
      step.f_c = w.force;
      step.tau_c = w.torque;
      step.theta_v = row.theta_v;
      step.psi = row.psi;
      step.e_x = body.x;
      step.e_v = body.v;
      telemetry->write_row(t, body, ReferenceSample{}, step, alloc.clamped);
    }
    body = integrate_step(cfg.vehicle, body, alloc.speeds, cfg.dt, cfg.integrator,
                          cfg.drag_enabled);
  }
  detail::finish_summary(out.summary, full, t_end);
  if (write_files) out.summary.write(cfg.summary_path);
  if (keep_trace) out.trace = std::move(full);
  return out;
}

inline SimOutput run_sim(const SimConfig& cfg, bool write_files = true,
                         bool keep_trace = false) {
  switch (cfg.mode) {
    case SimMode::kClosedLoop:
      return run_closed_loop(cfg, write_files, keep_trace);
    case SimMode::kAttitudeOnly:
      return run_attitude_only(cfg, write_files);
    case SimMode::kOpenLoop:
      return run_open_loop(cfg, write_files, keep_trace);
  }
  throw std::logic_error("run_sim: unknown mode");
}

// ---------------------------------------------------------------------------

struct TrackabilityReport {
  double theta_b = 0.0;                 // rad, buffer half-angle
  double peak_theta_n = 0.0;            // rad
  double t_peak_theta_n = 0.0;
  double vectored_fraction = 0.0;       // fraction of samples meeting the exact case
  std::vector<std::pair<double, double>> infeasible_windows;  // cone case

  nlohmann::json to_json() const {
    nlohmann::json windows = nlohmann::json::array();
    for (const auto& [a, b] : infeasible_windows) windows.push_back({a, b});
    return nlohmann::json{{"theta_b_deg", theta_b * 180.0 / M_PI},
                          {"peak_theta_n_deg", peak_theta_n * 180.0 / M_PI},
                          {"t_peak_theta_n", t_peak_theta_n},
                          {"vectored_fraction", vectored_fraction},
                          {"infeasible_windows", windows}};
  }
};

inline TrackabilityReport check_trajectory(const SimConfig& cfg, double scan_dt = 0.01) {
  const auto ref = cfg.make_reference();
  TrackabilityReport rep;
  const double theta_max = cfg.vehicle.cone_factor * std::abs(cfg.vehicle.tilt_angle);
  const bool cone = theta_max > 0.0 && theta_max < M_PI / 2;
  rep.theta_b = cone ? cone_buffer_angle(theta_max, cfg.controller.attitude.eps) : 0.0;

  long n = 0, n_vectored = 0;
  bool in_window = false;
  double window_start = 0.0;
  for (double t = 0.0; t <= ref->duration() + 1e-12; t += scan_dt) {
    const double tt = std::min(t, ref->duration());
    const Wrench ss =
        steady_state_wrench(ref->at(tt), cfg.vehicle.mass, cfg.vehicle.inertia,
                            cfg.vehicle.gravity);
    const VectoredVerdict v = vectored_trackability(ss);
    ++n;
    if (v.trackable) ++n_vectored;
    if (v.theta_n > rep.peak_theta_n) {
      rep.peak_theta_n = v.theta_n;
      rep.t_peak_theta_n = tt;
    }
    if (cone) {
      const bool ok = cone_trackability(ss, theta_max, cfg.controller.attitude.eps);
      if (!ok && !in_window) {
        in_window = true;
        window_start = tt;
      } else if (ok && in_window) {
        in_window = false;
        rep.infeasible_windows.emplace_back(window_start, tt);
      }
    }
  }
  if (in_window) rep.infeasible_windows.emplace_back(window_start, ref->duration());
  rep.vectored_fraction = n > 0 ? static_cast<double>(n_vectored) / n : 0.0;
  return rep;
}

}  // namespace uavctl
