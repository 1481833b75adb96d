// Telemetry CSV with a fixed column layout, plus the JSON run summary.
// Formatting uses %.17g so that identical runs produce byte-identical files.
#pragma once

#include "controller.hpp"
#include "vehicle.hpp"

#include <json.hpp>

#include <cstdio>
#include <fstream>
#include <string>
#include <vector>

namespace uavctl {

inline const char* telemetry_header() {
  return "t,"
         "x0,x1,x2,v0,v1,v2,"
         "xd0,xd1,xd2,vd0,vd1,vd2,"
         "ex0,ex1,ex2,ev0,ev1,ev2,"
         "R00,R01,R02,R10,R11,R12,R20,R21,R22,"
         "Rp00,Rp01,Rp02,Rp10,Rp11,Rp12,Rp20,Rp21,Rp22,"
         "w0,w1,w2,wp0,wp1,wp2,"
         "theta_v,theta_c,theta_n,theta_e,psi,"
         "fc_norm,fc0,fc1,fc2,"
         "tau0,tau1,tau2,"
         "rot0,rot1,rot2,rot3,rot4,rot5,"
         "V_R,Psi_KR,dR_margin,"
         "clamp";
}

class TelemetryWriter {
 public:
  explicit TelemetryWriter(const std::string& path) : out_(path) {
    if (!out_) throw std::runtime_error("TelemetryWriter: cannot open " + path);
    out_ << telemetry_header() << "\n";
  }

  void write_row(double t, const RigidBodyState& body, const ReferenceSample& ref,
                 const ControlStep& step, bool clamped) {
    char buf[64];
    auto put = [&](double v, bool last = false) {
      std::snprintf(buf, sizeof buf, "%.17g", v);
      out_ << buf << (last ? '\n' : ',');
    };
    put(t);
    for (int i = 0; i < 3; ++i) put(body.x[i]);
    for (int i = 0; i < 3; ++i) put(body.v[i]);
    for (int i = 0; i < 3; ++i) put(ref.pos[i]);
    for (int i = 0; i < 3; ++i) put(ref.vel[i]);
    for (int i = 0; i < 3; ++i) put(step.e_x[i]);
    for (int i = 0; i < 3; ++i) put(step.e_v[i]);
    for (int r = 0; r < 3; ++r) {
      for (int c = 0; c < 3; ++c) put(body.R.m()(r, c));
    }
    for (int r = 0; r < 3; ++r) {
      for (int c = 0; c < 3; ++c) put(step.R_p.m()(r, c));
    }
    for (int i = 0; i < 3; ++i) put(body.omega[i]);
    for (int i = 0; i < 3; ++i) put(step.omega_p[i]);
    put(step.theta_v);
    put(step.theta_c);
    put(step.theta_n);
    put(step.theta_e);
    put(step.psi);
    put(step.f_c.norm());
    for (int i = 0; i < 3; ++i) put(step.f_c[i]);
    for (int i = 0; i < 3; ++i) put(step.tau_c[i]);
    for (int i = 0; i < 6; ++i) put(body.rotor_speed(i));
    put(step.energy);
    put(step.potential);
    put(step.mismatch_margin);
    put(clamped ? 1.0 : 0.0, /*last=*/true);
  }

 private:
  std::ofstream out_;
};

/// Per-run summary record; serialized as the JSON sidecar.
struct RunSummary {
  double dt = 0.0;
  double horizon = 0.0;
  long steps = 0;
  double peak_theta_v = 0.0;           // rad
  double t_peak_theta_v = 0.0;         // argmax over the run
  double t_first_near_peak = 0.0;      // first time within 0.25 deg of the peak
  double steady_rms_e_x = 0.0;         // over the last steady_window seconds
  double steady_window = 10.0;
  double max_e_x_after_5s = 0.0;
  double max_abs_psi = 0.0;            // rad
  double max_theta_c = 0.0;            // rad
  double max_cone_violation = -1.0;    // max over t of cos(theta_M) - cos(theta_c)
  long clamp_count = 0;
  long clamp_count_after_2s = 0;
  double max_lateral_force = 0.0;      // max |f_c1|, |f_c2| over the run
  double min_energy_decrease = 0.0;    // attitude-only monotonicity margin
  double final_e_x = 0.0;
  double wall_seconds = 0.0;

  nlohmann::json to_json() const {
    return nlohmann::json{{"dt", dt},
                          {"horizon", horizon},
                          {"steps", steps},
                          {"peak_theta_v_deg", peak_theta_v * 180.0 / M_PI},
                          {"t_peak_theta_v", t_peak_theta_v},
                          {"t_first_near_peak", t_first_near_peak},
                          {"steady_rms_e_x", steady_rms_e_x},
                          {"steady_window", steady_window},
                          {"max_e_x_after_5s", max_e_x_after_5s},
                          {"max_abs_psi_deg", max_abs_psi * 180.0 / M_PI},
                          {"max_theta_c_deg", max_theta_c * 180.0 / M_PI},
                          {"max_cone_violation", max_cone_violation},
                          {"clamp_count", clamp_count},
                          {"clamp_count_after_2s", clamp_count_after_2s},
                          {"max_lateral_force", max_lateral_force},
                          {"min_energy_decrease", min_energy_decrease},
                          {"final_e_x", final_e_x},
                          {"wall_seconds", wall_seconds}};
  }

  void write(const std::string& path) const {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("RunSummary: cannot open " + path);
    out << to_json().dump(2) << "\n";
  }
};

}  // namespace uavctl
