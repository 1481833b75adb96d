// Desired-trajectory sources. A reference supplies position and attitude
// together with every derivative the control chain consumes (up to the
// fourth position derivative), all in closed form -- nothing here
// differentiates numerically.
#pragma once

#include "so3.hpp"
#include "wrench.hpp"

#include <algorithm>
#include <cmath>
#include <memory>
#include <stdexcept>
#include <vector>

namespace uavctl {

/// One instant of the desired trajectory.
struct ReferenceSample {
  double t = 0.0;
  Vec3 pos = Vec3::Zero();      // m
  Vec3 vel = Vec3::Zero();      // m/s
  Vec3 accel = Vec3::Zero();    // m/s^2
  Vec3 jerk = Vec3::Zero();     // m/s^3
  Vec3 snap = Vec3::Zero();     // m/s^4
  Rotation attitude;            // desired attitude
  Vec3 angular_rate = Vec3::Zero();   // rad/s, body frame of `attitude`
  Vec3 angular_accel = Vec3::Zero();  // rad/s^2
  double heading = 0.0;         // rad
  double heading_rate = 0.0;    // rad/s
  double heading_accel = 0.0;   // rad/s^2
};

class Reference {
 public:
  virtual ~Reference() = default;
  virtual ReferenceSample at(double t) const = 0;
  virtual double duration() const = 0;
};

// ---------------------------------------------------------------------------
// Smoothstep with four vanishing end derivatives (degree 9). Keeping the
// angular-speed profile this smooth makes the position reference C^5, one
// order beyond what the planner chain strictly needs.

inline double smoothstep_c4(double u) {
  if (u <= 0.0) return 0.0;
  if (u >= 1.0) return 1.0;
  const double u5 = u * u * u * u * u;
  return u5 * (126.0 + u * (-420.0 + u * (540.0 + u * (-315.0 + u * 70.0))));
}

inline double smoothstep_c4_d1(double u) {
  if (u <= 0.0 || u >= 1.0) return 0.0;
  const double a = u * (1.0 - u);
  return 630.0 * a * a * a * a;
}

inline double smoothstep_c4_d2(double u) {
  if (u <= 0.0 || u >= 1.0) return 0.0;
  const double a = u * (1.0 - u);
  return 2520.0 * a * a * a * (1.0 - 2.0 * u);
}

inline double smoothstep_c4_d3(double u) {
  if (u <= 0.0 || u >= 1.0) return 0.0;
  const double a = u * (1.0 - u);
  return 2520.0 * a * a * (14.0 * u * u - 14.0 * u + 3.0);
}

/// Integral of smoothstep_c4 from 0 to u; equals 0.5 + (u - 1) past the ramp.
inline double smoothstep_c4_int(double u) {
  if (u <= 0.0) return 0.0;
  if (u >= 1.0) return 0.5 + (u - 1.0);
  const double u6 = u * u * u * u * u * u;
  return u6 * (21.0 + u * (-60.0 + u * (67.5 + u * (-35.0 + u * 7.0))));
}

// ---------------------------------------------------------------------------

/// Planar circle flown at a phase rate that steps between two constant
/// values through a smooth ramp; desired attitude is level with zero yaw.
struct CircularScenario {
  double radius = 1.0;        // m
  double omega_slow = 0.3;    // rad/s, before the ramp
  double omega_fast = 1.93;   // rad/s, after the ramp
  double ramp_start = 15.0;   // s
  double ramp_end = 21.0;     // s
  double horizon = 40.0;      // s
  double gravity = 9.81;      // m/s^2
  // Reading of the planar components: false -> [cos, sin] (a circle, the
  // default), true -> [cos, cos] (a diagonal line segment, for comparison).
  bool literal_line = false;

  void validate() const {
    if (radius <= 0.0 || horizon <= 0.0) {
      throw std::invalid_argument("CircularScenario: radius and horizon must be positive");
    }
    if (!(ramp_start < ramp_end)) {
      throw std::invalid_argument("CircularScenario: ramp window is empty");
    }
    if (gravity <= 0.0) throw std::invalid_argument("CircularScenario: gravity must be positive");
  }

  /// Phase and its first four time derivatives.
  void phase(double t, double out[5]) const {
    const double dw = omega_fast - omega_slow;
    const double tr = ramp_end - ramp_start;
    double phi, d1, d2, d3, d4;
    if (t <= ramp_start) {
      phi = omega_slow * t;
      d1 = omega_slow;
      d2 = d3 = d4 = 0.0;
    } else {
      const double u = std::min((t - ramp_start) / tr, 1.0);
      const double base = omega_slow * ramp_start;
      if (t < ramp_end) {
        phi = base + omega_slow * (t - ramp_start) + dw * tr * smoothstep_c4_int(u);
        d1 = omega_slow + dw * smoothstep_c4(u);
        d2 = dw * smoothstep_c4_d1(u) / tr;
        d3 = dw * smoothstep_c4_d2(u) / (tr * tr);
        d4 = dw * smoothstep_c4_d3(u) / (tr * tr * tr);
      } else {
        const double phi_ramp_end = base + omega_slow * tr + dw * tr * 0.5;
        phi = phi_ramp_end + omega_fast * (t - ramp_end);
        d1 = omega_fast;
        d2 = d3 = d4 = 0.0;
      }
    }
    out[0] = phi;
    out[1] = d1;
    out[2] = d2;
    out[3] = d3;
    out[4] = d4;
  }
};

class CircularReference : public Reference {
 public:
  explicit CircularReference(const CircularScenario& s) : s_(s) { s_.validate(); }

  double duration() const override { return s_.horizon; }
  const CircularScenario& scenario() const { return s_; }

  ReferenceSample at(double t) const override {
    if (t < 0.0 || t > s_.horizon + 1e-9) {
      throw std::out_of_range("CircularReference: t = " + std::to_string(t) +
                              " outside [0, " + std::to_string(s_.horizon) + "]");
    }
    double ph[5];
    s_.phase(t, ph);
    const double p = ph[0], p1 = ph[1], p2 = ph[2], p3 = ph[3], p4 = ph[4];

    ReferenceSample out;
    out.t = t;
    const double r = s_.radius;
    if (!s_.literal_line) {
      const Vec3 c(std::cos(p), std::sin(p), 0.0);
      const Vec3 sv(-std::sin(p), std::cos(p), 0.0);
      out.pos = r * c;
      out.vel = r * p1 * sv;
      out.accel = r * p2 * sv - r * p1 * p1 * c;
      out.jerk = r * (p3 - p1 * p1 * p1) * sv - 3.0 * r * p1 * p2 * c;
      out.snap = r * (p4 - 6.0 * p1 * p1 * p2) * sv -
                 r * (4.0 * p1 * p3 + 3.0 * p2 * p2 - p1 * p1 * p1 * p1) * c;
    } else {
      const Vec3 d(1.0, 1.0, 0.0);
      const double c = std::cos(p), sn = std::sin(p);
      const double f0 = c;
      const double f1 = -p1 * sn;
      const double f2 = -p2 * sn - p1 * p1 * c;
      const double f3 = -p3 * sn - 3.0 * p1 * p2 * c + p1 * p1 * p1 * sn;
      const double f4 = -p4 * sn - (4.0 * p1 * p3 + 3.0 * p2 * p2) * c +
                        6.0 * p1 * p1 * p2 * sn + p1 * p1 * p1 * p1 * c;
      out.pos = r * f0 * d;
      out.vel = r * f1 * d;
      out.accel = r * f2 * d;
      out.jerk = r * f3 * d;
      out.snap = r * f4 * d;
    }
    // Level desired attitude with zero yaw.
    out.attitude = Rotation::identity();
    return out;
  }

 private:
  CircularScenario s_;
};

// ---------------------------------------------------------------------------
// Steady-state wrench and trackability verdicts.

/// Wrench obtained by inverting the rigid-body dynamics along the reference;
/// force in the desired body frame.
inline Wrench steady_state_wrench(const ReferenceSample& s, double mass, const Mat3& inertia,
                                  double gravity) {
  Wrench w;
  w.force = mass * (s.attitude.m().transpose() * (s.accel + Vec3(0, 0, gravity)));
  w.torque = inertia * s.angular_accel + hat(s.angular_rate) * inertia * s.angular_rate;
  if (w.force.norm() < 1e-12) {
    throw std::invalid_argument("steady_state_wrench: free-fall reference (zero nominal force)");
  }
  return w;
}

struct VectoredVerdict {
  double theta_n = 0.0;  // rad, inclination of the nominal force from e3
  bool trackable = false;
};

/// Case of force delivery locked to the body vertical axis: trackable only
/// when the nominal force is exactly vertical in the desired frame.
inline VectoredVerdict vectored_trackability(const Wrench& ss) {
  const double n = ss.force.norm();
  if (n <= 0.0) throw std::invalid_argument("vectored_trackability: degenerate nominal force");
  const double c = ss.force.z() / n;
  VectoredVerdict v;
  v.theta_n = acos_clamped(c);
  v.trackable = (1.0 - c) < 1e-9;
  return v;
}

/// Half-angle of the region where the tilt projection stays inactive.
inline double cone_buffer_angle(double theta_max, double eps) {
  if (!(theta_max > 0.0 && theta_max < M_PI / 2)) {
    throw std::invalid_argument("cone_buffer_angle: theta_max outside (0, pi/2)");
  }
  if (!(eps > 0.0 && eps < 1.0)) {
    throw std::invalid_argument("cone_buffer_angle: eps outside (0, 1)");
  }
  return asin_clamped(std::sin(theta_max) / std::sqrt(1.0 + eps));
}

/// Case of force delivery within a cone of half-angle theta_max about the
/// body vertical: trackable when the nominal force stays inside the buffer
/// cone where the projection never activates.
inline bool cone_trackability(const Wrench& ss, double theta_max, double eps) {
  const double n = ss.force.norm();
  if (n <= 0.0) throw std::invalid_argument("cone_trackability: degenerate nominal force");
  return ss.force.z() / n >= std::cos(cone_buffer_angle(theta_max, eps));
}

// ---------------------------------------------------------------------------

/// Horizon scan used by the configuration validators.
struct ScenarioBounds {
  double fss_min = 0.0;        // N
  double fss_max = 0.0;        // N
  double min_vert_force = 0.0; // N, inf_t m |g + vertical accel|
  double max_body_rate = 0.0;  // rad/s
  double theta_n_max = 0.0;    // rad
};

inline ScenarioBounds scan_reference(const Reference& ref, double mass, const Mat3& inertia,
                                     double gravity, double dt = 0.01) {
  ScenarioBounds b;
  b.fss_min = 1e300;
  for (double t = 0.0; t <= ref.duration() + 1e-12; t += dt) {
    const ReferenceSample s = ref.at(std::min(t, ref.duration()));
    const Wrench w = steady_state_wrench(s, mass, inertia, gravity);
    const double n = w.force.norm();
    b.fss_min = std::min(b.fss_min, n);
    b.fss_max = std::max(b.fss_max, n);
    const double vert = mass * std::abs(gravity + s.accel.z());
    b.min_vert_force = (t == 0.0) ? vert : std::min(b.min_vert_force, vert);
    b.max_body_rate = std::max(b.max_body_rate, s.angular_rate.norm());
    b.theta_n_max = std::max(b.theta_n_max, vectored_trackability(w).theta_n);
  }
  return b;
}

}  // namespace uavctl
