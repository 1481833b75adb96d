// Hexacopter plant: mixer map from squared rotor speeds to the body wrench,
// wrench allocation with clamp reporting, first-order rotor dynamics,
// aerodynamic drag, and fixed-step rigid-body integration.
#pragma once

#include "so3.hpp"
#include "wrench.hpp"

#include <Eigen/Dense>

#include <array>
#include <cmath>
#include <stdexcept>

namespace uavctl {

using Vec6 = Eigen::Matrix<double, 6, 1>;
using Mat6 = Eigen::Matrix<double, 6, 6>;

struct VehicleParams {
  double mass = 1.0;                                      // kg
  Mat3 inertia = Vec3(0.008, 0.008, 0.016).asDiagonal();  // kg m^2
  double gravity = 9.81;                                  // m/s^2

  // Rotor geometry. Arms every 60 degrees; each rotor axis is tilted about
  // its arm by tilt_sign[i] * tilt_angle. Alternating signs keep the
  // equal-speed hover torque-free, which a uniform tangential tilt cannot.
  double tilt_angle = 0.0;                                // alpha, rad
  std::array<int, 6> tilt_signs = {+1, -1, +1, -1, +1, -1};
  double arm_length = 0.25;                               // m
  double thrust_coeff = 6.5e-6;                           // k_f, N s^2/rad^2
  double torque_thrust_ratio = 0.016;                     // k_tau / k_f, m
  double rotor_speed_max = 1200.0;                        // rad/s
  double rotor_time_const = 0.05;                         // s
  double cone_factor = 0.5;                               // theta_max = factor * alpha

  // Disturbance model.
  Mat3 rot_damping = Vec3(0.04, 0.04, 0.02).asDiagonal(); // N m s
  double drag_body = 0.01;                                // c_d
  double drag_induced = 0.05;                             // c_I

  void validate() const {
    if (mass <= 0.0) throw std::invalid_argument("VehicleParams: mass must be positive");
    if (inertia.diagonal().minCoeff() <= 0.0 ||
        (inertia - Mat3(inertia.diagonal().asDiagonal())).norm() > 0.0) {
      throw std::invalid_argument("VehicleParams: inertia must be diagonal positive");
    }
    if (std::abs(tilt_angle) > M_PI / 2) {
      throw std::invalid_argument("VehicleParams: |tilt angle| must be <= pi/2");
    }
    if (rotor_time_const <= 0.0) {
      throw std::invalid_argument("VehicleParams: rotor time constant must be positive");
    }
    if (!(cone_factor > 0.0 && cone_factor <= 1.0)) {
      throw std::invalid_argument("VehicleParams: cone factor in (0, 1]");
    }
    if (thrust_coeff <= 0.0 || arm_length <= 0.0 || rotor_speed_max <= 0.0) {
      throw std::invalid_argument("VehicleParams: rotor constants must be positive");
    }
  }

  double drag_torque_coeff() const { return thrust_coeff * torque_thrust_ratio; }

  /// Deliverable-force ceiling with a 10% margin, used by scenario checks.
  double thrust_ceiling() const {
    return 0.9 * 6.0 * thrust_coeff * rotor_speed_max * rotor_speed_max *
           std::cos(tilt_angle);
  }

  double arm_azimuth(int i) const { return (i % 6) * M_PI / 3.0; }

  /// Rotor thrust axis in the body frame.
  Vec3 rotor_axis(int i) const {
    const Mat3 arm = exp_so3(Vec3(0, 0, arm_azimuth(i)));
    const Mat3 tilt = exp_so3(Vec3(tilt_signs[i] * tilt_angle, 0, 0));
    return arm * (tilt * Vec3(0, 0, 1));
  }

  /// Rotor hub position in the body frame.
  Vec3 hub_position(int i) const {
    return exp_so3(Vec3(0, 0, arm_azimuth(i))) * Vec3(arm_length, 0, 0);
  }
};

/// Linear map from squared rotor speeds to the body wrench [force; torque].
inline Mat6 mixer_matrix(const VehicleParams& p) {
  Mat6 m;
  for (int i = 0; i < 6; ++i) {
    const Vec3 axis = p.rotor_axis(i);
    const Vec3 arm_dir = exp_so3(Vec3(0, 0, p.arm_azimuth(i))) * Vec3(1, 0, 0);
    const Vec3 force = p.thrust_coeff * axis;
    const double spin = (i % 2 == 0) ? 1.0 : -1.0;  // -(-1)^i for i = 1..6
    const Vec3 torque = p.arm_length * arm_dir.cross(force) +
                        spin * p.drag_torque_coeff() * axis;
    m.block<3, 1>(0, i) = force;
    m.block<3, 1>(3, i) = torque;
  }
  return m;
}

/// Numerical rank at the given relative singular-value threshold.
inline int mixer_rank(const Mat6& m, double tol = 1e-8) {
  Eigen::JacobiSVD<Mat6> svd(m);
  const auto& s = svd.singularValues();
  int rank = 0;
  for (int i = 0; i < 6; ++i) {
    if (s(i) > tol * s(0)) ++rank;
  }
  return rank;
}

struct AllocationResult {
  Vec6 squared_speeds = Vec6::Zero();  // after clamping, >= 0
  Vec6 speeds = Vec6::Zero();          // commanded rotor speeds, rad/s
  bool clamped = false;                // any negative-squared or over-speed clamp
  double residual = 0.0;               // |M u - w| after clamping
};

/// Inverts the mixer. Tilted configuration: exact 6x6 inverse. Coplanar
/// configuration (rank 4): minimum-norm solve over the achievable rows,
/// requiring the planar force components to be absent.
class Allocator {
 public:
  explicit Allocator(const VehicleParams& p) : params_(p), mixer_(mixer_matrix(p)) {
    rank_ = mixer_rank(mixer_);
    if (rank_ == 6) {
      inverse_ = mixer_.inverse();
    } else if (rank_ == 4) {
      const Eigen::Matrix<double, 4, 6> rows = mixer_.bottomRows<4>();
      pinv_ = rows.transpose() * (rows * rows.transpose()).inverse();
    } else {
      throw std::invalid_argument("Allocator: mixer rank " + std::to_string(rank_) +
                                  " is not supported (expected 4 or 6)");
    }
  }

  const Mat6& mixer() const { return mixer_; }
  int rank() const { return rank_; }

  AllocationResult allocate(const Wrench& w) const {
    AllocationResult out;
    Vec6 rhs;
    rhs << w.force, w.torque;
    Vec6 u;
    if (rank_ == 6) {
      u = inverse_ * rhs;
    } else {
      if (std::hypot(w.force.x(), w.force.y()) > 1e-6) {
        out.clamped = true;  // unachievable planar force; solve what remains
      }
      u = pinv_ * rhs.tail<4>();
    }
    for (int i = 0; i < 6; ++i) {
      if (u(i) < 0.0) {
        u(i) = 0.0;
        out.clamped = true;
      }
      double speed = std::sqrt(u(i));
      if (speed > params_.rotor_speed_max) {
        speed = params_.rotor_speed_max;
        u(i) = speed * speed;
        out.clamped = true;
      }
      out.speeds(i) = speed;
    }
    out.squared_speeds = u;
    Vec6 achieved = mixer_ * u;
    if (rank_ == 4) achieved.head<2>() = rhs.head<2>();  // unreachable rows excluded
    out.residual = (achieved - rhs).norm();
    return out;
  }

 private:
  VehicleParams params_;
  Mat6 mixer_;
  int rank_ = 0;
  Mat6 inverse_ = Mat6::Zero();
  Eigen::Matrix<double, 6, 4> pinv_ = Eigen::Matrix<double, 6, 4>::Zero();
};

// ---------------------------------------------------------------------------

struct RigidBodyState {
  Vec3 x = Vec3::Zero();   // m, inertial
  Vec3 v = Vec3::Zero();   // m/s, inertial
  Rotation R;              // body to inertial
  Vec3 omega = Vec3::Zero();  // rad/s, body
  Vec6 rotor_speed = Vec6::Zero();  // rad/s
};

/// Exact relaxation of the first-order rotor dynamics toward the commanded
/// speeds over dt, clamped to the admissible speed range.
inline Vec6 rotor_lag_step(const VehicleParams& p, const Vec6& speeds, const Vec6& cmd,
                           double dt) {
  if (dt < 0.0) throw std::invalid_argument("rotor_lag_step: dt must be >= 0");
  const double a = std::exp(-dt / p.rotor_time_const);
  Vec6 out = cmd + a * (speeds - cmd);
  for (int i = 0; i < 6; ++i) {
    out(i) = std::clamp(out(i), 0.0, p.rotor_speed_max);
  }
  return out;
}

/// Aerodynamic disturbance: body+induced drag force (inertial frame) and
/// rotational damping torque (body frame). Rotor thrusts enter the induced
/// term through the instantaneous speeds.
inline Wrench drag_wrench(const VehicleParams& p, const Vec3& v, const Rotation& R,
                          const Vec3& omega, const Vec6& rotor_speed) {
  Wrench w;
  w.force = -p.drag_body * v.norm() * v;
  for (int i = 0; i < 6; ++i) {
    const double thrust = p.thrust_coeff * rotor_speed(i) * rotor_speed(i);
    if (thrust <= 0.0) continue;
    const Vec3 axis = R.m() * p.rotor_axis(i);
    const Vec3 hub_vel = v + R.m() * omega.cross(p.hub_position(i));
    const Vec3 perp = hub_vel - hub_vel.dot(axis) * axis;
    w.force -= p.drag_induced * std::sqrt(thrust) * perp;
  }
  w.torque = -p.rot_damping * omega;
  return w;
}

enum class IntegratorMode {
  kExpMidpoint,  // RK4 on (x, v, omega); attitude by midpoint exponential
  kMatrixRk4,    // plain RK4 on all 18 numbers, then projection
};

/// One plant step under held rotor-speed commands. The wrench applied to the
/// body is always the mixer image of the actual (lagged, clamped) rotor
/// speeds; drag can be disabled for idealized studies.
inline RigidBodyState integrate_step(const VehicleParams& p, const RigidBodyState& s0,
                                     const Vec6& speed_cmd, double dt,
                                     IntegratorMode mode = IntegratorMode::kExpMidpoint,
                                     bool with_drag = true) {
  if (dt <= 0.0) throw std::invalid_argument("integrate_step: dt must be positive");
  const Mat6 mixer = mixer_matrix(p);
  const Mat3 inertia_inv = p.inertia.inverse();

  auto rotors_at = [&](double tau) -> Vec6 {
    const double a = std::exp(-tau / p.rotor_time_const);
    Vec6 out = speed_cmd + a * (s0.rotor_speed - speed_cmd);
    for (int i = 0; i < 6; ++i) out(i) = std::clamp(out(i), 0.0, p.rotor_speed_max);
    return out;
  };

  struct Deriv {
    Vec3 v, a, omega_dot;
  };
  auto deriv = [&](double tau, const Vec3& v, const Mat3& r, const Vec3& omega) -> Deriv {
    const Vec6 rotors = rotors_at(tau);
    const Vec6 u_sq = rotors.array().square();
    const Vec6 wrench6 = mixer * u_sq;
    Vec3 force_inertial = Vec3(0, 0, -p.gravity * p.mass) + r * wrench6.head<3>();
    Vec3 torque_body = wrench6.tail<3>();
    if (with_drag) {
      const Wrench drag = drag_wrench(p, v, Rotation::project(r), omega, rotors);
      force_inertial += drag.force;
      torque_body += drag.torque;
    }
    Deriv d;
    d.v = v;
    d.a = force_inertial / p.mass;
    d.omega_dot = inertia_inv * (-omega.cross((p.inertia * omega).eval()) + torque_body);
    return d;
  };

  RigidBodyState out = s0;
  const Mat3 r0 = s0.R.m();

  if (mode == IntegratorMode::kExpMidpoint) {
    // Stage attitudes advance along the exponential of the best available
    // rate; the final attitude uses the midpoint rate.
    const Deriv k1 = deriv(0.0, s0.v, r0, s0.omega);
    const Mat3 r2 = r0 * exp_so3(s0.omega * (dt / 2));
    const Deriv k2 = deriv(dt / 2, s0.v + (dt / 2) * k1.a, r2, s0.omega + (dt / 2) * k1.omega_dot);
    const Mat3 r3 = r0 * exp_so3((s0.omega + (dt / 2) * k1.omega_dot) * (dt / 2));
    const Deriv k3 = deriv(dt / 2, s0.v + (dt / 2) * k2.a, r3, s0.omega + (dt / 2) * k2.omega_dot);
    const Mat3 r4 = r0 * exp_so3((s0.omega + (dt / 2) * k2.omega_dot) * dt);
    const Deriv k4 = deriv(dt, s0.v + dt * k3.a, r4, s0.omega + dt * k3.omega_dot);

    out.x = s0.x + (dt / 6.0) * (k1.v + 2 * k2.v + 2 * k3.v + k4.v);
    out.v = s0.v + (dt / 6.0) * (k1.a + 2 * k2.a + 2 * k3.a + k4.a);
    out.omega = s0.omega +
                (dt / 6.0) * (k1.omega_dot + 2 * k2.omega_dot + 2 * k3.omega_dot + k4.omega_dot);
    const Vec3 omega_mid = 0.5 * (s0.omega + out.omega);
    out.R = Rotation::project(r0 * exp_so3(omega_mid * dt));
  } else {
    using Packed = Eigen::Matrix<double, 18, 1>;
    auto pack = [](const Vec3& x, const Vec3& v, const Mat3& r, const Vec3& om) {
      Packed q;
      q.segment<3>(0) = x;
      q.segment<3>(3) = v;
      q.segment<9>(6) = Eigen::Map<const Eigen::Matrix<double, 9, 1>>(r.data());
      q.segment<3>(15) = om;
      return q;
    };
    auto f = [&](double tau, const Packed& q) -> Packed {
      const Vec3 v = q.segment<3>(3);
      const Mat3 r = Eigen::Map<const Mat3>(q.segment<9>(6).data());
      const Vec3 om = q.segment<3>(15);
      const Deriv d = deriv(tau, v, r, om);
      Packed dq;
      dq.segment<3>(0) = d.v;
      dq.segment<3>(3) = d.a;
      const Mat3 rdot = r * hat(om);
      dq.segment<9>(6) = Eigen::Map<const Eigen::Matrix<double, 9, 1>>(rdot.data());
      dq.segment<3>(15) = d.omega_dot;
      return dq;
    };
    Packed q = pack(s0.x, s0.v, r0, s0.omega);
    const Packed k1 = f(0.0, q);
    const Packed k2 = f(dt / 2, q + (dt / 2) * k1);
    const Packed k3 = f(dt / 2, q + (dt / 2) * k2);
    const Packed k4 = f(dt, q + dt * k3);
    q += (dt / 6.0) * (k1 + 2 * k2 + 2 * k3 + k4);
    out.x = q.segment<3>(0);
    out.v = q.segment<3>(3);
    out.R = Rotation::project(Eigen::Map<const Mat3>(q.segment<9>(6).data()));
    out.omega = q.segment<3>(15);
  }

  out.rotor_speed = rotors_at(dt);

  if (!out.x.allFinite() || !out.v.allFinite() || !out.omega.allFinite()) {
    throw std::runtime_error("integrate_step: non-finite state");
  }
  return out;
}

/// Rotor speeds that hold the vehicle exactly against gravity at identity
/// attitude (zero torque).
inline AllocationResult hover_trim(const VehicleParams& p) {
  Allocator alloc(p);
  Wrench w;
  w.force = Vec3(0, 0, p.mass * p.gravity);
  return alloc.allocate(w);
}

}  // namespace uavctl
