// Full tracking-controller chain for one control cycle: position feedback,
// force-aligned frame with its analytic rate chain, relative-attitude
// planning under the cone constraint, and the attitude torque. The chain is
// exposed as pure functions of the instantaneous state so that verification
// can differentiate it along the design-model flow.
#pragma once

#include "attitude_control.hpp"
#include "planner.hpp"
#include "position_control.hpp"
#include "reference.hpp"

#include <cmath>
#include <type_traits>

namespace uavctl {

enum class PlannerMode { kStatic, kDynamic };

/// Differencing scheme for the relative angular acceleration (the only
/// quantity in the chain without a closed form).
enum class RateDiff { kBackward, kBackward2 };

struct ControllerConfig {
  double mass = 1.0;                                     // kg
  double gravity = 9.81;                                 // m/s^2
  Mat3 inertia = Vec3(0.008, 0.008, 0.016).asDiagonal(); // kg m^2
  PositionGains position;
  AttitudeGains attitude;
  PlannerMode planner_mode = PlannerMode::kDynamic;
  double theta_max = 10.0 * M_PI / 180.0;  // rad; >= pi/2 disables the cone
  RateDiff omega_r_diff = RateDiff::kBackward;

  bool cone_active() const {
    return planner_mode == PlannerMode::kDynamic && theta_max < M_PI / 2;
  }

  void validate(double min_vertical_force) const {
    if (mass <= 0.0 || gravity <= 0.0) {
      throw std::invalid_argument("ControllerConfig: mass and gravity must be positive");
    }
    position.validate_against(min_vertical_force);
    attitude.validate();
    if (planner_mode == PlannerMode::kDynamic && !(theta_max > 0.0)) {
      throw std::invalid_argument("ControllerConfig: theta_max must be positive");
    }
  }
};

/// Everything computed in one control cycle, diagnostics included.
struct ControlStep {
  double t = 0.0;
  Vec3 e_x = Vec3::Zero(), e_v = Vec3::Zero();
  Vec3 feedback = Vec3::Zero();                 // saturated stabilizer value
  Vec3 f_d = Vec3::Zero(), f_d_dot = Vec3::Zero(), f_d_ddot = Vec3::Zero();
  Vec3 edot_v = Vec3::Zero();                   // model velocity-error rate
  Rotation R_c;                                 // force frame
  Vec3 omega_c = Vec3::Zero(), omega_c_dot = Vec3::Zero();
  Rotation R_r;                                 // relative attitude used
  Vec3 omega_r = Vec3::Zero(), omega_r_des = Vec3::Zero();
  Rotation R_p;                                 // planned attitude
  Vec3 omega_p = Vec3::Zero(), omega_p_dot = Vec3::Zero();
  Rotation R_e;                                 // left attitude error
  Vec3 e_omega = Vec3::Zero();
  Rotation R_e_p;                               // planner attitude error
  Vec3 planner_gradient = Vec3::Zero();
  double c = 1.0;
  Vec3 f_c = Vec3::Zero();                      // body-frame control force
  Vec3 tau_c = Vec3::Zero();                    // body-frame control torque
  // Diagnostics.
  double theta_e = 0.0, theta_c = 0.0, theta_n = 0.0, theta_v = 0.0, psi = 0.0;
  double energy = 0.0, potential = 0.0, mismatch_margin = 0.0;
};

/// Chain up to (but excluding) the quantities that need the relative
/// angular acceleration. Throws ConeFault if the relative axis is found
/// outside the cone.
inline ControlStep control_core(const ControllerConfig& cfg, double t,
                                const ReferenceSample& ref, const Vec3& x, const Vec3& v,
                                const Rotation& R, const Vec3& omega, const Rotation& R_r) {
  ControlStep s;
  s.t = t;
  s.e_x = x - ref.pos;
  s.e_v = v - ref.vel;
  s.feedback = nested_saturation(cfg.position, s.e_x, s.e_v);
  s.f_d = desired_force(cfg.position, s.e_x, s.e_v, ref.accel, cfg.mass, cfg.gravity);

  ForceFrame frame(s.f_d, heading_vector(ref.heading, ref.heading_rate, ref.heading_accel));
  s.R_c = frame.rotation();

  const bool stat = cfg.planner_mode == PlannerMode::kStatic;
  s.R_r = stat ? Rotation::identity() : R_r;
  s.R_p = stat ? s.R_c : s.R_c * s.R_r;
  s.R_e = attitude_error(R, s.R_p);
  s.e_omega = Vec3::Zero();  // set after omega_p below

  s.c = force_scaling(cfg.attitude, s.R_e, s.R_p);
  const Mat3 mismatch = s.c * s.R_e.m() - Mat3::Identity();
  s.edot_v = (s.feedback + mismatch * s.f_d) / cfg.mass;
  s.f_d_dot =
      desired_force_rate(cfg.position, s.e_x, s.e_v, s.edot_v, ref.jerk, cfg.mass);
  frame.set_force_rate(s.f_d_dot);
  s.omega_c = frame.omega_c();

  s.R_e_p = Rotation::project(s.R_p.m() * ref.attitude.m().transpose());
  s.planner_gradient = cfg.attitude.k_d * vee_skew(s.R_e_p.m());

  if (stat) {
    s.omega_r = Vec3::Zero();
    s.omega_r_des = Vec3::Zero();
    s.omega_p = s.omega_c;
  } else {
    s.omega_r_des = relative_rate_desired(s.R_r, ref.attitude, ref.angular_rate, s.omega_c,
                                          s.planner_gradient);
    if (cfg.cone_active()) {
      const double cos_c = s.R_r.m()(2, 2);
      if (cos_c < std::cos(cfg.theta_max) - 1e-9) {
        throw ConeFault("control_core: relative axis outside cone, cos = " +
                        std::to_string(cos_c));
      }
      s.omega_r = relative_rate_constrained(s.R_r, s.omega_r_des,
                                            std::sin(cfg.theta_max), cfg.attitude.eps);
    } else {
      s.omega_r = s.omega_r_des;
    }
    s.omega_p = s.R_r.m().transpose() * (s.omega_c + s.omega_r);
  }
  s.e_omega = omega - s.omega_p;

  // Second-derivative chain for the frame acceleration.
  const double c_dot = force_scaling_rate(cfg.attitude, R, s.R_p, omega, s.omega_p);
  const Mat3 R_e_dot =
      s.R_e.m() * s.R_p.m() * hat(s.e_omega) * s.R_p.m().transpose();
  const Mat3 mismatch_dot = c_dot * s.R_e.m() + s.c * R_e_dot;
  const Vec3 feedback_dot = s.f_d_dot - cfg.mass * ref.jerk;
  const Vec3 eddot_v =
      (feedback_dot + mismatch_dot * s.f_d + mismatch * s.f_d_dot) / cfg.mass;
  s.f_d_ddot = desired_force_accel(cfg.position, s.e_x, s.e_v, s.edot_v, eddot_v,
                                   ref.snap, cfg.mass);
  frame.set_force_accel(s.f_d_dot, s.f_d_ddot);
  s.omega_c_dot = frame.omega_c_dot();

  s.f_c = s.c * (s.R_p.m().transpose() * s.f_d);

  // Diagnostics.
  s.theta_e = acos_clamped(thrust_axis_cosine(s.R_e, s.R_p));
  s.theta_c = stat ? 0.0 : acos_clamped(s.R_r.m()(2, 2));
  const Vec3 fss = ref.attitude.m().transpose() * (ref.accel + Vec3(0, 0, cfg.gravity));
  s.theta_n = acos_clamped(fss.z() / fss.norm());
  s.theta_v = acos_clamped(R.m()(2, 2));
  s.psi = std::atan2(R.m()(1, 0), R.m()(0, 0));
  s.potential = nav_potential(cfg.attitude.K_R, s.R_e);
  s.energy = attitude_energy(cfg.attitude, s.R_e, s.e_omega, cfg.inertia);
  const MismatchCertificate cert = force_mismatch(cfg.attitude, s.R_e, s.R_p);
  s.mismatch_margin = cert.bound - cert.frobenius;
  return s;
}

/// Completes the cycle once the relative angular acceleration is known.
inline void finalize_control(const ControllerConfig& cfg, ControlStep& s,
                             const Vec3& omega_r_dot) {
  if (cfg.planner_mode == PlannerMode::kStatic) {
    s.omega_p_dot = s.omega_c_dot;
  } else {
    const Mat3 rrt = s.R_r.m().transpose();
    s.omega_p_dot =
        -rrt * hat(s.omega_r) * s.omega_c + rrt * (s.omega_c_dot + omega_r_dot);
  }
  s.tau_c = control_torque(cfg.attitude, s.R_e, s.R_p, s.e_omega + s.omega_p, s.omega_p,
                           s.omega_p_dot, cfg.inertia);
}

/// Stateful wrapper owning the relative attitude and the rate history.
/// Single-owner mutable: one instance per simulation.
class TrackingController {
 public:
  explicit TrackingController(const ControllerConfig& cfg) : cfg_(cfg) {}

  const ControllerConfig& config() const { return cfg_; }
  const Rotation& relative_attitude() const { return R_r_; }

  void reset(const Rotation& R_r0 = Rotation::identity()) {
    R_r_ = R_r0;
    steps_ = 0;
  }

  /// One control cycle: computes the wrench command and advances the
  /// relative attitude by dt.
  ControlStep update(double t, const ReferenceSample& ref, const Vec3& x, const Vec3& v,
                     const Rotation& R, const Vec3& omega, double dt) {
    ControlStep s = control_core(cfg_, t, ref, x, v, R, omega, R_r_);
    Vec3 omega_r_dot = Vec3::Zero();
    if (steps_ >= 1 && cfg_.omega_r_diff == RateDiff::kBackward) {
      omega_r_dot = (s.omega_r - prev_omega_r_) / dt;
    } else if (steps_ == 1 && cfg_.omega_r_diff == RateDiff::kBackward2) {
      omega_r_dot = (s.omega_r - prev_omega_r_) / dt;
    } else if (steps_ >= 2 && cfg_.omega_r_diff == RateDiff::kBackward2) {
      omega_r_dot = (3.0 * s.omega_r - 4.0 * prev_omega_r_ + prev2_omega_r_) / (2.0 * dt);
    }
    finalize_control(cfg_, s, omega_r_dot);

    if (cfg_.planner_mode == PlannerMode::kDynamic) {
      R_r_ = Rotation::project(exp_so3(s.omega_r * dt) * R_r_.m());
    }
    prev2_omega_r_ = prev_omega_r_;
    prev_omega_r_ = s.omega_r;
    ++steps_;
    return s;
  }

 private:
  ControllerConfig cfg_;
  Rotation R_r_;
  Vec3 prev_omega_r_ = Vec3::Zero();
  Vec3 prev2_omega_r_ = Vec3::Zero();
  long steps_ = 0;
};

// ---------------------------------------------------------------------------
// Design-model flow: the closed loop with the wrench applied directly to the
// rigid body (no actuators, no drag). Verification differentiates the
// control chain along this flow; it is also the plant for attitude-only and
// ideal-loop studies.

struct ModelState {
  Vec3 x = Vec3::Zero();
  Vec3 v = Vec3::Zero();
  Mat3 R = Mat3::Identity();
  Vec3 omega = Vec3::Zero();
  Mat3 R_r = Mat3::Identity();

  using Packed = Eigen::Matrix<double, 27, 1>;

  Packed pack() const {
    Packed p;
    p.segment<3>(0) = x;
    p.segment<3>(3) = v;
    p.segment<9>(6) = Eigen::Map<const Eigen::Matrix<double, 9, 1>>(R.data());
    p.segment<3>(15) = omega;
    p.segment<9>(18) = Eigen::Map<const Eigen::Matrix<double, 9, 1>>(R_r.data());
    return p;
  }

  static ModelState unpack(const Packed& p) {
    ModelState s;
    s.x = p.segment<3>(0);
    s.v = p.segment<3>(3);
    s.R = Eigen::Map<const Mat3>(p.segment<9>(6).data());
    s.omega = p.segment<3>(15);
    s.R_r = Eigen::Map<const Mat3>(p.segment<9>(18).data());
    return s;
  }
};

class DesignModelFlow {
 public:
  DesignModelFlow(const ControllerConfig& cfg, const Reference& ref)
      : cfg_(cfg), ref_(ref) {}

  /// Control chain evaluated at a flow state (relative acceleration left at
  /// zero unless the caller finalizes differently).
  ControlStep eval(double t, const ModelState& s) const {
    ControlStep step = control_core(cfg_, t, ref_.at(t), s.x, s.v, Rotation::project(s.R),
                                    s.omega, Rotation::project(s.R_r));
    finalize_control(cfg_, step, Vec3::Zero());
    return step;
  }

  ModelState::Packed derivative(double t, const ModelState::Packed& p) const {
    const ModelState s = ModelState::unpack(p);
    const Rotation R = Rotation::project(s.R);
    ControlStep step =
        control_core(cfg_, t, ref_.at(t), s.x, s.v, R, s.omega, Rotation::project(s.R_r));
    finalize_control(cfg_, step, Vec3::Zero());

    ModelState d;
    d.x = s.v;
    d.v = Vec3(0, 0, -cfg_.gravity) + (R.m() * step.f_c) / cfg_.mass;
    d.R = s.R * hat(s.omega);
    d.omega = cfg_.inertia.inverse() *
              (-s.omega.cross((cfg_.inertia * s.omega).eval()) + step.tau_c);
    d.R_r = cfg_.planner_mode == PlannerMode::kDynamic ? (hat(step.omega_r) * s.R_r).eval()
                                                       : Mat3::Zero().eval();
    return d.pack();
  }

  /// RK4 step (+ orthogonality repair) on the packed state.
  ModelState step(const ModelState& s, double t, double dt, int substeps = 1) const {
    ModelState::Packed p = s.pack();
    const double h = dt / substeps;
    for (int k = 0; k < substeps; ++k) {
      const double tk = t + k * h;
      const ModelState::Packed k1 = derivative(tk, p);
      const ModelState::Packed k2 = derivative(tk + h / 2, p + (h / 2) * k1);
      const ModelState::Packed k3 = derivative(tk + h / 2, p + (h / 2) * k2);
      const ModelState::Packed k4 = derivative(tk + h, p + h * k3);
      p += (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
      ModelState u = ModelState::unpack(p);
      u.R = project_to_so3(u.R);
      u.R_r = project_to_so3(u.R_r);
      p = u.pack();
    }
    return ModelState::unpack(p);
  }

  /// Flow the state to t +/- h (several RK4 substeps) and evaluate f there;
  /// the central difference is the oracle for time derivatives of chain
  /// quantities.
  template <typename F>
  std::invoke_result_t<F, double, const ModelState&> flow_central_diff(double t,
                                                                       const ModelState& s,
                                                                       double h, F&& f) const {
    using Out = std::invoke_result_t<F, double, const ModelState&>;
    const int sub = 8;
    ModelState fwd = step(s, t, h, sub);
    // Integrate backward in time.
    ModelState bwd = s;
    {
      ModelState::Packed p = s.pack();
      const double hh = -h / sub;
      for (int k = 0; k < sub; ++k) {
        const double tk = t + k * hh;
        const ModelState::Packed k1 = derivative(tk, p);
        const ModelState::Packed k2 = derivative(tk + hh / 2, p + (hh / 2) * k1);
        const ModelState::Packed k3 = derivative(tk + hh / 2, p + (hh / 2) * k2);
        const ModelState::Packed k4 = derivative(tk + hh, p + hh * k3);
        p += (hh / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
        ModelState u = ModelState::unpack(p);
        u.R = project_to_so3(u.R);
        u.R_r = project_to_so3(u.R_r);
        p = u.pack();
      }
      bwd = ModelState::unpack(p);
    }
    const Out plus = f(t + h, fwd);
    const Out minus = f(t - h, bwd);
    return Out((plus - minus) / (2.0 * h));
  }

 private:
  ControllerConfig cfg_;
  const Reference& ref_;
};

}  // namespace uavctl
