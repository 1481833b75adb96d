// Attitude loop: error-scaled control force, the mismatch bound it induces
// on the position dynamics, the geometric control torque, and the energy
// function used as a runtime stability monitor.
#pragma once

#include "so3.hpp"

#include <cmath>
#include <stdexcept>

namespace uavctl {

/// How the force scaling c is computed from the attitude error.
enum class ScalingMode {
  kTiltAngle,  // c = (ell - (1 - cos theta_e)) / ell, theta_e between thrust axes
  kPotential,  // c = (psi_M - Psi_K(right error)) / psi_M for a chosen K
};

struct AttitudeGains {
  NavGain K_R = NavGain::diagonal(0.6, 0.6, 1.4);
  Mat3 K_omega = 0.2 * Mat3::Identity();  // N m s
  double ell = 2.1;                       // scaling span, must exceed 2
  double k_d = 2.0;                       // planner tracking gain, 1/s
  double eps = 0.05;                      // projection activation margin
  ScalingMode scaling_mode = ScalingMode::kTiltAngle;
  // Potential-mode parameters; with K_scale = 2 e3 e3^T and psi_M = ell the
  // potential mode coincides with the tilt-angle mode exactly.
  Mat3 K_scale = 2.0 * Vec3(0, 0, 1).asDiagonal().toDenseMatrix();
  double psi_M = 2.1;

  void validate() const {
    if ((K_omega - K_omega.transpose()).norm() >= 1e-12) {
      throw std::invalid_argument("AttitudeGains: K_omega not symmetric");
    }
    Eigen::SelfAdjointEigenSolver<Mat3> es(K_omega);
    if (es.eigenvalues().minCoeff() <= 0.0) {
      throw std::invalid_argument("AttitudeGains: K_omega not positive definite");
    }
    if (scaling_mode == ScalingMode::kTiltAngle) {
      if (!(ell > 2.0)) throw std::invalid_argument("AttitudeGains: ell must be > 2");
    } else {
      if ((K_scale - K_scale.transpose()).norm() >= 1e-12) {
        throw std::invalid_argument("AttitudeGains: K_scale not symmetric");
      }
      const Mat3 shifted = K_scale.trace() * Mat3::Identity() - K_scale;
      Eigen::SelfAdjointEigenSolver<Mat3> es2(shifted);
      const double max_potential = es2.eigenvalues().maxCoeff();
      if (!(psi_M > max_potential)) {
        throw std::invalid_argument("AttitudeGains: psi_M must exceed the potential maximum " +
                                    std::to_string(max_potential));
      }
    }
    if (!(k_d > 0.0)) throw std::invalid_argument("AttitudeGains: k_d must be positive");
    if (!(eps > 0.0 && eps < 1.0)) throw std::invalid_argument("AttitudeGains: eps in (0,1)");
  }

  /// Span parameter entering the mismatch bound (ell or psi_M by mode).
  double scaling_span() const {
    return scaling_mode == ScalingMode::kTiltAngle ? ell : psi_M;
  }
};

/// Left attitude error R R_p^T.
inline Rotation attitude_error(const Rotation& r, const Rotation& r_p) {
  return Rotation::project(r.m() * r_p.m().transpose());
}

/// Right attitude error R_p^T R = R_p^T R_e R_p.
inline Rotation right_error(const Rotation& r_e, const Rotation& r_p) {
  return Rotation::project(r_p.m().transpose() * r_e.m() * r_p.m());
}

/// Cosine of the angle between the planned and actual thrust axes.
inline double thrust_axis_cosine(const Rotation& r_e, const Rotation& r_p) {
  const Vec3 b_p3 = r_p.col(2);
  return b_p3.dot(r_e.m() * b_p3);
}

/// Force scaling c in ((span - max)/span, 1]; equals 1 only at zero tilt error.
inline double force_scaling(const AttitudeGains& g, const Rotation& r_e,
                            const Rotation& r_p) {
  if (g.scaling_mode == ScalingMode::kTiltAngle) {
    const double c = (g.ell - (1.0 - thrust_axis_cosine(r_e, r_p))) / g.ell;
    return c;
  }
  const double psi = 0.5 * (g.K_scale * (Mat3::Identity() - right_error(r_e, r_p).m())).trace();
  return (g.psi_M - psi) / g.psi_M;
}

/// Time derivative of the scaling along attitude flows with body rates
/// omega (actual) and omega_p (planned).
inline double force_scaling_rate(const AttitudeGains& g, const Rotation& r,
                                 const Rotation& r_p, const Vec3& omega,
                                 const Vec3& omega_p) {
  if (g.scaling_mode == ScalingMode::kTiltAngle) {
    const Vec3 b3 = r.col(2);
    const Vec3 b_p3 = r_p.col(2);
    const Vec3 b3_dot = r.m() * hat(omega).col(2);
    const Vec3 b_p3_dot = r_p.m() * hat(omega_p).col(2);
    return (b_p3_dot.dot(b3) + b_p3.dot(b3_dot)) / g.ell;
  }
  // d/dt R_e^r = R_e^r hat(omega) - hat(omega_p) R_e^r.
  const Mat3 rer = r_p.m().transpose() * r.m();
  const Mat3 rer_dot = rer * hat(omega) - hat(omega_p) * rer;
  const double psi_dot = -0.5 * (g.K_scale * rer_dot).trace();
  return -psi_dot / g.psi_M;
}

/// Body-frame control force: the desired inertial force scaled by c and
/// resolved in the planned frame.
inline Vec3 control_force(const AttitudeGains& g, const Rotation& r_e, const Rotation& r_p,
                          const Vec3& f_d) {
  if (f_d.norm() <= 0.0) throw std::invalid_argument("control_force: zero desired force");
  return force_scaling(g, r_e, r_p) * (r_p.m().transpose() * f_d);
}

/// Mismatch between desired and delivered inertial force directions,
/// Delta = c R_e - I, with its certified vanishing-perturbation bound.
struct MismatchCertificate {
  Mat3 delta = Mat3::Zero();
  double frobenius = 0.0;
  double spectral = 0.0;
  double bound = 0.0;  // varrho * Psi(right error); dominates both norms
  bool ok = false;
};

/// Bound coefficient varrho = sqrt((12 + 8 span^2) / span^2).
inline double mismatch_bound_coeff(double span) {
  return std::sqrt((12.0 + 8.0 * span * span) / (span * span));
}

inline MismatchCertificate force_mismatch(const AttitudeGains& g, const Rotation& r_e,
                                          const Rotation& r_p) {
  MismatchCertificate cert;
  const double c = force_scaling(g, r_e, r_p);
  cert.delta = c * r_e.m() - Mat3::Identity();
  cert.frobenius = cert.delta.norm();
  cert.spectral = cert.delta.jacobiSvd().singularValues()(0);
  cert.bound = mismatch_bound_coeff(g.scaling_span()) * so3_distance(right_error(r_e, r_p));
  cert.ok = cert.frobenius <= cert.bound + 1e-12;
  return cert;
}

/// Geometric tracking torque: potential gradient resolved through the
/// planned frame, rate damping, and the planner feedforward terms. No
/// cancellation of the gyroscopic coupling beyond what is printed here.
inline Vec3 control_torque(const AttitudeGains& g, const Rotation& r_e, const Rotation& r_p,
                           const Vec3& omega, const Vec3& omega_p, const Vec3& omega_p_dot,
                           const Mat3& inertia) {
  const Vec3 e_r = nav_gradient(g.K_R, r_e);
  const Vec3 e_omega = omega - omega_p;
  return -r_p.m().transpose() * e_r - g.K_omega * e_omega + inertia * omega_p_dot +
         hat(omega_p) * inertia * omega;
}

/// Total error energy 0.5 e_w^T J e_w + Psi_{K_R}(R_e); zero only at
/// (identity, zero rate). Decreases at rate e_w^T K_omega e_w along the
/// closed loop, which the harness monitors numerically.
inline double attitude_energy(const AttitudeGains& g, const Rotation& r_e,
                              const Vec3& e_omega, const Mat3& inertia) {
  return 0.5 * e_omega.dot(inertia * e_omega) + nav_potential(g.K_R, r_e);
}

/// Sublevel threshold of the certified basin.
inline double basin_threshold(const AttitudeGains& g) { return g.K_R.lambda_min_shifted(); }

inline bool in_basin(const AttitudeGains& g, const Rotation& r_e, const Vec3& e_omega,
                     const Mat3& inertia) {
  return attitude_energy(g, r_e, e_omega, inertia) < basin_threshold(g);
}

}  // namespace uavctl
