// Attitude planning pieces: the force-aligned frame with analytic first and
// second column derivatives, the geometric projection that confines the
// relative tilt axis to a cone, and the relative angular velocity law.
#pragma once

#include "so3.hpp"

#include <cmath>
#include <stdexcept>

namespace uavctl {

/// Raised when the relative tilt axis is found outside the configured cone;
/// indicates integration misconfiguration, never a recoverable condition.
class ConeFault : public std::runtime_error {
 public:
  explicit ConeFault(const std::string& what) : std::runtime_error(what) {}
};

/// Horizontal heading direction and its time derivatives.
struct HeadingVector {
  Vec3 b = Vec3(1, 0, 0);
  Vec3 b_dot = Vec3::Zero();
  Vec3 b_ddot = Vec3::Zero();
};

inline HeadingVector heading_vector(double psi, double psi_dot, double psi_ddot) {
  HeadingVector h;
  const double c = std::cos(psi), s = std::sin(psi);
  h.b = Vec3(c, s, 0);
  const Vec3 t(-s, c, 0);
  h.b_dot = psi_dot * t;
  h.b_ddot = psi_ddot * t - psi_dot * psi_dot * h.b;
  return h;
}

namespace detail {
// Unit vector u = w/|w| with first and second time derivatives.
struct UnitChain {
  Vec3 u, ud, udd;
};

inline UnitChain normalize_chain(const Vec3& w, const Vec3& wd, const Vec3& wdd) {
  UnitChain c;
  const double n = w.norm();
  c.u = w / n;
  const double nd = c.u.dot(wd);
  c.ud = (wd - c.u * nd) / n;
  const double ndd = c.ud.dot(wd) + c.u.dot(wdd);
  c.udd = (wdd - 2.0 * c.ud * nd - c.u * ndd) / n;
  return c;
}
}  // namespace detail

/// Frame whose third column tracks the desired force direction and whose
/// first column tracks the heading. Built in stages so the force derivative
/// chain (which needs the frame itself) can feed back in.
class ForceFrame {
 public:
  /// Columns only. Throws on a vanishing force or a heading singularity
  /// (force parallel to the heading vector); both are excluded by gain
  /// validation and surface loudly if reached.
  ForceFrame(const Vec3& f_d, const HeadingVector& heading) : heading_(heading) {
    const double n = f_d.norm();
    if (n < 1e-12) throw std::runtime_error("ForceFrame: zero desired force");
    f_ = f_d;
    b3_ = f_d / n;
    w2_ = b3_.cross(heading.b);
    const double n2 = w2_.norm();
    if (n2 < 1e-9) {
      throw std::runtime_error("ForceFrame: heading singularity (force along heading)");
    }
    b2_ = w2_ / n2;
    b1_ = b2_.cross(b3_);
    Mat3 m;
    m.col(0) = b1_;
    m.col(1) = b2_;
    m.col(2) = b3_;
    r_c_ = Rotation::project(m);
  }

  /// Stage 2: first derivatives of the columns and the frame body rate.
  void set_force_rate(const Vec3& f_dot) {
    const auto c3 = detail::normalize_chain(f_, f_dot, Vec3::Zero());
    b3d_ = c3.ud;
    w2d_ = b3d_.cross(heading_.b) + b3_.cross(heading_.b_dot);
    const auto c2 = detail::normalize_chain(w2_, w2d_, Vec3::Zero());
    b2d_ = c2.ud;
    b1d_ = b2d_.cross(b3_) + b2_.cross(b3d_);
    Mat3 rd;
    rd.col(0) = b1d_;
    rd.col(1) = b2d_;
    rd.col(2) = b3d_;
    r_c_dot_ = rd;
    omega_c_ = vee_skew(r_c_.m().transpose() * rd);
    has_rate_ = true;
  }

  /// Stage 3: second derivatives and the frame body acceleration.
  void set_force_accel(const Vec3& f_dot, const Vec3& f_ddot) {
    if (!has_rate_) throw std::logic_error("ForceFrame: set_force_rate first");
    const auto c3 = detail::normalize_chain(f_, f_dot, f_ddot);
    const Vec3 b3dd = c3.udd;
    const Vec3 w2dd = b3dd.cross(heading_.b) + 2.0 * b3d_.cross(heading_.b_dot) +
                      b3_.cross(heading_.b_ddot);
    const auto c2 = detail::normalize_chain(w2_, w2d_, w2dd);
    const Vec3 b2dd = c2.udd;
    const Vec3 b1dd = b2dd.cross(b3_) + 2.0 * b2d_.cross(b3d_) + b2_.cross(b3dd);
    Mat3 rdd;
    rdd.col(0) = b1dd;
    rdd.col(1) = b2dd;
    rdd.col(2) = b3dd;
    const Mat3 om = hat(omega_c_);
    omega_c_dot_ = vee_skew(r_c_.m().transpose() * rdd - om * om);
    has_accel_ = true;
  }

  const Rotation& rotation() const { return r_c_; }
  const Mat3& rotation_dot() const { return r_c_dot_; }
  const Vec3& omega_c() const {
    if (!has_rate_) throw std::logic_error("ForceFrame: rate not set");
    return omega_c_;
  }
  const Vec3& omega_c_dot() const {
    if (!has_accel_) throw std::logic_error("ForceFrame: accel not set");
    return omega_c_dot_;
  }

 private:
  HeadingVector heading_;
  Vec3 f_, b3_, w2_, b2_, b1_;
  Vec3 b3d_ = Vec3::Zero(), w2d_ = Vec3::Zero(), b2d_ = Vec3::Zero(), b1d_ = Vec3::Zero();
  Rotation r_c_;
  Mat3 r_c_dot_ = Mat3::Zero();
  Vec3 omega_c_ = Vec3::Zero();
  Vec3 omega_c_dot_ = Vec3::Zero();
  bool has_rate_ = false;
  bool has_accel_ = false;
};

/// Smooth radial-removal projection. `p` is the unit tilt axis, `w` the
/// candidate tangent velocity of `p`. Inside the buffer radius the map is
/// the identity; approaching the cone boundary it removes a growing
/// fraction of the outward radial component of `w` -- radial in the tangent
/// plane at `p`, the direction along which the planar norm of `p` grows --
/// all of it at the boundary, so the boundary radial rate is exactly zero.
/// Never expands: |output| <= |w|.
inline Vec3 proj_cone(const Vec3& p, const Vec3& w, double delta, double eps) {
  if (!(delta > 0.0 && delta < 1.0)) throw std::invalid_argument("proj_cone: delta in (0,1)");
  if (!(eps > 0.0 && eps < 1.0)) throw std::invalid_argument("proj_cone: eps in (0,1)");
  const double cos_limit = std::sqrt(1.0 - delta * delta);
  if (p.z() < cos_limit - 1e-9) {
    throw ConeFault("proj_cone: tilt axis outside the cone (cos = " +
                    std::to_string(p.z()) + ", limit = " + std::to_string(cos_limit) + ")");
  }
  const double rho = std::hypot(p.x(), p.y());
  const double rho_in = delta / std::sqrt(1.0 + eps);
  if (rho <= rho_in) return w;

  // Tangent-plane radial direction: the horizontal radial with its
  // component along p removed. For tangent inputs (w perpendicular to p)
  // the output keeps a zero horizontal-radial component when fully active.
  const Vec3 planar(p.x() / rho, p.y() / rho, 0.0);
  Vec3 radial = planar - planar.dot(p) * p;
  const double rn = radial.norm();
  if (rn < 1e-12) return w;
  radial /= rn;
  const double outward = radial.dot(w);
  if (outward <= 0.0) return w;

  const double s = (std::min(rho, delta) - rho_in) / (delta - rho_in);
  const double sigma = s * s * (3.0 - 2.0 * s);
  return w - sigma * outward * radial;
}

/// Unconstrained relative angular velocity that steers the planned attitude
/// toward the desired one.
inline Vec3 relative_rate_desired(const Rotation& r_r, const Rotation& r_d,
                                  const Vec3& omega_d, const Vec3& omega_c,
                                  const Vec3& planner_gradient) {
  return r_r.m() * omega_d - omega_c - r_r.m() * r_d.m().transpose() * planner_gradient;
}

/// Cone-respecting relative angular velocity: the tilt flow of the axis
/// passes through the projection, the spin component about the axis is kept.
inline Vec3 relative_rate_constrained(const Rotation& r_r, const Vec3& omega_r_desired,
                                      double delta, double eps) {
  const Vec3 b = r_r.col(2);
  const Vec3 tilt_flow = proj_cone(b, omega_r_desired.cross(b), delta, eps);
  return b.cross(tilt_flow) + b.dot(omega_r_desired) * b;
}

}  // namespace uavctl
