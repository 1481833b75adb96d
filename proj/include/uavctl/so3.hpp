// Rotation-group primitives: hat/vee maps, axis-angle rotations, attitude
// potentials and their left-trivialized gradients. Everything here is pure
// value arithmetic on 3x3 matrices and safe to call concurrently.
#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <stdexcept>
#include <string>

namespace uavctl {

using Vec3 = Eigen::Vector3d;
using Mat3 = Eigen::Matrix3d;

// Structural tolerance for orthonormality / skewness checks.
inline constexpr double kSo3Tol = 1e-9;

/// acos with the argument clamped to [-1, 1] to absorb round-off.
inline double acos_clamped(double x) {
  if (x > 1.0) x = 1.0;
  if (x < -1.0) x = -1.0;
  return std::acos(x);
}

inline double asin_clamped(double x) {
  if (x > 1.0) x = 1.0;
  if (x < -1.0) x = -1.0;
  return std::asin(x);
}

/// Cross-product matrix: hat(w) * y == w x y for all y.
inline Mat3 hat(const Vec3& w) {
  Mat3 s;
  s << 0.0, -w.z(), w.y(),
      w.z(), 0.0, -w.x(),
      -w.y(), w.x(), 0.0;
  return s;
}

/// Skew-symmetric part (A - A^T) / 2.
inline Mat3 skew_part(const Mat3& a) { return 0.5 * (a - a.transpose()); }

/// Inverse of hat on an (already) skew-symmetric matrix. Does not check its
/// argument; use vee() when the input comes from the outside.
inline Vec3 vee_unchecked(const Mat3& s) {
  return Vec3(s(2, 1), s(0, 2), s(1, 0));
}

/// Inverse of the hat map. Rejects matrices that are not skew-symmetric
/// within kSo3Tol (callers must symmetrize first if round-off is expected).
inline Vec3 vee(const Mat3& s) {
  const double defect = (s + s.transpose()).norm();
  if (defect >= kSo3Tol) {
    throw std::invalid_argument("vee: matrix is not skew-symmetric (|S+S^T|_F = " +
                                std::to_string(defect) + ")");
  }
  return vee_unchecked(s);
}

/// vee(skew_part(A)): the standard extraction used by attitude error maps.
inline Vec3 vee_skew(const Mat3& a) { return vee_unchecked(skew_part(a)); }

/// Rodrigues formula, exp(hat(w)).
inline Mat3 exp_so3(const Vec3& w) {
  const double th = w.norm();
  if (th < 1e-12) {
    // Second-order series keeps the update exact to round-off for tiny steps.
    const Mat3 s = hat(w);
    return Mat3::Identity() + s + 0.5 * s * s;
  }
  const Vec3 u = w / th;
  const Mat3 s = hat(u);
  return Mat3::Identity() + std::sin(th) * s + (1.0 - std::cos(th)) * s * s;
}

/// Orthogonal polar factor of a near-rotation matrix (symmetric square root
/// projection). Newton iteration X <- (X + X^-T)/2, quadratically convergent.
inline Mat3 project_to_so3(const Mat3& a) {
  Mat3 x = a;
  for (int i = 0; i < 10; ++i) {
    const Mat3 next = 0.5 * (x + x.inverse().transpose());
    const double delta = (next - x).norm();
    x = next;
    if (delta < 1e-15) break;
  }
  return x;
}

/// A 3x3 direction-cosine matrix constrained to SO(3). Checked on entry,
/// composition stays closed; re-project after long integration chains.
class Rotation {
 public:
  Rotation() : m_(Mat3::Identity()) {}

  static Rotation identity() { return Rotation(); }

  /// Validating constructor: R^T R = I and det R = 1 within kSo3Tol.
  static Rotation from_matrix(const Mat3& m) {
    const double ortho = (m.transpose() * m - Mat3::Identity()).norm();
    if (ortho >= kSo3Tol) {
      throw std::invalid_argument("Rotation: |R^T R - I|_F = " + std::to_string(ortho));
    }
    const double det = m.determinant();
    if (std::abs(det - 1.0) >= kSo3Tol) {
      throw std::invalid_argument("Rotation: det = " + std::to_string(det));
    }
    return Rotation(m);
  }

  /// Nearest rotation (polar projection); for de-drifting integration output.
  static Rotation project(const Mat3& m) { return Rotation(project_to_so3(m)); }

  /// Rotation about a unit axis. Rejects non-unit axes.
  static Rotation axis_angle(const Vec3& axis, double angle) {
    if (std::abs(axis.norm() - 1.0) >= kSo3Tol) {
      throw std::invalid_argument("axis_angle: axis norm " + std::to_string(axis.norm()));
    }
    return Rotation(exp_so3(axis * angle));
  }

  static Rotation exp(const Vec3& w) { return Rotation(exp_so3(w)); }

  const Mat3& m() const { return m_; }
  Rotation transposed() const { return Rotation(m_.transpose()); }
  Vec3 col(int i) const { return m_.col(i); }

  Rotation operator*(const Rotation& rhs) const { return Rotation(m_ * rhs.m_); }
  Vec3 operator*(const Vec3& v) const { return m_ * v; }

  double orthonormality_defect() const {
    return (m_.transpose() * m_ - Mat3::Identity()).norm();
  }

 private:
  explicit Rotation(const Mat3& m) : m_(m) {}
  Mat3 m_;
};

/// Gain matrix K of an attitude potential; requires K symmetric and
/// tr(K) I - K positive definite.
struct NavGain {
  Mat3 K;

  explicit NavGain(const Mat3& k) : K(k) {
    if ((K - K.transpose()).norm() >= 1e-12) {
      throw std::invalid_argument("NavGain: K not symmetric");
    }
    Eigen::SelfAdjointEigenSolver<Mat3> es(shifted());
    if (es.eigenvalues().minCoeff() <= 0.0) {
      throw std::invalid_argument("NavGain: tr(K) I - K is not positive definite");
    }
  }

  static NavGain diagonal(double a, double b, double c) {
    return NavGain(Vec3(a, b, c).asDiagonal().toDenseMatrix());
  }

  Mat3 shifted() const { return K.trace() * Mat3::Identity() - K; }

  double lambda_min_shifted() const {
    Eigen::SelfAdjointEigenSolver<Mat3> es(shifted());
    return es.eigenvalues().minCoeff();
  }

  double lambda_max_shifted() const {
    Eigen::SelfAdjointEigenSolver<Mat3> es(shifted());
    return es.eigenvalues().maxCoeff();
  }
};

/// Attitude potential 0.5 * tr(K (I - R)). Zero at the identity; sandwiched
/// between lambda_{m,M}(tr(K) I - K) times the squared normalized distance.
inline double nav_potential(const NavGain& gain, const Rotation& r) {
  return 0.5 * (gain.K * (Mat3::Identity() - r.m())).trace();
}

/// Normalized distance on SO(3): sqrt(tr(I - R) / 4), in [0, 1].
/// For a rotation of angle theta this equals sqrt((1 - cos theta) / 2).
inline double so3_distance(const Rotation& r) {
  double radicand = 0.25 * (Mat3::Identity() - r.m()).trace();
  if (radicand < 0.0) {
    if (radicand < -1e-12) {
      throw std::invalid_argument("so3_distance: radicand " + std::to_string(radicand));
    }
    radicand = 0.0;
  }
  return std::sqrt(radicand);
}

/// Left-trivialized gradient of nav_potential at the attitude error R_e:
/// vee(skew(K R_e)). Vanishes exactly at the critical points of the potential.
inline Vec3 nav_gradient(const NavGain& gain, const Rotation& r_e) {
  return vee_skew(gain.K * r_e.m());
}

}  // namespace uavctl
