#include <uavctl/planner.hpp>

#include <catch2/catch_amalgamated.hpp>

#include "oracle_utils.hpp"

using namespace uavctl;
using Catch::Approx;

namespace {
// Analytic force/heading test signal with exact derivatives.
Vec3 f_of(double t) {
  return Vec3(2.0 * std::sin(t), std::cos(2.0 * t), 9.0 + std::sin(0.5 * t));
}
Vec3 fdot_of(double t) {
  return Vec3(2.0 * std::cos(t), -2.0 * std::sin(2.0 * t), 0.5 * std::cos(0.5 * t));
}
Vec3 fddot_of(double t) {
  return Vec3(-2.0 * std::sin(t), -4.0 * std::cos(2.0 * t), -0.25 * std::sin(0.5 * t));
}
double psi_of(double t) { return 0.3 * std::sin(t); }
double psidot_of(double t) { return 0.3 * std::cos(t); }
double psiddot_of(double t) { return -0.3 * std::sin(t); }

ForceFrame frame_at(double t, int stage) {
  ForceFrame f(f_of(t), heading_vector(psi_of(t), psidot_of(t), psiddot_of(t)));
  if (stage >= 1) f.set_force_rate(fdot_of(t));
  if (stage >= 2) f.set_force_accel(fdot_of(t), fddot_of(t));
  return f;
}
}  // namespace

TEST_CASE("force frame closed forms") {
  // Vertical force with zero heading: the identity frame.
  ForceFrame f0(Vec3(0, 0, 9.81), heading_vector(0, 0, 0));
  REQUIRE((f0.rotation().m() - Mat3::Identity()).norm() < 1e-14);

  // Vertical force with heading pi/2: a quarter turn about e3.
  ForceFrame f1(Vec3(0, 0, 9.81), heading_vector(M_PI / 2, 0, 0));
  REQUIRE((f1.rotation().m() - Rotation::axis_angle(Vec3(0, 0, 1), M_PI / 2).m()).norm() <
          1e-12);
}

TEST_CASE("force frame properties on random inputs") {
  auto g = oracle::rng(41);
  for (int i = 0; i < 10000; ++i) {
    Vec3 f = oracle::gaussian_vec3(g, 4.0);
    f.z() = std::abs(f.z()) + 0.3;
    const double psi = oracle::uniform(g, -M_PI, M_PI);
    ForceFrame fr(f, heading_vector(psi, 0, 0));
    const Rotation r = fr.rotation();
    REQUIRE(r.orthonormality_defect() < 1e-12);
    REQUIRE(r.m().determinant() == Approx(1.0).margin(1e-12));
    REQUIRE((r.col(2) - f.normalized()).norm() < 1e-12);
  }
}

TEST_CASE("force frame rejects degenerate inputs") {
  REQUIRE_THROWS_AS(ForceFrame(Vec3::Zero(), heading_vector(0, 0, 0)), std::runtime_error);
  // Force along the heading direction: undefined lateral axis.
  REQUIRE_THROWS_AS(ForceFrame(Vec3(9.81, 0, 0), heading_vector(0, 0, 0)),
                    std::runtime_error);
}

TEST_CASE("frame rate closed forms") {
  // Static force and heading: no rate.
  ForceFrame still(Vec3(0.3, -0.2, 9.81), heading_vector(0.4, 0, 0));
  still.set_force_rate(Vec3::Zero());
  REQUIRE(still.omega_c().norm() < 1e-14);

  // Constant vertical force, pure yaw rate w: body rate [0, 0, w].
  const double w = 0.7;
  ForceFrame yaw(Vec3(0, 0, 9.81), heading_vector(0.9, w, 0));
  yaw.set_force_rate(Vec3::Zero());
  REQUIRE((yaw.omega_c() - Vec3(0, 0, w)).norm() < 1e-12);
  yaw.set_force_accel(Vec3::Zero(), Vec3::Zero());
  REQUIRE(yaw.omega_c_dot().norm() < 1e-12);

  // Pure yaw acceleration a: body acceleration [0, 0, a].
  ForceFrame yacc(Vec3(0, 0, 9.81), heading_vector(0.9, w, 0.25));
  yacc.set_force_rate(Vec3::Zero());
  yacc.set_force_accel(Vec3::Zero(), Vec3::Zero());
  REQUIRE((yacc.omega_c_dot() - Vec3(0, 0, 0.25)).norm() < 1e-12);
}

TEST_CASE("frame rate matches finite differences of the rotation") {
  for (double t = 0.2; t < 9.0; t += 0.53) {
    const ForceFrame fr = frame_at(t, 1);
    const double h = 1e-5;
    const Mat3 fd =
        (frame_at(t + h, 0).rotation().m() - frame_at(t - h, 0).rotation().m()) / (2 * h);
    REQUIRE((fd - fr.rotation().m() * hat(fr.omega_c())).norm() < 1e-4);
    // The stored column-derivative matrix is the same object.
    REQUIRE((fd - fr.rotation_dot()).norm() < 1e-4);
  }
}

TEST_CASE("frame acceleration matches finite differences of the rate") {
  for (double t = 0.2; t < 9.0; t += 0.61) {
    const ForceFrame fr = frame_at(t, 2);
    const double h = 1e-5;
    auto omega_of = [&](double tt) { return frame_at(tt, 1).omega_c(); };
    REQUIRE((oracle::central_diff3(omega_of, t, h) - fr.omega_c_dot()).norm() < 1e-3);
  }
}

TEST_CASE("projection is inactive inside the buffer region") {
  const double delta = std::sin(10.0 * M_PI / 180.0);
  const double eps = 0.05;
  auto g = oracle::rng(42);
  for (int i = 0; i < 2000; ++i) {
    // Axis well inside the buffer circle.
    const double rho = oracle::uniform(g, 0.0, 0.9 * delta / std::sqrt(1.0 + eps));
    const double az = oracle::uniform(g, -M_PI, M_PI);
    const Vec3 p(rho * std::cos(az), rho * std::sin(az), std::sqrt(1.0 - rho * rho));
    const Vec3 w = oracle::gaussian_vec3(g, 2.0);
    REQUIRE((proj_cone(p, w, delta, eps) - w).norm() == 0.0);
  }
}

TEST_CASE("projection leaves tangential and inward flows unchanged") {
  const double delta = std::sin(10.0 * M_PI / 180.0);
  const double eps = 0.05;
  auto g = oracle::rng(43);
  for (int i = 0; i < 2000; ++i) {
    const double rho = oracle::uniform(g, 0.2 * delta, delta);
    const double az = oracle::uniform(g, -M_PI, M_PI);
    const Vec3 p(rho * std::cos(az), rho * std::sin(az), std::sqrt(1.0 - rho * rho));
    const Vec3 planar(std::cos(az), std::sin(az), 0.0);
    // Tangential: w orthogonal to both p and the radial direction.
    const Vec3 tangential = p.cross(planar).normalized() * oracle::uniform(g, 0.1, 3.0);
    REQUIRE((proj_cone(p, tangential, delta, eps) - tangential).norm() < 1e-12);
    // Inward radial flows pass through too.
    const Vec3 inward = -(planar - planar.dot(p) * p).normalized() * 0.8;
    REQUIRE((proj_cone(p, inward, delta, eps) - inward).norm() == 0.0);
  }
}

TEST_CASE("projection zeroes the boundary radial rate") {
  const double theta_max = 10.0 * M_PI / 180.0;
  const double delta = std::sin(theta_max);
  const double eps = 0.05;
  auto g = oracle::rng(44);
  for (int i = 0; i < 500; ++i) {
    const double az = oracle::uniform(g, -M_PI, M_PI);
    const Vec3 p(delta * std::cos(az), delta * std::sin(az), std::cos(theta_max));
    const Vec3 w_cand = oracle::gaussian_vec3(g, 2.0);
    const Vec3 w = w_cand - w_cand.dot(p) * p;  // tangent input
    const Vec3 out = proj_cone(p, w, delta, eps);
    const Vec3 planar(std::cos(az), std::sin(az), 0.0);
    // Radial growth rate of the planar norm along the output flow.
    const double rho_dot = planar.dot(out);
    REQUIRE(rho_dot <= 1e-12);
    // Fully active: the output has no outward planar-radial component.
    if ((planar - planar.dot(p) * p).normalized().dot(w) > 1e-9) {
      REQUIRE(std::abs(rho_dot) < 1e-12);
    }
  }
}

TEST_CASE("projection never expands") {
  const double delta = std::sin(10.0 * M_PI / 180.0);
  const double eps = 0.05;
  auto g = oracle::rng(45);
  for (int i = 0; i < 10000; ++i) {
    const double rho = oracle::uniform(g, 0.0, delta);
    const double az = oracle::uniform(g, -M_PI, M_PI);
    const Vec3 p(rho * std::cos(az), rho * std::sin(az), std::sqrt(1.0 - rho * rho));
    const Vec3 w = oracle::gaussian_vec3(g, 3.0);
    REQUIRE(proj_cone(p, w, delta, eps).norm() <= w.norm() + 1e-12);
  }
}

TEST_CASE("projection output is continuous across the activation boundary") {
  const double delta = std::sin(10.0 * M_PI / 180.0);
  const double eps = 0.05;
  const double rho_in = delta / std::sqrt(1.0 + eps);
  const Vec3 w(0.3, 0.8, -0.1);
  for (const double d : {-1e-9, 1e-9, 1e-6}) {
    const double rho = rho_in + d;
    const Vec3 p(rho, 0, std::sqrt(1.0 - rho * rho));
    REQUIRE((proj_cone(p, w, delta, eps) - w).norm() < 1e-5);
  }
}

TEST_CASE("projection faults outside the cone") {
  const double theta_max = 10.0 * M_PI / 180.0;
  const double delta = std::sin(theta_max);
  const double bad = std::sin(theta_max + 1e-3);
  const Vec3 p(bad, 0, std::sqrt(1.0 - bad * bad));
  REQUIRE_THROWS_AS(proj_cone(p, Vec3(1, 0, 0), delta, 0.05), ConeFault);
}

TEST_CASE("planner gradient of a yaw error") {
  const double k_d = 2.0;
  for (double th = -1.2; th <= 1.2; th += 0.3) {
    const Rotation rep = Rotation::axis_angle(Vec3(0, 0, 1), th);
    const Vec3 grad = k_d * vee_skew(rep.m());
    REQUIRE((grad - Vec3(0, 0, k_d * std::sin(th))).norm() < 1e-14);
  }
}

TEST_CASE("desired relative rate vanishes at convergence") {
  // Planned attitude equal to desired, no desired spin, static frame.
  const Rotation rr = Rotation::identity();
  const Vec3 zero = relative_rate_desired(rr, Rotation::identity(), Vec3::Zero(),
                                          Vec3::Zero(), Vec3::Zero());
  REQUIRE(zero.norm() == 0.0);
}

TEST_CASE("constrained rate equals the desired rate when inactive") {
  const double theta_max = 10.0 * M_PI / 180.0;
  const double delta = std::sin(theta_max);
  auto g = oracle::rng(46);
  for (int i = 0; i < 2000; ++i) {
    // Relative attitude well inside the buffer region.
    const Rotation rr = Rotation::axis_angle(
        Vec3(oracle::uniform(g, -1, 1), oracle::uniform(g, -1, 1), 0).normalized(),
        oracle::uniform(g, 0.0, 0.8 * std::asin(delta / std::sqrt(1.05))));
    const Vec3 wd = oracle::gaussian_vec3(g, 2.0);
    const Vec3 wr = relative_rate_constrained(rr, wd, delta, 0.05);
    REQUIRE((wr - wd).norm() < 1e-13);
  }
  REQUIRE(relative_rate_constrained(Rotation::identity(), Vec3::Zero(), delta, 0.05).norm() ==
          0.0);
}

TEST_CASE("constrained rate keeps the axis from leaving the cone") {
  const double theta_max = 10.0 * M_PI / 180.0;
  const double delta = std::sin(theta_max);
  auto g = oracle::rng(47);
  for (int i = 0; i < 500; ++i) {
    // At the boundary with an outward-pushing desired rate.
    const double az = oracle::uniform(g, -M_PI, M_PI);
    const Rotation rr =
        Rotation::axis_angle(Vec3(-std::sin(az), std::cos(az), 0), theta_max);
    const Vec3 b = rr.col(2);
    REQUIRE(std::hypot(b.x(), b.y()) == Approx(delta).margin(1e-12));

    const Vec3 wd = oracle::gaussian_vec3(g, 2.0);
    const Vec3 wr = relative_rate_constrained(rr, wd, delta, 0.05);
    // Numerical directional derivative of the vertical component.
    const double h = 1e-7;
    const Vec3 b_next = exp_so3(wr * h) * b;
    REQUIRE(b_next.z() >= b.z() - 1e-12);
  }
}
