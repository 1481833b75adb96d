#include <uavctl/position_control.hpp>

#include <catch2/catch_amalgamated.hpp>

#include "oracle_utils.hpp"

using namespace uavctl;
using Catch::Approx;

namespace {
const PositionGains kGains;  // defaults: k1=0.06, k2=9, lambda1=1, lambda2=9

// Synthetic error trajectory with de_x/dt = e_v by construction, used to
// exercise the rate/accel chain against finite differences.
Vec3 ex_of(double t) {
  return Vec3(2.0 * std::sin(0.7 * t), -1.5 * std::cos(1.1 * t), 0.8 * std::sin(1.9 * t + 0.4));
}
Vec3 ev_of(double t) {
  return Vec3(1.4 * std::cos(0.7 * t), 1.65 * std::sin(1.1 * t), 1.52 * std::cos(1.9 * t + 0.4));
}
Vec3 edotv_of(double t) {
  return Vec3(-0.98 * std::sin(0.7 * t), 1.815 * std::cos(1.1 * t),
              -2.888 * std::sin(1.9 * t + 0.4));
}
Vec3 eddotv_of(double t) {
  return Vec3(-0.686 * std::cos(0.7 * t), -1.9965 * std::sin(1.1 * t),
              -5.4872 * std::cos(1.9 * t + 0.4));
}
}  // namespace

TEST_CASE("scalar saturation shape") {
  REQUIRE(sat(0.0) == 0.0);
  REQUIRE(sat(0.5) == 0.5);
  REQUIRE(sat(-0.89) == -0.89);
  REQUIRE(sat(kSatEnd) == 1.0);
  REQUIRE(sat(-5.0) == -1.0);
  REQUIRE(sat(1e9) == 1.0);

  auto g = oracle::rng(21);
  for (int i = 0; i < 2000; ++i) {
    const double s = oracle::uniform(g, -3.0, 3.0);
    REQUIRE(std::abs(sat(s)) <= 1.0);
    REQUIRE(sat(-s) == Approx(-sat(s)).margin(1e-15));
    // Monotone non-decreasing.
    REQUIRE(sat_d1(s) >= 0.0);
  }
}

TEST_CASE("scalar saturation derivatives match finite differences") {
  auto g = oracle::rng(22);
  for (int i = 0; i < 500; ++i) {
    const double s = oracle::uniform(g, -1.5, 1.5);
    const double fd1 = oracle::central_diff([](double x) { return sat(x); }, s, 1e-6);
    REQUIRE(fd1 == Approx(sat_d1(s)).margin(1e-7));
    const double fd2 = oracle::central_diff([](double x) { return sat_d1(x); }, s, 1e-6);
    REQUIRE(fd2 == Approx(sat_d2(s)).margin(1e-5));
  }
}

TEST_CASE("feedback is zero at zero error and bounded by lambda2") {
  REQUIRE(nested_saturation(kGains, Vec3::Zero(), Vec3::Zero()).norm() == 0.0);

  auto g = oracle::rng(23);
  for (int i = 0; i < 5000; ++i) {
    const Vec3 ex = oracle::gaussian_vec3(g, 50.0);
    const Vec3 ev = oracle::gaussian_vec3(g, 50.0);
    const Vec3 b = nested_saturation(kGains, ex, ev);
    REQUIRE(b.cwiseAbs().maxCoeff() <= kGains.lambda2 + 1e-12);
    REQUIRE(b.norm() <= std::sqrt(3.0) * kGains.lambda2 + 1e-12);
  }
}

TEST_CASE("feedback saturates at the outer level for huge velocity error") {
  const Vec3 b = nested_saturation(kGains, Vec3::Zero(), Vec3(100, -100, 100));
  REQUIRE(b.x() == Approx(-9.0).margin(1e-14));
  REQUIRE(b.y() == Approx(9.0).margin(1e-14));
  REQUIRE(b.z() == Approx(-9.0).margin(1e-14));
}

TEST_CASE("linear regime of the feedback") {
  // Both saturations operate in their identity span for small errors.
  auto g = oracle::rng(24);
  for (int i = 0; i < 1000; ++i) {
    const Vec3 ex = oracle::gaussian_vec3(g, 1.0);
    const Vec3 ev = oracle::gaussian_vec3(g, 0.1);
    if ((kGains.k1 / kGains.lambda1 * ex).cwiseAbs().maxCoeff() > kSatKnee) continue;
    const Vec3 inner = kGains.k1 * ex;
    if ((kGains.k2 / kGains.lambda2 * (ev + inner)).cwiseAbs().maxCoeff() > kSatKnee) continue;
    const Vec3 expect = -kGains.k2 * ev - kGains.k1 * kGains.k2 * ex;
    REQUIRE((nested_saturation(kGains, ex, ev) - expect).norm() < 1e-12);
  }
}

TEST_CASE("feedback opposes the error signal") {
  auto g = oracle::rng(25);
  for (int i = 0; i < 5000; ++i) {
    // While the inner saturation is in its identity span the feedback sign
    // matches -(k1 k2 e_x + k2 e_v) componentwise.
    const Vec3 ex = oracle::gaussian_vec3(g, 4.0);
    if ((kGains.k1 / kGains.lambda1 * ex).cwiseAbs().maxCoeff() > kSatKnee) continue;
    const Vec3 ev = oracle::gaussian_vec3(g, 5.0);
    const Vec3 b = nested_saturation(kGains, ex, ev);
    const Vec3 lin = kGains.k1 * kGains.k2 * ex + kGains.k2 * ev;
    REQUIRE(b.dot(lin) <= 1e-12);
  }
  for (int i = 0; i < 5000; ++i) {
    // Globally the feedback opposes the composite saturated error.
    const Vec3 ex = oracle::gaussian_vec3(g, 80.0);
    const Vec3 ev = oracle::gaussian_vec3(g, 80.0);
    const Vec3 b = nested_saturation(kGains, ex, ev);
    for (int c = 0; c < 3; ++c) {
      const double composite =
          ev[c] + kGains.lambda1 * sat(kGains.k1 / kGains.lambda1 * ex[c]);
      REQUIRE(b[c] * composite <= 1e-12);
    }
  }
}

TEST_CASE("jacobians at the origin are the linear-regime gains") {
  const NestedSatJacobians j = nested_saturation_jacobians(kGains, Vec3::Zero(), Vec3::Zero());
  REQUIRE((j.d_ex + kGains.k1 * kGains.k2 * Mat3::Identity()).norm() < 1e-14);
  REQUIRE((j.d_ev + kGains.k2 * Mat3::Identity()).norm() < 1e-14);
}

TEST_CASE("position jacobian vanishes in deep saturation") {
  // Outer saturation pinned by velocity error.
  NestedSatJacobians j = nested_saturation_jacobians(kGains, Vec3(1, 1, 1), Vec3(50, 50, 50));
  REQUIRE(j.d_ex.norm() == 0.0);
  REQUIRE(j.d_ev.norm() == 0.0);
  // Inner saturation pinned by position error alone.
  j = nested_saturation_jacobians(kGains, Vec3(100, 100, 100), Vec3::Zero());
  REQUIRE(j.d_ex.norm() == 0.0);
  REQUIRE(j.d_ev.norm() > 0.0);
}

TEST_CASE("jacobians match finite differences") {
  auto g = oracle::rng(26);
  for (int i = 0; i < 100; ++i) {
    const Vec3 ex = oracle::gaussian_vec3(g, 10.0);
    const Vec3 ev = oracle::gaussian_vec3(g, 3.0);
    const NestedSatJacobians j = nested_saturation_jacobians(kGains, ex, ev);
    const double h = 1e-5;
    for (int c = 0; c < 3; ++c) {
      Vec3 dx = Vec3::Zero();
      dx[c] = h;
      const Vec3 fd_x =
          (nested_saturation(kGains, ex + dx, ev) - nested_saturation(kGains, ex - dx, ev)) /
          (2 * h);
      REQUIRE((fd_x - j.d_ex.col(c)).norm() < 1e-6);
      const Vec3 fd_v =
          (nested_saturation(kGains, ex, ev + dx) - nested_saturation(kGains, ex, ev - dx)) /
          (2 * h);
      REQUIRE((fd_v - j.d_ev.col(c)).norm() < 1e-6);
    }
  }
}

TEST_CASE("desired force closed forms") {
  const double g0 = 9.81;
  // Hover with zero errors.
  REQUIRE((desired_force(kGains, Vec3::Zero(), Vec3::Zero(), Vec3::Zero(), 1.0, g0) -
           Vec3(0, 0, 9.81)).norm() < 1e-15);
  // Steady circular motion at Omega=1, r=1: centripetal 1 m/s^2.
  const Vec3 f = desired_force(kGains, Vec3::Zero(), Vec3::Zero(), Vec3(-1, 0, 0), 1.0, g0);
  REQUIRE(f.norm() == Approx(std::sqrt(1.0 + g0 * g0)).margin(1e-12));
  REQUIRE(f.norm() == Approx(9.8608).margin(5e-4));
}

TEST_CASE("vertical force margin with validated gains") {
  const double g0 = 9.81;
  kGains.validate_against(1.0 * g0);  // level reference: inf m|g + 0| = 9.81 > 9
  auto g = oracle::rng(27);
  double worst = 1e100;
  for (int i = 0; i < 20000; ++i) {
    const Vec3 ex = oracle::gaussian_vec3(g, 60.0);
    const Vec3 ev = oracle::gaussian_vec3(g, 60.0);
    const Vec3 f = desired_force(kGains, ex, ev, Vec3::Zero(), 1.0, g0);
    worst = std::min(worst, f.z());
    REQUIRE(f.z() > 0.0);
  }
  // The bound g - lambda2 = 0.81 N is attained in deep saturation.
  REQUIRE(worst >= g0 - kGains.lambda2 - 1e-12);
  const Vec3 deep = desired_force(kGains, Vec3::Zero(), Vec3(0, 0, 100), Vec3::Zero(), 1.0, g0);
  REQUIRE(deep.z() == Approx(0.81).margin(1e-12));
}

TEST_CASE("gain validation rejects a too-large outer level") {
  PositionGains bad = kGains;
  bad.lambda2 = 10.0;
  REQUIRE_THROWS_AS(bad.validate_against(9.81), std::invalid_argument);
  bad.lambda2 = -1.0;
  REQUIRE_THROWS_AS(bad.validate(), std::invalid_argument);
}

TEST_CASE("force rate: hover and circular closed forms") {
  // Errors held at zero, hover: no jerk, rate is zero.
  REQUIRE(desired_force_rate(kGains, Vec3::Zero(), Vec3::Zero(), Vec3::Zero(), Vec3::Zero(), 1.0)
              .norm() == 0.0);
  // Constant-rate circle: |jerk| = Omega^3 r, zero errors held.
  const double om = 1.3, r = 1.0, m = 1.0;
  const Vec3 jerk(0, -om * om * om * r, 0);
  REQUIRE(desired_force_rate(kGains, Vec3::Zero(), Vec3::Zero(), Vec3::Zero(), jerk, m).norm() ==
          Approx(m * om * om * om * r).margin(1e-14));
}

TEST_CASE("force rate matches finite differences along a trajectory") {
  const double m = 1.0, g0 = 9.81;
  auto fd_of_t = [&](double t) {
    return desired_force(kGains, ex_of(t), ev_of(t), Vec3::Zero(), m, g0);
  };
  for (double t = 0.1; t < 6.0; t += 0.37) {
    const Vec3 fd = oracle::central_diff3(fd_of_t, t, 1e-4);
    const Vec3 analytic =
        desired_force_rate(kGains, ex_of(t), ev_of(t), edotv_of(t), Vec3::Zero(), m);
    REQUIRE((fd - analytic).norm() < 1e-4);
  }
}

TEST_CASE("force second derivative matches finite differences") {
  const double m = 1.0;
  auto rate_of_t = [&](double t) {
    return desired_force_rate(kGains, ex_of(t), ev_of(t), edotv_of(t), Vec3::Zero(), m);
  };
  for (double t = 0.1; t < 6.0; t += 0.41) {
    const Vec3 fd = oracle::central_diff3(rate_of_t, t, 1e-5);
    const Vec3 analytic = desired_force_accel(kGains, ex_of(t), ev_of(t), edotv_of(t),
                                              eddotv_of(t), Vec3::Zero(), m);
    REQUIRE((fd - analytic).norm() < 2e-3);
  }
}
