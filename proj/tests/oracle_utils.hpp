// Shared helpers for the test suites: deterministic RNG draws and
// finite-difference differentiators that act as implementation-independent
// oracles. Nothing here may call into the code path it is used to check.
#pragma once

#include <uavctl/so3.hpp>

#include <functional>
#include <random>

namespace oracle {

using uavctl::Mat3;
using uavctl::Rotation;
using uavctl::Vec3;

inline std::mt19937_64 rng(uint64_t seed) { return std::mt19937_64(seed); }

inline double uniform(std::mt19937_64& g, double lo, double hi) {
  return std::uniform_real_distribution<double>(lo, hi)(g);
}

inline Vec3 gaussian_vec3(std::mt19937_64& g, double scale = 1.0) {
  std::normal_distribution<double> n(0.0, scale);
  return Vec3(n(g), n(g), n(g));
}

inline Vec3 random_unit(std::mt19937_64& g) {
  Vec3 v = gaussian_vec3(g);
  while (v.norm() < 1e-6) v = gaussian_vec3(g);
  return v.normalized();
}

// Uniform rotation from a normalized 4-gaussian quaternion.
inline Rotation random_rotation(std::mt19937_64& g) {
  std::normal_distribution<double> n(0.0, 1.0);
  Eigen::Quaterniond q(n(g), n(g), n(g), n(g));
  q.normalize();
  return Rotation::project(q.toRotationMatrix());
}

inline Rotation random_rotation_within(std::mt19937_64& g, double max_angle) {
  return Rotation::axis_angle(random_unit(g), uniform(g, 0.0, max_angle));
}

// Central difference of a scalar- or vector-valued function of one variable.
inline double central_diff(const std::function<double(double)>& f, double t, double h) {
  return (f(t + h) - f(t - h)) / (2.0 * h);
}

inline Vec3 central_diff3(const std::function<Vec3(double)>& f, double t, double h) {
  return (f(t + h) - f(t - h)) / (2.0 * h);
}

inline Mat3 central_diff_mat(const std::function<Mat3(double)>& f, double t, double h) {
  return (f(t + h) - f(t - h)) / (2.0 * h);
}

// Classic fixed-step RK4 for small state vectors, used to realize reference
// flows in oracles (independent of the library's own integrators).
template <typename State, typename Deriv>
State rk4_step(const State& x, double t, double dt, const Deriv& f) {
  const State k1 = f(t, x);
  const State k2 = f(t + 0.5 * dt, x + 0.5 * dt * k1);
  const State k3 = f(t + 0.5 * dt, x + 0.5 * dt * k2);
  const State k4 = f(t + dt, x + dt * k3);
  return x + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
}

}  // namespace oracle
