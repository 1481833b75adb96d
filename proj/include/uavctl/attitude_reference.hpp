// Reference decorator that replaces the desired attitude with a smooth
// sinusoidal Euler-angle motion (analytic body rate and acceleration).
// Used to stress the planner with attitude demands that are deliberately
// incompatible with the position task.
#pragma once

#include "reference.hpp"

#include <array>
#include <cmath>
#include <memory>

namespace uavctl {

struct SinusoidAxis {
  double amplitude = 0.0;  // rad
  double rate = 0.0;       // rad/s
  double phase = 0.0;      // rad
  double angle(double t) const { return amplitude * std::sin(rate * t + phase); }
  double angle_d1(double t) const { return amplitude * rate * std::cos(rate * t + phase); }
  double angle_d2(double t) const {
    return -amplitude * rate * rate * std::sin(rate * t + phase);
  }
};

/// R_d(t) = R_x(a1) R_y(a2) R_z(a3) with sinusoidal angles.
class SinusoidAttitudeReference : public Reference {
 public:
  SinusoidAttitudeReference(std::shared_ptr<const Reference> base,
                            const std::array<SinusoidAxis, 3>& axes)
      : base_(std::move(base)), axes_(axes) {}

  double duration() const override { return base_->duration(); }

  ReferenceSample at(double t) const override {
    ReferenceSample s = base_->at(t);
    const double a1 = axes_[0].angle(t), a2 = axes_[1].angle(t), a3 = axes_[2].angle(t);
    const double d1 = axes_[0].angle_d1(t), d2 = axes_[1].angle_d1(t), d3 = axes_[2].angle_d1(t);
    const double b1 = axes_[0].angle_d2(t), b2 = axes_[1].angle_d2(t), b3 = axes_[2].angle_d2(t);

    const Mat3 rx = exp_so3(Vec3(a1, 0, 0));
    const Mat3 ry = exp_so3(Vec3(0, a2, 0));
    const Mat3 rz = exp_so3(Vec3(0, 0, a3));
    s.attitude = Rotation::project(rx * ry * rz);

    // Body rate of the composed rotation: each factor contributes its axis
    // rate expressed in the frames to its right.
    const Vec3 e1(1, 0, 0), e2(0, 1, 0), e3(0, 0, 1);
    const Mat3 zt = rz.transpose();
    const Mat3 zyt = zt * ry.transpose();
    s.angular_rate = d1 * (zyt * e1) + d2 * (zt * e2) + d3 * e3;
    // Time derivative of the expression above (product rule on the frames).
    s.angular_accel = b1 * (zyt * e1) + b2 * (zt * e2) + b3 * e3 -
                      d1 * d3 * (zt * hat(e3) * ry.transpose() * e1) -
                      d1 * d2 * (zyt * hat(e2) * e1) - d2 * d3 * (zt * hat(e3) * e2);
    // Heading fields follow the yaw factor so the planner's heading input
    // stays consistent with the overridden attitude.
    s.heading = a3;
    s.heading_rate = d3;
    s.heading_accel = b3;
    return s;
  }

 private:
  std::shared_ptr<const Reference> base_;
  std::array<SinusoidAxis, 3> axes_;
};

}  // namespace uavctl
