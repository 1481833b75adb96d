#pragma once

#include "so3.hpp"

namespace uavctl {

/// Control force and torque pair; frame is stated at each use site.
struct Wrench {
  Vec3 force = Vec3::Zero();   // N
  Vec3 torque = Vec3::Zero();  // N m
};

}  // namespace uavctl
