// Reference built from a tabulated trajectory (CSV columns t, x, y, z, psi).
// Each channel is fitted with a least-squares quintic B-spline so that four
// continuous derivatives are available analytically; the knot spacing is the
// smoothing bandwidth (wider knots = smoother, more averaging).
#pragma once

#include "bspline.hpp"
#include "csv.hpp"
#include "reference.hpp"

#include <string>
#include <vector>

namespace uavctl {

class TabulatedReference : public Reference {
 public:
  /// `knot_dt`: interior knot spacing in seconds (default ten times the
  /// median sample period, clamped to at least 8 samples per knot span).
  static TabulatedReference from_csv(const std::string& path, double knot_dt = -1.0) {
    const CsvTable table = read_csv(path);
    if (table.rows.size() < 8) {
      throw std::invalid_argument("TabulatedReference: need at least 8 rows");
    }
    int ct = 0, cx = 1, cy = 2, cz = 3, cpsi = 4;
    if (!table.header.empty()) {
      ct = table.column("t");
      cx = table.column("x");
      cy = table.column("y");
      cz = table.column("z");
      cpsi = table.column("psi");
    }
    std::vector<double> t, x, y, z, psi;
    for (const auto& row : table.rows) {
      t.push_back(row.at(ct));
      x.push_back(row.at(cx));
      y.push_back(row.at(cy));
      z.push_back(row.at(cz));
      psi.push_back(row.at(cpsi));
    }
    if (knot_dt <= 0.0) {
      const double span = t.back() - t.front();
      knot_dt = 10.0 * span / static_cast<double>(t.size() - 1);
    }
    TabulatedReference ref;
    ref.x_ = QuinticBSpline::fit(t, x, knot_dt);
    ref.y_ = QuinticBSpline::fit(t, y, knot_dt);
    ref.z_ = QuinticBSpline::fit(t, z, knot_dt);
    ref.psi_ = QuinticBSpline::fit(t, psi, knot_dt);
    ref.t0_ = t.front();
    ref.t1_ = t.back();
    return ref;
  }

  double duration() const override { return t1_ - t0_; }

  ReferenceSample at(double t) const override {
    const double tt = t + t0_;
    if (t < 0.0 || tt > t1_ + 1e-9) {
      throw std::out_of_range("TabulatedReference: t outside table span");
    }
    ReferenceSample s;
    s.t = t;
    for (int d = 0; d <= 4; ++d) {
      const Vec3 v(x_.eval(tt, d), y_.eval(tt, d), z_.eval(tt, d));
      switch (d) {
        case 0: s.pos = v; break;
        case 1: s.vel = v; break;
        case 2: s.accel = v; break;
        case 3: s.jerk = v; break;
        case 4: s.snap = v; break;
      }
    }
    s.heading = psi_.eval(tt, 0);
    s.heading_rate = psi_.eval(tt, 1);
    s.heading_accel = psi_.eval(tt, 2);
    s.attitude = Rotation::axis_angle(Vec3(0, 0, 1), s.heading);
    s.angular_rate = Vec3(0, 0, s.heading_rate);
    s.angular_accel = Vec3(0, 0, s.heading_accel);
    return s;
  }

 private:
  TabulatedReference() = default;
  QuinticBSpline x_, y_, z_, psi_;
  double t0_ = 0.0, t1_ = 0.0;
};

}  // namespace uavctl
