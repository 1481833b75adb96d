// Least-squares quintic B-spline fitting on a clamped uniform knot vector.
// Degree-5 splines with simple interior knots are C^4, which is exactly the
// smoothness class tabulated position references must provide.
#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <vector>

namespace uavctl {

class QuinticBSpline {
 public:
  static constexpr int kDegree = 5;

  /// Fit scattered samples (t_i, y_i). `knot_dt` sets the interior knot
  /// spacing (the smoothing bandwidth); `ridge` is a small Tikhonov term
  /// that keeps the normal equations well posed when samples are sparse.
  static QuinticBSpline fit(const std::vector<double>& t, const std::vector<double>& y,
                            double knot_dt, double ridge = 1e-9) {
    if (t.size() != y.size() || t.size() < 8) {
      throw std::invalid_argument("QuinticBSpline::fit: need at least 8 samples");
    }
    if (knot_dt <= 0.0) throw std::invalid_argument("QuinticBSpline::fit: knot_dt must be > 0");

    QuinticBSpline s;
    s.t0_ = t.front();
    s.t1_ = t.back();
    if (!(s.t1_ > s.t0_)) throw std::invalid_argument("QuinticBSpline::fit: empty time span");

    const int segments = std::max(1, static_cast<int>(std::ceil((s.t1_ - s.t0_) / knot_dt)));
    const double dt = (s.t1_ - s.t0_) / segments;
    s.knots_.assign(kDegree + 1, s.t0_);
    for (int k = 1; k < segments; ++k) s.knots_.push_back(s.t0_ + k * dt);
    s.knots_.insert(s.knots_.end(), kDegree + 1, s.t1_);
    const int ncoef = static_cast<int>(s.knots_.size()) - kDegree - 1;

    Eigen::MatrixXd ata = Eigen::MatrixXd::Zero(ncoef, ncoef);
    Eigen::VectorXd atb = Eigen::VectorXd::Zero(ncoef);
    double basis[kDegree + 1];
    for (size_t i = 0; i < t.size(); ++i) {
      const double u = std::clamp(t[i], s.t0_, s.t1_);
      const int span = s.find_span(u);
      s.basis_funs(span, u, basis);
      const int first = span - kDegree;
      for (int a = 0; a <= kDegree; ++a) {
        atb[first + a] += basis[a] * y[i];
        for (int b = 0; b <= kDegree; ++b) ata(first + a, first + b) += basis[a] * basis[b];
      }
    }
    ata.diagonal().array() += ridge;
    s.coef_ = ata.ldlt().solve(atb);
    return s;
  }

  /// Value (der = 0) or time derivative of order der in [1, 4].
  double eval(double t, int der = 0) const {
    if (der < 0 || der > 4) throw std::invalid_argument("QuinticBSpline::eval: order 0..4");
    const double u = std::clamp(t, t0_, t1_);
    const int span = find_span(u);
    double ders[5][kDegree + 1];
    ders_basis_funs(span, u, 4, ders);
    double out = 0.0;
    for (int a = 0; a <= kDegree; ++a) out += ders[der][a] * coef_[span - kDegree + a];
    return out;
  }

  double start() const { return t0_; }
  double end() const { return t1_; }

 private:
  int find_span(double u) const {
    const int n = static_cast<int>(knots_.size()) - kDegree - 2;  // last basis index
    if (u >= knots_[n + 1]) return n;
    int lo = kDegree, hi = n + 1;
    while (hi - lo > 1) {
      const int mid = (lo + hi) / 2;
      (u < knots_[mid] ? hi : lo) = mid;
    }
    return lo;
  }

  void basis_funs(int span, double u, double* out) const {
    double left[kDegree + 1], right[kDegree + 1];
    out[0] = 1.0;
    for (int j = 1; j <= kDegree; ++j) {
      left[j] = u - knots_[span + 1 - j];
      right[j] = knots_[span + j] - u;
      double saved = 0.0;
      for (int r = 0; r < j; ++r) {
        const double temp = out[r] / (right[r + 1] + left[j - r]);
        out[r] = saved + right[r + 1] * temp;
        saved = left[j - r] * temp;
      }
      out[j] = saved;
    }
  }

  // Basis functions and derivatives (standard triangular-table algorithm).
  void ders_basis_funs(int span, double u, int nders, double ders[5][kDegree + 1]) const {
    constexpr int p = kDegree;
    double ndu[p + 1][p + 1], left[p + 1], right[p + 1], a[2][p + 1];
    ndu[0][0] = 1.0;
    for (int j = 1; j <= p; ++j) {
      left[j] = u - knots_[span + 1 - j];
      right[j] = knots_[span + j] - u;
      double saved = 0.0;
      for (int r = 0; r < j; ++r) {
        ndu[j][r] = right[r + 1] + left[j - r];
        const double temp = ndu[r][j - 1] / ndu[j][r];
        ndu[r][j] = saved + right[r + 1] * temp;
        saved = left[j - r] * temp;
      }
      ndu[j][j] = saved;
    }
    for (int j = 0; j <= p; ++j) ders[0][j] = ndu[j][p];
    for (int r = 0; r <= p; ++r) {
      int s1 = 0, s2 = 1;
      a[0][0] = 1.0;
      for (int k = 1; k <= nders; ++k) {
        double d = 0.0;
        const int rk = r - k, pk = p - k;
        if (r >= k) {
          a[s2][0] = a[s1][0] / ndu[pk + 1][rk];
          d = a[s2][0] * ndu[rk][pk];
        }
        const int j1 = (rk >= -1) ? 1 : -rk;
        const int j2 = (r - 1 <= pk) ? k - 1 : p - r;
        for (int j = j1; j <= j2; ++j) {
          a[s2][j] = (a[s1][j] - a[s1][j - 1]) / ndu[pk + 1][rk + j];
          d += a[s2][j] * ndu[rk + j][pk];
        }
        if (r <= pk) {
          a[s2][k] = -a[s1][k - 1] / ndu[pk + 1][r];
          d += a[s2][k] * ndu[r][pk];
        }
        ders[k][r] = d;
        std::swap(s1, s2);
      }
    }
    double factor = p;
    for (int k = 1; k <= nders; ++k) {
      for (int j = 0; j <= p; ++j) ders[k][j] *= factor;
      factor *= (p - k);
    }
  }

  double t0_ = 0.0, t1_ = 1.0;
  std::vector<double> knots_;
  Eigen::VectorXd coef_;
};

}  // namespace uavctl
