#pragma once

#include <algorithm>
#include <cmath>
#include <vector>

#include "coverplan/common.hpp"

namespace coverplan {

struct TrajectorySample {
  Vec3 p = Vec3::Zero();
  Vec3 v = Vec3::Zero();
  Vec3 a = Vec3::Zero();
};

/// Uniform cubic B-spline. The first and last `fixed()` control points are pinned to the
/// start and goal so the curve starts and ends there at rest.
class BSplineTrajectory {
 public:
  static constexpr int kDegree = 3;
  static constexpr int kOrder = kDegree + 1;

  BSplineTrajectory() = default;
  BSplineTrajectory(std::vector<Vec3> controls, double dt) : controls_(std::move(controls)), dt_(dt) {
    if (!(dt > 0.0)) throw DomainError("BSplineTrajectory: dt must be > 0");
    if (controls_.size() < static_cast<std::size_t>(2 * kOrder))
      throw DomainError("BSplineTrajectory: need at least 2k control points");
  }

  static constexpr int fixed() { return kOrder - 1; }
  int size() const { return static_cast<int>(controls_.size()); }
  double dt() const { return dt_; }
  double duration() const { return (size() - kDegree) * dt_; }
  const std::vector<Vec3>& controls() const { return controls_; }
  std::vector<Vec3>& controls() { return controls_; }
  bool is_fixed(int i) const { return i < fixed() || i >= size() - fixed(); }

  /// Position, velocity and acceleration at time t (clamped to [0, duration]).
  TrajectorySample sample(double t) const {
    t = std::clamp(t, 0.0, duration());
    int seg = static_cast<int>(std::floor(t / dt_));
    seg = std::clamp(seg, 0, size() - kOrder);
    const double u = t / dt_ - seg;
    const Vec3& p0 = controls_[seg];
    const Vec3& p1 = controls_[seg + 1];
    const Vec3& p2 = controls_[seg + 2];
    const Vec3& p3 = controls_[seg + 3];
    const double u2 = u * u, u3 = u2 * u;
    TrajectorySample s;
    s.p = ((1 - u) * (1 - u) * (1 - u) * p0 + (3 * u3 - 6 * u2 + 4) * p1 + (-3 * u3 + 3 * u2 + 3 * u + 1) * p2 +
           u3 * p3) / 6.0;
    // derivatives through the derivative control points
    const Vec3 q0 = (p1 - p0) / dt_, q1 = (p2 - p1) / dt_, q2 = (p3 - p2) / dt_;
    s.v = 0.5 * ((1 - u) * (1 - u) * q0 + (-2 * u2 + 2 * u + 1) * q1 + u2 * q2);
    const Vec3 r0 = (q1 - q0) / dt_, r1 = (q2 - q1) / dt_;
    s.a = (1 - u) * r0 + u * r1;
    return s;
  }

  Vec3 start() const { return controls_.front(); }
  Vec3 goal() const { return controls_.back(); }

  /// Indices of the control points active at time t.
  int active_segment(double t) const {
    t = std::clamp(t, 0.0, duration());
    return std::clamp(static_cast<int>(std::floor(t / dt_)), 0, size() - kOrder);
  }

  bool operator==(const BSplineTrajectory&) const = default;

 private:
  std::vector<Vec3> controls_;
  double dt_ = 0.5;
};

inline double polyline_length(const std::vector<Vec3>& pts) {
  double len = 0.0;
  for (std::size_t i = 1; i < pts.size(); ++i) len += (pts[i] - pts[i - 1]).norm();
  return len;
}

/// Point at arc length s along a polyline (clamped).
inline Vec3 polyline_at(const std::vector<Vec3>& pts, double s) {
  if (pts.size() == 1 || s <= 0.0) return pts.front();
  for (std::size_t i = 1; i < pts.size(); ++i) {
    const double seg = (pts[i] - pts[i - 1]).norm();
    if (s <= seg && seg > 0.0) return pts[i - 1] + (s / seg) * (pts[i] - pts[i - 1]);
    s -= seg;
  }
  return pts.back();
}

/// N = max(2k, ceil(L / (v_ref dt)) + 2(k - 1)).
inline int control_count(double path_length, double v_ref, double dt) {
  if (!(v_ref > 0.0) || !(dt > 0.0)) throw DomainError("control_count: v_ref and dt must be > 0");
  const int k = BSplineTrajectory::kOrder;
  const int by_length = static_cast<int>(std::ceil(path_length / (v_ref * dt) - 1e-9)) + 2 * (k - 1);
  return std::max(2 * k, by_length);
}

/// Clamped controls at both ends, interior controls spread uniformly by arc length.
inline BSplineTrajectory fit_initial_controls(const std::vector<Vec3>& polyline, double dt, int n) {
  if (polyline.empty()) throw DomainError("fit_initial_controls: empty polyline");
  const int fixed = BSplineTrajectory::fixed();
  if (n < 2 * BSplineTrajectory::kOrder) throw DomainError("fit_initial_controls: too few control points");
  const int interior = n - 2 * fixed;
  const double len = polyline_length(polyline);
  std::vector<Vec3> c;
  c.reserve(static_cast<std::size_t>(n));
  for (int i = 0; i < fixed; ++i) c.push_back(polyline.front());
  for (int j = 0; j < interior; ++j) c.push_back(polyline_at(polyline, len * (j + 1) / (interior + 1)));
  for (int i = 0; i < fixed; ++i) c.push_back(polyline.back());
  return BSplineTrajectory(std::move(c), dt);
}

}  // namespace coverplan
