#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <vector>

#include "coverplan/world/voxel_grid.hpp"

namespace coverplan {

struct Box {
  Vec3 min = Vec3::Zero();
  Vec3 max = Vec3::Zero();
  bool operator==(const Box&) const = default;
};

/// Vertical cylinder standing on `base` (bottom-center).
struct Cylinder {
  Vec3 base = Vec3::Zero();
  double radius = 0.25;
  double height = 1.8;
  bool operator==(const Cylinder&) const = default;
};

enum class ObstacleKind { Static, Dynamic };
enum class ShapeKind { Box, Cylinder };

struct Obstacle {
  ObstacleKind kind = ObstacleKind::Static;
  ShapeKind shape = ShapeKind::Box;
  Box box;
  Cylinder cylinder;
  // Dynamic only: closed loop through waypoints (cylinder base positions) at constant speed.
  std::vector<Vec3> waypoints;
  double speed = 0.0;

  bool operator==(const Obstacle&) const = default;

  void validate() const {
    if (shape == ShapeKind::Cylinder) {
      if (!(cylinder.radius > 0.0)) throw DomainError("obstacle: cylinder radius must be > 0");
      if (!(cylinder.height > 0.0)) throw DomainError("obstacle: cylinder height must be > 0");
    } else {
      if ((box.min.array() > box.max.array()).any())
        throw DomainError("obstacle: box min must be <= max per axis");
    }
    if (kind == ObstacleKind::Dynamic) {
      if (shape != ShapeKind::Cylinder)
        throw DomainError("obstacle: dynamic obstacles must be cylinders");
      if (speed < 0.0) throw DomainError("obstacle: speed must be >= 0");
    }
  }
};

/// Pose of a moving cylinder along its looping waypoint path.
struct DynamicPose {
  Cylinder shape;
  Vec3 velocity = Vec3::Zero();
};

inline DynamicPose dynamic_pose(const Obstacle& o, double t) {
  DynamicPose out{o.cylinder, Vec3::Zero()};
  const auto& w = o.waypoints;
  if (w.size() < 2 || o.speed <= 0.0) {
    if (!w.empty()) out.shape.base = w.front();
    return out;
  }
  double perimeter = 0.0;
  for (std::size_t i = 0; i < w.size(); ++i) perimeter += (w[(i + 1) % w.size()] - w[i]).norm();
  if (perimeter <= 0.0) {
    out.shape.base = w.front();
    return out;
  }
  double s = std::fmod(o.speed * t, perimeter);
  if (s < 0.0) s += perimeter;
  for (std::size_t i = 0; i < w.size(); ++i) {
    const Vec3& a = w[i];
    const Vec3& b = w[(i + 1) % w.size()];
    const double len = (b - a).norm();
    if (len <= 0.0) continue;
    if (s <= len || i + 1 == w.size()) {
      const Vec3 dir = (b - a) / len;
      out.shape.base = a + dir * std::min(s, len);
      out.velocity = dir * o.speed;
      return out;
    }
    s -= len;
  }
  return out;
}

/// Signed distance from p to a vertical cylinder (negative inside).
inline double cylinder_distance(const Cylinder& c, const Vec3& p) {
  const double radial = std::hypot(p.x() - c.base.x(), p.y() - c.base.y()) - c.radius;
  const double vertical = std::max(c.base.z() - p.z(), p.z() - (c.base.z() + c.height));
  if (radial <= 0.0 && vertical <= 0.0) return std::max(radial, vertical);
  return std::hypot(std::max(radial, 0.0), std::max(vertical, 0.0));
}

/// Gradient of cylinder_distance with respect to p.
inline Vec3 cylinder_distance_gradient(const Cylinder& c, const Vec3& p) {
  Vec3 radial_dir(p.x() - c.base.x(), p.y() - c.base.y(), 0.0);
  const double rxy = radial_dir.norm();
  radial_dir = rxy > 1e-12 ? Vec3(radial_dir / rxy) : Vec3(1.0, 0.0, 0.0);
  const double radial = rxy - c.radius;
  const double below = c.base.z() - p.z();
  const double above = p.z() - (c.base.z() + c.height);
  const double vertical = std::max(below, above);
  const Vec3 vertical_dir = below > above ? Vec3(0, 0, -1) : Vec3(0, 0, 1);
  if (radial <= 0.0 && vertical <= 0.0) return radial >= vertical ? radial_dir : vertical_dir;
  if (vertical <= 0.0) return radial_dir;
  if (radial <= 0.0) return vertical_dir;
  const double d = std::hypot(radial, vertical);
  return (radial_dir * radial + vertical_dir * vertical) / d;
}

/// First parameter t in [0, t_max] where the ray origin + t*dir is inside the cylinder.
inline std::optional<double> ray_cylinder(const Cylinder& c, const Vec3& origin, const Vec3& dir,
                                          double t_max) {
  double t_in = 0.0, t_out = t_max;
  // vertical slab
  const double z0 = c.base.z(), z1 = c.base.z() + c.height;
  if (std::abs(dir.z()) < 1e-15) {
    if (origin.z() < z0 || origin.z() > z1) return std::nullopt;
  } else {
    double ta = (z0 - origin.z()) / dir.z();
    double tb = (z1 - origin.z()) / dir.z();
    if (ta > tb) std::swap(ta, tb);
    t_in = std::max(t_in, ta);
    t_out = std::min(t_out, tb);
  }
  // infinite vertical cylinder
  const double ox = origin.x() - c.base.x(), oy = origin.y() - c.base.y();
  const double a = dir.x() * dir.x() + dir.y() * dir.y();
  const double b = 2.0 * (ox * dir.x() + oy * dir.y());
  const double cc = ox * ox + oy * oy - c.radius * c.radius;
  if (a < 1e-15) {
    if (cc > 0.0) return std::nullopt;
  } else {
    const double disc = b * b - 4.0 * a * cc;
    if (disc < 0.0) return std::nullopt;
    const double sq = std::sqrt(disc);
    t_in = std::max(t_in, (-b - sq) / (2.0 * a));
    t_out = std::min(t_out, (-b + sq) / (2.0 * a));
  }
  if (t_in <= t_out) return t_in;
  return std::nullopt;
}

/// Marks every cell whose center lies inside the obstacle shape as Occupied.
inline void voxelize(VoxelGrid& grid, const Obstacle& o) {
  const double res = grid.resolution();
  Vec3 lo, hi;
  if (o.shape == ShapeKind::Box) {
    lo = o.box.min;
    hi = o.box.max;
  } else {
    lo = o.cylinder.base - Vec3(o.cylinder.radius, o.cylinder.radius, 0.0);
    hi = o.cylinder.base + Vec3(o.cylinder.radius, o.cylinder.radius, o.cylinder.height);
  }
  const Index3 a = grid.index_of(lo - Vec3::Constant(res)).cwiseMax(Index3::Zero());
  const Index3 b = grid.index_of(hi + Vec3::Constant(res)).cwiseMin(grid.dims() - Index3::Ones());
  for (int z = a.z(); z <= b.z(); ++z)
    for (int y = a.y(); y <= b.y(); ++y)
      for (int x = a.x(); x <= b.x(); ++x) {
        const Index3 c(x, y, z);
        const Vec3 p = grid.center(c);
        bool inside;
        if (o.shape == ShapeKind::Box)
          inside = (p.array() >= lo.array()).all() && (p.array() <= hi.array()).all();
        else
          inside = cylinder_distance(o.cylinder, p) <= 0.0;
        if (inside) grid.set(c, CellState::Occupied);
      }
}

struct CameraModel {
  double fov_h = deg2rad(90.0);
  double fov_v = deg2rad(60.0);
  double range = 5.0;
  double max_incidence = deg2rad(75.0);

  bool operator==(const CameraModel&) const = default;

  void validate() const {
    if (!(fov_h > 0.0 && fov_h < kTwoPi)) throw DomainError("camera: fov_h must be in (0, 2pi)");
    if (!(fov_v > 0.0 && fov_v < kPi)) throw DomainError("camera: fov_v must be in (0, pi)");
    if (!(range > 0.0)) throw DomainError("camera: range must be > 0");
    if (!(max_incidence > 0.0)) throw DomainError("camera: max_incidence must be > 0");
  }

  /// Point inside the yaw-only (zero pitch) frustum of a camera at `eye`.
  bool in_frustum(const Vec3& eye, double yaw, const Vec3& point) const {
    const Vec3 d = point - eye;
    const double dist = d.norm();
    if (dist > range || dist < 1e-9) return false;
    const double horizontal = std::hypot(d.x(), d.y());
    if (std::abs(wrap_angle(std::atan2(d.y(), d.x()) - yaw)) > 0.5 * fov_h) return false;
    return std::abs(std::atan2(d.z(), horizontal)) <= 0.5 * fov_v;
  }

  /// Angle between the viewing ray and the surface normal is within the incidence limit.
  bool incidence_ok(const Vec3& eye, const Vec3& point, const Vec3& normal) const {
    const Vec3 to_eye = (eye - point).normalized();
    const double c = std::clamp(to_eye.dot(normal), -1.0, 1.0);
    return std::acos(c) <= max_incidence;
  }
};

}  // namespace coverplan
