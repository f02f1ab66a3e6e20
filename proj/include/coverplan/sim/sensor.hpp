#pragma once

#include <algorithm>
#include <cmath>
#include <vector>

#include "coverplan/world/obstacle.hpp"
#include "coverplan/world/raycast.hpp"
#include "coverplan/world/surface.hpp"

namespace coverplan {

struct LidarConfig {
  double range = 8.0;
  int azimuth_rays = 32;
  int elevation_rays = 16;
};

/// Unit directions of the fixed world-frame ray bundle: azimuths -pi + 2pi i / n_az,
/// elevations at the midpoints of n_el equal bands over [-pi/2, pi/2].
inline std::vector<Vec3> lidar_directions(const LidarConfig& cfg) {
  std::vector<Vec3> dirs;
  for (int j = 0; j < cfg.elevation_rays; ++j) {
    const double el = -0.5 * kPi + (j + 0.5) * kPi / cfg.elevation_rays;
    for (int i = 0; i < cfg.azimuth_rays; ++i) {
      const double az = -kPi + i * kTwoPi / cfg.azimuth_rays;
      dirs.emplace_back(std::cos(el) * std::cos(az), std::cos(el) * std::sin(az), std::sin(el));
    }
  }
  return dirs;
}

/// True world at one instant: static content plus dynamic cylinders voxelized at their
/// current poses. Cells touched by the previous update are restored first.
class WorldSnapshot {
 public:
  explicit WorldSnapshot(VoxelGrid static_world) : static_(std::move(static_world)), now_(static_) {}

  void update(const std::vector<Cylinder>& dynamic) {
    for (std::size_t c : touched_) now_.set(c, static_.state(c));
    touched_.clear();
    for (const auto& cyl : dynamic) {
      const double r = now_.resolution();
      const Vec3 lo = cyl.base - Vec3(cyl.radius + r, cyl.radius + r, r);
      const Vec3 hi = cyl.base + Vec3(cyl.radius + r, cyl.radius + r, cyl.height + r);
      const Index3 a = now_.index_of(lo).cwiseMax(Index3::Zero());
      const Index3 b = now_.index_of(hi).cwiseMin(now_.dims() - Index3::Ones());
      for (int z = a.z(); z <= b.z(); ++z)
        for (int y = a.y(); y <= b.y(); ++y)
          for (int x = a.x(); x <= b.x(); ++x) {
            const Index3 c(x, y, z);
            if (now_.state(c) == CellState::Occupied) continue;
            if (cylinder_distance(cyl, now_.center(c)) > 0.0) continue;
            now_.set(c, CellState::Occupied);
            touched_.push_back(now_.flatten(c));
          }
    }
  }

  const VoxelGrid& static_world() const { return static_; }
  const VoxelGrid& now() const { return now_; }
  /// Cells currently occupied only because a dynamic obstacle stands there.
  const std::vector<std::size_t>& dynamic_cells() const { return touched_; }

 private:
  VoxelGrid static_;
  VoxelGrid now_;
  std::vector<std::size_t> touched_;
};

struct SenseResult {
  std::vector<std::size_t> hits;  // unique, sorted
  std::size_t rays = 0;
  std::size_t misses = 0;
};

/// Casts the bundle from `origin` in `world`; cells the rays cross before a hit become Free in
/// `online`, hit cells become Occupied. Cells in the last partial resolution before the range
/// limit are left untouched.
inline SenseResult sense(const VoxelGrid& world, const Vec3& origin, const std::vector<Vec3>& directions,
                         double range, VoxelGrid& online) {
  if (!world.same_layout(online)) throw DomainError("sense: maps are not aligned");
  SenseResult r;
  const double free_limit = range - world.resolution();
  for (const Vec3& d : directions) {
    ++r.rays;
    const bool hit = traverse_ray(world, origin, d, range, [&](const Index3& c, double t) {
      if (world.state(c) == CellState::Occupied) {
        online.set(c, CellState::Occupied);
        r.hits.push_back(world.flatten(c));
        return true;
      }
      if (t <= free_limit) online.set(c, CellState::Free);
      return false;
    });
    if (!hit) ++r.misses;
  }
  std::sort(r.hits.begin(), r.hits.end());
  r.hits.erase(std::unique(r.hits.begin(), r.hits.end()), r.hits.end());
  return r;
}

/// Surface slots newly seen from (eye, yaw): unscanned, inside the frustum and range, within
/// the incidence limit, and visible in `world`.
inline std::vector<std::size_t> observe_coverage(const Vec3& eye, double yaw, const CameraModel& camera,
                                                 const VoxelGrid& world, const SurfaceSet& surfaces,
                                                 const std::vector<char>& scanned) {
  std::vector<std::size_t> out;
  if (!world.contains(eye)) return out;
  for (std::size_t i = 0; i < surfaces.size(); ++i) {
    if (scanned[i]) continue;
    const std::size_t c = surfaces.cell(i);
    const Vec3 p = world.center(c);
    if (!camera.in_frustum(eye, yaw, p)) continue;
    if (surfaces.has_normals() && !camera.incidence_ok(eye, p, surfaces.normal(i))) continue;
    if (cell_visible(world, eye, world.unflatten(c))) out.push_back(i);
  }
  return out;
}

}  // namespace coverplan
