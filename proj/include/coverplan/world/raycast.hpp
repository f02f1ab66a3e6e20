#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <optional>

#include "coverplan/world/voxel_grid.hpp"

namespace coverplan {

struct RayHit {
  Index3 cell;
  double distance;  // ray parameter where the ray enters `cell` (0 if it starts inside)
  CellState state;
};

/// Amanatides–Woo traversal. Calls visit(cell, t_entry) for each cell the ray pierces, in
/// nondecreasing t_entry, until visit returns true, the ray leaves the grid, or t_entry
/// exceeds max_range. Returns true if visit stopped the walk.
template <typename Visit>
bool traverse_ray(const VoxelGrid& grid, const Vec3& origin, const Vec3& dir, double max_range,
                  Visit&& visit) {
  Index3 cell = grid.index_of(origin);
  if (!grid.in_bounds(cell)) throw DomainError("raycast: origin outside grid bounds");

  const double res = grid.resolution();
  const double inf = std::numeric_limits<double>::infinity();
  std::array<int, 3> step{};
  std::array<double, 3> t_max{};
  std::array<double, 3> t_delta{};
  for (int a = 0; a < 3; ++a) {
    const double d = dir[a];
    if (d > 0.0) {
      step[a] = 1;
      const double boundary = grid.origin()[a] + (cell[a] + 1) * res;
      t_max[a] = (boundary - origin[a]) / d;
      t_delta[a] = res / d;
    } else if (d < 0.0) {
      step[a] = -1;
      const double boundary = grid.origin()[a] + cell[a] * res;
      t_max[a] = (boundary - origin[a]) / d;
      t_delta[a] = -res / d;
    } else {
      step[a] = 0;
      t_max[a] = inf;
      t_delta[a] = inf;
    }
  }

  double t_entry = 0.0;
  while (t_entry <= max_range) {
    if (visit(static_cast<const Index3&>(cell), t_entry)) return true;
    int axis = 0;
    if (t_max[1] < t_max[axis]) axis = 1;
    if (t_max[2] < t_max[axis]) axis = 2;
    t_entry = std::max(t_entry, t_max[axis]);
    t_max[axis] += t_delta[axis];
    cell[axis] += step[axis];
    if (!grid.in_bounds(cell)) break;
  }
  return false;
}

/// First non-Free cell along the ray within max_range. Unknown cells are opaque, so the
/// hit may carry state Unknown. Throws DomainError if the origin is outside the grid or
/// dir is not unit length.
inline std::optional<RayHit> raycast(const VoxelGrid& grid, const Vec3& origin, const Vec3& dir,
                                     double max_range) {
  if (std::abs(dir.norm() - 1.0) > 1e-6) throw DomainError("raycast: direction must be unit");
  std::optional<RayHit> hit;
  traverse_ray(grid, origin, dir, max_range, [&](const Index3& c, double t) {
    const CellState s = grid.state(c);
    if (s == CellState::Free) return false;
    hit = RayHit{c, t, s};
    return true;
  });
  return hit;
}

/// Line of sight from `from` to the center of `target`: the first opaque cell on the way
/// is the target, or is entered within one cell width of the target center (rays that
/// graze a flat surface clip the neighbouring face cell first).
inline bool cell_visible(const VoxelGrid& grid, const Vec3& from, const Index3& target) {
  const Vec3 to = grid.center(target);
  const Vec3 delta = to - from;
  const double dist = delta.norm();
  if (dist < 1e-12) return true;
  const auto hit = raycast(grid, from, delta / dist, dist + grid.resolution());
  if (!hit) return false;
  return hit->cell == target || hit->distance >= dist - grid.resolution();
}

}  // namespace coverplan
