#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "coverplan/common.hpp"

namespace coverplan {

enum class CellState : std::uint8_t { Unknown = 0, Free = 1, Occupied = 2 };

inline const char* to_string(CellState s) {
  switch (s) {
    case CellState::Unknown: return "unknown";
    case CellState::Free: return "free";
    case CellState::Occupied: return "occupied";
  }
  return "?";
}

/// Dense 3D occupancy lattice. Cell (i,j,k) spans
/// [origin + (i,j,k)*res, origin + (i+1,j+1,k+1)*res); linear index is x-fastest.
class VoxelGrid {
 public:
  VoxelGrid() : VoxelGrid(Vec3::Zero(), 1.0, Index3(1, 1, 1)) {}

  VoxelGrid(const Vec3& origin, double resolution, const Index3& dims,
            CellState fill = CellState::Unknown)
      : origin_(origin), resolution_(resolution), dims_(dims) {
    if (!(resolution > 0.0) || !std::isfinite(resolution))
      throw DomainError("VoxelGrid: resolution must be > 0");
    if (dims.x() < 1 || dims.y() < 1 || dims.z() < 1)
      throw DomainError("VoxelGrid: dims must be >= 1 on every axis");
    cells_.assign(static_cast<std::size_t>(dims.x()) * dims.y() * dims.z(), fill);
  }

  const Vec3& origin() const { return origin_; }
  double resolution() const { return resolution_; }
  const Index3& dims() const { return dims_; }
  std::size_t size() const { return cells_.size(); }

  Vec3 min_corner() const { return origin_; }
  Vec3 max_corner() const { return origin_ + dims_.cast<double>() * resolution_; }

  bool in_bounds(const Index3& c) const {
    return c.x() >= 0 && c.y() >= 0 && c.z() >= 0 && c.x() < dims_.x() && c.y() < dims_.y() &&
           c.z() < dims_.z();
  }

  bool contains(const Vec3& p) const { return in_bounds(index_of(p)); }

  Index3 index_of(const Vec3& p) const {
    const Vec3 rel = (p - origin_) / resolution_;
    return {static_cast<int>(std::floor(rel.x())), static_cast<int>(std::floor(rel.y())),
            static_cast<int>(std::floor(rel.z()))};
  }

  Vec3 center(const Index3& c) const {
    return origin_ + (c.cast<double>() + Vec3::Constant(0.5)) * resolution_;
  }
  Vec3 center(std::size_t linear) const { return center(unflatten(linear)); }

  std::size_t flatten(const Index3& c) const {
    return static_cast<std::size_t>(c.x()) +
           static_cast<std::size_t>(dims_.x()) *
               (static_cast<std::size_t>(c.y()) + static_cast<std::size_t>(dims_.y()) * c.z());
  }

  Index3 unflatten(std::size_t i) const {
    const auto nx = static_cast<std::size_t>(dims_.x());
    const auto ny = static_cast<std::size_t>(dims_.y());
    return {static_cast<int>(i % nx), static_cast<int>((i / nx) % ny),
            static_cast<int>(i / (nx * ny))};
  }

  CellState state(const Index3& c) const { return cells_[flatten(c)]; }
  CellState state(std::size_t i) const { return cells_[i]; }
  void set(const Index3& c, CellState s) { cells_[flatten(c)] = s; }
  void set(std::size_t i, CellState s) { cells_[i] = s; }

  /// Out-of-bounds cells read as Unknown.
  CellState state_or_unknown(const Index3& c) const {
    return in_bounds(c) ? state(c) : CellState::Unknown;
  }

  bool is_occupied(const Index3& c) const {
    return in_bounds(c) && state(c) == CellState::Occupied;
  }

  const std::vector<CellState>& cells() const { return cells_; }

  /// Same geometry (origin, resolution, dims), ignoring cell contents.
  bool same_layout(const VoxelGrid& o) const {
    return origin_ == o.origin_ && resolution_ == o.resolution_ && dims_ == o.dims_;
  }

  bool operator==(const VoxelGrid& o) const = default;

 private:
  Vec3 origin_;
  double resolution_;
  Index3 dims_;
  std::vector<CellState> cells_;
};

/// Calls fn(Index3) for every in-bounds cell whose center lies within `radius` of `p`.
/// Centers exactly on the sphere count as inside despite rounding.
template <typename Fn>
void for_cells_within(const VoxelGrid& grid, const Vec3& p, double radius, Fn&& fn) {
  radius += 1e-9 * grid.resolution();
  const Index3 lo = grid.index_of(p - Vec3::Constant(radius));
  const Index3 hi = grid.index_of(p + Vec3::Constant(radius));
  const double r2 = radius * radius;
  for (int z = std::max(lo.z(), 0); z <= std::min(hi.z(), grid.dims().z() - 1); ++z)
    for (int y = std::max(lo.y(), 0); y <= std::min(hi.y(), grid.dims().y() - 1); ++y)
      for (int x = std::max(lo.x(), 0); x <= std::min(hi.x(), grid.dims().x() - 1); ++x) {
        const Index3 c(x, y, z);
        if ((grid.center(c) - p).squaredNorm() <= r2) fn(c);
      }
}

/// Distance from a point to the closed axis-aligned box of a cell.
inline double point_cell_distance(const VoxelGrid& grid, const Vec3& p, const Index3& c) {
  const Vec3 lo = grid.origin() + c.cast<double>() * grid.resolution();
  const Vec3 hi = lo + Vec3::Constant(grid.resolution());
  const Vec3 d = (lo - p).cwiseMax(p - hi).cwiseMax(Vec3::Zero());
  return d.norm();
}

/// Exact distance from p to the surface of the nearest Occupied cell box, searched
/// within `search_radius`; returns search_radius when nothing is closer.
inline double nearest_occupied_box_distance(const VoxelGrid& grid, const Vec3& p,
                                            double search_radius) {
  double best = search_radius;
  const Index3 lo = grid.index_of(p - Vec3::Constant(search_radius));
  const Index3 hi = grid.index_of(p + Vec3::Constant(search_radius));
  for (int z = std::max(lo.z(), 0); z <= std::min(hi.z(), grid.dims().z() - 1); ++z)
    for (int y = std::max(lo.y(), 0); y <= std::min(hi.y(), grid.dims().y() - 1); ++y)
      for (int x = std::max(lo.x(), 0); x <= std::min(hi.x(), grid.dims().x() - 1); ++x) {
        const Index3 c(x, y, z);
        if (grid.state(c) != CellState::Occupied) continue;
        best = std::min(best, point_cell_distance(grid, p, c));
      }
  return best;
}

}  // namespace coverplan
