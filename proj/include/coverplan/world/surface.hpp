#pragma once

#include <algorithm>
#include <cstddef>
#include <cstdint>
#include <vector>

#include "coverplan/world/voxel_grid.hpp"

namespace coverplan {

/// Inspectable surface cells of a reference grid, sorted by linear index. Normals and
/// curvature are empty until estimated (see segment/normals.hpp).
class SurfaceSet {
 public:
  SurfaceSet() = default;

  SurfaceSet(const VoxelGrid& grid, std::vector<std::size_t> cells) : cells_(std::move(cells)) {
    std::sort(cells_.begin(), cells_.end());
    cells_.erase(std::unique(cells_.begin(), cells_.end()), cells_.end());
    for (std::size_t c : cells_) {
      if (c >= grid.size()) throw DomainError("SurfaceSet: cell index outside grid");
      if (grid.state(c) != CellState::Occupied)
        throw DomainError("SurfaceSet: surface cell is not Occupied in its grid");
    }
    slot_.assign(grid.size(), -1);
    for (std::size_t i = 0; i < cells_.size(); ++i) slot_[cells_[i]] = static_cast<std::int32_t>(i);
  }

  std::size_t size() const { return cells_.size(); }
  bool empty() const { return cells_.empty(); }

  /// Linear grid index of the i-th surface cell.
  std::size_t cell(std::size_t i) const { return cells_[i]; }
  const std::vector<std::size_t>& cells() const { return cells_; }

  /// Surface slot of a linear grid index, or -1.
  std::int32_t slot_of(std::size_t linear) const {
    return linear < slot_.size() ? slot_[linear] : -1;
  }
  bool contains(std::size_t linear) const { return slot_of(linear) >= 0; }

  bool has_normals() const { return normals_.size() == cells_.size() && !cells_.empty(); }
  const Vec3& normal(std::size_t i) const { return normals_[i]; }
  double curvature(std::size_t i) const { return curvature_[i]; }
  const std::vector<Vec3>& normals() const { return normals_; }
  const std::vector<double>& curvatures() const { return curvature_; }

  void set_normals(std::vector<Vec3> normals, std::vector<double> curvature) {
    if (normals.size() != cells_.size() || curvature.size() != cells_.size())
      throw DomainError("SurfaceSet: normal/curvature count mismatch");
    normals_ = std::move(normals);
    curvature_ = std::move(curvature);
  }

  bool operator==(const SurfaceSet& o) const { return cells_ == o.cells_; }

 private:
  std::vector<std::size_t> cells_;
  std::vector<std::int32_t> slot_;
  std::vector<Vec3> normals_;
  std::vector<double> curvature_;
};

/// Occupied cells that share a face with a Free cell, as linear indices.
inline std::vector<std::size_t> exposed_cells(const VoxelGrid& grid) {
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < grid.size(); ++i) {
    if (grid.state(i) != CellState::Occupied) continue;
    const Index3 c = grid.unflatten(i);
    bool exposed = false;
    for (int a = 0; a < 3 && !exposed; ++a)
      for (int s : {-1, 1}) {
        Index3 n = c;
        n[a] += s;
        if (grid.in_bounds(n) && grid.state(n) == CellState::Free) exposed = true;
      }
    if (exposed) out.push_back(i);
  }
  return out;
}

}  // namespace coverplan
