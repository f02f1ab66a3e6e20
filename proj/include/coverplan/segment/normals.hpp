#pragma once

#include <cmath>
#include <vector>

#include <Eigen/Eigenvalues>

#include "coverplan/world/surface.hpp"
#include "coverplan/world/voxel_grid.hpp"

namespace coverplan {

namespace detail {

inline Vec3 free_direction(const VoxelGrid& grid, const Index3& c, bool faces_only) {
  Vec3 sum = Vec3::Zero();
  for (int dz = -1; dz <= 1; ++dz)
    for (int dy = -1; dy <= 1; ++dy)
      for (int dx = -1; dx <= 1; ++dx) {
        const int manhattan = std::abs(dx) + std::abs(dy) + std::abs(dz);
        if (manhattan == 0 || (faces_only && manhattan != 1)) continue;
        const Index3 n = c + Index3(dx, dy, dz);
        if (grid.in_bounds(n) && grid.state(n) == CellState::Free)
          sum += Vec3(dx, dy, dz).normalized();
      }
  return sum;
}

}  // namespace detail

/// PCA normals over surface neighbours within `radius`, oriented toward adjacent Free
/// space, plus the surface-variation curvature proxy lambda_min / (l0 + l1 + l2).
/// Neighbourhoods with fewer than 3 cells (or collinear ones) fall back to the summed
/// direction of Free face-neighbours.
inline SurfaceSet estimate_normals(const VoxelGrid& grid, SurfaceSet surfaces, double radius) {
  if (radius < grid.resolution()) throw DomainError("estimate_normals: radius must be >= 1 cell");
  const std::size_t n = surfaces.size();
  std::vector<Vec3> normals(n, Vec3::UnitZ());
  std::vector<double> curvature(n, 1.0 / 3.0);
  const double rank_eps = 1e-9 * grid.resolution() * grid.resolution();

  for (std::size_t i = 0; i < n; ++i) {
    const Index3 c = grid.unflatten(surfaces.cell(i));
    const Vec3 p = grid.center(c);

    Vec3 mean = Vec3::Zero();
    std::vector<Vec3> pts;
    for_cells_within(grid, p, radius, [&](const Index3& q) {
      if (surfaces.contains(grid.flatten(q))) pts.push_back(grid.center(q));
    });
    for (const auto& q : pts) mean += q;

    bool fallback = pts.size() < 3;
    Vec3 normal = Vec3::UnitZ();
    if (!fallback) {
      mean /= static_cast<double>(pts.size());
      Eigen::Matrix3d cov = Eigen::Matrix3d::Zero();
      for (const auto& q : pts) cov += (q - mean) * (q - mean).transpose();
      cov /= static_cast<double>(pts.size());
      Eigen::SelfAdjointEigenSolver<Eigen::Matrix3d> es(cov);
      const Vec3 ev = es.eigenvalues();  // ascending
      if (ev(1) <= rank_eps) {
        fallback = true;
      } else {
        normal = es.eigenvectors().col(0).normalized();
        const double total = ev.sum();
        curvature[i] = total > 0.0 ? std::max(0.0, ev(0)) / total : 0.0;
      }
    }

    Vec3 free_dir = detail::free_direction(grid, c, fallback);
    if (free_dir.squaredNorm() < 1e-12 && fallback) free_dir = detail::free_direction(grid, c, false);
    if (fallback) {
      normal = free_dir.squaredNorm() > 1e-12 ? Vec3(free_dir.normalized()) : Vec3::UnitZ();
    } else if (normal.dot(free_dir) < 0.0) {
      normal = -normal;
    }
    normals[i] = normal;
  }
  surfaces.set_normals(std::move(normals), std::move(curvature));
  return surfaces;
}

}  // namespace coverplan
