#pragma once

#include <algorithm>
#include <cmath>
#include <deque>
#include <limits>
#include <numeric>
#include <vector>

#include <Eigen/Eigenvalues>

#include "coverplan/world/surface.hpp"
#include "coverplan/world/voxel_grid.hpp"

namespace coverplan {

struct OrientedBox {
  Vec3 center = Vec3::Zero();
  Eigen::Matrix3d axes = Eigen::Matrix3d::Identity();  // columns, by decreasing half-extent
  Vec3 half_extents = Vec3::Zero();
};

struct Segment {
  int id = 0;
  std::vector<std::size_t> cells;  // linear grid indices, sorted
  Vec3 mean_normal = Vec3::UnitZ();
  OrientedBox bbox;
  Vec3 principal_axis = Vec3::UnitX();
  bool merged = false;  // absorbed undersized neighbours; exempt from normal coherence
};

struct RegionGrowParams {
  double angle_thresh = 20.0 * kPi / 180.0;
  double curvature_thresh = 0.05;
  int min_size = 8;
};

/// PCA box of the segment's cell centers. Axes are sorted by half-extent (largest first)
/// and signed so each has a positive dot with (1, 1e-3, 1e-6). A single cell gets the
/// world frame and half-extents of half a resolution.
inline void fit_bbox(const VoxelGrid& grid, Segment& seg) {
  if (seg.cells.empty()) throw DomainError("fit_bbox: empty segment");
  const double res = grid.resolution();
  if (seg.cells.size() == 1) {
    seg.bbox.center = grid.center(seg.cells.front());
    seg.bbox.axes.setIdentity();
    seg.bbox.half_extents = Vec3::Constant(0.5 * res);
    seg.principal_axis = Vec3::UnitX();
    return;
  }
  Vec3 mean = Vec3::Zero();
  for (std::size_t c : seg.cells) mean += grid.center(c);
  mean /= static_cast<double>(seg.cells.size());
  Eigen::Matrix3d cov = Eigen::Matrix3d::Zero();
  for (std::size_t c : seg.cells) {
    const Vec3 d = grid.center(c) - mean;
    cov += d * d.transpose();
  }
  Eigen::SelfAdjointEigenSolver<Eigen::Matrix3d> es(cov);
  const Vec3 tie(1.0, 1e-3, 1e-6);

  struct Axis {
    Vec3 dir;
    double lo, hi, eigenvalue;
  };
  std::vector<Axis> axes;
  for (int k = 2; k >= 0; --k) {
    Vec3 a = es.eigenvectors().col(k).normalized();
    if (a.dot(tie) < 0.0) a = -a;
    double lo = std::numeric_limits<double>::infinity(), hi = -lo;
    for (std::size_t c : seg.cells) {
      const double s = a.dot(grid.center(c) - mean);
      lo = std::min(lo, s);
      hi = std::max(hi, s);
    }
    axes.push_back({a, lo, hi, es.eigenvalues()(k)});
  }
  // stable: equal extents keep decreasing-eigenvalue order
  std::stable_sort(axes.begin(), axes.end(), [](const Axis& x, const Axis& y) {
    return (x.hi - x.lo) > (y.hi - y.lo) + 1e-12;
  });
  Vec3 center = mean;
  for (int k = 0; k < 3; ++k) {
    seg.bbox.axes.col(k) = axes[k].dir;
    seg.bbox.half_extents(k) = 0.5 * (axes[k].hi - axes[k].lo);
    center += axes[k].dir * 0.5 * (axes[k].hi + axes[k].lo);
  }
  seg.bbox.center = center;
  seg.principal_axis = seg.bbox.axes.col(0);
}

namespace detail {

inline double normal_angle(const Vec3& a, const Vec3& b) {
  return std::acos(std::clamp(a.dot(b), -1.0, 1.0));
}

template <typename Fn>
void for_surface_neighbours(const VoxelGrid& grid, const SurfaceSet& surfaces, std::size_t linear,
                            Fn&& fn) {
  const Index3 c = grid.unflatten(linear);
  for (int dz = -1; dz <= 1; ++dz)
    for (int dy = -1; dy <= 1; ++dy)
      for (int dx = -1; dx <= 1; ++dx) {
        if (dx == 0 && dy == 0 && dz == 0) continue;
        const Index3 n = c + Index3(dx, dy, dz);
        if (!grid.in_bounds(n)) continue;
        const std::int32_t slot = surfaces.slot_of(grid.flatten(n));
        if (slot >= 0) fn(static_cast<std::size_t>(slot));
      }
}

inline Vec3 mean_normal_of(const SurfaceSet& surfaces, const std::vector<std::size_t>& slots) {
  Vec3 sum = Vec3::Zero();
  for (std::size_t s : slots) sum += surfaces.normal(s);
  return sum.squaredNorm() > 1e-24 ? Vec3(sum.normalized()) : surfaces.normal(slots.front());
}

}  // namespace detail

/// Region growing over 26-connected surface cells. Seeds are taken in order of increasing
/// curvature (ties by cell index); a neighbour joins when its normal is within
/// angle_thresh of the seed normal and its curvature is within curvature_thresh.
/// Segments below min_size are folded into the 26-adjacent segment with the most similar
/// mean normal. The result partitions the surface set.
inline std::vector<Segment> region_grow(const VoxelGrid& grid, const SurfaceSet& surfaces,
                                        const RegionGrowParams& params) {
  if (!(params.angle_thresh > 0.0) || !(params.curvature_thresh > 0.0))
    throw DomainError("region_grow: thresholds must be > 0");
  if (surfaces.empty()) return {};
  if (!surfaces.has_normals()) throw DomainError("region_grow: surface normals not estimated");

  const std::size_t n = surfaces.size();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return surfaces.curvature(a) < surfaces.curvature(b);
  });

  std::vector<int> label(n, -1);
  std::vector<std::vector<std::size_t>> groups;  // surface slots
  for (std::size_t seed : order) {
    if (label[seed] >= 0) continue;
    const int id = static_cast<int>(groups.size());
    groups.emplace_back();
    const Vec3 seed_normal = surfaces.normal(seed);
    std::deque<std::size_t> queue{seed};
    label[seed] = id;
    while (!queue.empty()) {
      const std::size_t cur = queue.front();
      queue.pop_front();
      groups[id].push_back(cur);
      detail::for_surface_neighbours(grid, surfaces, surfaces.cell(cur), [&](std::size_t nb) {
        if (label[nb] >= 0) return;
        if (detail::normal_angle(surfaces.normal(nb), seed_normal) > params.angle_thresh) return;
        if (surfaces.curvature(nb) > params.curvature_thresh) return;
        label[nb] = id;
        queue.push_back(nb);
      });
    }
  }

  // fold undersized groups into their most normal-similar neighbour
  std::vector<bool> alive(groups.size(), true), merged(groups.size(), false);
  std::vector<Vec3> normal_sum(groups.size(), Vec3::Zero());
  for (std::size_t g = 0; g < groups.size(); ++g)
    for (std::size_t s : groups[g]) normal_sum[g] += surfaces.normal(s);
  auto mean_of = [&](std::size_t g) -> Vec3 {
    return normal_sum[g].squaredNorm() > 1e-24 ? Vec3(normal_sum[g].normalized())
                                               : surfaces.normal(groups[g].front());
  };
  bool changed = true;
  while (changed) {
    changed = false;
    for (std::size_t g = 0; g < groups.size(); ++g) {
      if (!alive[g] || groups[g].size() >= static_cast<std::size_t>(params.min_size)) continue;
      const Vec3 mine = mean_of(g);
      int best = -1;
      double best_dot = -2.0;
      for (std::size_t s : groups[g]) {
        detail::for_surface_neighbours(grid, surfaces, surfaces.cell(s), [&](std::size_t nb) {
          const int other = label[nb];
          if (other == static_cast<int>(g)) return;
          const double d = mine.dot(mean_of(static_cast<std::size_t>(other)));
          if (d > best_dot + 1e-12 || (std::abs(d - best_dot) <= 1e-12 && other < best)) {
            best_dot = d;
            best = other;
          }
        });
      }
      if (best < 0) continue;
      for (std::size_t s : groups[g]) label[s] = best;
      groups[best].insert(groups[best].end(), groups[g].begin(), groups[g].end());
      normal_sum[best] += normal_sum[g];
      groups[g].clear();
      alive[g] = false;
      merged[best] = true;
      changed = true;
    }
  }

  std::vector<Segment> out;
  for (std::size_t g = 0; g < groups.size(); ++g) {
    if (!alive[g]) continue;
    Segment seg;
    seg.id = static_cast<int>(out.size());
    seg.merged = merged[g];
    seg.mean_normal = detail::mean_normal_of(surfaces, groups[g]);
    for (std::size_t s : groups[g]) seg.cells.push_back(surfaces.cell(s));
    std::sort(seg.cells.begin(), seg.cells.end());
    fit_bbox(grid, seg);
    out.push_back(std::move(seg));
  }
  return out;
}

}  // namespace coverplan
