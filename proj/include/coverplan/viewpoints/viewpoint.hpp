#pragma once

#include <algorithm>
#include <cmath>
#include <optional>
#include <string>
#include <tuple>
#include <vector>

#include <nlohmann/json.hpp>

#include "coverplan/segment/segment.hpp"
#include "coverplan/world/obstacle.hpp"
#include "coverplan/world/raycast.hpp"
#include "coverplan/world/surface.hpp"

namespace coverplan {

enum class ViewpointStatus { Pending, Visited, Blocked, Adapted };

inline const char* to_string(ViewpointStatus s) {
  switch (s) {
    case ViewpointStatus::Pending: return "pending";
    case ViewpointStatus::Visited: return "visited";
    case ViewpointStatus::Blocked: return "blocked";
    case ViewpointStatus::Adapted: return "adapted";
  }
  return "?";
}

struct Viewpoint {
  int id = 0;
  Vec3 position = Vec3::Zero();
  double yaw = 0.0;  // [-pi, pi)
  int segment = 0;
  std::vector<std::size_t> covered_cells;  // linear indices, sorted, subset of the segment
  ViewpointStatus status = ViewpointStatus::Pending;
  int pass = 0;  // 0 nominal, 1 densified
  int row = 0;
  int step = 0;
};

struct ViewpointParams {
  double standoff = 1.5;
  double overlap = 0.2;
  double clearance = 0.5;  // required distance from p_i to the nearest occupied cell
};

struct GenerationWarning {
  int segment = -1;
  std::string message;
};

/// Centre-to-centre distance between neighbouring footprints for a camera at `standoff`.
inline double footprint_spacing(double standoff, double fov, double overlap) {
  return 2.0 * standoff * std::tan(0.5 * fov) * (1.0 - overlap);
}

/// Cells among `candidates` that a camera at (eye, yaw) observes: inside the frustum and
/// range, within the incidence limit, and not occluded in `grid`.
inline std::vector<std::size_t> observed_cells(const VoxelGrid& grid, const SurfaceSet& surfaces,
                                               const CameraModel& camera, const Vec3& eye,
                                               double yaw,
                                               const std::vector<std::size_t>& candidates) {
  std::vector<std::size_t> out;
  if (!grid.contains(eye)) return out;
  for (std::size_t c : candidates) {
    const Vec3 p = grid.center(c);
    if (!camera.in_frustum(eye, yaw, p)) continue;
    const std::int32_t slot = surfaces.slot_of(c);
    if (slot >= 0 && surfaces.has_normals() &&
        !camera.incidence_ok(eye, p, surfaces.normal(static_cast<std::size_t>(slot))))
      continue;
    if (cell_visible(grid, eye, grid.unflatten(c))) out.push_back(c);
  }
  std::sort(out.begin(), out.end());
  return out;
}

namespace detail {

inline bool position_feasible(const VoxelGrid& grid, const Vec3& p, double clearance) {
  if (!grid.contains(p) || grid.state(grid.index_of(p)) != CellState::Free) return false;
  return nearest_occupied_box_distance(grid, p, clearance + grid.resolution()) >= clearance - 1e-9;
}

}  // namespace detail

/// Viewpoints for one segment, laid out on rows parallel to the segment plane at
/// `standoff` along the mean normal. Steps follow the principal axis; rows stack along the
/// secondary in-plane axis when the segment is taller than one footprint. Infeasible
/// positions are pushed outward along the normal (up to twice the standoff) or dropped.
inline std::vector<Viewpoint> generate_viewpoints(const VoxelGrid& grid, const SurfaceSet& surfaces,
                                                  const Segment& seg, const CameraModel& camera,
                                                  const ViewpointParams& params,
                                                  std::vector<GenerationWarning>* warnings = nullptr,
                                                  int pass = 0) {
  if (!(params.overlap >= 0.0 && params.overlap < 1.0))
    throw DomainError("generate_viewpoints: overlap must be in [0, 1)");
  if (!(params.standoff > 0.0)) throw DomainError("generate_viewpoints: standoff must be > 0");
  if (seg.cells.empty()) return {};
  const double res = grid.resolution();
  auto warn = [&](std::string msg) {
    if (warnings) warnings->push_back({seg.id, std::move(msg)});
  };

  const Vec3 n = seg.mean_normal.normalized();
  Vec3 a1 = seg.principal_axis - seg.principal_axis.dot(n) * n;
  if (a1.squaredNorm() < 1e-12) a1 = seg.bbox.axes.col(1) - seg.bbox.axes.col(1).dot(n) * n;
  if (a1.squaredNorm() < 1e-12) a1 = n.unitOrthogonal();
  a1.normalize();
  const Vec3 a2 = n.cross(a1).normalized();

  double lo1 = 1e300, hi1 = -1e300, lo2 = 1e300, hi2 = -1e300;
  Vec3 mean = Vec3::Zero();
  for (std::size_t c : seg.cells) {
    const Vec3 p = grid.center(c);
    mean += p;
    lo1 = std::min(lo1, p.dot(a1));
    hi1 = std::max(hi1, p.dot(a1));
    lo2 = std::min(lo2, p.dot(a2));
    hi2 = std::max(hi2, p.dot(a2));
  }
  mean /= static_cast<double>(seg.cells.size());
  const double plane = mean.dot(n);

  // a vertical-ish step axis is measured against the vertical field of view
  const bool a1_vertical = std::abs(a1.z()) > 0.7;
  const double s1 = footprint_spacing(params.standoff, a1_vertical ? camera.fov_v : camera.fov_h,
                                      params.overlap);
  const double s2 = footprint_spacing(params.standoff, a1_vertical ? camera.fov_h : camera.fov_v,
                                      params.overlap);
  const double len1 = hi1 - lo1 + res, len2 = hi2 - lo2 + res;
  const int n1 = std::max(1, static_cast<int>(std::ceil(len1 / s1 - 1e-9)));
  const int n2 = len2 > s2 ? static_cast<int>(std::ceil(len2 / s2 - 1e-9)) : 1;

  Vec3 facing(-n.x(), -n.y(), 0.0);
  const double yaw = facing.squaredNorm() > 1e-12 ? yaw_of(facing) : 0.0;

  std::vector<Viewpoint> out;
  for (int r = 0; r < n2; ++r) {
    const double u2 = lo2 - 0.5 * res + (r + 0.5) * len2 / n2;
    for (int k = 0; k < n1; ++k) {
      const double u1 = lo1 - 0.5 * res + (k + 0.5) * len1 / n1;
      const Vec3 on_plane = u1 * a1 + u2 * a2 + plane * n;
      std::optional<Vec3> placed;
      for (double off = params.standoff; off <= 2.0 * params.standoff + 1e-9; off += res) {
        const Vec3 p = on_plane + off * n;
        if (detail::position_feasible(grid, p, params.clearance)) {
          placed = p;
          break;
        }
      }
      if (!placed) {
        warn("dropped viewpoint row " + std::to_string(r) + " step " + std::to_string(k) +
             ": no free position within twice the standoff");
        continue;
      }
      Viewpoint v;
      v.position = *placed;
      v.yaw = yaw;
      v.segment = seg.id;
      v.pass = pass;
      v.row = r;
      v.step = k;
      v.covered_cells = observed_cells(grid, surfaces, camera, v.position, v.yaw, seg.cells);
      out.push_back(std::move(v));
    }
  }
  if (out.empty()) warn("segment has no placeable viewpoints");
  return out;
}

/// Surface cells not covered by any viewpoint.
inline std::vector<std::size_t> coverage_closure_check(const std::vector<Viewpoint>& viewpoints,
                                                       const SurfaceSet& surfaces) {
  std::vector<char> covered(surfaces.size(), 0);
  for (const auto& v : viewpoints)
    for (std::size_t c : v.covered_cells) {
      const std::int32_t slot = surfaces.slot_of(c);
      if (slot >= 0) covered[static_cast<std::size_t>(slot)] = 1;
    }
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < surfaces.size(); ++i)
    if (!covered[i]) out.push_back(surfaces.cell(i));
  return out;
}

struct ViewpointSet {
  std::vector<Viewpoint> viewpoints;  // id == index
  std::vector<std::size_t> uncovered;
  std::vector<GenerationWarning> warnings;
};

/// Nominal pass over every segment, then one densified pass (overlap + 0.25) on segments
/// with uncovered cells, keeping only viewpoints that cover something new.
/// Ids follow (segment, pass, row, step).
inline ViewpointSet plan_viewpoints(const VoxelGrid& grid, const SurfaceSet& surfaces,
                                    const std::vector<Segment>& segments, const CameraModel& camera,
                                    const ViewpointParams& params) {
  ViewpointSet out;
  for (const auto& seg : segments) {
    auto vs = generate_viewpoints(grid, surfaces, seg, camera, params, &out.warnings, 0);
    out.viewpoints.insert(out.viewpoints.end(), vs.begin(), vs.end());
  }
  auto uncovered = coverage_closure_check(out.viewpoints, surfaces);
  if (!uncovered.empty()) {
    std::vector<char> open(grid.size(), 0);
    for (std::size_t c : uncovered) open[c] = 1;
    ViewpointParams dense = params;
    dense.overlap = std::min(params.overlap + 0.25, 0.95);
    for (const auto& seg : segments) {
      if (std::none_of(seg.cells.begin(), seg.cells.end(), [&](std::size_t c) { return open[c]; }))
        continue;
      std::vector<GenerationWarning> ignored;
      for (auto& v : generate_viewpoints(grid, surfaces, seg, camera, dense, &ignored, 1)) {
        bool adds = false;
        for (std::size_t c : v.covered_cells)
          if (open[c]) {
            open[c] = 0;
            adds = true;
          }
        if (adds) out.viewpoints.push_back(std::move(v));
      }
    }
  }
  std::stable_sort(out.viewpoints.begin(), out.viewpoints.end(),
                   [](const Viewpoint& a, const Viewpoint& b) {
                     return std::tie(a.segment, a.pass, a.row, a.step) <
                            std::tie(b.segment, b.pass, b.row, b.step);
                   });
  for (std::size_t i = 0; i < out.viewpoints.size(); ++i) out.viewpoints[i].id = static_cast<int>(i);
  out.uncovered = coverage_closure_check(out.viewpoints, surfaces);
  return out;
}

inline nlohmann::json viewpoint_to_json(const Viewpoint& v) {
  return {{"id", v.id},
          {"position_m", {v.position.x(), v.position.y(), v.position.z()}},
          {"yaw_rad", v.yaw},
          {"segment", v.segment},
          {"status", to_string(v.status)},
          {"covered_cells", v.covered_cells.size()}};
}

}  // namespace coverplan
