#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <sstream>
#include <string>
#include <vector>

#include "coverplan/viewpoints/viewpoint.hpp"
#include "coverplan/world/raycast.hpp"

namespace coverplan {

enum class CellClass : std::uint8_t { Base, Occluded, Scanned };

/// Per-surface-slot weights and classes.
struct WeightGrid {
  std::vector<double> weight;
  std::vector<CellClass> cls;

  std::size_t count(CellClass c) const { return static_cast<std::size_t>(std::count(cls.begin(), cls.end(), c)); }
};

/// Pending viewpoints that the online map shows to be unusable: an Occupied cell within
/// `robot_radius` of the position, or the central ray along the yaw stopping at an Occupied
/// cell that the reference map does not have.
inline std::vector<int> identify_blocked(const VoxelGrid& online, const VoxelGrid& reference,
                                         const std::vector<Viewpoint>& viewpoints, double robot_radius,
                                         double range) {
  if (!online.same_layout(reference)) throw DomainError("identify_blocked: maps are not aligned");
  std::vector<int> out;
  for (const auto& v : viewpoints) {
    if (v.status != ViewpointStatus::Pending) continue;
    if (!online.contains(v.position)) continue;
    bool blocked = nearest_occupied_box_distance(online, v.position, robot_radius) < robot_radius;
    if (!blocked) {
      const Vec3 dir(std::cos(v.yaw), std::sin(v.yaw), 0.0);
      traverse_ray(online, v.position, dir, range, [&](const Index3& c, double) {
        if (online.state(c) != CellState::Occupied) return false;
        blocked = reference.state(c) != CellState::Occupied;
        return true;
      });
    }
    if (blocked) out.push_back(v.id);
  }
  return out;
}

/// Nominal footprint of a blocked viewpoint that nobody has scanned yet.
/// `scanned` is indexed by surface slot.
inline std::vector<std::size_t> occluded_regions(const Viewpoint& v, const SurfaceSet& surfaces,
                                                 const std::vector<char>& scanned) {
  std::vector<std::size_t> out;
  for (std::size_t c : v.covered_cells) {
    const std::int32_t s = surfaces.slot_of(c);
    if (s >= 0 && !scanned[static_cast<std::size_t>(s)]) out.push_back(c);
  }
  return out;
}

/// Occluded takes precedence over Scanned; everything else is Base.
inline WeightGrid build_weights(const SurfaceSet& surfaces, const std::vector<std::size_t>& occluded,
                                const std::vector<char>& scanned, double w_base, double w_occluded,
                                double w_scanned) {
  if (!(w_scanned < w_base && w_base < w_occluded)) throw DomainError("build_weights: need w_lo < w0 < w_hi");
  if (!(w_scanned >= 0.0)) throw DomainError("build_weights: weights must be >= 0");
  WeightGrid w{std::vector<double>(surfaces.size(), w_base), std::vector<CellClass>(surfaces.size(), CellClass::Base)};
  for (std::size_t i = 0; i < surfaces.size() && i < scanned.size(); ++i)
    if (scanned[i]) {
      w.weight[i] = w_scanned;
      w.cls[i] = CellClass::Scanned;
    }
  for (std::size_t c : occluded) {
    const std::int32_t s = surfaces.slot_of(c);
    if (s < 0) continue;
    w.weight[static_cast<std::size_t>(s)] = w_occluded;
    w.cls[static_cast<std::size_t>(s)] = CellClass::Occluded;
  }
  return w;
}

/// Uniform yaw candidates over [-pi, pi).
inline std::vector<double> candidate_angles(double step) {
  if (!(step > 0.0)) throw DomainError("candidate_angles: step must be > 0");
  const int n = std::max(1, static_cast<int>(std::lround(kTwoPi / step)));
  std::vector<double> phi(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) phi[static_cast<std::size_t>(i)] = -kPi + i * (kTwoPi / n);
  return phi;
}

/// Weighted sum over surface cells inside the yaw-phi frustum and visible in `map`.
inline double raycast_score(double phi, const Vec3& p, const CameraModel& camera, const WeightGrid& w,
                            const VoxelGrid& map, const SurfaceSet& surfaces) {
  if (!map.contains(p)) throw DomainError("raycast_score: position outside the map");
  double score = 0.0;
  for (std::size_t i = 0; i < surfaces.size(); ++i) {
    if (w.weight[i] == 0.0) continue;
    const std::size_t c = surfaces.cell(i);
    if (!camera.in_frustum(p, phi, map.center(c))) continue;
    if (cell_visible(map, p, map.unflatten(c))) score += w.weight[i];
  }
  return score;
}

struct ViewChoice {
  double phi = 0.0;
  double score = 0.0;
};

/// Argmax of raycast_score over the candidates. Ties go to the angle closest to `current`,
/// then to the smaller angle. Visibility is computed once per cell and reused for every
/// candidate; the frustum test is the only per-angle work.
inline ViewChoice best_view_angle(const Vec3& p, const std::vector<double>& candidates, const CameraModel& camera,
                                  const WeightGrid& w, const VoxelGrid& map, const SurfaceSet& surfaces,
                                  double current) {
  if (candidates.empty()) throw DomainError("best_view_angle: no candidate angles");
  if (!map.contains(p)) throw DomainError("best_view_angle: position outside the map");
  struct Seen {
    Vec3 center;
    double weight;
  };
  std::vector<Seen> seen;
  for (std::size_t i = 0; i < surfaces.size(); ++i) {
    if (w.weight[i] == 0.0) continue;
    const std::size_t c = surfaces.cell(i);
    const Vec3 q = map.center(c);
    if ((q - p).norm() > camera.range) continue;
    if (cell_visible(map, p, map.unflatten(c))) seen.push_back({q, w.weight[i]});
  }
  ViewChoice best{candidates.front(), -1.0};
  for (double phi : candidates) {
    double s = 0.0;
    for (const auto& c : seen)
      if (camera.in_frustum(p, phi, c.center)) s += c.weight;
    const double tol = 1e-9 * std::max(1.0, std::abs(best.score));
    if (s > best.score + tol) {
      best = {phi, s};
      continue;
    }
    if (s < best.score - tol) continue;
    const double d_new = std::abs(wrap_angle(phi - current)), d_old = std::abs(wrap_angle(best.phi - current));
    if (d_new < d_old - 1e-12 || (std::abs(d_new - d_old) <= 1e-12 && phi < best.phi)) best = {phi, s};
  }
  return best;
}

struct AdaptationEvent {
  double t = 0.0;
  int blocked_viewpoint = -1;
  int stop_viewpoint = -1;  // viewpoint whose position the new yaw is used from
  std::size_t occluded_cells = 0;
  double phi = 0.0;
  double score = 0.0;
};

inline std::string to_log_line(const AdaptationEvent& e) {
  std::ostringstream os;
  os.precision(6);
  os << std::fixed << "t=" << e.t << " blocked=" << e.blocked_viewpoint << " stop=" << e.stop_viewpoint
     << " occluded_cells=" << e.occluded_cells << " phi_deg=" << rad2deg(e.phi) << " score=" << e.score;
  return os.str();
}

}  // namespace coverplan
