#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <optional>
#include <functional>
#include <limits>
#include <queue>
#include <vector>

#include "coverplan/world/distance_field.hpp"
#include "coverplan/world/voxel_grid.hpp"

namespace coverplan {

namespace detail {

using Passable = std::function<bool(const Index3&)>;

inline bool segment_passable(const VoxelGrid& grid, const Vec3& a, const Vec3& b, const Passable& ok) {
  const double len = (b - a).norm();
  const int steps = std::max(1, static_cast<int>(std::ceil(len / (0.25 * grid.resolution()))));
  for (int i = 0; i <= steps; ++i) {
    const Index3 c = grid.index_of(a + (b - a) * (static_cast<double>(i) / steps));
    if (!grid.in_bounds(c) || !ok(c)) return false;
  }
  return true;
}

inline std::optional<std::vector<Index3>> astar(const VoxelGrid& grid, const Index3& from, const Index3& to,
                                                const Passable& ok) {
  const double inf = std::numeric_limits<double>::infinity();
  std::vector<double> g(grid.size(), inf);
  std::vector<std::int64_t> parent(grid.size(), -1);
  std::vector<char> closed(grid.size(), 0);
  using Item = std::pair<double, std::size_t>;
  std::priority_queue<Item, std::vector<Item>, std::greater<>> open;
  const std::size_t s = grid.flatten(from), t = grid.flatten(to);
  auto h = [&](const Index3& c) { return (c - to).cast<double>().norm(); };
  g[s] = 0.0;
  open.push({h(from), s});
  while (!open.empty()) {
    const std::size_t cur = open.top().second;
    open.pop();
    if (closed[cur]) continue;
    closed[cur] = 1;
    if (cur == t) break;
    const Index3 c = grid.unflatten(cur);
    for (int dz = -1; dz <= 1; ++dz)
      for (int dy = -1; dy <= 1; ++dy)
        for (int dx = -1; dx <= 1; ++dx) {
          if (!dx && !dy && !dz) continue;
          const Index3 n = c + Index3(dx, dy, dz);
          if (!grid.in_bounds(n)) continue;
          const std::size_t ni = grid.flatten(n);
          if (closed[ni] || (ni != t && !ok(n))) continue;
          const double ng = g[cur] + std::sqrt(static_cast<double>(dx * dx + dy * dy + dz * dz));
          if (ng < g[ni]) {
            g[ni] = ng;
            parent[ni] = static_cast<std::int64_t>(cur);
            open.push({ng + h(n), ni});
          }
        }
  }
  if (!closed[t]) return std::nullopt;
  std::vector<Index3> path;
  for (std::int64_t i = static_cast<std::int64_t>(t); i >= 0; i = parent[static_cast<std::size_t>(i)])
    path.push_back(grid.unflatten(static_cast<std::size_t>(i)));
  std::reverse(path.begin(), path.end());
  return path;
}

}  // namespace detail

/// Shortest 26-connected path over Free cells whose centers keep `inflation` from any
/// Occupied center, then greedily shortcut by line of sight. If the inflated search finds
/// nothing, `fallback_inflation` and then the plain Free-cell search are tried before giving up.
inline std::vector<Vec3> init_guide_path(const VoxelGrid& grid, const DistanceField& df, const Vec3& start,
                                         const Vec3& goal, double inflation, double fallback_inflation = 0.0) {
  const Index3 s = grid.index_of(start), t = grid.index_of(goal);
  if (!grid.in_bounds(s) || grid.state(s) != CellState::Free)
    throw UnreachableError("guide path: start is not in a free cell");
  if (!grid.in_bounds(t) || grid.state(t) != CellState::Free)
    throw UnreachableError("guide path: goal is not in a free cell");

  const detail::Passable free_only = [&](const Index3& c) { return grid.state(c) == CellState::Free; };
  const detail::Passable inflated = [&](const Index3& c) {
    return grid.state(c) == CellState::Free && df.at(c) >= inflation - 1e-9;
  };
  const detail::Passable narrow = [&](const Index3& c) {
    return grid.state(c) == CellState::Free && df.at(c) >= fallback_inflation - 1e-9;
  };
  const detail::Passable* used = &inflated;
  auto cells = detail::astar(grid, s, t, inflated);
  if (!cells && fallback_inflation > 0.0 && fallback_inflation < inflation) {
    used = &narrow;
    cells = detail::astar(grid, s, t, narrow);
  }
  if (!cells) {
    used = &free_only;
    cells = detail::astar(grid, s, t, free_only);
  }
  if (!cells) throw UnreachableError("guide path: no free path to goal");

  std::vector<Vec3> pts{start};
  for (std::size_t i = 1; i + 1 < cells->size(); ++i) pts.push_back(grid.center((*cells)[i]));
  pts.push_back(goal);

  // the endpoints may sit inside the inflation band; they are exempt
  const detail::Passable& ok = *used;
  auto passable = [&](const Index3& c) { return c == s || c == t || ok(c); };
  std::vector<Vec3> out{pts.front()};
  std::size_t i = 0;
  while (i + 1 < pts.size()) {
    std::size_t j = pts.size() - 1;
    while (j > i + 1 && !detail::segment_passable(grid, pts[i], pts[j], passable)) --j;
    out.push_back(pts[j]);
    i = j;
  }
  return out;
}

}  // namespace coverplan
