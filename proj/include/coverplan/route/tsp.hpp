#pragma once

#include <algorithm>
#include <array>
#include <functional>
#include <random>
#include <limits>
#include <vector>

#include "coverplan/viewpoints/viewpoint.hpp"

namespace coverplan {

struct Tour {
  std::vector<int> order;  // viewpoint ids
  double length = 0.0;     // sum of consecutive distances, start leg excluded
  bool open = true;
  double initial_length = 0.0;  // nearest-neighbour construction
  int improving_moves = 0;
};

/// Replacement solver: given positions and the fixed first index, return a visiting order
/// of all indices beginning with `first`.
using TspBackend = std::function<std::vector<int>(const std::vector<Vec3>& points, int first)>;

inline double path_length(const std::vector<Vec3>& pts, const std::vector<int>& order) {
  double len = 0.0;
  for (std::size_t i = 1; i < order.size(); ++i) len += (pts[order[i]] - pts[order[i - 1]]).norm();
  return len;
}

inline std::vector<int> nearest_neighbor_path(const std::vector<Vec3>& pts, int first) {
  std::vector<int> order{first};
  std::vector<char> used(pts.size(), 0);
  used[first] = 1;
  while (order.size() < pts.size()) {
    const Vec3& cur = pts[order.back()];
    int best = -1;
    double best_d = std::numeric_limits<double>::infinity();
    for (std::size_t j = 0; j < pts.size(); ++j) {
      if (used[j]) continue;
      const double d = (pts[j] - cur).norm();
      if (d < best_d) {
        best_d = d;
        best = static_cast<int>(j);
      }
    }
    used[best] = 1;
    order.push_back(best);
  }
  return order;
}

namespace detail {

constexpr double kMoveEps = 1e-10;

// Applies the first improving 2-opt move (segment reversal) found; the first node stays.
inline bool two_opt_move(const std::vector<Vec3>& pts, std::vector<int>& o) {
  const std::size_t n = o.size();
  auto d = [&](std::size_t a, std::size_t b) { return (pts[o[a]] - pts[o[b]]).norm(); };
  for (std::size_t i = 1; i + 1 < n; ++i)
    for (std::size_t j = i + 1; j < n; ++j) {
      double delta = d(i - 1, j) - d(i - 1, i);
      if (j + 1 < n) delta += d(i, j + 1) - d(j, j + 1);
      if (delta < -kMoveEps) {
        std::reverse(o.begin() + static_cast<long>(i), o.begin() + static_cast<long>(j) + 1);
        return true;
      }
    }
  return false;
}

// Applies the first improving Or-opt move: a run of 1-3 nodes relocated elsewhere,
// possibly reversed. The first node stays.
inline bool or_opt_move(const std::vector<Vec3>& pts, std::vector<int>& o) {
  const std::size_t n = o.size();
  auto P = [&](std::size_t k) -> const Vec3& { return pts[o[k]]; };
  for (std::size_t len = 1; len <= 3; ++len)
    for (std::size_t i = 1; i + len <= n; ++i) {
      const std::size_t j = i + len - 1;  // run is o[i..j]
      const bool has_next = j + 1 < n;
      const double removed = (P(i) - P(i - 1)).norm() + (has_next ? (P(j + 1) - P(j)).norm() : 0.0) -
                             (has_next ? (P(j + 1) - P(i - 1)).norm() : 0.0);
      // insert between k and k+1 (k+1 == n means append), k outside [i-1, j]
      for (std::size_t k = 0; k < n; ++k) {
        if (k + 1 >= i && k <= j) continue;
        const bool at_end = k + 1 == n;
        for (int rev = 0; rev < 2; ++rev) {
          const Vec3& head = rev ? P(j) : P(i);
          const Vec3& tail = rev ? P(i) : P(j);
          double added = (head - P(k)).norm();
          if (!at_end) added += (P(k + 1) - tail).norm() - (P(k + 1) - P(k)).norm();
          if (added - removed < -kMoveEps) {
            std::vector<int> run(o.begin() + static_cast<long>(i), o.begin() + static_cast<long>(j) + 1);
            if (rev) std::reverse(run.begin(), run.end());
            std::vector<int> next;
            next.reserve(n);
            for (std::size_t m = 0; m < n; ++m) {
              if (m >= i && m <= j) continue;
              next.push_back(o[m]);
              if (m == k) next.insert(next.end(), run.begin(), run.end());
            }
            o = std::move(next);
            return true;
          }
        }
      }
    }
  return false;
}

}  // namespace detail

/// Runs 2-opt and Or-opt (first improvement, deterministic scan order) until neither
/// finds an improving move. Returns the number of moves applied.
inline int improve_open_path(const std::vector<Vec3>& pts, std::vector<int>& order) {
  int moves = 0;
  while (detail::two_opt_move(pts, order) || detail::or_opt_move(pts, order)) ++moves;
  return moves;
}

/// Escapes 2-opt/Or-opt local optima with `kicks` perturbations, each followed by local
/// search: a double bridge, or with even odds a random reordering of the same three segments,
/// with each moved segment reversed at random. Keeps a result only when it is strictly shorter. Fixed RNG seed, so the
/// output depends only on the input. Returns the number of accepted kicks.
inline int perturb_and_improve(const std::vector<Vec3>& pts, std::vector<int>& order, int kicks = -1) {
  const int n = static_cast<int>(order.size());
  if (n < 5) return 0;
  if (kicks < 0) kicks = std::clamp(4 * n, 40, 100);
  std::mt19937_64 rng(0x5eed);
  double best = path_length(pts, order);
  int accepted = 0;
  for (int k = 0; k < kicks; ++k) {
    // three cuts 1 <= a < b < c < n; the segments [a,b) [b,c) [c,n) are rearranged
    std::uniform_int_distribution<int> cut(1, n - 1);
    int c[3];
    do {
      for (int& x : c) x = cut(rng);
      std::sort(c, c + 3);
    } while (c[0] == c[1] || c[1] == c[2]);
    std::vector<int> trial(order.begin(), order.begin() + c[0]);
    std::array<std::pair<int, int>, 3> seg{{{c[2], n}, {c[1], c[2]}, {c[0], c[1]}}};
    if (rng() & 1) std::shuffle(seg.begin(), seg.end(), rng);
    for (auto [lo, hi] : seg) {
      const auto from = trial.size();
      trial.insert(trial.end(), order.begin() + lo, order.begin() + hi);
      if (rng() & 1) std::reverse(trial.begin() + static_cast<long>(from), trial.end());
    }
    improve_open_path(pts, trial);
    const double len = path_length(pts, trial);
    if (len < best - detail::kMoveEps) {
      best = len;
      order = std::move(trial);
      ++accepted;
    }
  }
  return accepted;
}

/// Open tour over viewpoint positions starting at the viewpoint nearest `start`.
inline Tour solve_tsp(const std::vector<Viewpoint>& viewpoints, const Vec3& start,
                      const TspBackend& backend = {}) {
  if (viewpoints.empty()) throw DomainError("solve_tsp: no viewpoints");
  std::vector<Vec3> pts;
  pts.reserve(viewpoints.size());
  for (const auto& v : viewpoints) pts.push_back(v.position);
  int first = 0;
  for (std::size_t i = 1; i < pts.size(); ++i)
    if ((pts[i] - start).norm() < (pts[first] - start).norm()) first = static_cast<int>(i);

  Tour tour;
  std::vector<int> order;
  if (backend) {
    order = backend(pts, first);
    std::vector<int> check = order;
    std::sort(check.begin(), check.end());
    for (std::size_t i = 0; i < check.size(); ++i)
      if (check.size() != pts.size() || check[i] != static_cast<int>(i))
        throw DomainError("solve_tsp: backend returned a non-permutation");
    tour.initial_length = path_length(pts, order);
  } else {
    order = nearest_neighbor_path(pts, first);
    tour.initial_length = path_length(pts, order);
    tour.improving_moves = improve_open_path(pts, order);
    tour.improving_moves += perturb_and_improve(pts, order);
  }
  tour.length = path_length(pts, order);
  for (int i : order) tour.order.push_back(viewpoints[static_cast<std::size_t>(i)].id);
  return tour;
}

}  // namespace coverplan
