#pragma once

#include <algorithm>
#include <cstdint>
#include <limits>
#include <unordered_map>
#include <vector>

#include "coverplan/route/tsp.hpp"

namespace coverplan {

struct Cluster {
  int id = 0;
  int segment = 0;
  std::vector<int> members;  // viewpoint ids in visiting order

  int entry() const { return members.front(); }
  int exit() const { return members.back(); }
  std::size_t size() const { return members.size(); }
};

enum class MergeMode {
  Nearest,       // nearest same-segment cluster by endpoint distance, adjacency breaks ties
  AdjacentOnly,  // nearest same-segment cluster in sequence order
};

/// Viewpoint lookup by id.
class ViewpointIndex {
 public:
  explicit ViewpointIndex(const std::vector<Viewpoint>& vs) : vs_(vs) {
    for (std::size_t i = 0; i < vs.size(); ++i) by_id_[vs[i].id] = i;
  }
  const Viewpoint& operator[](int id) const { return vs_[by_id_.at(id)]; }
  const Vec3& position(int id) const { return (*this)[id].position; }

 private:
  const std::vector<Viewpoint>& vs_;
  std::unordered_map<int, std::size_t> by_id_;
};

inline std::vector<int> flatten(const std::vector<Cluster>& clusters) {
  std::vector<int> out;
  for (const auto& c : clusters) out.insert(out.end(), c.members.begin(), c.members.end());
  return out;
}

/// Length of visiting `order` from `start` (start leg included).
inline double sequence_length(const ViewpointIndex& vi, const Vec3& start, const std::vector<int>& order) {
  double len = 0.0;
  Vec3 prev = start;
  for (int id : order) {
    len += (vi.position(id) - prev).norm();
    prev = vi.position(id);
  }
  return len;
}

/// Maximal runs of consecutive same-segment viewpoints.
inline std::vector<Cluster> remap_clusters(const std::vector<int>& order,
                                           const std::vector<Viewpoint>& viewpoints) {
  const ViewpointIndex vi(viewpoints);
  std::vector<Cluster> out;
  for (int id : order) {
    const int seg = vi[id].segment;
    if (out.empty() || out.back().segment != seg)
      out.push_back({static_cast<int>(out.size()), seg, {}});
    out.back().members.push_back(id);
  }
  return out;
}

/// For tau = 1..tau_max, clusters smaller than tau are absorbed by a same-segment cluster
/// (see MergeMode). Absorbed members attach at the receiver's nearer end, nearest member
/// first, so every merged cluster stays one contiguous run. Outliers without a
/// same-segment partner survive.
inline std::vector<Cluster> merge_outliers(std::vector<Cluster> clusters,
                                           const std::vector<Viewpoint>& viewpoints, int tau_max,
                                           MergeMode mode = MergeMode::Nearest) {
  if (tau_max < 1) throw DomainError("merge_outliers: tau_max must be >= 1");
  const ViewpointIndex vi(viewpoints);
  auto dist = [&](int a, int b) { return (vi.position(a) - vi.position(b)).norm(); };
  auto end_distance = [&](const Cluster& a, const Cluster& b) {
    return std::min({dist(a.entry(), b.entry()), dist(a.entry(), b.exit()), dist(a.exit(), b.entry()),
                     dist(a.exit(), b.exit())});
  };

  for (int tau = 1; tau <= tau_max; ++tau) {
    for (std::size_t i = 0; i < clusters.size();) {
      if (clusters[i].size() >= static_cast<std::size_t>(tau)) {
        ++i;
        continue;
      }
      int best = -1;
      double best_d = std::numeric_limits<double>::infinity();
      std::size_t best_gap = std::numeric_limits<std::size_t>::max();
      for (std::size_t j = 0; j < clusters.size(); ++j) {
        if (j == i || clusters[j].segment != clusters[i].segment) continue;
        const double d = end_distance(clusters[i], clusters[j]);
        const std::size_t gap = j > i ? j - i : i - j;
        bool better;
        if (mode == MergeMode::Nearest)
          better = d < best_d - 1e-9 || (d <= best_d + 1e-9 && gap < best_gap);
        else
          better = gap < best_gap || (gap == best_gap && d < best_d - 1e-9);
        if (better) {
          best = static_cast<int>(j);
          best_d = d;
          best_gap = gap;
        }
      }
      if (best < 0) {
        ++i;
        continue;
      }
      Cluster& recv = clusters[static_cast<std::size_t>(best)];
      std::vector<int> run = clusters[i].members;
      const double to_front = std::min(dist(run.front(), recv.entry()), dist(run.back(), recv.entry()));
      const double to_back = std::min(dist(run.front(), recv.exit()), dist(run.back(), recv.exit()));
      if (to_back <= to_front) {
        if (dist(run.back(), recv.exit()) < dist(run.front(), recv.exit())) std::reverse(run.begin(), run.end());
        recv.members.insert(recv.members.end(), run.begin(), run.end());
      } else {
        if (dist(run.front(), recv.entry()) < dist(run.back(), recv.entry())) std::reverse(run.begin(), run.end());
        recv.members.insert(recv.members.begin(), run.begin(), run.end());
      }
      clusters.erase(clusters.begin() + static_cast<long>(i));
      i = 0;  // sizes changed; rescan from the front
    }
  }
  for (std::size_t i = 0; i < clusters.size(); ++i) clusters[i].id = static_cast<int>(i);
  return clusters;
}

namespace detail {

struct ClusterOption {
  std::vector<int> order;
  double internal = 0.0;
};

// Best internal path for every (entry, exit) pair by Held-Karp.
inline std::vector<ClusterOption> held_karp_options(const ViewpointIndex& vi, const std::vector<int>& m) {
  const int n = static_cast<int>(m.size());
  if (n == 1) return {{m, 0.0}};
  const double inf = std::numeric_limits<double>::infinity();
  std::vector<std::vector<double>> d(n, std::vector<double>(n));
  for (int a = 0; a < n; ++a)
    for (int b = 0; b < n; ++b) d[a][b] = (vi.position(m[a]) - vi.position(m[b])).norm();
  const int full = (1 << n) - 1;
  std::vector<ClusterOption> out;
  std::vector<double> cost(static_cast<std::size_t>(1 << n) * n);
  std::vector<std::int8_t> parent(cost.size());
  auto at = [n](int mask, int last) { return static_cast<std::size_t>(mask) * n + last; };
  for (int s = 0; s < n; ++s) {
    std::fill(cost.begin(), cost.end(), inf);
    cost[at(1 << s, s)] = 0.0;
    for (int mask = 1; mask <= full; ++mask) {
      if (!(mask >> s & 1)) continue;
      for (int last = 0; last < n; ++last) {
        const double c = cost[at(mask, last)];
        if (c == inf) continue;
        for (int nx = 0; nx < n; ++nx) {
          if (mask >> nx & 1) continue;
          const double nc = c + d[last][nx];
          const std::size_t k = at(mask | 1 << nx, nx);
          if (nc < cost[k]) {
            cost[k] = nc;
            parent[k] = static_cast<std::int8_t>(last);
          }
        }
      }
    }
    for (int e = 0; e < n; ++e) {
      if (e == s) continue;
      ClusterOption opt;
      opt.internal = cost[at(full, e)];
      int mask = full, cur = e;
      while (cur != s) {
        opt.order.push_back(m[cur]);
        const int prev = parent[at(mask, cur)];
        mask &= ~(1 << cur);
        cur = prev;
      }
      opt.order.push_back(m[s]);
      std::reverse(opt.order.begin(), opt.order.end());
      out.push_back(std::move(opt));
    }
  }
  return out;
}

inline double internal_length(const ViewpointIndex& vi, const std::vector<int>& order) {
  double len = 0.0;
  for (std::size_t i = 1; i < order.size(); ++i) len += (vi.position(order[i]) - vi.position(order[i - 1])).norm();
  return len;
}

inline std::vector<ClusterOption> large_cluster_options(const ViewpointIndex& vi, const std::vector<int>& m) {
  std::vector<Vec3> pts;
  for (int id : m) pts.push_back(vi.position(id));
  std::vector<int> local(m.size());
  for (std::size_t i = 0; i < m.size(); ++i) local[i] = static_cast<int>(i);
  improve_open_path(pts, local);
  std::vector<int> improved;
  for (int i : local) improved.push_back(m[static_cast<std::size_t>(i)]);
  std::vector<ClusterOption> out;
  for (const auto& base : {m, improved})
    for (int rev = 0; rev < 2; ++rev) {
      std::vector<int> o = base;
      if (rev) std::reverse(o.begin(), o.end());
      out.push_back({o, internal_length(vi, o)});
    }
  return out;
}

}  // namespace detail

inline constexpr std::size_t kExhaustiveClusterSize = 8;

/// Reorders members inside each cluster, keeping the cluster sequence. Clusters of up to
/// eight members consider the optimal internal path for every (entry, exit) pair; larger
/// ones their current order, its 2-opt/Or-opt improvement and both reversals. A dynamic
/// program over the cluster sequence then picks the combination minimising the total
/// length from `start`.
inline std::vector<int> local_reorder(const std::vector<Cluster>& clusters,
                                      const std::vector<Viewpoint>& viewpoints, const Vec3& start) {
  const ViewpointIndex vi(viewpoints);
  if (clusters.empty()) return {};
  std::vector<std::vector<detail::ClusterOption>> options;
  for (const auto& c : clusters)
    options.push_back(c.size() <= kExhaustiveClusterSize ? detail::held_karp_options(vi, c.members)
                                                         : detail::large_cluster_options(vi, c.members));

  std::vector<std::vector<double>> cost(clusters.size());
  std::vector<std::vector<int>> from(clusters.size());
  for (std::size_t k = 0; k < clusters.size(); ++k) {
    cost[k].assign(options[k].size(), std::numeric_limits<double>::infinity());
    from[k].assign(options[k].size(), -1);
    for (std::size_t o = 0; o < options[k].size(); ++o) {
      const Vec3& entry = vi.position(options[k][o].order.front());
      if (k == 0) {
        cost[k][o] = (entry - start).norm() + options[k][o].internal;
        continue;
      }
      for (std::size_t p = 0; p < options[k - 1].size(); ++p) {
        const double c = cost[k - 1][p] + (entry - vi.position(options[k - 1][p].order.back())).norm() +
                         options[k][o].internal;
        if (c < cost[k][o] - 1e-12) {
          cost[k][o] = c;
          from[k][o] = static_cast<int>(p);
        }
      }
    }
  }
  std::size_t k = clusters.size() - 1;
  int o = static_cast<int>(std::min_element(cost[k].begin(), cost[k].end()) - cost[k].begin());
  std::vector<std::vector<int>> chosen(clusters.size());
  for (;; --k) {
    chosen[k] = options[k][static_cast<std::size_t>(o)].order;
    if (k == 0) break;
    o = from[k][static_cast<std::size_t>(o)];
  }
  std::vector<int> out;
  for (const auto& c : chosen) out.insert(out.end(), c.begin(), c.end());
  return out;
}

}  // namespace coverplan
