#pragma once

#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "coverplan/io/svg.hpp"
#include "coverplan/route/clusters.hpp"

namespace coverplan {

struct RouteParams {
  int tau_max = 3;
  MergeMode merge_mode = MergeMode::Nearest;
};

struct StageLengths {
  double nearest_neighbor = 0.0;  // all include the leg from start
  double tsp = 0.0;
  double merged = 0.0;
  double reordered = 0.0;
};

struct GlobalPlan {
  std::vector<int> order;  // V_optimized, viewpoint ids
  Tour tour;
  std::vector<Cluster> clusters;
  std::vector<Cluster> merged;
  StageLengths lengths;
};

/// TSP, remap, outlier merge and intra-cluster reorder in sequence.
inline GlobalPlan plan_route(const std::vector<Viewpoint>& viewpoints, const Vec3& start,
                             const RouteParams& params, const TspBackend& backend = {}) {
  GlobalPlan plan;
  if (viewpoints.empty()) return plan;
  const ViewpointIndex vi(viewpoints);
  plan.tour = solve_tsp(viewpoints, start, backend);
  const double start_leg = (vi.position(plan.tour.order.front()) - start).norm();
  plan.lengths.nearest_neighbor = plan.tour.initial_length + start_leg;
  plan.lengths.tsp = plan.tour.length + start_leg;
  plan.clusters = remap_clusters(plan.tour.order, viewpoints);
  plan.merged = merge_outliers(plan.clusters, viewpoints, params.tau_max, params.merge_mode);
  plan.lengths.merged = sequence_length(vi, start, flatten(plan.merged));
  plan.order = local_reorder(plan.merged, viewpoints, start);
  plan.lengths.reordered = sequence_length(vi, start, plan.order);
  return plan;
}

inline nlohmann::json plan_to_json(const GlobalPlan& plan, const std::vector<Viewpoint>& viewpoints) {
  const ViewpointIndex vi(viewpoints);
  nlohmann::json seq = nlohmann::json::array();
  for (int id : plan.order) seq.push_back(viewpoint_to_json(vi[id]));
  auto clusters = [](const std::vector<Cluster>& cs) {
    nlohmann::json out = nlohmann::json::array();
    for (const auto& c : cs) out.push_back({{"segment", c.segment}, {"members", c.members}});
    return out;
  };
  return {{"viewpoints", seq},
          {"stages",
           {{"nearest_neighbor_length_m", plan.lengths.nearest_neighbor},
            {"tsp_length_m", plan.lengths.tsp},
            {"tsp_improving_moves", plan.tour.improving_moves},
            {"clusters", plan.clusters.size()},
            {"merged_clusters", plan.merged.size()},
            {"merged_length_m", plan.lengths.merged},
            {"reordered_length_m", plan.lengths.reordered}}},
          {"clusters", clusters(plan.merged)}};
}

/// Top-down drawing of the reference map, viewpoints and the global visiting order.
inline std::string plan_to_svg(const VoxelGrid& grid, const SurfaceSet& surfaces,
                               const std::vector<Viewpoint>& viewpoints, const std::vector<int>& order,
                               const Vec3& start) {
  const ViewpointIndex vi(viewpoints);
  SvgMap svg(grid);
  svg.occupancy(grid, &surfaces);
  std::vector<Vec3> path{start};
  for (int id : order) path.push_back(vi.position(id));
  svg.polyline(path, "#d9534f", 2.0);
  for (int id : order) {
    const Viewpoint& v = vi[id];
    svg.circle(v.position, 0.08, "#222222");
    svg.heading(v.position, v.yaw, 0.35, "#222222");
  }
  svg.circle(start, 0.15, "#2ca02c");
  return svg.str();
}

}  // namespace coverplan
