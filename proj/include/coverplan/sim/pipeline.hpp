#pragma once

#include <vector>

#include "coverplan/route/plan.hpp"
#include "coverplan/segment/normals.hpp"
#include "coverplan/segment/segment.hpp"
#include "coverplan/traj_mpc/mpc.hpp"
#include "coverplan/traj_static/optimize.hpp"
#include "coverplan/viewpoints/viewpoint.hpp"
#include "coverplan/world/scenario.hpp"

namespace coverplan {

/// Offline result on the reference map: surfaces with normals, segments, viewpoints, route.
struct GlobalResult {
  SurfaceSet surfaces;
  std::vector<Segment> segments;
  ViewpointSet viewpoints;
  GlobalPlan plan;
};

inline RegionGrowParams region_grow_params(const PlannerParams& p) {
  return {deg2rad(p.angle_thresh_deg), p.curvature_thresh, p.min_segment_size};
}

inline ViewpointParams viewpoint_params(const PlannerParams& p) {
  return {p.standoff_m, p.overlap, p.robot_radius_m + p.static_margin_m};
}

inline StaticPlannerParams static_planner_params(const PlannerParams& p) {
  StaticPlannerParams s;
  s.dt = p.bspline_dt_s;
  s.v_ref = p.v_ref_mps;
  s.inflation = p.robot_radius_m + p.static_margin_m;
  s.fallback_inflation = p.robot_radius_m;
  s.max_iters = p.opt_max_iters;
  s.weights = {p.alpha_control, p.alpha_smooth, p.alpha_static, p.d_safe_m};
  return s;
}

/// With `bounds`, the robot is also kept inside the grid's extent.
inline MpcConfig mpc_config(const PlannerParams& p, const VoxelGrid* bounds = nullptr) {
  MpcConfig c;
  c.horizon = p.mpc_horizon;
  c.dt = p.mpc_dt_s;
  c.lambda_u = p.lambda_u;
  c.u_min = -p.u_max_mps2;
  c.u_max = p.u_max_mps2;
  c.robot_radius = p.robot_radius_m;
  c.static_margin = p.static_margin_m;
  c.dynamic_margin = p.dynamic_margin_m;
  c.uncertainty_growth = p.uncertainty_growth_m;
  c.max_scp_iters = p.scp_max_iters;
  c.w_p = p.position_weight;
  c.w_v = p.velocity_weight;
  if (bounds) {
    c.workspace_min = bounds->min_corner();
    c.workspace_max = bounds->max_corner();
  }
  return c;
}

/// Segmentation, viewpoint generation and sequencing on the reference map.
/// Throws MissionError when there is nothing to inspect.
inline GlobalResult plan_global(const Scenario& sc) {
  if (sc.surfaces.empty()) throw MissionError("no inspectable surface");
  GlobalResult g;
  g.surfaces = estimate_normals(sc.reference, sc.surfaces, sc.params.normal_radius_m);
  g.segments = region_grow(sc.reference, g.surfaces, region_grow_params(sc.params));
  if (g.segments.empty()) throw MissionError("no inspectable surface");
  g.viewpoints = plan_viewpoints(sc.reference, g.surfaces, g.segments, sc.camera, viewpoint_params(sc.params));
  if (g.viewpoints.viewpoints.empty()) throw MissionError("no placeable viewpoints");
  RouteParams rp;
  rp.tau_max = sc.params.tau_max;
  rp.merge_mode = sc.params.merge_adjacent_only ? MergeMode::AdjacentOnly : MergeMode::Nearest;
  g.plan = plan_route(g.viewpoints.viewpoints, sc.robot_start.position, rp);
  return g;
}

}  // namespace coverplan
