#pragma once

#include <cstdio>
#include <filesystem>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "coverplan/io/atomic_file.hpp"
#include "coverplan/io/ply.hpp"
#include "coverplan/io/svg.hpp"
#include "coverplan/sim/mission.hpp"

namespace coverplan {

inline nlohmann::json report_to_json(const MissionResult& r) {
  const CoverageReport& rep = r.report;
  nlohmann::json j;
  j["coverage_rate"] = rep.coverage_rate;
  j["inspectable_cells"] = rep.inspectable_cells;
  j["scanned_cells"] = rep.scanned_cells;
  j["path_length_m"] = rep.path_length;
  j["mission_time_s"] = rep.mission_time;
  j["min_clearance_m"] = rep.min_clearance;
  j["collisions"] = rep.collisions;
  j["viewpoints"] = {{"planned", rep.viewpoints_planned}, {"visited", rep.visited},  {"blocked", rep.blocked},
                     {"adapted", rep.adapted},            {"abandoned", rep.abandoned}};
  nlohmann::json seg = nlohmann::json::array();
  for (const auto& [id, f] : rep.segment_coverage) seg.push_back({{"segment", id}, {"coverage", f}});
  j["segment_coverage"] = seg;
  j["plan_order"] = r.global.plan.order;
  j["arrivals"] = r.arrivals;
  j["abandoned"] = r.abandoned;
  nlohmann::json ad = nlohmann::json::array();
  for (const auto& e : r.adaptations)
    ad.push_back({{"t_s", e.t},
                  {"blocked_viewpoint", e.blocked_viewpoint},
                  {"stop_viewpoint", e.stop_viewpoint},
                  {"occluded_cells", e.occluded_cells},
                  {"phi_rad", e.phi},
                  {"score", e.score}});
  j["adaptations"] = ad;
  j["seed"] = rep.seed;
  j["view_adapt"] = rep.view_adapt;
  j["dynamic_obstacles"] = rep.dynamic_obstacles;
  return j;
}

inline std::string events_log(const MissionResult& r) {
  std::string out;
  char buf[96];
  for (const auto& e : r.events) {
    std::snprintf(buf, sizeof buf, "t=%.1f %s", e.t, e.kind.c_str());
    out += buf;
    if (e.viewpoint >= 0) out += " vp=" + std::to_string(e.viewpoint);
    if (!e.detail.empty()) out += " " + e.detail;
    out += '\n';
  }
  return out;
}

/// Surface cells, green when scanned and red otherwise.
inline std::string coverage_ply(const MissionResult& r) {
  const SurfaceSet& s = r.global.surfaces;
  std::vector<Vec3> pts;
  std::vector<std::array<std::uint8_t, 3>> colors;
  for (std::size_t i = 0; i < s.size(); ++i) {
    pts.push_back(r.online.center(s.cell(i)));
    colors.push_back(r.scan.scanned[i] ? std::array<std::uint8_t, 3>{40, 170, 60}
                                       : std::array<std::uint8_t, 3>{210, 40, 40});
  }
  return ply_colored(pts, colors);
}

inline const char* status_color(ViewpointStatus s) {
  switch (s) {
    case ViewpointStatus::Visited: return "#2ca02c";
    case ViewpointStatus::Blocked: return "#d62728";
    case ViewpointStatus::Adapted: return "#ff7f0e";
    case ViewpointStatus::Pending: break;
  }
  return "#7f7f7f";
}

/// Top-down view: online map, planned route (dashed), flown path, viewpoints by status.
inline std::string mission_svg(const MissionResult& r, const std::vector<Obstacle>& dynamic = {}) {
  SvgMap svg(r.online);
  svg.occupancy(r.online, &r.global.surfaces);
  std::vector<Vec3> planned{r.path.front()};
  for (int id : r.global.plan.order) planned.push_back(r.viewpoints[id].position);
  svg.polyline(planned, "#888888", 1.0, "4 3");
  for (const auto& o : dynamic) {
    auto loop = o.waypoints;
    if (!loop.empty()) loop.push_back(loop.front());
    svg.polyline(loop, "#9467bd", 1.0, "2 2");
  }
  svg.polyline(r.path, "#1f77b4", 2.0);
  for (const auto& v : r.viewpoints) {
    svg.circle(v.position, 0.1, status_color(v.status));
    svg.heading(v.position, v.yaw, 0.35, "#222222");
  }
  for (const auto& e : r.adaptations) {
    const Vec3 at = e.stop_viewpoint >= 0 ? r.viewpoints[e.stop_viewpoint].position : r.path.back();
    svg.heading(at, e.phi, 0.6, "#ff7f0e");
  }
  svg.circle(r.path.front(), 0.15, "#2ca02c", 0.6);
  return svg.str();
}

struct OutputToggles {
  bool csv = true;
  bool ply = true;
  bool svg = true;
};

/// Writes report.json and events.log, plus telemetry.csv, coverage.ply and mission.svg when
/// enabled. Every file is written atomically. Returns the paths written.
inline std::vector<std::filesystem::path> write_mission_outputs(const std::filesystem::path& dir,
                                                                const MissionResult& r,
                                                                const std::vector<Obstacle>& dynamic = {},
                                                                OutputToggles t = {}) {
  std::filesystem::create_directories(dir);
  std::vector<std::filesystem::path> out;
  auto put = [&](const char* name, const std::string& content) {
    write_file_atomic(dir / name, content);
    out.push_back(dir / name);
  };
  put("report.json", report_to_json(r).dump(2) + "\n");
  put("events.log", events_log(r));
  if (t.csv) put("telemetry.csv", telemetry_csv(r.telemetry));
  if (t.ply) put("coverage.ply", coverage_ply(r));
  if (t.svg) put("mission.svg", mission_svg(r, dynamic));
  return out;
}

}  // namespace coverplan
