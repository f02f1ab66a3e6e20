#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "coverplan/sim/pipeline.hpp"
#include "coverplan/sim/sensor.hpp"
#include "coverplan/traj_mpc/controller.hpp"
#include "coverplan/view_adapt/adapt.hpp"

namespace coverplan {

/// Which surface cells have been scanned and when. Only ever grows.
struct ScanLog {
  std::vector<char> scanned;                           // per surface slot
  std::vector<double> first_time;                      // per slot, -1 until scanned
  std::vector<std::pair<double, std::size_t>> events;  // (time, slot) in scan order

  explicit ScanLog(std::size_t n = 0) : scanned(n, 0), first_time(n, -1.0) {}

  void mark(std::size_t slot, double t) {
    if (scanned[slot]) return;
    scanned[slot] = 1;
    first_time[slot] = t;
    events.emplace_back(t, slot);
  }
  std::size_t count() const { return events.size(); }
  double coverage() const { return scanned.empty() ? 0.0 : static_cast<double>(count()) / scanned.size(); }
};

struct MissionEvent {
  double t = 0.0;
  std::string kind;  // start, arrive, blocked, adapt, replan, abandon, collision, timeout, end
  int viewpoint = -1;
  std::string detail;
};

struct CoverageReport {
  double coverage_rate = 0.0;
  std::size_t inspectable_cells = 0;
  std::size_t scanned_cells = 0;
  double path_length = 0.0;
  double mission_time = 0.0;
  double min_clearance = std::numeric_limits<double>::infinity();
  int viewpoints_planned = 0;
  int visited = 0;
  int blocked = 0;
  int adapted = 0;
  int abandoned = 0;
  int collisions = 0;
  std::vector<std::pair<int, double>> segment_coverage;  // (segment id, scanned fraction)
  std::uint64_t seed = 0;
  bool view_adapt = true;
  bool dynamic_obstacles = true;
};

struct MissionResult {
  CoverageReport report;
  GlobalResult global;
  std::vector<Viewpoint> viewpoints;  // final statuses
  std::vector<int> arrivals;          // viewpoint ids in arrival order
  std::vector<int> abandoned;
  std::vector<MissionEvent> events;
  std::vector<AdaptationEvent> adaptations;
  std::vector<TelemetryRow> telemetry;
  ScanLog scan;
  std::vector<Vec3> path;  // robot position after every tick, starting at the start
  VoxelGrid online;
};

namespace detail {

class Mission {
 public:
  explicit Mission(const Scenario& sc)
      : sc_(sc),
        p_(sc.params),
        mcfg_(mpc_config(sc.params, &sc.reference)),
        controller_(mcfg_),
        truth_(sc.true_world()),
        planning_(sc.reference),
        directions_(lidar_directions({p_.lidar_range_m, p_.lidar_azimuth_rays, p_.lidar_elevation_rays})) {}

  MissionResult run() {
    r_.global = plan_global(sc_);
    vps_ = r_.global.viewpoints.viewpoints;
    gave_up_.assign(vps_.size(), 0);
    surfaces_ = &r_.global.surfaces;
    r_.scan = ScanLog(surfaces_->size());
    r_.online = sc_.reference;
    if (p_.dynamic_obstacles)
      for (const auto& o : sc_.dynamic_obstacles)
        if (o.kind == ObstacleKind::Dynamic) dynamic_.push_back(o);
    df_ = DistanceField(planning_, p_.df_truncation_m);

    x_ = {sc_.robot_start.position, Vec3::Zero()};
    yaw_ = wrap_angle(sc_.robot_start.yaw);
    r_.path.push_back(x_.p);
    snapshot_.update(dynamic_cylinders());
    perceive();
    log("start", -1, std::to_string(vps_.size()) + " viewpoints");

    const auto& order = r_.global.plan.order;
    for (std::size_t i = 0; i < order.size(); ++i) {
      cursor_ = i;
      const int id = order[i];
      if (out_of_time()) {
        abandon(id, "mission time limit");
        continue;
      }
      check_blocked();
      if (!open(id)) continue;
      if (!fly_to(id)) continue;
      arrive(id);
      check_blocked();
      adapt_here(id);
    }
    cursor_ = order.size();
    adapt_here(-1);  // leftovers go to wherever the robot ended
    log("end", -1, "");
    return finish();
  }

 private:
  // ---- bookkeeping ----
  void log(const std::string& kind, int vp, const std::string& detail) { r_.events.push_back({clock_, kind, vp, detail}); }

  // Pending and not given up on.
  bool open(int id) const { return vps_[id].status == ViewpointStatus::Pending && !gave_up_[id]; }

  bool out_of_time() const { return clock_ >= p_.max_mission_time_s - 1e-9; }

  void abandon(int id, const std::string& why) {
    if (open(id)) {
      gave_up_[id] = 1;
      r_.abandoned.push_back(id);
      log("abandon", id, why);
    }
  }

  std::vector<Cylinder> dynamic_cylinders() const {
    std::vector<Cylinder> out;
    for (const auto& o : dynamic_) out.push_back(dynamic_pose(o, clock_).shape);
    return out;
  }

  // ---- perception ----
  void perceive() {
    const VoxelGrid& now = snapshot_.now();
    const auto s = sense(now, x_.p, directions_, p_.lidar_range_m, r_.online);
    // hits on tracked dynamic obstacles stay out of the static planning map
    const auto& dyn = snapshot_.dynamic_cells();
    for (std::size_t c : s.hits) {
      if (planning_.state(c) == CellState::Occupied) continue;
      if (std::find(dyn.begin(), dyn.end(), c) != dyn.end()) continue;
      planning_.set(c, CellState::Occupied);
      planning_dirty_ = true;
    }
    for (std::size_t slot : observe_coverage(x_.p, yaw_, sc_.camera, now, *surfaces_, r_.scan.scanned))
      r_.scan.mark(slot, clock_);
  }

  void refresh_distance_field(bool force) {
    if (!planning_dirty_) return;
    if (!force && clock_ - df_time_ < 0.5) return;
    df_ = DistanceField(planning_, p_.df_truncation_m);
    df_time_ = clock_;
    planning_dirty_ = false;
    ++df_version_;
  }

  double true_clearance() const {
    double d = nearest_occupied_box_distance(truth_, x_.p, 2.0);
    for (const auto& o : dynamic_) d = std::min(d, cylinder_distance(dynamic_pose(o, clock_).shape, x_.p));
    return d - p_.robot_radius_m;
  }

  // ---- one control tick ----
  const MpcSolution& tick(const BSplineTrajectory& traj, double t_traj, double desired_yaw) {
    const ControlInput u = controller_.step(x_, traj, t_traj, df_, dynamic_, clock_);
    x_ = predict_dynamics(x_, u, mcfg_.dt);
    const double max_turn = deg2rad(p_.yaw_rate_dps) * mcfg_.dt;
    const double err = wrap_angle(desired_yaw - yaw_);
    yaw_ = std::abs(err) <= max_turn ? desired_yaw : wrap_angle(yaw_ + std::copysign(max_turn, err));
    clock_ += mcfg_.dt;
    r_.path_length_acc += (x_.p - r_.path.back()).norm();
    r_.path.push_back(x_.p);
    snapshot_.update(dynamic_cylinders());
    perceive();
    refresh_distance_field(false);

    const double c = true_clearance();
    r_.report.min_clearance = std::min(r_.report.min_clearance, c);
    if (c < 0.0) {
      if (!in_collision_) {
        ++r_.report.collisions;
        log("collision", -1, "clearance " + std::to_string(c));
      }
      in_collision_ = true;
    } else {
      in_collision_ = false;
    }
    const MpcSolution& sol = controller_.last();
    TelemetryRow row;
    row.t = clock_;
    row.x = x_;
    row.yaw = yaw_;
    row.u = u.a;
    row.objective = sol.objective;
    row.feasible = sol.feasible;
    row.min_clearance = c;
    r_.telemetry.push_back(row);
    return sol;
  }

  // ---- blocking and adaptation ----
  void check_blocked() {
    // judged on static content only, so a person crossing a view ray does not block it for good
    for (int id : identify_blocked(planning_, sc_.reference, vps_, p_.robot_radius_m, sc_.camera.range)) {
      if (gave_up_[id]) continue;
      vps_[id].status = ViewpointStatus::Blocked;
      log("blocked", id, "");
    }
  }

  // Viewpoints still to be visited after the current one, in order.
  std::vector<int> upcoming() const {
    std::vector<int> out;
    const auto& order = r_.global.plan.order;
    for (std::size_t i = cursor_ + 1; i < order.size(); ++i)
      if (open(order[i])) out.push_back(order[i]);
    return out;
  }

  /// At stop `here` (or the current position when -1), handle every blocked viewpoint whose
  /// nearest remaining stop is this one.
  void adapt_here(int here) {
    if (!p_.view_adapt) return;
    const Vec3 at = here >= 0 ? vps_[here].position : x_.p;
    const auto next = upcoming();
    std::vector<int> mine;
    for (const auto& v : vps_) {
      if (v.status != ViewpointStatus::Blocked) continue;
      if (std::find(adapted_.begin(), adapted_.end(), v.id) != adapted_.end()) continue;
      const double d_here = (v.position - at).norm();
      bool nearest = true;
      for (int n : next)
        if ((vps_[n].position - v.position).norm() < d_here) nearest = false;
      if (nearest) mine.push_back(v.id);
    }
    if (mine.empty()) return;

    // occluded regions: union over every blocked viewpoint not yet handled
    std::vector<std::size_t> occluded;
    for (const auto& v : vps_)
      if (v.status == ViewpointStatus::Blocked) {
        const auto o = occluded_regions(v, *surfaces_, r_.scan.scanned);
        occluded.insert(occluded.end(), o.begin(), o.end());
      }
    std::sort(occluded.begin(), occluded.end());
    occluded.erase(std::unique(occluded.begin(), occluded.end()), occluded.end());

    const WeightGrid w = build_weights(*surfaces_, occluded, r_.scan.scanned, p_.w_base, p_.w_occluded, p_.w_scanned);
    if (!r_.online.contains(x_.p)) return;
    const ViewChoice choice = best_view_angle(x_.p, candidate_angles(deg2rad(p_.candidate_step_deg)), sc_.camera, w,
                                              r_.online, *surfaces_, yaw_);
    for (int b : mine) {
      AdaptationEvent e;
      e.t = clock_;
      e.blocked_viewpoint = b;
      e.stop_viewpoint = here;
      e.occluded_cells = occluded_regions(vps_[b], *surfaces_, r_.scan.scanned).size();
      e.phi = choice.phi;
      e.score = choice.score;
      r_.adaptations.push_back(e);
      log("adapt", b, to_log_line(e));
      vps_[b].status = ViewpointStatus::Adapted;
      adapted_.push_back(b);
    }
    std::vector<std::size_t> watch;
    for (std::size_t c : occluded) watch.push_back(static_cast<std::size_t>(surfaces_->slot_of(c)));
    dwell(x_.p, choice.phi, watch);
  }

  // ---- motion ----
  /// Holds `anchor`, turns to `yaw`, then waits until every slot in `watch` is scanned or the
  /// dwell timeout passes.
  void dwell(const Vec3& anchor, double yaw, const std::vector<std::size_t>& watch) {
    const BSplineTrajectory hold(std::vector<Vec3>(8, anchor), p_.bspline_dt_s);
    const double t_hold = hold.duration();
    // turning is bounded by half a revolution at the rate limit
    const int max_turn_ticks = static_cast<int>(std::ceil(kPi / (deg2rad(p_.yaw_rate_dps) * mcfg_.dt))) + 1;
    for (int k = 0; k < max_turn_ticks && yaw_ != yaw && !out_of_time(); ++k) tick(hold, t_hold, yaw);
    const double start = clock_;
    auto done = [&] {
      return std::all_of(watch.begin(), watch.end(), [&](std::size_t s) { return r_.scan.scanned[s] != 0; });
    };
    while (!done() && clock_ - start < p_.dwell_timeout_s - 1e-9 && !out_of_time()) tick(hold, t_hold, yaw);
  }

  void arrive(int id) {
    r_.arrivals.push_back(id);
    log("arrive", id, "");
    std::vector<std::size_t> watch;
    for (std::size_t c : vps_[id].covered_cells) watch.push_back(static_cast<std::size_t>(surfaces_->slot_of(c)));
    dwell(vps_[id].position, vps_[id].yaw, watch);
    vps_[id].status = ViewpointStatus::Visited;
  }

  bool trajectory_still_clear(const BSplineTrajectory& traj, double from) const {
    for (double t = from; t <= traj.duration(); t += mcfg_.dt)
      if (df_.distance(traj.sample(t).p) < p_.robot_radius_m) return false;
    return true;
  }

  bool fly_to(int id) {
    const Vec3 goal = vps_[id].position;
    int failures = 0, refreshes = 0;
    while (true) {
      if (failures > p_.replan_attempts) {
        abandon(id, "replan attempts exhausted");
        return false;
      }
      if (out_of_time()) {
        abandon(id, "mission time limit");
        return false;
      }
      refresh_distance_field(true);
      // a goal swallowed by newly seen content is blocked, not a planning failure
      check_blocked();
      if (vps_[id].status != ViewpointStatus::Pending) return false;
      std::optional<BSplineTrajectory> traj;
      try {
        traj = plan_static(planning_, df_, x_.p, goal, static_planner_params(p_));
      } catch (const UnreachableError& e) {
        ++failures;
        log("replan", id, std::string("planning failed: ") + e.what());
        // nothing changes between attempts unless time passes; hover for a second
        hover(1.0);
        continue;
      } catch (const OptimizationError& e) {
        ++failures;
        log("replan", id, std::string("planning failed: ") + e.what());
        hover(1.0);
        continue;
      }
      controller_.reset();
      const int planned_version = df_version_;
      double t_traj = 0.0;
      int infeasible = 0, ticks = 0;
      bool replan = false;
      while (!replan) {
        if (out_of_time()) {
          abandon(id, "mission time limit");
          return false;
        }
        if (++ticks % 10 == 0) {
          check_blocked();
          if (vps_[id].status != ViewpointStatus::Pending) return false;
        }
        if (df_version_ != planned_version && !trajectory_still_clear(*traj, t_traj)) {
          log("replan", id, "map changed");
          if (++refreshes > 10) ++failures;
          replan = true;
          break;
        }
        const MpcSolution& sol = tick(*traj, t_traj, vps_[id].yaw);
        if (sol.feasible && !sol.braking) {
          infeasible = 0;
          t_traj += mcfg_.dt;
        } else if (++infeasible > 30) {
          ++failures;
          log("replan", id, "tracking infeasible for 3 s");
          replan = true;
          break;
        }
        if (t_traj >= traj->duration() && (x_.p - goal).norm() < p_.arrive_tol_m && x_.v.norm() < 0.25) return true;
        if (t_traj >= traj->duration() + 10.0) {
          ++failures;
          log("replan", id, "did not arrive");
          replan = true;
        }
      }
    }
  }

  void hover(double seconds) {
    const BSplineTrajectory hold(std::vector<Vec3>(8, x_.p), p_.bspline_dt_s);
    const int n = static_cast<int>(std::lround(seconds / mcfg_.dt));
    for (int k = 0; k < n && !out_of_time(); ++k) tick(hold, hold.duration(), yaw_);
  }

  // ---- report ----
  MissionResult finish() {
    CoverageReport& rep = r_.report;
    rep.coverage_rate = r_.scan.coverage();
    rep.inspectable_cells = surfaces_->size();
    rep.scanned_cells = r_.scan.count();
    rep.path_length = r_.path_length_acc;
    rep.mission_time = clock_;
    if (!std::isfinite(rep.min_clearance)) rep.min_clearance = true_clearance();
    rep.viewpoints_planned = static_cast<int>(vps_.size());
    for (const auto& v : vps_) {
      rep.visited += v.status == ViewpointStatus::Visited;
      rep.blocked += v.status == ViewpointStatus::Blocked;
      rep.adapted += v.status == ViewpointStatus::Adapted;
    }
    rep.abandoned = static_cast<int>(r_.abandoned.size());
    for (const auto& seg : r_.global.segments) {
      std::size_t hit = 0;
      for (std::size_t c : seg.cells) hit += r_.scan.scanned[static_cast<std::size_t>(surfaces_->slot_of(c))] != 0;
      rep.segment_coverage.emplace_back(seg.id, seg.cells.empty() ? 0.0 : static_cast<double>(hit) / seg.cells.size());
    }
    rep.seed = sc_.seed;
    rep.view_adapt = p_.view_adapt;
    rep.dynamic_obstacles = p_.dynamic_obstacles;
    r_.viewpoints = vps_;
    return std::move(r_);
  }

  struct Accum : MissionResult {
    double path_length_acc = 0.0;
  };

  const Scenario& sc_;
  PlannerParams p_;
  MpcConfig mcfg_;
  MpcController controller_;
  VoxelGrid truth_;
  VoxelGrid planning_;  // reference plus static content seen so far
  std::vector<Vec3> directions_;
  WorldSnapshot snapshot_{truth_};
  std::vector<Obstacle> dynamic_;
  DistanceField df_;
  double df_time_ = 0.0;
  int df_version_ = 0;
  bool planning_dirty_ = false;

  Accum r_;
  std::vector<Viewpoint> vps_;
  std::vector<char> gave_up_;
  const SurfaceSet* surfaces_ = nullptr;
  std::vector<int> adapted_;
  std::size_t cursor_ = 0;

  RobotState x_;
  double yaw_ = 0.0;
  double clock_ = 0.0;
  bool in_collision_ = false;
};

}  // namespace detail

/// Plans on the reference map, then flies the mission in the true world. Deterministic.
inline MissionResult run_mission(const Scenario& sc) {
  sc.validate();
  return detail::Mission(sc).run();
}

}  // namespace coverplan
