#include <filesystem>
#include <map>
#include <set>

#include <gtest/gtest.h>

#include "coverplan/segment/normals.hpp"
#include "coverplan/sim/outputs.hpp"
#include "test_util.hpp"

namespace fs = std::filesystem;
using namespace coverplan;
using coverplan::testing::fill_box;

namespace {

constexpr double kRes = 0.2;

// 8 x 6 x 2.4 m room: a wall along the back (y cells 0..1) is the inspection target.
Scenario wall_room() {
  Scenario s;
  s.reference = VoxelGrid(Vec3::Zero(), kRes, Index3(40, 30, 12), CellState::Free);
  fill_box(s.reference, Index3(4, 0, 0), Index3(35, 1, 9), CellState::Occupied);
  std::vector<std::size_t> cells;
  for (int z = 0; z <= 9; ++z)
    for (int x = 4; x <= 35; ++x) cells.push_back(s.reference.flatten(Index3(x, 1, z)));
  s.surfaces = SurfaceSet(s.reference, cells);
  s.robot_start = {Vec3(4.0, 4.5, 1.0), -kPi / 2};
  s.seed = 7;
  return s;
}

Obstacle box(const Vec3& lo, const Vec3& hi) {
  Obstacle o;
  o.box = {lo, hi};
  return o;
}

Obstacle walker(std::vector<Vec3> waypoints, double speed) {
  Obstacle o;
  o.kind = ObstacleKind::Dynamic;
  o.shape = ShapeKind::Cylinder;
  o.cylinder = {waypoints.front(), 0.3, 1.8};
  o.waypoints = std::move(waypoints);
  o.speed = speed;
  return o;
}

SurfaceSet wall_with_normals(const Scenario& s) { return estimate_normals(s.reference, s.surfaces, 0.45); }

// Frustum written out from angles, independent of CameraModel::in_frustum.
// Returns -1 for points within 1e-9 of an edge.
int analytic_frustum(const CameraModel& cam, const Vec3& eye, double yaw, const Vec3& p) {
  const Vec3 d = p - eye;
  if (std::abs(d.norm() - cam.range) < 1e-9) return -1;
  if (d.norm() > cam.range) return 0;
  double az = std::atan2(d.y(), d.x()) - yaw;
  while (az > kPi) az -= kTwoPi;
  while (az < -kPi) az += kTwoPi;
  const double el = std::atan2(d.z(), std::hypot(d.x(), d.y()));
  if (std::abs(std::abs(az) - cam.fov_h / 2) < 1e-9 || std::abs(std::abs(el) - cam.fov_v / 2) < 1e-9) return -1;
  return std::abs(az) <= cam.fov_h / 2 && std::abs(el) <= cam.fov_v / 2;
}

const MissionResult& nominal_run() {
  static const MissionResult r = run_mission(wall_room());
  return r;
}

}  // namespace

TEST(Sense, EmptyWorldMissesEveryRayAndClearsTheSphere) {
  const VoxelGrid world(Vec3::Zero(), kRes, Index3(30, 30, 30), CellState::Free);
  VoxelGrid online(Vec3::Zero(), kRes, Index3(30, 30, 30), CellState::Unknown);
  const Vec3 origin(3.0, 3.0, 3.0);
  const auto r = sense(world, origin, lidar_directions({2.0, 16, 8}), 2.0, online);
  EXPECT_TRUE(r.hits.empty());
  EXPECT_EQ(r.rays, 128u);
  EXPECT_EQ(r.misses, 128u);
  EXPECT_EQ(online.state(online.index_of(origin)), CellState::Free);
  EXPECT_EQ(online.state(online.index_of(origin + Vec3(1.0, 0, 0))), CellState::Free);
  EXPECT_EQ(online.state(online.index_of(origin + Vec3(2.5, 0, 0))), CellState::Unknown);
}

TEST(Sense, WallBecomesOccupiedAndFreeSpaceInFront) {
  VoxelGrid world(Vec3::Zero(), kRes, Index3(30, 30, 20), CellState::Free);
  fill_box(world, Index3(20, 0, 0), Index3(20, 29, 19), CellState::Occupied);
  VoxelGrid online(Vec3::Zero(), kRes, world.dims(), CellState::Unknown);
  const Vec3 origin(1.1, 3.1, 2.1);
  const auto dirs = lidar_directions({8.0, 32, 16});
  const auto r = sense(world, origin, dirs, 8.0, online);
  ASSERT_FALSE(r.hits.empty());
  // sampled oracle: every cell a ray passes before the wall is Free
  for (const Vec3& d : dirs) {
    const auto hit = coverplan::testing::sampled_raycast(world, origin, d, 8.0, 1e-3);
    const double stop = std::min(hit ? hit->distance : 8.0, 8.0 - kRes) - 0.01;
    for (double t = 0.0; t < stop; t += 0.05) {
      const Index3 c = world.index_of(origin + t * d);
      if (world.in_bounds(c)) EXPECT_EQ(online.state(c), CellState::Free);
    }
  }
  for (std::size_t c : r.hits) {
    EXPECT_EQ(world.unflatten(c).x(), 20);
    EXPECT_EQ(online.state(c), CellState::Occupied);
  }
  EXPECT_TRUE(std::is_sorted(r.hits.begin(), r.hits.end()));
  // nothing behind the wall is touched
  for (int x = 21; x < 30; ++x) EXPECT_EQ(online.state(Index3(x, 15, 10)), CellState::Unknown);
}

TEST(Sense, MisalignedMapsThrow) {
  const VoxelGrid world(Vec3::Zero(), kRes, Index3(5, 5, 5));
  VoxelGrid online(Vec3::Zero(), kRes, Index3(5, 5, 6));
  EXPECT_THROW(sense(world, Vec3(0.5, 0.5, 0.5), lidar_directions({}), 8.0, online), DomainError);
}

TEST(WorldSnapshot, UpdateRestoresPreviousCells) {
  VoxelGrid world(Vec3::Zero(), kRes, Index3(20, 20, 12), CellState::Free);
  world.set(Index3(0, 0, 0), CellState::Occupied);
  WorldSnapshot snap(world);
  snap.update({Cylinder{Vec3(2.0, 2.0, 0.0), 0.3, 1.8}});
  EXPECT_FALSE(snap.dynamic_cells().empty());
  EXPECT_EQ(snap.now().state(snap.now().index_of(Vec3(2.0, 2.0, 1.0))), CellState::Occupied);
  snap.update({Cylinder{Vec3(3.0, 3.0, 0.0), 0.3, 1.8}});
  EXPECT_EQ(snap.now().state(snap.now().index_of(Vec3(2.0, 2.0, 1.0))), CellState::Free);
  EXPECT_EQ(snap.now().state(snap.now().index_of(Vec3(3.0, 3.0, 1.0))), CellState::Occupied);
  snap.update({});
  EXPECT_TRUE(snap.now() == world);
  EXPECT_TRUE(snap.dynamic_cells().empty());
}

TEST(ObserveCoverage, FlatWallFootprintMatchesAnalyticFrustum) {
  const Scenario s = wall_room();
  const SurfaceSet surf = wall_with_normals(s);
  CameraModel cam;
  cam.max_incidence = deg2rad(89.0);
  const std::vector<char> none(surf.size(), 0);
  for (const Vec3 eye : {Vec3(4.0, 2.0, 1.0), Vec3(2.5, 1.5, 0.7), Vec3(6.0, 3.0, 1.5)}) {
    const auto seen = observe_coverage(eye, -kPi / 2, cam, s.reference, surf, none);
    std::set<std::size_t> got(seen.begin(), seen.end());
    for (std::size_t i = 0; i < surf.size(); ++i) {
      const Vec3 p = s.reference.center(surf.cell(i));
      const double inc = std::acos(std::clamp((eye - p).normalized().dot(surf.normal(i)), -1.0, 1.0));
      const int in = analytic_frustum(cam, eye, -kPi / 2, p);
      if (std::abs(inc - cam.max_incidence) < 1e-6 || in < 0) continue;
      // the face toward the eye is exposed, so frustum and incidence decide alone
      EXPECT_EQ(got.count(i) == 1, in == 1 && inc <= cam.max_incidence)
          << "slot " << i;
    }
  }
}

TEST(ObserveCoverage, AlreadyScannedSlotsAreNotReported) {
  const Scenario s = wall_room();
  const SurfaceSet surf = wall_with_normals(s);
  const Vec3 eye(4.0, 2.0, 1.0);
  std::vector<char> scanned(surf.size(), 0);
  const auto first = observe_coverage(eye, -kPi / 2, CameraModel{}, s.reference, surf, scanned);
  ASSERT_FALSE(first.empty());
  for (std::size_t i : first) scanned[i] = 1;
  EXPECT_TRUE(observe_coverage(eye, -kPi / 2, CameraModel{}, s.reference, surf, scanned).empty());
}

TEST(ObserveCoverage, DynamicObstacleOccludesTheWall) {
  const Scenario s = wall_room();
  const SurfaceSet surf = wall_with_normals(s);
  const Vec3 eye(4.0, 2.0, 1.0);
  const std::vector<char> none(surf.size(), 0);
  const auto open = observe_coverage(eye, -kPi / 2, CameraModel{}, s.reference, surf, none);
  WorldSnapshot snap(s.reference);
  snap.update({Cylinder{Vec3(4.0, 1.0, 0.0), 0.4, 2.4}});
  const auto blocked = observe_coverage(eye, -kPi / 2, CameraModel{}, snap.now(), surf, none);
  EXPECT_LT(blocked.size(), open.size());
  // the cell straight ahead is hidden
  const std::size_t ahead = static_cast<std::size_t>(surf.slot_of(s.reference.flatten(s.reference.index_of(Vec3(4.0, 0.3, 1.0)))));
  EXPECT_TRUE(std::count(open.begin(), open.end(), ahead));
  EXPECT_FALSE(std::count(blocked.begin(), blocked.end(), ahead));
  for (std::size_t i : blocked) EXPECT_TRUE(std::count(open.begin(), open.end(), i));
}

TEST(ObserveCoverage, GrazingIncidenceIsRejected) {
  const Scenario s = wall_room();
  const SurfaceSet surf = wall_with_normals(s);
  // eye almost in the wall plane, looking along it
  const Vec3 eye(0.3, 0.5, 1.0);
  const std::vector<char> none(surf.size(), 0);
  CameraModel cam;
  cam.max_incidence = deg2rad(60.0);
  for (std::size_t i : observe_coverage(eye, 0.0, cam, s.reference, surf, none)) {
    const Vec3 p = s.reference.center(surf.cell(i));
    EXPECT_LE(std::acos((eye - p).normalized().dot(surf.normal(i))), cam.max_incidence + 1e-9);
  }
  cam.max_incidence = deg2rad(30.0);
  EXPECT_TRUE(observe_coverage(eye, 0.0, cam, s.reference, surf, none).empty());
}

TEST(Mission, NoSurfaceRaisesMissionError) {
  Scenario s = wall_room();
  s.surfaces = SurfaceSet();
  EXPECT_THROW(run_mission(s), MissionError);
}

TEST(Mission, StaticRunVisitsEveryViewpointOnce) {
  const MissionResult& r = nominal_run();
  ASSERT_GT(r.viewpoints.size(), 0u);
  std::set<int> seen(r.arrivals.begin(), r.arrivals.end());
  EXPECT_EQ(seen.size(), r.arrivals.size());
  EXPECT_EQ(r.arrivals.size(), r.viewpoints.size());
  EXPECT_EQ(r.arrivals, r.global.plan.order);
  for (const auto& v : r.viewpoints) EXPECT_EQ(v.status, ViewpointStatus::Visited);
  EXPECT_EQ(r.report.collisions, 0);
  EXPECT_GT(r.report.min_clearance, 0.0);
  EXPECT_GE(r.report.coverage_rate, 0.95);
  EXPECT_EQ(r.report.abandoned, 0);
}

TEST(Mission, LogsAreConsistent) {
  const MissionResult& r = nominal_run();
  ASSERT_EQ(r.path.size(), r.telemetry.size() + 1);
  double len = 0.0;
  for (std::size_t i = 1; i < r.path.size(); ++i) len += (r.path[i] - r.path[i - 1]).norm();
  EXPECT_NEAR(len, r.report.path_length, 1e-9);
  EXPECT_NEAR(r.report.mission_time, r.telemetry.back().t, 1e-9);
  for (std::size_t i = 1; i < r.telemetry.size(); ++i) EXPECT_GT(r.telemetry[i].t, r.telemetry[i - 1].t);
  // coverage never decreases and scan times are ordered
  for (std::size_t i = 1; i < r.scan.events.size(); ++i)
    EXPECT_GE(r.scan.events[i].first, r.scan.events[i - 1].first);
  EXPECT_EQ(r.scan.count(), r.report.scanned_cells);
  for (std::size_t i = 0; i < r.scan.scanned.size(); ++i)
    EXPECT_EQ(r.scan.scanned[i] != 0, r.scan.first_time[i] >= 0.0);
  // acceleration bounds hold on every tick
  for (const auto& row : r.telemetry) EXPECT_LE(row.u.cwiseAbs().maxCoeff(), 2.0 + 1e-9);
  EXPECT_EQ(r.events.front().kind, "start");
  EXPECT_EQ(r.events.back().kind, "end");
}

TEST(Mission, Deterministic) {
  const MissionResult a = run_mission(wall_room());
  const MissionResult& b = nominal_run();
  EXPECT_EQ(a.arrivals, b.arrivals);
  ASSERT_EQ(a.telemetry.size(), b.telemetry.size());
  for (std::size_t i = 0; i < a.telemetry.size(); ++i) EXPECT_EQ(a.telemetry[i].x, b.telemetry[i].x);
  EXPECT_EQ(a.scan.events, b.scan.events);
}

TEST(Mission, UnforeseenBoxBlocksAViewpointAndAdaptationRecoversCoverage) {
  Scenario s = wall_room();
  // a pillar standing on the spot of one planned viewpoint, directly in front of the wall
  const GlobalResult g = plan_global(s);
  const Viewpoint& target = g.viewpoints.viewpoints[g.plan.order[g.plan.order.size() / 2]];
  s.unforeseen.push_back(box(target.position - Vec3(0.4, 0.4, target.position.z()),
                             target.position + Vec3(0.4, 0.4, 2.4 - target.position.z())));
  const MissionResult on = run_mission(s);
  s.params.view_adapt = false;
  const MissionResult off = run_mission(s);

  EXPECT_EQ(on.viewpoints[target.id].status, ViewpointStatus::Adapted);
  EXPECT_EQ(off.viewpoints[target.id].status, ViewpointStatus::Blocked);
  EXPECT_GE(on.report.adapted, 1);
  EXPECT_EQ(off.report.adapted, 0);
  EXPECT_TRUE(off.adaptations.empty());
  EXPECT_EQ(on.report.collisions, 0);
  EXPECT_EQ(off.report.collisions, 0);
  EXPECT_GE(on.report.coverage_rate, off.report.coverage_rate);
  for (const auto& e : on.adaptations) EXPECT_GT(e.score, 0.0);
}

TEST(Mission, WalkerCrossingTheRouteIsAvoided) {
  Scenario s = wall_room();
  s.dynamic_obstacles.push_back(walker({Vec3(1.0, 1.9, 0.0), Vec3(7.0, 1.9, 0.0)}, 0.6));
  const MissionResult r = run_mission(s);
  EXPECT_EQ(r.report.collisions, 0);
  EXPECT_GT(r.report.min_clearance, 0.0);
  EXPECT_GE(r.report.coverage_rate, 0.8);
  s.params.dynamic_obstacles = false;
  const MissionResult off = run_mission(s);
  EXPECT_FALSE(off.report.dynamic_obstacles);
}

TEST(Mission, TimeLimitAbandonsTheRest) {
  Scenario s = wall_room();
  s.params.max_mission_time_s = 5.0;
  const MissionResult r = run_mission(s);
  EXPECT_LE(r.report.mission_time, 5.0 + 1e-9);
  EXPECT_GT(r.report.abandoned, 0);
  EXPECT_EQ(r.arrivals.size() + r.abandoned.size(), r.viewpoints.size());
}

TEST(Outputs, ReportCoverageIsRecomputableFromTheScanLog) {
  const MissionResult& r = nominal_run();
  const auto j = report_to_json(r);
  std::size_t scanned = 0;
  for (char c : r.scan.scanned) scanned += c != 0;
  EXPECT_EQ(j["coverage_rate"].get<double>(), static_cast<double>(scanned) / r.global.surfaces.size());
  EXPECT_EQ(j["viewpoints"]["visited"].get<int>(), static_cast<int>(r.arrivals.size()));
  EXPECT_EQ(j["arrivals"].get<std::vector<int>>(), r.arrivals);
}

TEST(Outputs, ExportsAreByteIdenticalAcrossRuns) {
  const MissionResult a = run_mission(wall_room());
  const MissionResult& b = nominal_run();
  EXPECT_EQ(report_to_json(a).dump(), report_to_json(b).dump());
  EXPECT_EQ(events_log(a), events_log(b));
  EXPECT_EQ(telemetry_csv(a.telemetry), telemetry_csv(b.telemetry));
  EXPECT_EQ(coverage_ply(a), coverage_ply(b));
  EXPECT_EQ(mission_svg(a), mission_svg(b));
}

TEST(Outputs, WritesSelectedFiles) {
  const auto dir = std::filesystem::temp_directory_path() / "coverplan_test_outputs";
  std::filesystem::remove_all(dir);
  OutputToggles t;
  t.ply = false;
  const auto files = write_mission_outputs(dir, nominal_run(), {}, t);
  EXPECT_EQ(files.size(), 4u);
  EXPECT_TRUE(std::filesystem::exists(dir / "report.json"));
  EXPECT_TRUE(std::filesystem::exists(dir / "events.log"));
  EXPECT_TRUE(std::filesystem::exists(dir / "telemetry.csv"));
  EXPECT_TRUE(std::filesystem::exists(dir / "mission.svg"));
  EXPECT_FALSE(std::filesystem::exists(dir / "coverage.ply"));
  std::size_t entries = 0;
  for ([[maybe_unused]] const auto& e : std::filesystem::directory_iterator(dir)) ++entries;
  EXPECT_EQ(entries, 4u);  // no temp files left behind
  std::filesystem::remove_all(dir);
}

TEST(Mission, EachViewpointEndsExactlyOnceWithObstacles) {
  const MissionResult r = run_mission(load_scenario(fs::path(COVERPLAN_SOURCE_DIR) / "scenarios/corridor_obstacles.json"));
  std::map<int, int> ended;
  for (const auto& e : r.events)
    if (e.kind == "arrive" || e.kind == "abandon" || e.kind == "blocked") ++ended[e.viewpoint];
  for (int id : r.global.plan.order) EXPECT_EQ(ended[id], 1) << "viewpoint " << id;
  EXPECT_EQ(ended.size(), r.global.plan.order.size());
  EXPECT_EQ(r.report.collisions, 0);
}
