#include <random>
#include <set>

#include <gtest/gtest.h>

#include "coverplan/segment/normals.hpp"
#include "coverplan/segment/segment.hpp"
#include "test_util.hpp"

using namespace coverplan;
using coverplan::testing::fill_box;

namespace {

constexpr double kRes = 0.2;

SurfaceSet exposed_surface(const VoxelGrid& g) { return SurfaceSet(g, exposed_cells(g)); }

// Slab at y in {0,1} with free space above; surface = the y = 1 layer.
VoxelGrid flat_wall() {
  VoxelGrid g(Vec3::Zero(), kRes, Index3(12, 6, 8), CellState::Free);
  fill_box(g, Index3(0, 0, 0), Index3(11, 1, 7), CellState::Occupied);
  return g;
}

// L-shaped pair of walls meeting at the x = y = 0 corner.
VoxelGrid corner_walls() {
  VoxelGrid g(Vec3::Zero(), kRes, Index3(26, 26, 8), CellState::Free);
  fill_box(g, Index3(0, 0, 0), Index3(25, 1, 7), CellState::Occupied);
  fill_box(g, Index3(0, 0, 0), Index3(1, 25, 7), CellState::Occupied);
  return g;
}

SurfaceSet corner_surfaces(const VoxelGrid& g) {
  std::vector<std::size_t> cells;
  for (int z = 0; z < 8; ++z) {
    for (int x = 2; x < 26; ++x) cells.push_back(g.flatten(Index3(x, 1, z)));
    for (int y = 2; y < 26; ++y) cells.push_back(g.flatten(Index3(1, y, z)));
  }
  return SurfaceSet(g, cells);
}

RegionGrowParams grow_params(double angle_deg) {
  RegionGrowParams p;
  p.angle_thresh = deg2rad(angle_deg);
  return p;
}

bool connected_26(const VoxelGrid& g, const std::vector<std::size_t>& cells) {
  std::set<std::size_t> todo(cells.begin(), cells.end()), seen{cells.front()};
  std::vector<std::size_t> stack{cells.front()};
  while (!stack.empty()) {
    const Index3 c = g.unflatten(stack.back());
    stack.pop_back();
    for (int dz = -1; dz <= 1; ++dz)
      for (int dy = -1; dy <= 1; ++dy)
        for (int dx = -1; dx <= 1; ++dx) {
          const Index3 n = c + Index3(dx, dy, dz);
          if (!g.in_bounds(n)) continue;
          const std::size_t l = g.flatten(n);
          if (todo.count(l) && seen.insert(l).second) stack.push_back(l);
        }
  }
  return seen.size() == todo.size();
}

}  // namespace

TEST(Normals, FlatWallPointsIntoFreeSpace) {
  const VoxelGrid g = flat_wall();
  const SurfaceSet s = estimate_normals(g, exposed_surface(g), 0.45);
  ASSERT_EQ(s.size(), 12u * 8u);
  for (std::size_t i = 0; i < s.size(); ++i) {
    EXPECT_NEAR((s.normal(i) - Vec3::UnitY()).norm(), 0.0, 1e-6);
    EXPECT_NEAR(s.curvature(i), 0.0, 1e-9);
  }
}

TEST(Normals, PerpendicularWallsFormTwoGroupsAtRightAngle) {
  const VoxelGrid g = corner_walls();
  const SurfaceSet s = estimate_normals(g, corner_surfaces(g), 0.45);
  Vec3 a = Vec3::Zero(), b = Vec3::Zero();
  for (std::size_t i = 0; i < s.size(); ++i) {
    EXPECT_NEAR(s.normal(i).norm(), 1.0, 1e-6);
    // analytic normal of the wall the cell belongs to
    const Index3 c = g.unflatten(s.cell(i));
    (c.y() == 1 ? a : b) += s.normal(i);
  }
  EXPECT_GT(a.normalized().dot(Vec3::UnitY()), std::cos(deg2rad(5.0)));
  EXPECT_GT(b.normalized().dot(Vec3::UnitX()), std::cos(deg2rad(5.0)));
  EXPECT_NEAR(rad2deg(std::acos(a.normalized().dot(b.normalized()))), 90.0, 5.0);
}

TEST(Normals, IsolatedCellFallsBackToFreeNeighbour) {
  VoxelGrid g(Vec3::Zero(), kRes, Index3(3, 3, 3), CellState::Occupied);
  g.set(Index3(2, 1, 1), CellState::Free);
  const SurfaceSet s = estimate_normals(g, SurfaceSet(g, {g.flatten(Index3(1, 1, 1))}), 0.45);
  EXPECT_TRUE(s.normal(0).isApprox(Vec3::UnitX()));
}

TEST(Normals, RadiusBelowOneCellIsRejected) {
  const VoxelGrid g = flat_wall();
  EXPECT_THROW(estimate_normals(g, exposed_surface(g), 0.1), DomainError);
}

TEST(RegionGrow, FlatWallIsOneSegment) {
  const VoxelGrid g = flat_wall();
  const SurfaceSet s = estimate_normals(g, exposed_surface(g), 0.45);
  const auto segs = region_grow(g, s, grow_params(20.0));
  ASSERT_EQ(segs.size(), 1u);
  EXPECT_EQ(segs[0].cells, s.cells());
  EXPECT_FALSE(segs[0].merged);
  EXPECT_TRUE(segs[0].mean_normal.isApprox(Vec3::UnitY()));
}

TEST(RegionGrow, PerpendicularWallsSplitByAnalyticNormals) {
  const VoxelGrid g = corner_walls();
  // a one-cell radius keeps the estimated normals equal to the analytic ones
  const SurfaceSet s = estimate_normals(g, corner_surfaces(g), kRes);
  const auto segs = region_grow(g, s, grow_params(30.0));
  ASSERT_EQ(segs.size(), 2u);
  for (const auto& seg : segs) {
    EXPECT_EQ(seg.cells.size(), 24u * 8u);
    const int wall_y = g.unflatten(seg.cells.front()).y();
    for (std::size_t c : seg.cells) EXPECT_EQ(g.unflatten(c).y() == 1, wall_y == 1);
  }
}

TEST(RegionGrow, DisconnectedWallsStaySeparateAtWideThreshold) {
  VoxelGrid g(Vec3::Zero(), kRes, Index3(14, 14, 6), CellState::Free);
  fill_box(g, Index3(4, 0, 0), Index3(13, 1, 5), CellState::Occupied);
  fill_box(g, Index3(0, 4, 0), Index3(1, 13, 5), CellState::Occupied);
  std::vector<std::size_t> cells;
  for (int z = 0; z < 6; ++z) {
    for (int x = 4; x < 14; ++x) cells.push_back(g.flatten(Index3(x, 1, z)));
    for (int y = 4; y < 14; ++y) cells.push_back(g.flatten(Index3(1, y, z)));
  }
  const SurfaceSet s = estimate_normals(g, SurfaceSet(g, cells), kRes);
  EXPECT_EQ(region_grow(g, s, grow_params(120.0)).size(), 2u);
}

TEST(RegionGrow, EmptySurfaceGivesNoSegments) {
  const VoxelGrid g = flat_wall();
  EXPECT_TRUE(region_grow(g, SurfaceSet(), grow_params(20.0)).empty());
}

TEST(RegionGrow, RejectsNonPositiveThresholds) {
  const VoxelGrid g = flat_wall();
  const SurfaceSet s = estimate_normals(g, exposed_surface(g), 0.45);
  EXPECT_THROW(region_grow(g, s, grow_params(0.0)), DomainError);
}

TEST(RegionGrow, PartitionConnectivityAndDeterminismOnRandomBlobs) {
  std::mt19937_64 rng(11);
  std::uniform_int_distribution<int> pos(1, 12), len(1, 5);
  for (int trial = 0; trial < 15; ++trial) {
    VoxelGrid g(Vec3::Zero(), kRes, Index3(16, 16, 10), CellState::Free);
    for (int b = 0; b < 5; ++b) {
      const Index3 lo(pos(rng), pos(rng), std::min(pos(rng), 8));
      const Index3 hi = (lo + Index3(len(rng), len(rng), len(rng))).cwiseMin(Index3(15, 15, 9));
      fill_box(g, lo, hi, CellState::Occupied);
    }
    const SurfaceSet s = estimate_normals(g, exposed_surface(g), 0.45);
    for (std::size_t i = 0; i < s.size(); ++i) ASSERT_NEAR(s.normal(i).norm(), 1.0, 1e-6);
    const auto segs = region_grow(g, s, RegionGrowParams{});
    std::vector<std::size_t> all;
    for (const auto& seg : segs) {
      ASSERT_FALSE(seg.cells.empty());
      EXPECT_TRUE(connected_26(g, seg.cells)) << "trial " << trial << " segment " << seg.id;
      all.insert(all.end(), seg.cells.begin(), seg.cells.end());
    }
    std::sort(all.begin(), all.end());
    EXPECT_EQ(all, s.cells()) << "trial " << trial;

    const auto again = region_grow(g, s, RegionGrowParams{});
    ASSERT_EQ(again.size(), segs.size());
    for (std::size_t k = 0; k < segs.size(); ++k) EXPECT_EQ(again[k].cells, segs[k].cells);
  }
}

TEST(RegionGrow, NormalCoherenceOnCurvedWall) {
  // quarter of a thick cylindrical shell, inspected from the inside
  VoxelGrid g(Vec3::Zero(), kRes, Index3(30, 30, 6), CellState::Free);
  const Vec3 axis(0.0, 0.0, 0.0);
  for (std::size_t i = 0; i < g.size(); ++i) {
    const Vec3 p = g.center(i);
    const double r = std::hypot(p.x() - axis.x(), p.y() - axis.y());
    if (r > 4.5 && r < 5.5) g.set(i, CellState::Occupied);
  }
  const SurfaceSet s = estimate_normals(g, exposed_surface(g), 0.45);
  const RegionGrowParams params = grow_params(20.0);
  const auto segs = region_grow(g, s, params);
  EXPECT_GT(segs.size(), 2u);
  for (const auto& seg : segs) {
    if (seg.merged) continue;
    for (std::size_t c : seg.cells) {
      const Vec3 n = s.normal(static_cast<std::size_t>(s.slot_of(c)));
      EXPECT_LE(std::acos(std::clamp(n.dot(seg.mean_normal), -1.0, 1.0)), params.angle_thresh + 1e-9);
    }
  }
}

TEST(FitBbox, CollinearAlongZ) {
  const VoxelGrid g(Vec3::Zero(), kRes, Index3(4, 4, 12), CellState::Free);
  Segment seg;
  for (int z = 1; z <= 10; ++z) seg.cells.push_back(g.flatten(Index3(2, 2, z)));
  fit_bbox(g, seg);
  EXPECT_NEAR((seg.principal_axis - Vec3::UnitZ()).norm(), 0.0, 1e-9);
  EXPECT_NEAR(seg.bbox.half_extents(0), 0.9, 1e-9);
  EXPECT_NEAR(seg.bbox.center.z(), g.center(Index3(2, 2, 1)).z() + 0.9, 1e-9);
}

TEST(FitBbox, SquarePatchHasEqualInPlaneExtents) {
  const VoxelGrid g(Vec3::Zero(), kRes, Index3(8, 8, 8), CellState::Free);
  Segment seg;
  for (int x = 0; x < 6; ++x)
    for (int z = 1; z < 7; ++z) seg.cells.push_back(g.flatten(Index3(x, 3, z)));
  fit_bbox(g, seg);
  EXPECT_NEAR(seg.principal_axis.y(), 0.0, 1e-9);
  EXPECT_NEAR(seg.bbox.half_extents(0) / seg.bbox.half_extents(1), 1.0, 0.05);
  EXPECT_NEAR(seg.bbox.half_extents(2), 0.0, 1e-9);
  EXPECT_GT(seg.principal_axis.dot(Vec3(1.0, 1e-3, 1e-6)), 0.0);
}

TEST(FitBbox, SingleCellDefaults) {
  const VoxelGrid g(Vec3::Zero(), kRes, Index3(3, 3, 3), CellState::Free);
  Segment seg;
  seg.cells = {g.flatten(Index3(1, 1, 1))};
  fit_bbox(g, seg);
  EXPECT_EQ(seg.principal_axis, Vec3::UnitX());
  EXPECT_TRUE(seg.bbox.half_extents.isApprox(Vec3::Constant(0.1)));
  Segment empty;
  EXPECT_THROW(fit_bbox(g, empty), DomainError);
}
