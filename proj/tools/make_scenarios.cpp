// Writes the shipped scenarios: a corridor and a multi-wall room, each as a static variant and
// one with unforeseen boxes and walking people.
#include <algorithm>
#include <filesystem>
#include <functional>
#include <iostream>

#include <CLI11.hpp>

#include "coverplan/sim/pipeline.hpp"
#include "coverplan/world/scenario.hpp"

using namespace coverplan;

namespace {

constexpr double kRes = 0.2;
const Index3 kDims(100, 50, 15);
constexpr int kWallTop = 11;  // walls span z cells 0..11 (2.4 m)

void fill(VoxelGrid& g, const Index3& lo, const Index3& hi) {
  for (int z = lo.z(); z <= hi.z(); ++z)
    for (int y = lo.y(); y <= hi.y(); ++y)
      for (int x = lo.x(); x <= hi.x(); ++x) g.set(Index3(x, y, z), CellState::Occupied);
}

// Occupied cells with a free face neighbour that satisfies `inside`.
SurfaceSet faces_toward(const VoxelGrid& g, const std::function<bool(const Index3&)>& inside) {
  std::vector<std::size_t> cells;
  for (std::size_t i = 0; i < g.size(); ++i) {
    if (g.state(i) != CellState::Occupied) continue;
    const Index3 c = g.unflatten(i);
    bool face = false;
    for (int a = 0; a < 3 && !face; ++a)
      for (int s : {-1, 1}) {
        Index3 n = c;
        n[a] += s;
        if (g.in_bounds(n) && g.state(n) == CellState::Free && inside(n)) face = true;
      }
    if (face) cells.push_back(i);
  }
  return SurfaceSet(g, cells);
}

Obstacle person(std::vector<Vec3> loop, double speed) {
  Obstacle o;
  o.kind = ObstacleKind::Dynamic;
  o.shape = ShapeKind::Cylinder;
  o.cylinder = {loop.front(), 0.3, 1.8};
  o.waypoints = std::move(loop);
  o.speed = speed;
  return o;
}

// A floor-to-ceiling cabinet centred on the spot of a planned viewpoint.
Obstacle cabinet_at(const Viewpoint& v) {
  Obstacle o;
  o.box = {Vec3(v.position.x() - 0.4, v.position.y() - 0.4, 0.0), Vec3(v.position.x() + 0.4, v.position.y() + 0.4, 2.6)};
  return o;
}

// The planned viewpoint nearest `anchor`, so cabinet placement does not depend on visiting order.
Viewpoint planned_near(const Scenario& s, const Vec3& anchor) {
  const GlobalResult g = plan_global(s);
  const auto& vs = g.viewpoints.viewpoints;
  return *std::min_element(vs.begin(), vs.end(), [&](const Viewpoint& a, const Viewpoint& b) {
    return (a.position - anchor).norm() < (b.position - anchor).norm();
  });
}

// 20 m corridor, 5.2 m wide, two pilasters on the south wall.
Scenario corridor() {
  Scenario s;
  s.reference = VoxelGrid(Vec3::Zero(), kRes, kDims, CellState::Free);
  fill(s.reference, Index3(5, 10, 0), Index3(94, 11, kWallTop));
  fill(s.reference, Index3(5, 38, 0), Index3(94, 39, kWallTop));
  fill(s.reference, Index3(35, 12, 0), Index3(37, 13, kWallTop));
  fill(s.reference, Index3(65, 12, 0), Index3(67, 13, kWallTop));
  s.surfaces = faces_toward(s.reference, [](const Index3& n) {
    return n.x() >= 5 && n.x() <= 94 && n.y() >= 12 && n.y() <= 37 && n.z() <= kWallTop;
  });
  s.robot_start = {Vec3(1.0, 5.0, 1.0), 0.0};
  s.seed = 1;
  return s;
}

Scenario corridor_obstacles() {
  Scenario s = corridor();
  const Scenario probe = s;
  s.unforeseen.push_back(cabinet_at(planned_near(probe, Vec3(6.0, 3.0, 1.0))));
  s.unforeseen.push_back(cabinet_at(planned_near(probe, Vec3(14.0, 7.0, 1.0))));
  s.dynamic_obstacles.push_back(person({Vec3(4.0, 5.0, 0.0), Vec3(16.0, 5.0, 0.0)}, 0.5));
  s.dynamic_obstacles.push_back(person({Vec3(15.0, 5.4, 0.0), Vec3(6.0, 5.4, 0.0)}, 0.4));
  s.seed = 2;
  return s;
}

// 20 x 10 m room with two partition walls, each leaving a doorway.
Scenario room() {
  Scenario s;
  s.reference = VoxelGrid(Vec3::Zero(), kRes, kDims, CellState::Free);
  fill(s.reference, Index3(0, 0, 0), Index3(99, 1, kWallTop));
  fill(s.reference, Index3(0, 48, 0), Index3(99, 49, kWallTop));
  fill(s.reference, Index3(0, 0, 0), Index3(1, 49, kWallTop));
  fill(s.reference, Index3(98, 0, 0), Index3(99, 49, kWallTop));
  fill(s.reference, Index3(39, 2, 0), Index3(40, 31, kWallTop));
  fill(s.reference, Index3(69, 18, 0), Index3(70, 47, kWallTop));
  s.surfaces = faces_toward(s.reference, [](const Index3& n) { return n.z() <= kWallTop; });
  s.robot_start = {Vec3(4.0, 5.0, 1.0), 0.0};
  s.seed = 3;
  return s;
}

Scenario room_obstacles() {
  Scenario s = room();
  const Scenario probe = s;
  s.unforeseen.push_back(cabinet_at(planned_near(probe, Vec3(10.0, 9.0, 1.0))));
  s.unforeseen.push_back(cabinet_at(planned_near(probe, Vec3(17.0, 1.5, 1.0))));
  s.dynamic_obstacles.push_back(person({Vec3(3.0, 8.0, 0.0), Vec3(6.0, 8.0, 0.0), Vec3(6.0, 4.0, 0.0)}, 0.5));
  s.dynamic_obstacles.push_back(person({Vec3(12.0, 3.0, 0.0), Vec3(12.0, 7.5, 0.0)}, 0.4));
  s.seed = 4;
  return s;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Writes the shipped scenario files"};
  std::string out = "scenarios";
  app.add_option("--out", out, "Output directory");
  CLI11_PARSE(app, argc, argv);
  try {
    std::filesystem::create_directories(out);
    const std::vector<std::pair<const char*, std::function<Scenario()>>> all = {
        {"corridor.json", corridor},
        {"corridor_obstacles.json", corridor_obstacles},
        {"room.json", room},
        {"room_obstacles.json", room_obstacles}};
    for (const auto& [name, make] : all) {
      const Scenario s = make();
      s.validate();
      save_scenario(s, std::filesystem::path(out) / name);
      std::cout << name << ": " << s.surfaces.size() << " surface cells\n";
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 3;
  }
  return 0;
}
