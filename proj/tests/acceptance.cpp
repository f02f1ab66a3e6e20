// End-to-end acceptance run: one PASS/FAIL line per criterion, nonzero exit on any failure.
#include <chrono>
#include <cstdio>
#include <filesystem>
#include <map>
#include <random>
#include <set>
#include <sstream>
#include <string>

#include "coverplan/sim/outputs.hpp"
#include "coverplan/sim/pipeline.hpp"
#include "coverplan/traj_static/optimize.hpp"
#include "oracles.hpp"

namespace fs = std::filesystem;
using namespace coverplan;
using namespace coverplan::testing;

namespace {

const fs::path kScenarios = fs::path(COVERPLAN_SOURCE_DIR) / "scenarios";

std::map<int, std::pair<bool, std::string>> results;

void report(int id, bool ok, const std::string& what) { results[id] = {ok, what}; }

template <typename... A>
std::string fmt(const char* f, A... a) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, a...);
  return buf;
}

struct Run {
  MissionResult result;
  double wall_s = 0.0;
  std::vector<Obstacle> dynamic;
};

Run fly(const Scenario& s) {
  const auto t0 = std::chrono::steady_clock::now();
  Run r{run_mission(s), 0.0, s.dynamic_obstacles};
  r.wall_s = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return r;
}

// Every product of a run, as it would be written to disk.
std::map<std::string, std::string> exports(const Run& r) {
  return {{"report.json", report_to_json(r.result).dump(2)},
          {"events.log", events_log(r.result)},
          {"telemetry.csv", telemetry_csv(r.result.telemetry)},
          {"coverage.ply", coverage_ply(r.result)},
          {"mission.svg", mission_svg(r.result, r.dynamic)}};
}

// Parses events.log and checks that each planned viewpoint ends exactly one way.
std::string exactly_once_problem(const MissionResult& r) {
  std::vector<int> arrivals;
  std::multiset<int> ended;
  std::istringstream in(events_log(r));
  for (std::string line; std::getline(in, line);) {
    std::istringstream ls(line);
    std::string t, kind, vp;
    ls >> t >> kind >> vp;
    if (kind != "arrive" && kind != "abandon" && kind != "blocked") continue;
    if (vp.rfind("vp=", 0) != 0) return "event without viewpoint: " + line;
    const int id = std::stoi(vp.substr(3));
    ended.insert(id);
    if (kind == "arrive") arrivals.push_back(id);
  }
  const auto& order = r.global.plan.order;
  const std::set<int> plan(order.begin(), order.end());
  for (int id : plan)
    if (ended.count(id) != 1) return fmt("viewpoint %d ended %zu times", id, ended.count(id));
  if (ended.size() != plan.size()) return "events name viewpoints outside the plan";
  std::size_t k = 0;
  for (int id : order)
    if (k < arrivals.size() && arrivals[k] == id) ++k;
  if (k != arrivals.size()) return "arrivals are out of plan order";
  return "";
}

void missions() {
  struct Pair {
    const char* name;
    bool obstacles;
  };
  const Pair all[] = {{"corridor", false}, {"room", false}, {"corridor_obstacles", true}, {"room_obstacles", true}};

  bool ok1 = true, ok2 = true, ok3 = true, strict3 = false, ok4 = true, ok9 = true;
  std::string d1, d2, d3, d4, d9;
  for (const auto& [name, obstacles] : all) {
    const Scenario s = load_scenario(kScenarios / (std::string(name) + ".json"));
    const Run a = fly(s);
    const CoverageReport& rep = a.result.report;
    if (!obstacles) {
      const bool ok = rep.coverage_rate >= 0.99 && rep.collisions == 0 && a.wall_s < 60.0;
      ok1 &= ok;
      d1 += fmt(" %s: coverage %.4f collisions %d %.1fs;", name, rep.coverage_rate, rep.collisions, a.wall_s);
    } else {
      const bool ok = rep.coverage_rate >= 0.90 && rep.collisions == 0 && rep.adapted >= 1;
      ok2 &= ok;
      d2 += fmt(" %s: coverage %.4f collisions %d adapted %d;", name, rep.coverage_rate, rep.collisions, rep.adapted);
      Scenario off = s;
      off.params.view_adapt = false;
      const double c_off = run_mission(off).report.coverage_rate;
      ok3 &= rep.coverage_rate >= c_off;
      strict3 |= rep.coverage_rate > c_off;
      d3 += fmt(" %s: on %.4f off %.4f;", name, rep.coverage_rate, c_off);
    }
    const std::string p = exactly_once_problem(a.result);
    ok4 &= p.empty();
    d4 += fmt(" %s: %s;", name, p.empty() ? "ok" : p.c_str());

    const Run b = fly(s);
    const auto ea = exports(a), eb = exports(b);
    std::string diff;
    for (const auto& [file, content] : ea)
      if (eb.at(file) != content) diff += " " + file;
    ok9 &= diff.empty();
    d9 += fmt(" %s:%s;", name, diff.empty() ? " identical" : diff.c_str());
  }
  report(1, ok1, "static scenarios: coverage >= 0.99, no collisions, < 60 s." + d1);
  report(2, ok2, "obstacle scenarios: coverage >= 0.90, no collisions, >= 1 adapted." + d2);
  report(3, ok3 && strict3, "view adaptation on >= off everywhere, strictly better somewhere." + d3);
  report(4, ok4, "every planned viewpoint arrived, abandoned or blocked exactly once, in order." + d4);
  report(9, ok9, "two runs of each shipped scenario produce identical outputs." + d9);
}

void tsp() {
  std::mt19937_64 rng(5150);
  std::uniform_int_distribution<int> size(2, 9);
  std::uniform_real_distribution<double> u(0.0, 10.0);
  int optimal = 0;
  double worst = 1.0;
  const auto t0 = std::chrono::steady_clock::now();
  for (int inst = 0; inst < 100; ++inst) {
    std::vector<Viewpoint> vs;
    std::vector<Vec3> pts;
    const int n = size(rng);
    for (int i = 0; i < n; ++i) {
      Viewpoint v;
      v.id = i;
      v.position = Vec3(u(rng), u(rng), 0.05 * u(rng));
      vs.push_back(v);
      pts.push_back(v.position);
    }
    const Vec3 start(u(rng), u(rng), 0.0);
    int first = 0;
    for (int i = 1; i < n; ++i)
      if ((pts[i] - start).norm() < (pts[first] - start).norm()) first = i;
    const Tour t = solve_tsp(vs, start);
    const double best = brute_force_open_path(pts, first);
    if (t.length <= best + 1e-9) ++optimal;
    worst = std::max(worst, t.length / best);
  }
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  report(5, optimal >= 95 && worst <= 1.05 + 1e-12 && secs < 10.0,
         fmt("TSP vs exhaustive on 100 instances (n <= 9): %d optimal, worst ratio %.4f, %.2fs.", optimal, worst,
             secs));
}

void bspline() {
  std::mt19937_64 rng(77);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  constexpr double kRes = 0.2, h = 1e-5;
  auto rel = [](const Vec3& a, const Vec3& n) {
    return (a - n).cwiseAbs().maxCoeff() / std::max(n.cwiseAbs().maxCoeff(), 1e-8);
  };
  double worst = 0.0;
  int checked = 0;
  bool monotone = true, pinned = true;
  for (int inst = 0; inst < 50; ++inst) {
    VoxelGrid g = random_grid(rng, Index3(20, 20, 10), kRes, 0.02);
    const DistanceField df(g, 2.0);
    std::vector<Vec3> c;
    for (int i = 0; i < 11; ++i) c.push_back(Vec3(0.5 + 3 * u(rng), 0.5 + 3 * u(rng), 0.5 + u(rng)));
    std::vector<Vec3> gc, gs, gst;
    cost_terms(c, 0.5, 0.8, df, &gc, &gs, &gst);
    for (std::size_t i = 0; i < c.size(); ++i) {
      bool near_kink = false;
      for (int a = 0; a < 3; ++a) {
        const double f = (c[i][a] - g.origin()[a]) / kRes - 0.5;
        near_kink |= std::abs(f - std::round(f)) < 1e-3;
      }
      Vec3 fc, fs, fst;
      for (int a = 0; a < 3; ++a) {
        auto cp = c, cm = c;
        cp[i][a] += h;
        cm[i][a] -= h;
        const auto tp = cost_terms(cp, 0.5, 0.8, df), tm = cost_terms(cm, 0.5, 0.8, df);
        fc[a] = (tp.control - tm.control) / (2 * h);
        fs[a] = (tp.smooth - tm.smooth) / (2 * h);
        fst[a] = (tp.static_ - tm.static_) / (2 * h);
      }
      worst = std::max({worst, rel(gc[i], fc), rel(gs[i], fs)});
      const bool interior = i >= 3 && i + 3 < c.size();
      if (interior && !near_kink && fst.norm() > 1e-6) worst = std::max(worst, rel(gst[i], fst));
      ++checked;
    }
    const BSplineTrajectory init(c, 0.5);
    const auto r = optimize(init, CostWeights{}, df, 60);
    for (std::size_t k = 1; k < r.history.size(); ++k) monotone &= r.history[k] <= r.history[k - 1];
    for (int i = 0; i < BSplineTrajectory::fixed(); ++i) {
      pinned &= r.trajectory.controls()[i] == init.controls()[i];
      pinned &= r.trajectory.controls()[init.size() - 1 - i] == init.controls()[init.size() - 1 - i];
    }
  }
  report(6, worst <= 1e-4 && monotone && pinned,
         fmt("B-spline cost gradients vs finite differences on 50 instances: worst rel err %.2e over %d controls; "
             "history %s; endpoints %s.",
             worst, checked, monotone ? "nonincreasing" : "INCREASES", pinned ? "fixed" : "MOVED"));
}

void mpc() {
  std::mt19937_64 rng(31);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  const MpcConfig cfg;
  double residual = 0.0;
  bool bounded = true, pinned = true;
  for (int inst = 0; inst < 100; ++inst) {
    VoxelGrid g(Vec3::Zero(), 0.2, Index3(40, 40, 15), CellState::Free);
    fill_box(g, Index3(20, 0, 0), Index3(21, static_cast<int>(10 + 25 * u(rng)), 14), CellState::Occupied);
    const DistanceField df(g, 2.0);
    const RobotState x{Vec3(1 + 6 * u(rng), 1 + 6 * u(rng), 0.8 + u(rng)), Vec3(u(rng) - 0.5, u(rng) - 0.5, 0.0)};
    const Vec3 v(2 * u(rng) - 1, 2 * u(rng) - 1, 0.0);
    std::vector<RobotState> ref;
    for (int k = 0; k <= cfg.horizon; ++k) ref.push_back({x.p + v * (k * cfg.dt), v});
    Obstacle o;
    o.kind = ObstacleKind::Dynamic;
    o.shape = ShapeKind::Cylinder;
    o.cylinder = {Vec3(1 + 6 * u(rng), 1 + 6 * u(rng), 0.0), 0.25, 1.8};
    o.waypoints = {o.cylinder.base, Vec3(1 + 6 * u(rng), 1 + 6 * u(rng), 0.0)};
    o.speed = 0.6 * u(rng);
    const auto pred = predict_obstacles({o}, 0.0, cfg.horizon, cfg.dt, cfg.dynamic_margin, cfg.uncertainty_growth);
    const auto s = solve_mpc(x, ref, df, pred, cfg);
    pinned &= s.states.front() == x;
    for (int k = 0; k < cfg.horizon; ++k) {
      bounded &= (s.controls[k].array() >= cfg.u_min).all() && (s.controls[k].array() <= cfg.u_max).all();
      const RobotState n = predict_dynamics(s.states[k], {s.controls[k]}, cfg.dt);
      residual = std::max({residual, (n.p - s.states[k + 1].p).cwiseAbs().maxCoeff(),
                           (n.v - s.states[k + 1].v).cwiseAbs().maxCoeff()});
    }
  }

  // a walker crossing the straight reference
  const VoxelGrid open(Vec3::Zero(), 0.2, Index3(60, 40, 20), CellState::Free);
  const DistanceField df(open, 2.0);
  const RobotState x{Vec3(2, 4, 1), Vec3(1, 0, 0)};
  std::vector<RobotState> ref;
  for (int k = 0; k <= cfg.horizon; ++k) ref.push_back({x.p + x.v * (k * cfg.dt), x.v});
  Obstacle w;
  w.kind = ObstacleKind::Dynamic;
  w.shape = ShapeKind::Cylinder;
  w.cylinder = {Vec3(3.2, 3.2, 0), 0.25, 1.8};
  w.waypoints = {Vec3(3.2, 3.2, 0), Vec3(3.2, 7, 0)};
  w.speed = 0.6;
  const auto pred = predict_obstacles({w}, 0.0, cfg.horizon, cfg.dt, cfg.dynamic_margin, cfg.uncertainty_growth);
  const auto s = solve_mpc(x, ref, df, pred, cfg);
  const double clearance = dense_clearance(s, df, pred, cfg);
  report(7, residual <= 1e-9 && bounded && pinned && s.feasible && clearance >= 0.0,
         fmt("MPC on 100 random problems: dynamics residual %.1e, bounds %s, x0 %s; crossing walker feasible %d, "
             "dense clearance %.3f m.",
             residual, bounded ? "held" : "VIOLATED", pinned ? "pinned" : "MOVED", s.feasible, clearance));
}

void world() {
  std::mt19937_64 rng(8);
  std::uniform_int_distribution<int> dim(1, 10);
  int rays = 0, hits = 0, mismatches = 0, grazing = 0;
  double worst_dist = 0.0, worst_df = 0.0;
  for (int w = 0; w < 100; ++w) {
    const VoxelGrid g = random_grid(rng, Index3(dim(rng), dim(rng), dim(rng)), 0.2, 0.15, 0.05);
    for (int r = 0; r < 30; ++r, ++rays) {
      const Vec3 o = random_point_in(rng, g);
      const Vec3 d = random_unit(rng);
      const auto got = raycast(g, o, d, 5.0);
      const auto want = exact_first_opaque(g, o, d, 5.0);
      if (got.has_value() != want.has_value()) {
        // only a ray that just touches an edge or corner may go either way
        if (want && want->chord < 1e-9) ++grazing;
        else ++mismatches;
        continue;
      }
      if (!got) continue;
      ++hits;
      if (got->cell != want->cell) {
        if (chord_length(g, o, d, got->cell) < 1e-9 || want->chord < 1e-9) ++grazing;
        else ++mismatches;
        continue;
      }
      worst_dist = std::max(worst_dist, std::abs(got->distance - want->entry));
    }
    const DistanceField df(g, 1.0);
    for (std::size_t i = 0; i < g.size(); ++i)
      worst_df = std::max(worst_df, std::abs(df.values()[i] - brute_force_distance(g, g.unflatten(i), 1.0)));
  }
  report(8, mismatches == 0 && worst_dist <= 0.1 + 1e-12 && worst_df <= 1e-9,
         fmt("raycast vs exact slab oracle: %d rays, %d hits, %d mismatches (%d grazing ties), worst distance err "
             "%.3g m; distance field vs brute force worst err %.1e.",
             rays, hits, mismatches, grazing, worst_dist, worst_df));
}

}  // namespace

int main() {
  try {
    missions();
    tsp();
    bspline();
    mpc();
    world();
  } catch (const std::exception& e) {
    std::printf("[FAIL] aborted: %s\n", e.what());
    return 1;
  }
  int failures = 0;
  for (const auto& [id, r] : results) {
    std::printf("[%s] %d %s\n", r.first ? "PASS" : "FAIL", id, r.second.c_str());
    failures += !r.first;
  }
  std::printf("%s: %d criterion(s) failed\n", failures ? "FAILED" : "OK", failures);
  return failures ? 1 : 0;
}
