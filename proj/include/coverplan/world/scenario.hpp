#pragma once

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <initializer_list>
#include <sstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "coverplan/io/atomic_file.hpp"
#include "coverplan/world/obstacle.hpp"
#include "coverplan/world/params.hpp"
#include "coverplan/world/surface.hpp"
#include "coverplan/world/voxel_grid.hpp"

namespace coverplan {

struct RobotStart {
  Vec3 position = Vec3::Zero();
  double yaw = 0.0;
  bool operator==(const RobotStart&) const = default;
};

/// A complete experiment: reference map, hidden world content, robot, sensor and tunables.
struct Scenario {
  VoxelGrid reference;
  SurfaceSet surfaces;
  std::vector<Obstacle> unforeseen;  // static content missing from the reference map
  std::vector<Obstacle> dynamic_obstacles;
  RobotStart robot_start;
  CameraModel camera;
  PlannerParams params;
  std::uint64_t seed = 0;

  /// Reference map plus voxelized unforeseen obstacles. Dynamic obstacles are not baked in.
  VoxelGrid true_world() const {
    VoxelGrid world = reference;
    for (const auto& o : unforeseen) voxelize(world, o);
    return world;
  }

  /// Field-for-field equality of the serialized content.
  bool operator==(const Scenario& o) const {
    return reference == o.reference && surfaces == o.surfaces && unforeseen == o.unforeseen &&
           dynamic_obstacles == o.dynamic_obstacles && robot_start == o.robot_start &&
           camera == o.camera && params == o.params && seed == o.seed;
  }

  /// Checks cross-field invariants; throws ParseError naming the offending field.
  void validate() const {
    try {
      camera.validate();
    } catch (const DomainError& e) {
      throw ParseError(std::string("camera: ") + e.what());
    }
    validate_params(params);
    for (std::size_t i = 0; i < unforeseen.size(); ++i) {
      try {
        unforeseen[i].validate();
      } catch (const DomainError& e) {
        throw ParseError("true_world_extras[" + std::to_string(i) + "]: " + e.what());
      }
    }
    for (std::size_t i = 0; i < dynamic_obstacles.size(); ++i) {
      try {
        dynamic_obstacles[i].validate();
      } catch (const DomainError& e) {
        throw ParseError("dynamic_obstacles[" + std::to_string(i) + "]: " + e.what());
      }
    }
    const VoxelGrid world = true_world();
    const Index3 start = world.index_of(robot_start.position);
    if (!world.in_bounds(start))
      throw ParseError("robot_start.position_m: outside the grid");
    if (world.state(start) != CellState::Free)
      throw ParseError("robot_start.position_m: start cell is not Free in the true world");
  }
};

namespace detail {

using nlohmann::json;

/// JSON cursor that remembers its document path for error messages.
class Node {
 public:
  Node(const json& j, std::string path) : j_(j), path_(std::move(path)) {}

  const std::string& path() const { return path_; }
  const json& raw() const { return j_; }

  [[noreturn]] void fail(const std::string& what) const { throw ParseError(path_ + ": " + what); }

  Node at(const std::string& key) const {
    if (!j_.is_object()) fail("expected an object");
    auto it = j_.find(key);
    if (it == j_.end()) throw ParseError(child_path(key) + ": missing field");
    return Node(*it, child_path(key));
  }

  bool has(const std::string& key) const { return j_.is_object() && j_.contains(key); }

  Node operator[](std::size_t i) const { return Node(j_.at(i), path_ + "[" + std::to_string(i) + "]"); }

  std::size_t size() const {
    if (!j_.is_array()) fail("expected an array");
    return j_.size();
  }

  void only_keys(std::initializer_list<const char*> allowed) const {
    if (!j_.is_object()) fail("expected an object");
    for (auto it = j_.begin(); it != j_.end(); ++it) {
      bool ok = false;
      for (const char* a : allowed) ok = ok || it.key() == a;
      if (!ok) throw ParseError(child_path(it.key()) + ": unknown key");
    }
  }

  double number() const {
    if (!j_.is_number()) fail("expected a number");
    return j_.get<double>();
  }
  long long integer() const {
    if (!j_.is_number_integer()) fail("expected an integer");
    return j_.get<long long>();
  }
  bool boolean() const {
    if (!j_.is_boolean()) fail("expected a boolean");
    return j_.get<bool>();
  }
  std::string string() const {
    if (!j_.is_string()) fail("expected a string");
    return j_.get<std::string>();
  }
  Vec3 vec3() const {
    if (!j_.is_array() || j_.size() != 3) fail("expected [x, y, z]");
    return {(*this)[0].number(), (*this)[1].number(), (*this)[2].number()};
  }

 private:
  std::string child_path(const std::string& key) const {
    return path_.empty() ? key : path_ + "." + key;
  }

  const json& j_;
  std::string path_;
};

inline json vec_json(const Vec3& v) { return json::array({v.x(), v.y(), v.z()}); }

/// Run-length encoding of a sorted index list as [[start, length], ...].
inline json rle_encode(const std::vector<std::size_t>& sorted) {
  json out = json::array();
  std::size_t i = 0;
  while (i < sorted.size()) {
    std::size_t j = i + 1;
    while (j < sorted.size() && sorted[j] == sorted[j - 1] + 1) ++j;
    out.push_back(json::array({sorted[i], j - i}));
    i = j;
  }
  return out;
}

inline std::vector<std::size_t> rle_decode(const Node& n, std::size_t limit) {
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < n.size(); ++i) {
    const Node run = n[i];
    if (run.size() != 2) run.fail("expected [start, length]");
    const long long start = run[0].integer();
    const long long len = run[1].integer();
    if (start < 0 || len < 0 || static_cast<std::size_t>(start + len) > limit)
      run.fail("run outside the grid");
    for (long long k = 0; k < len; ++k) out.push_back(static_cast<std::size_t>(start + k));
  }
  return out;
}

inline json obstacle_json(const Obstacle& o) {
  json j;
  j["kind"] = o.kind == ObstacleKind::Static ? "static" : "dynamic";
  if (o.shape == ShapeKind::Box) {
    j["shape"] = "box";
    j["min_m"] = vec_json(o.box.min);
    j["max_m"] = vec_json(o.box.max);
  } else {
    j["shape"] = "cylinder";
    j["base_center_m"] = vec_json(o.cylinder.base);
    j["radius_m"] = o.cylinder.radius;
    j["height_m"] = o.cylinder.height;
  }
  if (o.kind == ObstacleKind::Dynamic) {
    json w = json::array();
    for (const auto& p : o.waypoints) w.push_back(vec_json(p));
    j["waypoints_m"] = w;
    j["speed_mps"] = o.speed;
  }
  return j;
}

inline Obstacle parse_obstacle(const Node& n) {
  Obstacle o;
  const std::string kind = n.at("kind").string();
  if (kind == "static") o.kind = ObstacleKind::Static;
  else if (kind == "dynamic") o.kind = ObstacleKind::Dynamic;
  else n.at("kind").fail("expected \"static\" or \"dynamic\"");
  const std::string shape = n.at("shape").string();
  if (shape == "box") {
    o.shape = ShapeKind::Box;
    if (o.kind == ObstacleKind::Dynamic) n.only_keys({"kind", "shape", "min_m", "max_m", "waypoints_m", "speed_mps"});
    else n.only_keys({"kind", "shape", "min_m", "max_m"});
    o.box.min = n.at("min_m").vec3();
    o.box.max = n.at("max_m").vec3();
  } else if (shape == "cylinder") {
    o.shape = ShapeKind::Cylinder;
    if (o.kind == ObstacleKind::Dynamic)
      n.only_keys({"kind", "shape", "base_center_m", "radius_m", "height_m", "waypoints_m", "speed_mps"});
    else
      n.only_keys({"kind", "shape", "base_center_m", "radius_m", "height_m"});
    o.cylinder.base = n.at("base_center_m").vec3();
    o.cylinder.radius = n.at("radius_m").number();
    o.cylinder.height = n.at("height_m").number();
    if (!(o.cylinder.radius > 0.0)) n.at("radius_m").fail("must be > 0");
    if (!(o.cylinder.height > 0.0)) n.at("height_m").fail("must be > 0");
  } else {
    n.at("shape").fail("expected \"box\" or \"cylinder\"");
  }
  if (o.kind == ObstacleKind::Dynamic) {
    const Node w = n.at("waypoints_m");
    for (std::size_t i = 0; i < w.size(); ++i) o.waypoints.push_back(w[i].vec3());
    o.speed = n.at("speed_mps").number();
    if (o.speed < 0.0) n.at("speed_mps").fail("must be >= 0");
  }
  try {
    o.validate();
  } catch (const DomainError& e) {
    n.fail(e.what());
  }
  return o;
}

inline json params_json(const PlannerParams& p) {
  json j = json::object();
  for (const auto& spec : param_specs())
    std::visit([&](auto member) { j[std::string(spec.key)] = p.*member; }, spec.member);
  return j;
}

inline PlannerParams parse_params(const Node& n) {
  PlannerParams p;
  if (!n.raw().is_object()) n.fail("expected an object");
  for (auto it = n.raw().begin(); it != n.raw().end(); ++it) {
    const ParamSpec* spec = find_param(it.key());
    const Node v(*it, n.path() + "." + it.key());
    if (!spec) v.fail("unknown key");
    std::visit(
        [&](auto member) {
          using T = std::remove_reference_t<decltype(p.*member)>;
          if constexpr (std::is_same_v<T, bool>) p.*member = v.boolean();
          else if constexpr (std::is_same_v<T, int>) p.*member = static_cast<int>(v.integer());
          else p.*member = v.number();
        },
        spec->member);
  }
  return p;
}

}  // namespace detail

inline nlohmann::json scenario_to_json(const Scenario& s) {
  using detail::json;
  using detail::vec_json;
  json j;
  std::vector<std::size_t> occupied;
  for (std::size_t i = 0; i < s.reference.size(); ++i)
    if (s.reference.state(i) == CellState::Occupied) occupied.push_back(i);
  const Index3& d = s.reference.dims();
  j["grid"] = {{"origin_m", vec_json(s.reference.origin())},
               {"resolution_m", s.reference.resolution()},
               {"dims", json::array({d.x(), d.y(), d.z()})},
               {"occupied_rle", detail::rle_encode(occupied)}};
  j["surfaces"] = {{"cells_rle", detail::rle_encode(s.surfaces.cells())}};
  json extras = json::array();
  for (const auto& o : s.unforeseen) extras.push_back(detail::obstacle_json(o));
  j["true_world_extras"] = {{"static_obstacles", extras}};
  json dyn = json::array();
  for (const auto& o : s.dynamic_obstacles) dyn.push_back(detail::obstacle_json(o));
  j["dynamic_obstacles"] = dyn;
  j["robot_start"] = {{"position_m", vec_json(s.robot_start.position)},
                      {"yaw_rad", s.robot_start.yaw}};
  j["camera"] = {{"fov_h_rad", s.camera.fov_h},
                 {"fov_v_rad", s.camera.fov_v},
                 {"range_m", s.camera.range},
                 {"max_incidence_rad", s.camera.max_incidence}};
  j["params"] = detail::params_json(s.params);
  j["seed"] = s.seed;
  return j;
}

/// Parses and validates a scenario document. Throws ParseError with a field path.
inline Scenario scenario_from_json(const nlohmann::json& doc) {
  using detail::Node;
  const Node root(doc, "");
  root.only_keys({"grid", "surfaces", "true_world_extras", "dynamic_obstacles", "robot_start",
                  "camera", "params", "seed"});
  Scenario s;

  const Node grid = root.at("grid");
  grid.only_keys({"origin_m", "resolution_m", "dims", "occupied_rle"});
  const Vec3 origin = grid.at("origin_m").vec3();
  const double res = grid.at("resolution_m").number();
  if (!(res > 0.0)) grid.at("resolution_m").fail("resolution must be > 0");
  const Node dims = grid.at("dims");
  if (dims.size() != 3) dims.fail("expected [nx, ny, nz]");
  const Index3 n(static_cast<int>(dims[0].integer()), static_cast<int>(dims[1].integer()),
                 static_cast<int>(dims[2].integer()));
  if ((n.array() < 1).any()) dims.fail("every dimension must be >= 1");
  s.reference = VoxelGrid(origin, res, n, CellState::Free);
  for (std::size_t i : detail::rle_decode(grid.at("occupied_rle"), s.reference.size()))
    s.reference.set(i, CellState::Occupied);

  const Node surf = root.at("surfaces");
  surf.only_keys({"cells_rle"});
  try {
    s.surfaces = SurfaceSet(s.reference, detail::rle_decode(surf.at("cells_rle"), s.reference.size()));
  } catch (const DomainError& e) {
    surf.at("cells_rle").fail(e.what());
  }

  const Node extras = root.at("true_world_extras");
  extras.only_keys({"static_obstacles"});
  const Node statics = extras.at("static_obstacles");
  for (std::size_t i = 0; i < statics.size(); ++i) {
    Obstacle o = detail::parse_obstacle(statics[i]);
    if (o.kind != ObstacleKind::Static) statics[i].at("kind").fail("expected \"static\"");
    s.unforeseen.push_back(std::move(o));
  }
  const Node dyn = root.at("dynamic_obstacles");
  for (std::size_t i = 0; i < dyn.size(); ++i) {
    Obstacle o = detail::parse_obstacle(dyn[i]);
    if (o.kind != ObstacleKind::Dynamic) dyn[i].at("kind").fail("expected \"dynamic\"");
    s.dynamic_obstacles.push_back(std::move(o));
  }

  const Node start = root.at("robot_start");
  start.only_keys({"position_m", "yaw_rad"});
  s.robot_start.position = start.at("position_m").vec3();
  s.robot_start.yaw = start.at("yaw_rad").number();

  const Node cam = root.at("camera");
  cam.only_keys({"fov_h_rad", "fov_v_rad", "range_m", "max_incidence_rad"});
  s.camera.fov_h = cam.at("fov_h_rad").number();
  s.camera.fov_v = cam.at("fov_v_rad").number();
  s.camera.range = cam.at("range_m").number();
  s.camera.max_incidence = cam.at("max_incidence_rad").number();

  s.params = detail::parse_params(root.at("params"));
  const long long seed = root.at("seed").integer();
  if (seed < 0) root.at("seed").fail("must be >= 0");
  s.seed = static_cast<std::uint64_t>(seed);

  s.validate();
  return s;
}

inline Scenario load_scenario(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ParseError(path.string() + ": cannot open file");
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(in);
  } catch (const nlohmann::json::parse_error& e) {
    throw ParseError(path.string() + ": malformed JSON: " + e.what());
  }
  return scenario_from_json(doc);
}

inline void save_scenario(const Scenario& s, const std::filesystem::path& path) {
  write_file_atomic(path, scenario_to_json(s).dump(1) + "\n");
}

}  // namespace coverplan
