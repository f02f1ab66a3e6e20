#pragma once

#include <filesystem>
#include <sstream>
#include <string>
#include <vector>

#include "coverplan/io/atomic_file.hpp"
#include "coverplan/traj_mpc/mpc.hpp"
#include "coverplan/traj_static/bspline.hpp"

namespace coverplan {

/// Reference states at t, t + dt, ..., t + N dt. Past the end the goal is held at rest.
inline std::vector<RobotState> reference_window(const BSplineTrajectory& traj, double t, int horizon, double dt) {
  std::vector<RobotState> ref;
  ref.reserve(static_cast<std::size_t>(horizon) + 1);
  for (int k = 0; k <= horizon; ++k) {
    const double tk = t + k * dt;
    if (tk >= traj.duration()) {
      ref.push_back({traj.goal(), Vec3::Zero()});
    } else {
      const auto s = traj.sample(tk);
      ref.push_back({s.p, s.v});
    }
  }
  return ref;
}

/// Receding-horizon wrapper: one instance per robot, calls strictly sequential.
class MpcController {
 public:
  explicit MpcController(MpcConfig cfg = {}) : cfg_(cfg) { cfg_.validate(); }

  const MpcConfig& config() const { return cfg_; }
  const MpcSolution& last() const { return last_; }
  void reset() { warm_.clear(); }

  /// Solves from the measured state against the trajectory at time t_traj and returns u_0.
  ControlInput step(const RobotState& x, const BSplineTrajectory& traj, double t_traj, const DistanceField& df,
                    const std::vector<Obstacle>& dynamic, double t_now) {
    const auto ref = reference_window(traj, t_traj, cfg_.horizon, cfg_.dt);
    const auto pred = predict_obstacles(dynamic, t_now, cfg_.horizon, cfg_.dt, cfg_.dynamic_margin,
                                        cfg_.uncertainty_growth);
    last_ = solve_mpc(x, ref, df, pred, cfg_, warm_.empty() ? nullptr : &warm_);
    warm_.assign(last_.controls.begin() + 1, last_.controls.end());
    warm_.push_back(last_.controls.back());
    return {last_.controls.front()};
  }

 private:
  MpcConfig cfg_;
  MpcSolution last_;
  std::vector<Vec3> warm_;
};

struct TelemetryRow {
  double t = 0.0;
  RobotState x;
  double yaw = 0.0;
  Vec3 u = Vec3::Zero();
  double objective = 0.0;
  bool feasible = true;
  double min_clearance = 0.0;
};

inline std::string telemetry_csv(const std::vector<TelemetryRow>& rows) {
  std::ostringstream os;
  os.precision(9);
  os << "t_s,px_m,py_m,pz_m,vx_mps,vy_mps,vz_mps,yaw_rad,ax_mps2,ay_mps2,az_mps2,objective,feasible,min_clearance_m\n";
  for (const auto& r : rows) {
    os << r.t;
    for (int i = 0; i < 3; ++i) os << ',' << r.x.p[i];
    for (int i = 0; i < 3; ++i) os << ',' << r.x.v[i];
    os << ',' << r.yaw;
    for (int i = 0; i < 3; ++i) os << ',' << r.u[i];
    os << ',' << r.objective << ',' << (r.feasible ? 1 : 0) << ',' << r.min_clearance << '\n';
  }
  return os.str();
}

inline void write_telemetry_csv(const std::filesystem::path& path, const std::vector<TelemetryRow>& rows) {
  write_file_atomic(path, telemetry_csv(rows));
}

}  // namespace coverplan
