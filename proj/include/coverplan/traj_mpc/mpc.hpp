#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <vector>

#include "coverplan/world/distance_field.hpp"
#include "coverplan/world/obstacle.hpp"

namespace coverplan {

struct RobotState {
  Vec3 p = Vec3::Zero();
  Vec3 v = Vec3::Zero();
  bool operator==(const RobotState&) const = default;
};

struct ControlInput {
  Vec3 a = Vec3::Zero();
};

struct MpcConfig {
  int horizon = 20;
  double dt = 0.1;
  double lambda_u = 0.1;
  double u_min = -2.0;
  double u_max = 2.0;
  double robot_radius = 0.3;
  double static_margin = 0.2;
  double dynamic_margin = 0.1;
  double uncertainty_growth = 0.05;  // m per step
  double w_p = 1.0;
  double w_v = 1.0;
  int max_scp_iters = 6;
  int inner_iters = 300;
  double penalty = 100.0;  // initial penalty weight, doubled every SCP iteration
  double scp_tol = 1e-3;
  double constraint_buffer = 0.02;  // extra clearance asked of the linearized constraints
  // axis-aligned region the robot body must stay inside; unbounded by default
  Vec3 workspace_min = Vec3::Constant(-std::numeric_limits<double>::infinity());
  Vec3 workspace_max = Vec3::Constant(std::numeric_limits<double>::infinity());

  void validate() const {
    if (horizon < 2) throw DomainError("mpc: horizon must be >= 2");
    if (!(dt > 0.0)) throw DomainError("mpc: dt must be > 0");
    if (!(lambda_u >= 0.0)) throw DomainError("mpc: lambda_u must be >= 0");
    if (!(u_min <= 0.0 && u_max >= 0.0)) throw DomainError("mpc: control bounds must contain 0");
    if (!(robot_radius >= 0.0 && static_margin >= 0.0 && dynamic_margin >= 0.0 && uncertainty_growth >= 0.0 &&
          constraint_buffer >= 0.0))
      throw DomainError("mpc: radii and margins must be >= 0");
    if (!(w_p >= 0.0 && w_v >= 0.0)) throw DomainError("mpc: tracking weights must be >= 0");
    if (max_scp_iters < 1 || inner_iters < 1) throw DomainError("mpc: iteration limits must be >= 1");
    if (!((workspace_max - workspace_min).array() > 2.0 * robot_radius).all())
      throw DomainError("mpc: workspace must be wider than the robot");
  }

  double static_clearance() const { return robot_radius + static_margin; }

  /// Clearance of the robot body from the workspace faces; negative once it pokes out.
  double workspace_clearance(const Vec3& p) const {
    return std::min((p - workspace_min).minCoeff(), (workspace_max - p).minCoeff()) - robot_radius;
  }
};

struct MpcSolution {
  std::vector<RobotState> states;  // x_0..x_N
  std::vector<Vec3> controls;      // u_0..u_{N-1}
  bool feasible = false;
  bool braking = false;  // fallback solution
  double objective = 0.0;
  double min_clearance = 0.0;
  int scp_iterations = 0;
  std::vector<double> violation_history;  // nonlinear violation after each accepted SCP iterate
};

/// Double integrator step.
inline RobotState predict_dynamics(const RobotState& x, const ControlInput& u, double dt) {
  return {x.p + x.v * dt + 0.5 * u.a * dt * dt, x.v + u.a * dt};
}

/// One dynamic obstacle over the horizon, steps 0..N.
struct PredictedObstacle {
  std::vector<Cylinder> steps;
};

/// Constant-velocity extrapolation along each obstacle's current waypoint segment. The radius
/// of step k grows by dynamic_margin + growth * k.
inline std::vector<PredictedObstacle> predict_obstacles(const std::vector<Obstacle>& obstacles, double t_now,
                                                        int horizon, double dt, double dynamic_margin = 0.0,
                                                        double growth = 0.05) {
  std::vector<PredictedObstacle> out;
  for (const auto& o : obstacles) {
    if (o.kind != ObstacleKind::Dynamic) continue;
    const DynamicPose pose = dynamic_pose(o, t_now);
    PredictedObstacle pred;
    for (int k = 0; k <= horizon; ++k) {
      Cylinder c = pose.shape;
      c.base += pose.velocity * (k * dt);
      c.radius += dynamic_margin + growth * k;
      pred.steps.push_back(c);
    }
    out.push_back(std::move(pred));
  }
  return out;
}

inline std::vector<RobotState> rollout(const RobotState& x0, const std::vector<Vec3>& u, double dt) {
  std::vector<RobotState> xs{x0};
  xs.reserve(u.size() + 1);
  for (const auto& a : u) xs.push_back(predict_dynamics(xs.back(), {a}, dt));
  return xs;
}

/// Smallest clearance of a solved trajectory, checked at 10 subsamples per step against the
/// inflated static field and the predicted obstacles. Negative means a violation.
inline double trajectory_clearance(const std::vector<RobotState>& xs, const std::vector<Vec3>& u,
                                   const DistanceField& df, const std::vector<PredictedObstacle>& obstacles,
                                   const MpcConfig& cfg) {
  constexpr int kSub = 10;
  double best = std::numeric_limits<double>::infinity();
  for (std::size_t k = 0; k < u.size(); ++k) {
    for (int j = (k == 0 ? 0 : 1); j <= kSub; ++j) {
      const double s = static_cast<double>(j) / kSub;
      const double tau = s * cfg.dt;
      const Vec3 p = xs[k].p + xs[k].v * tau + 0.5 * u[k] * tau * tau;
      best = std::min({best, df.distance(p) - cfg.static_clearance(), cfg.workspace_clearance(p)});
      for (const auto& o : obstacles) {
        const std::size_t a = std::min(k, o.steps.size() - 1), b = std::min(k + 1, o.steps.size() - 1);
        Cylinder c = o.steps[a];
        c.base = (1.0 - s) * o.steps[a].base + s * o.steps[b].base;
        c.radius = (1.0 - s) * o.steps[a].radius + s * o.steps[b].radius;
        best = std::min(best, cylinder_distance(c, p) - cfg.robot_radius);
      }
    }
  }
  return best;
}

/// Clearance of a single position (no subsampling), using step 0 of each prediction.
inline double point_clearance(const Vec3& p, const DistanceField& df, const std::vector<PredictedObstacle>& obstacles,
                              const MpcConfig& cfg) {
  double best = std::min(df.distance(p) - cfg.static_clearance(), cfg.workspace_clearance(p));
  for (const auto& o : obstacles) best = std::min(best, cylinder_distance(o.steps.front(), p) - cfg.robot_radius);
  return best;
}

namespace detail {

/// a . p_k >= b
struct HalfSpace {
  int k;
  Vec3 a;
  double b;
};

inline double tracking_objective(const std::vector<RobotState>& xs, const std::vector<Vec3>& u,
                                 const std::vector<RobotState>& ref, const MpcConfig& cfg) {
  double f = 0.0;
  for (std::size_t k = 1; k < xs.size(); ++k)
    f += cfg.w_p * (xs[k].p - ref[k].p).squaredNorm() + cfg.w_v * (xs[k].v - ref[k].v).squaredNorm();
  for (const auto& a : u) f += cfg.lambda_u * a.squaredNorm();
  return f;
}

/// Nonlinear violation summed over the states x_1..x_N.
inline double violation(const std::vector<RobotState>& xs, const DistanceField& df,
                        const std::vector<PredictedObstacle>& obstacles, const MpcConfig& cfg) {
  double v = 0.0;
  for (std::size_t k = 1; k < xs.size(); ++k) {
    v += std::max(0.0, cfg.static_clearance() - df.distance(xs[k].p));
    v += std::max(0.0, -cfg.workspace_clearance(xs[k].p));
    for (const auto& o : obstacles)
      v += std::max(0.0, cfg.robot_radius - cylinder_distance(o.steps[std::min(k, o.steps.size() - 1)], xs[k].p));
  }
  return v;
}

inline std::vector<HalfSpace> linearize(const std::vector<RobotState>& xs, const DistanceField& df,
                                        const std::vector<PredictedObstacle>& obstacles, const MpcConfig& cfg) {
  constexpr double kActivation = 1.0;
  const double buf = cfg.constraint_buffer;
  std::vector<HalfSpace> hs;
  for (std::size_t k = 1; k < xs.size(); ++k) {
    const Vec3& p = xs[k].p;
    Vec3 g;
    const double d = df.distance(p, g);
    if (d < cfg.static_clearance() + kActivation && d < df.truncation() - 1e-9 && g.norm() > 1e-9)
      hs.push_back({static_cast<int>(k), g, cfg.static_clearance() + buf - d + g.dot(p)});
    for (int a = 0; a < 3; ++a) {
      if (p[a] - cfg.workspace_min[a] < cfg.robot_radius + kActivation)
        hs.push_back({static_cast<int>(k), Vec3::Unit(a), cfg.workspace_min[a] + cfg.robot_radius + buf});
      if (cfg.workspace_max[a] - p[a] < cfg.robot_radius + kActivation)
        hs.push_back({static_cast<int>(k), -Vec3::Unit(a), -(cfg.workspace_max[a] - cfg.robot_radius - buf)});
    }
    for (const auto& o : obstacles) {
      const Cylinder& c = o.steps[std::min(k, o.steps.size() - 1)];
      const double s = cylinder_distance(c, p);
      if (s > cfg.robot_radius + kActivation) continue;
      const Vec3 n = cylinder_distance_gradient(c, p);
      hs.push_back({static_cast<int>(k), n, cfg.robot_radius + buf - s + n.dot(p)});
    }
  }
  return hs;
}

/// Tracking objective plus quadratic penalty on the half-spaces; gradient through the adjoint
/// of the rollout.
inline double penalized(const RobotState& x0, const std::vector<Vec3>& u, const std::vector<RobotState>& ref,
                        const std::vector<HalfSpace>& hs, double rho, const MpcConfig& cfg,
                        std::vector<Vec3>* grad) {
  const auto xs = rollout(x0, u, cfg.dt);
  double f = tracking_objective(xs, u, ref, cfg);
  const std::size_t n = u.size();
  std::vector<Vec3> gp(n + 1, Vec3::Zero()), gv(n + 1, Vec3::Zero());
  for (const auto& h : hs) {
    const double viol = h.b - h.a.dot(xs[h.k].p);
    if (viol <= 0.0) continue;
    f += rho * viol * viol;
    gp[h.k] -= 2.0 * rho * viol * h.a;
  }
  if (!grad) return f;
  for (std::size_t k = 1; k <= n; ++k) {
    gp[k] += 2.0 * cfg.w_p * (xs[k].p - ref[k].p);
    gv[k] += 2.0 * cfg.w_v * (xs[k].v - ref[k].v);
  }
  grad->assign(n, Vec3::Zero());
  const double dt = cfg.dt;
  Vec3 lp = gp[n], lv = gv[n];
  for (std::size_t k = n; k-- > 0;) {
    (*grad)[k] = 2.0 * cfg.lambda_u * u[k] + lp * (0.5 * dt * dt) + lv * dt;
    lv = gv[k] + lp * dt + lv;
    lp = gp[k] + lp;
  }
  return f;
}

inline Vec3 clamp_control(const Vec3& a, const MpcConfig& cfg) {
  return a.cwiseMax(Vec3::Constant(cfg.u_min)).cwiseMin(Vec3::Constant(cfg.u_max));
}

/// Accelerated projected gradient (FISTA) with backtracking on the step size.
inline std::vector<Vec3> solve_inner(const RobotState& x0, std::vector<Vec3> u, const std::vector<RobotState>& ref,
                                     const std::vector<HalfSpace>& hs, double rho, const MpcConfig& cfg,
                                     double& lipschitz) {
  const std::size_t n = u.size();
  std::vector<Vec3> y = u, g, next(n), prev = u;
  double t = 1.0;
  for (int it = 0; it < cfg.inner_iters; ++it) {
    const double fy = penalized(x0, y, ref, hs, rho, cfg, &g);
    double step_sq = 0.0;
    for (int bt = 0; bt < 60; ++bt) {
      double lin = 0.0;
      step_sq = 0.0;
      for (std::size_t k = 0; k < n; ++k) {
        next[k] = clamp_control(y[k] - g[k] / lipschitz, cfg);
        const Vec3 d = next[k] - y[k];
        lin += g[k].dot(d);
        step_sq += d.squaredNorm();
      }
      const double fn = penalized(x0, next, ref, hs, rho, cfg, nullptr);
      if (fn <= fy + lin + 0.5 * lipschitz * step_sq + 1e-12 * std::abs(fy)) break;
      lipschitz *= 2.0;
    }
    const double t_next = 0.5 * (1.0 + std::sqrt(1.0 + 4.0 * t * t));
    const double beta = (t - 1.0) / t_next;
    double moved = 0.0;
    for (std::size_t k = 0; k < n; ++k) {
      moved = std::max(moved, (next[k] - prev[k]).cwiseAbs().maxCoeff());
      y[k] = clamp_control(next[k] + beta * (next[k] - prev[k]), cfg);
    }
    prev = next;
    t = t_next;
    if (moved < 1e-9 || step_sq == 0.0) break;
  }
  return prev;
}

inline std::vector<Vec3> braking_controls(const RobotState& x0, const MpcConfig& cfg) {
  std::vector<Vec3> u;
  RobotState x = x0;
  for (int k = 0; k < cfg.horizon; ++k) {
    Vec3 a = Vec3::Zero();
    const double speed = x.v.norm();
    if (speed > 1e-12) {
      const Vec3 dir = x.v / speed;
      const double along = std::min(cfg.u_max, -cfg.u_min) / std::max(dir.cwiseAbs().maxCoeff(), 1e-12);
      a = -dir * std::min(along, speed / cfg.dt);
      a = clamp_control(a, cfg);
    }
    u.push_back(a);
    x = predict_dynamics(x, {a}, cfg.dt);
  }
  return u;
}

}  // namespace detail

/// Successive convexification: collision sets are linearized around the previous iterate,
/// turned into quadratic penalties (weight doubled each round) and the convex inner problem is
/// solved by projected accelerated gradient over the controls. States always come from an
/// exact rollout of the controls.
inline MpcSolution solve_mpc(const RobotState& x_now, const std::vector<RobotState>& ref, const DistanceField& df,
                             const std::vector<PredictedObstacle>& obstacles, const MpcConfig& cfg,
                             const std::vector<Vec3>* warm_start = nullptr) {
  cfg.validate();
  const int n = cfg.horizon;
  if (static_cast<int>(ref.size()) != n + 1) throw DomainError("mpc: reference window must have N+1 states");
  if (!x_now.p.allFinite() || !x_now.v.allFinite()) throw DomainError("mpc: state must be finite");

  // initial guess: the warm start or zero controls, whichever scores lower
  std::vector<Vec3> u(static_cast<std::size_t>(n), Vec3::Zero());
  if (warm_start && static_cast<int>(warm_start->size()) == n) {
    std::vector<Vec3> w(warm_start->size());
    for (std::size_t k = 0; k < w.size(); ++k) w[k] = detail::clamp_control((*warm_start)[k], cfg);
    const auto hs = detail::linearize(rollout(x_now, w, cfg.dt), df, obstacles, cfg);
    if (detail::penalized(x_now, w, ref, hs, cfg.penalty, cfg, nullptr) <
        detail::penalized(x_now, u, ref, detail::linearize(rollout(x_now, u, cfg.dt), df, obstacles, cfg),
                          cfg.penalty, cfg, nullptr))
      u = std::move(w);
  }

  MpcSolution sol;
  std::vector<RobotState> xs = rollout(x_now, u, cfg.dt);
  double viol = detail::violation(xs, df, obstacles, cfg);
  double rho = cfg.penalty;
  double lipschitz = 1.0;
  for (int it = 0; it < cfg.max_scp_iters; ++it) {
    const auto hs = detail::linearize(xs, df, obstacles, cfg);
    auto u_next = detail::solve_inner(x_now, u, ref, hs, rho, cfg, lipschitz);
    auto xs_next = rollout(x_now, u_next, cfg.dt);
    const double viol_next = detail::violation(xs_next, df, obstacles, cfg);
    // the first iterate is always taken; afterwards an iterate that raises the violation ends the loop
    if (it > 0 && viol_next > viol) break;
    double disp = 0.0;
    for (std::size_t k = 0; k < xs.size(); ++k) disp = std::max(disp, (xs_next[k].p - xs[k].p).norm());
    u = std::move(u_next);
    xs = std::move(xs_next);
    viol = viol_next;
    sol.violation_history.push_back(viol);
    sol.scp_iterations = it + 1;
    if (disp < cfg.scp_tol) break;
    rho *= 2.0;
  }

  const double c0 = point_clearance(x_now.p, df, obstacles, cfg);
  // from inside the margin band, a trajectory that does not get deeper is accepted
  const double required = std::min(0.0, c0) - 1e-9;
  sol.controls = u;
  sol.states = xs;
  sol.objective = detail::tracking_objective(xs, u, ref, cfg);
  sol.min_clearance = trajectory_clearance(xs, u, df, obstacles, cfg);
  sol.feasible = sol.min_clearance >= required;
  if (sol.feasible) return sol;

  auto ub = detail::braking_controls(x_now, cfg);
  auto xb = rollout(x_now, ub, cfg.dt);
  const double cb = trajectory_clearance(xb, ub, df, obstacles, cfg);
  if (cb >= sol.min_clearance) {
    sol.controls = std::move(ub);
    sol.states = std::move(xb);
    sol.objective = detail::tracking_objective(sol.states, sol.controls, ref, cfg);
    sol.min_clearance = cb;
    sol.braking = true;
    sol.feasible = cb >= required;
  }
  return sol;
}

}  // namespace coverplan
