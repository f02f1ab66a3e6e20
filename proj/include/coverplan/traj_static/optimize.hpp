#pragma once

#include <cmath>
#include <vector>

#include <nlohmann/json.hpp>

#include "coverplan/traj_static/bspline.hpp"
#include "coverplan/traj_static/guide_path.hpp"
#include "coverplan/world/distance_field.hpp"

namespace coverplan {

struct CostWeights {
  double control = 1.0;
  double smooth = 1.0;
  double static_ = 10.0;
  double d_safe = 0.5;

  void validate() const {
    if (!(control >= 0.0 && smooth >= 0.0 && static_ >= 0.0 && d_safe >= 0.0))
      throw DomainError("cost weights must be >= 0");
  }
};

struct CostTerms {
  double control = 0.0;
  double smooth = 0.0;
  double static_ = 0.0;
};

/// Unweighted cost terms and, optionally, their gradients with respect to every control
/// point (the caller zeroes out fixed ones).
inline CostTerms cost_terms(const std::vector<Vec3>& c, double dt, double d_safe, const DistanceField& df,
                            std::vector<Vec3>* g_control = nullptr, std::vector<Vec3>* g_smooth = nullptr,
                            std::vector<Vec3>* g_static = nullptr) {
  const int n = static_cast<int>(c.size());
  const int fixed = BSplineTrajectory::fixed();
  CostTerms t;
  for (auto* g : {g_control, g_smooth, g_static})
    if (g) g->assign(c.size(), Vec3::Zero());

  const double s2 = 1.0 / std::pow(dt, 4), s3 = 1.0 / std::pow(dt, 6);
  for (int i = 0; i + 2 < n; ++i) {
    const Vec3 a = c[i + 2] - 2.0 * c[i + 1] + c[i];
    t.control += a.squaredNorm() * s2;
    if (g_control) {
      const Vec3 ga = 2.0 * s2 * a;
      (*g_control)[i] += ga;
      (*g_control)[i + 1] -= 2.0 * ga;
      (*g_control)[i + 2] += ga;
    }
  }
  for (int i = 0; i + 3 < n; ++i) {
    const Vec3 j = c[i + 3] - 3.0 * c[i + 2] + 3.0 * c[i + 1] - c[i];
    t.smooth += j.squaredNorm() * s3;
    if (g_smooth) {
      const Vec3 gj = 2.0 * s3 * j;
      (*g_smooth)[i] -= gj;
      (*g_smooth)[i + 1] += 3.0 * gj;
      (*g_smooth)[i + 2] -= 3.0 * gj;
      (*g_smooth)[i + 3] += gj;
    }
  }
  for (int i = fixed; i < n - fixed; ++i) {
    Vec3 grad;
    const double d = df.distance(c[i], grad);
    const double h = d_safe - d;
    if (h <= 0.0) continue;
    t.static_ += h * h;
    if (g_static) (*g_static)[i] -= 2.0 * h * grad;
  }
  return t;
}

inline double weighted_cost(const CostTerms& t, const CostWeights& w) {
  return w.control * t.control + w.smooth * t.smooth + w.static_ * t.static_;
}

/// Total cost and its gradient over the interior control points (fixed ones get zero).
inline double cost_and_gradient(const std::vector<Vec3>& c, double dt, const CostWeights& w,
                                const DistanceField& df, std::vector<Vec3>* grad) {
  if (!grad) return weighted_cost(cost_terms(c, dt, w.d_safe, df), w);
  std::vector<Vec3> gc, gs, gst;
  const double j = weighted_cost(cost_terms(c, dt, w.d_safe, df, &gc, &gs, &gst), w);
  const int n = static_cast<int>(c.size()), fixed = BSplineTrajectory::fixed();
  grad->assign(c.size(), Vec3::Zero());
  for (int i = fixed; i < n - fixed; ++i) (*grad)[i] = w.control * gc[i] + w.smooth * gs[i] + w.static_ * gst[i];
  return j;
}

struct OptimizeResult {
  BSplineTrajectory trajectory;
  std::vector<double> history;  // cost after each accepted iteration, starting with the initial cost
  int iterations = 0;
  bool converged = false;
};

/// Gradient descent with Armijo backtracking (c = 1e-4, step halving) on the interior
/// control points. Stops when the largest gradient component drops below `grad_tol`.
inline OptimizeResult optimize(const BSplineTrajectory& initial, const CostWeights& w, const DistanceField& df,
                               int max_iters = 200, double grad_tol = 1e-4) {
  w.validate();
  OptimizeResult r{initial, {}, 0, false};
  std::vector<Vec3>& c = r.trajectory.controls();
  const double dt = initial.dt();
  std::vector<Vec3> g, trial;

  double j = cost_and_gradient(c, dt, w, df, &g);
  if (!std::isfinite(j)) {
    // pull stray controls back inside the field and retry once
    const Vec3 lo = df.origin() + Vec3::Constant(0.5 * df.resolution());
    const Vec3 hi = df.origin() + (df.dims().cast<double>() - Vec3::Constant(0.5)) * df.resolution();
    for (int i = BSplineTrajectory::fixed(); i < r.trajectory.size() - BSplineTrajectory::fixed(); ++i)
      c[i] = c[i].cwiseMax(lo).cwiseMin(hi);
    j = cost_and_gradient(c, dt, w, df, &g);
    if (!std::isfinite(j)) throw OptimizationError("optimize: non-finite cost");
  }
  r.history.push_back(j);
  double step = 1e-3;
  for (; r.iterations < max_iters; ++r.iterations) {
    double g2 = 0.0, ginf = 0.0;
    for (const auto& v : g) {
      g2 += v.squaredNorm();
      ginf = std::max(ginf, v.cwiseAbs().maxCoeff());
    }
    if (ginf < grad_tol) {
      r.converged = true;
      break;
    }
    bool accepted = false;
    step *= 2.0;
    for (int halvings = 0; halvings < 60; ++halvings, step *= 0.5) {
      trial = c;
      for (std::size_t i = 0; i < c.size(); ++i) trial[i] -= step * g[i];
      const double jt = cost_and_gradient(trial, dt, w, df, nullptr);
      if (std::isfinite(jt) && jt <= j - 1e-4 * step * g2) {
        c.swap(trial);
        accepted = true;
        break;
      }
    }
    if (!accepted) break;  // no descent possible at machine precision
    j = cost_and_gradient(c, dt, w, df, &g);
    r.history.push_back(j);
  }
  return r;
}

struct StaticPlannerParams {
  double dt = 0.5;
  double v_ref = 1.0;
  double inflation = 0.3;
  double fallback_inflation = 0.0;  // tried when nothing keeps `inflation`
  int max_iters = 200;
  CostWeights weights;
};

/// Guide path, clamped B-spline fit and optimization from start to goal.
inline BSplineTrajectory plan_static(const VoxelGrid& grid, const DistanceField& df, const Vec3& start,
                                     const Vec3& goal, const StaticPlannerParams& p) {
  const auto guide = init_guide_path(grid, df, start, goal, p.inflation, p.fallback_inflation);
  const int n = control_count(polyline_length(guide), p.v_ref, p.dt);
  return optimize(fit_initial_controls(guide, p.dt, n), p.weights, df, p.max_iters).trajectory;
}

/// Samples at `hz` from t = 0 through the end of the trajectory.
inline std::vector<std::pair<double, TrajectorySample>> sample_uniform(const BSplineTrajectory& traj, double hz) {
  std::vector<std::pair<double, TrajectorySample>> out;
  const int n = static_cast<int>(std::ceil(traj.duration() * hz - 1e-9));
  for (int i = 0; i <= n; ++i) {
    const double t = std::min(traj.duration(), i / hz);
    out.emplace_back(t, traj.sample(t));
  }
  return out;
}

inline nlohmann::json trajectory_to_json(const BSplineTrajectory& traj, double hz = 50.0) {
  nlohmann::json samples = nlohmann::json::array();
  for (const auto& [t, s] : sample_uniform(traj, hz))
    samples.push_back({{"t_s", t},
                       {"p_m", {s.p.x(), s.p.y(), s.p.z()}},
                       {"v_mps", {s.v.x(), s.v.y(), s.v.z()}}});
  nlohmann::json controls = nlohmann::json::array();
  for (const auto& c : traj.controls()) controls.push_back({c.x(), c.y(), c.z()});
  return {{"degree", BSplineTrajectory::kDegree},
          {"dt_s", traj.dt()},
          {"duration_s", traj.duration()},
          {"control_points_m", controls},
          {"samples", samples}};
}

}  // namespace coverplan
