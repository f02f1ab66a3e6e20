#pragma once

#include <charconv>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "coverplan/common.hpp"

namespace coverplan {

/// Every tunable of the pipeline. Key names carry units.
struct PlannerParams {
  // segmentation
  double normal_radius_m = 0.45;
  double angle_thresh_deg = 20.0;
  double curvature_thresh = 0.05;
  int min_segment_size = 8;

  // viewpoint generation
  double standoff_m = 1.5;
  double overlap = 0.2;

  // sequencing
  int tau_max = 3;
  bool merge_adjacent_only = false;

  // static B-spline planner
  double bspline_dt_s = 0.5;
  double v_ref_mps = 1.0;
  double d_safe_m = 0.5;
  double alpha_control = 1.0;
  double alpha_smooth = 1.0;
  double alpha_static = 10.0;
  int opt_max_iters = 200;
  double df_truncation_m = 2.0;

  // MPC
  int mpc_horizon = 20;
  double mpc_dt_s = 0.1;
  double lambda_u = 0.1;
  double u_max_mps2 = 2.0;
  double robot_radius_m = 0.3;
  double static_margin_m = 0.2;
  double dynamic_margin_m = 0.15;
  double uncertainty_growth_m = 0.05;
  int scp_max_iters = 5;
  double position_weight = 1.0;
  double velocity_weight = 1.0;

  // view-angle adaptation
  bool view_adapt = true;
  double w_base = 1.0;
  double w_occluded = 3.0;
  double w_scanned = 0.1;
  double candidate_step_deg = 10.0;

  // simulator
  bool dynamic_obstacles = true;
  double yaw_rate_dps = 90.0;
  double dwell_timeout_s = 3.0;
  double arrive_tol_m = 0.2;
  double lidar_range_m = 8.0;
  int lidar_azimuth_rays = 32;
  int lidar_elevation_rays = 16;
  int replan_attempts = 2;
  double max_mission_time_s = 1500.0;

  bool operator==(const PlannerParams&) const = default;
};

using ParamMember =
    std::variant<double PlannerParams::*, int PlannerParams::*, bool PlannerParams::*>;

struct ParamSpec {
  std::string_view key;
  ParamMember member;
};

inline const std::vector<ParamSpec>& param_specs() {
  using P = PlannerParams;
  static const std::vector<ParamSpec> specs = {
      {"normal_radius_m", &P::normal_radius_m},
      {"angle_thresh_deg", &P::angle_thresh_deg},
      {"curvature_thresh", &P::curvature_thresh},
      {"min_segment_size", &P::min_segment_size},
      {"standoff_m", &P::standoff_m},
      {"overlap", &P::overlap},
      {"tau_max", &P::tau_max},
      {"merge_adjacent_only", &P::merge_adjacent_only},
      {"bspline_dt_s", &P::bspline_dt_s},
      {"v_ref_mps", &P::v_ref_mps},
      {"d_safe_m", &P::d_safe_m},
      {"alpha_control", &P::alpha_control},
      {"alpha_smooth", &P::alpha_smooth},
      {"alpha_static", &P::alpha_static},
      {"opt_max_iters", &P::opt_max_iters},
      {"df_truncation_m", &P::df_truncation_m},
      {"mpc_horizon", &P::mpc_horizon},
      {"mpc_dt_s", &P::mpc_dt_s},
      {"lambda_u", &P::lambda_u},
      {"u_max_mps2", &P::u_max_mps2},
      {"robot_radius_m", &P::robot_radius_m},
      {"static_margin_m", &P::static_margin_m},
      {"dynamic_margin_m", &P::dynamic_margin_m},
      {"uncertainty_growth_m", &P::uncertainty_growth_m},
      {"scp_max_iters", &P::scp_max_iters},
      {"position_weight", &P::position_weight},
      {"velocity_weight", &P::velocity_weight},
      {"view_adapt", &P::view_adapt},
      {"w_base", &P::w_base},
      {"w_occluded", &P::w_occluded},
      {"w_scanned", &P::w_scanned},
      {"candidate_step_deg", &P::candidate_step_deg},
      {"dynamic_obstacles", &P::dynamic_obstacles},
      {"yaw_rate_dps", &P::yaw_rate_dps},
      {"dwell_timeout_s", &P::dwell_timeout_s},
      {"arrive_tol_m", &P::arrive_tol_m},
      {"lidar_range_m", &P::lidar_range_m},
      {"lidar_azimuth_rays", &P::lidar_azimuth_rays},
      {"lidar_elevation_rays", &P::lidar_elevation_rays},
      {"replan_attempts", &P::replan_attempts},
      {"max_mission_time_s", &P::max_mission_time_s},
  };
  return specs;
}

inline const ParamSpec* find_param(std::string_view key) {
  for (const auto& s : param_specs())
    if (s.key == key) return &s;
  return nullptr;
}

/// Applies a textual `key=value` override. Throws ParseError naming the key on failure.
inline void set_param(PlannerParams& params, std::string_view key, std::string_view value) {
  const ParamSpec* spec = find_param(key);
  if (!spec) throw ParseError("unknown parameter key '" + std::string(key) + "'");
  const auto bad = [&] {
    return ParseError("parameter '" + std::string(key) + "': cannot parse value '" +
                      std::string(value) + "'");
  };
  std::visit(
      [&](auto member) {
        using T = std::remove_reference_t<decltype(params.*member)>;
        if constexpr (std::is_same_v<T, bool>) {
          if (value == "true" || value == "1") params.*member = true;
          else if (value == "false" || value == "0") params.*member = false;
          else throw bad();
        } else if constexpr (std::is_same_v<T, int>) {
          int v{};
          auto [ptr, ec] = std::from_chars(value.data(), value.data() + value.size(), v);
          if (ec != std::errc() || ptr != value.data() + value.size()) throw bad();
          params.*member = v;
        } else {
          try {
            std::size_t used = 0;
            const double v = std::stod(std::string(value), &used);
            if (used != value.size()) throw bad();
            params.*member = v;
          } catch (const std::logic_error&) {
            throw bad();
          }
        }
      },
      spec->member);
}

/// Range checks for values the algorithms cannot tolerate. Throws ParseError naming the key.
inline void validate_params(const PlannerParams& p) {
  auto require = [](bool ok, const char* key, const char* what) {
    if (!ok) throw ParseError(std::string("params.") + key + ": " + what);
  };
  require(p.normal_radius_m > 0.0, "normal_radius_m", "must be > 0");
  require(p.angle_thresh_deg > 0.0, "angle_thresh_deg", "must be > 0");
  require(p.curvature_thresh > 0.0, "curvature_thresh", "must be > 0");
  require(p.min_segment_size >= 1, "min_segment_size", "must be >= 1");
  require(p.standoff_m > 0.0, "standoff_m", "must be > 0");
  require(p.overlap >= 0.0 && p.overlap < 1.0, "overlap", "must be in [0, 1)");
  require(p.tau_max >= 1, "tau_max", "must be >= 1");
  require(p.bspline_dt_s > 0.0, "bspline_dt_s", "must be > 0");
  require(p.v_ref_mps > 0.0, "v_ref_mps", "must be > 0");
  require(p.d_safe_m >= 0.0, "d_safe_m", "must be >= 0");
  require(p.alpha_control >= 0.0, "alpha_control", "must be >= 0");
  require(p.alpha_smooth >= 0.0, "alpha_smooth", "must be >= 0");
  require(p.alpha_static >= 0.0, "alpha_static", "must be >= 0");
  require(p.opt_max_iters >= 0, "opt_max_iters", "must be >= 0");
  require(p.df_truncation_m > 0.0, "df_truncation_m", "must be > 0");
  require(p.mpc_horizon >= 2, "mpc_horizon", "must be >= 2");
  require(p.mpc_dt_s > 0.0, "mpc_dt_s", "must be > 0");
  require(p.lambda_u >= 0.0, "lambda_u", "must be >= 0");
  require(p.u_max_mps2 > 0.0, "u_max_mps2", "must be > 0");
  require(p.robot_radius_m > 0.0, "robot_radius_m", "must be > 0");
  require(p.scp_max_iters >= 1, "scp_max_iters", "must be >= 1");
  require(p.w_scanned < p.w_base && p.w_base < p.w_occluded, "w_base",
          "weights must satisfy w_scanned < w_base < w_occluded");
  require(p.candidate_step_deg > 0.0 && p.candidate_step_deg <= 360.0, "candidate_step_deg",
          "must be in (0, 360]");
  require(p.yaw_rate_dps > 0.0, "yaw_rate_dps", "must be > 0");
  require(p.dwell_timeout_s >= 0.0, "dwell_timeout_s", "must be >= 0");
  require(p.arrive_tol_m > 0.0, "arrive_tol_m", "must be > 0");
  require(p.lidar_range_m > 0.0, "lidar_range_m", "must be > 0");
  require(p.lidar_azimuth_rays >= 1, "lidar_azimuth_rays", "must be >= 1");
  require(p.lidar_elevation_rays >= 1, "lidar_elevation_rays", "must be >= 1");
  require(p.replan_attempts >= 0, "replan_attempts", "must be >= 0");
  require(p.max_mission_time_s > 0.0, "max_mission_time_s", "must be > 0");
}

}  // namespace coverplan
