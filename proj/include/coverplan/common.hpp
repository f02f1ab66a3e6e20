#pragma once

#include <cmath>
#include <numbers>
#include <stdexcept>
#include <string>

#include <Eigen/Core>

namespace coverplan {

using Vec3 = Eigen::Vector3d;
using Index3 = Eigen::Vector3i;

inline constexpr double kPi = std::numbers::pi;
inline constexpr double kTwoPi = 2.0 * std::numbers::pi;

/// Precondition violated by a query (point outside the grid, bad vector length).
class DomainError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

/// Malformed or invariant-violating input document. The message names the field.
class ParseError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// No collision-free grid path between two points.
class UnreachableError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class OptimizationError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Mission cannot start or continue (e.g. nothing to inspect).
class MissionError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Wraps an angle to [-pi, pi).
inline double wrap_angle(double a) {
  double w = std::fmod(a + kPi, kTwoPi);
  if (w < 0.0) w += kTwoPi;
  w -= kPi;
  // fmod can round up to exactly pi
  if (w >= kPi) w -= kTwoPi;
  return w;
}

inline double deg2rad(double d) { return d * kPi / 180.0; }
inline double rad2deg(double r) { return r * 180.0 / kPi; }

/// Yaw of a vector's horizontal projection.
inline double yaw_of(const Vec3& v) { return wrap_angle(std::atan2(v.y(), v.x())); }

inline Vec3 yaw_direction(double yaw) { return {std::cos(yaw), std::sin(yaw), 0.0}; }

}  // namespace coverplan
