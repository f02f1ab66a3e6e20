#pragma once

#include <array>
#include <cstdint>
#include <cstdio>
#include <string>
#include <vector>

#include "coverplan/common.hpp"

namespace coverplan {

/// ASCII PLY with one vertex per voxel center and a single float scalar per vertex.
inline std::string ply_scalar(const std::vector<Vec3>& points, const std::vector<float>& values,
                              const std::string& scalar_name) {
  std::string out;
  out += "ply\nformat ascii 1.0\nelement vertex " + std::to_string(points.size()) + "\n";
  out += "property float x\nproperty float y\nproperty float z\n";
  out += "property float " + scalar_name + "\nend_header\n";
  char line[128];
  for (std::size_t i = 0; i < points.size(); ++i) {
    std::snprintf(line, sizeof line, "%.4f %.4f %.4f %g\n", points[i].x(), points[i].y(),
                  points[i].z(), static_cast<double>(values[i]));
    out += line;
  }
  return out;
}

/// ASCII PLY with per-vertex RGB color.
inline std::string ply_colored(const std::vector<Vec3>& points,
                               const std::vector<std::array<std::uint8_t, 3>>& colors) {
  std::string out;
  out += "ply\nformat ascii 1.0\nelement vertex " + std::to_string(points.size()) + "\n";
  out += "property float x\nproperty float y\nproperty float z\n";
  out += "property uchar red\nproperty uchar green\nproperty uchar blue\nend_header\n";
  char line[128];
  for (std::size_t i = 0; i < points.size(); ++i) {
    std::snprintf(line, sizeof line, "%.4f %.4f %.4f %u %u %u\n", points[i].x(), points[i].y(),
                  points[i].z(), colors[i][0], colors[i][1], colors[i][2]);
    out += line;
  }
  return out;
}

/// Deterministic distinct-ish color for an integer label.
inline std::array<std::uint8_t, 3> label_color(std::size_t label) {
  std::uint32_t h = static_cast<std::uint32_t>(label) * 2654435761u;
  h ^= h >> 13;
  return {static_cast<std::uint8_t>(64 + (h & 0xBF)), static_cast<std::uint8_t>(64 + ((h >> 8) & 0xBF)),
          static_cast<std::uint8_t>(64 + ((h >> 16) & 0xBF))};
}

}  // namespace coverplan
