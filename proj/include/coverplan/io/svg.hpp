#pragma once

#include <cstdio>
#include <string>
#include <vector>

#include "coverplan/world/surface.hpp"
#include "coverplan/world/voxel_grid.hpp"

namespace coverplan {

/// Top-down (x right, y up) SVG drawing over a grid's footprint.
class SvgMap {
 public:
  explicit SvgMap(const VoxelGrid& grid, double px_per_m = 40.0)
      : origin_(grid.origin()), scale_(px_per_m) {
    const Vec3 size = grid.max_corner() - grid.min_corner();
    width_ = size.x() * scale_;
    height_ = size.y() * scale_;
  }

  /// Columns holding any Occupied cell in grey; columns holding surface cells in `surface_color`.
  void occupancy(const VoxelGrid& grid, const SurfaceSet* surfaces = nullptr,
                 const std::string& surface_color = "#4a90d9") {
    const Index3 d = grid.dims();
    std::vector<int> column(static_cast<std::size_t>(d.x()) * d.y(), 0);
    for (std::size_t i = 0; i < grid.size(); ++i)
      if (grid.state(i) == CellState::Occupied) {
        const Index3 c = grid.unflatten(i);
        column[static_cast<std::size_t>(c.y()) * d.x() + c.x()] = 1;
      }
    if (surfaces)
      for (std::size_t c : surfaces->cells()) {
        const Index3 q = grid.unflatten(c);
        column[static_cast<std::size_t>(q.y()) * d.x() + q.x()] = 2;
      }
    const double r = grid.resolution();
    for (int y = 0; y < d.y(); ++y)
      for (int x = 0; x < d.x(); ++x) {
        const int v = column[static_cast<std::size_t>(y) * d.x() + x];
        if (!v) continue;
        const Vec3 lo = grid.origin() + Vec3(x * r, (y + 1) * r, 0.0);
        rect(lo, r, r, v == 2 ? surface_color : "#9a9a9a");
      }
  }

  void rect(const Vec3& top_left, double w_m, double h_m, const std::string& fill) {
    char buf[256];
    std::snprintf(buf, sizeof buf, "<rect x=\"%.2f\" y=\"%.2f\" width=\"%.2f\" height=\"%.2f\" fill=\"%s\"/>\n",
                  px(top_left.x()), py(top_left.y()), w_m * scale_, h_m * scale_, fill.c_str());
    body_ += buf;
  }

  void polyline(const std::vector<Vec3>& pts, const std::string& stroke, double width_px = 2.0,
                const std::string& dash = "") {
    if (pts.size() < 2) return;
    body_ += "<polyline fill=\"none\" stroke=\"" + stroke + "\" stroke-width=\"" + num(width_px) + "\"";
    if (!dash.empty()) body_ += " stroke-dasharray=\"" + dash + "\"";
    body_ += " points=\"";
    for (const auto& p : pts) body_ += num(px(p.x())) + "," + num(py(p.y())) + " ";
    body_ += "\"/>\n";
  }

  void circle(const Vec3& c, double radius_m, const std::string& fill, double opacity = 1.0) {
    char buf[256];
    std::snprintf(buf, sizeof buf, "<circle cx=\"%.2f\" cy=\"%.2f\" r=\"%.2f\" fill=\"%s\" fill-opacity=\"%.2f\"/>\n",
                  px(c.x()), py(c.y()), radius_m * scale_, fill.c_str(), opacity);
    body_ += buf;
  }

  /// Short heading tick from `p` along `yaw`.
  void heading(const Vec3& p, double yaw, double length_m, const std::string& stroke) {
    polyline({p, p + length_m * yaw_direction(yaw)}, stroke, 1.5);
  }

  void text(const Vec3& p, const std::string& s, double size_px = 10.0) {
    char buf[128];
    std::snprintf(buf, sizeof buf, "<text x=\"%.2f\" y=\"%.2f\" font-size=\"%.1f\" font-family=\"sans-serif\">",
                  px(p.x()), py(p.y()), size_px);
    body_ += buf + s + "</text>\n";
  }

  std::string str() const {
    char head[256];
    std::snprintf(head, sizeof head,
                  "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"%.0f\" height=\"%.0f\" "
                  "viewBox=\"0 0 %.2f %.2f\">\n<rect width=\"100%%\" height=\"100%%\" fill=\"white\"/>\n",
                  width_, height_, width_, height_);
    return head + body_ + "</svg>\n";
  }

 private:
  double px(double x) const { return (x - origin_.x()) * scale_; }
  double py(double y) const { return height_ - (y - origin_.y()) * scale_; }
  static std::string num(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.2f", v);
    return buf;
  }

  Vec3 origin_;
  double scale_;
  double width_ = 0.0, height_ = 0.0;
  std::string body_;
};

}  // namespace coverplan
