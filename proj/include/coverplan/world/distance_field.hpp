#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <vector>

#include "coverplan/world/voxel_grid.hpp"

namespace coverplan {

namespace detail {

// Felzenszwalb–Huttenlocher 1D squared distance transform (lower envelope of parabolas).
// "No site" is encoded as kFar so the envelope arithmetic stays finite.
inline constexpr double kFar = 1e18;

inline void edt_1d(const double* f, double* d, int n, int* v, double* z) {
  const double inf = std::numeric_limits<double>::infinity();
  int k = 0;
  v[0] = 0;
  z[0] = -inf;
  z[1] = inf;
  for (int q = 1; q < n; ++q) {
    double s = ((f[q] + 1.0 * q * q) - (f[v[k]] + 1.0 * v[k] * v[k])) / (2.0 * q - 2.0 * v[k]);
    while (s <= z[k]) {
      --k;
      s = ((f[q] + 1.0 * q * q) - (f[v[k]] + 1.0 * v[k] * v[k])) / (2.0 * q - 2.0 * v[k]);
    }
    ++k;
    v[k] = q;
    z[k] = s;
    z[k + 1] = inf;
  }
  k = 0;
  for (int q = 0; q < n; ++q) {
    while (z[k + 1] < q) ++k;
    const double dq = q - v[k];
    d[q] = std::min(kFar, dq * dq + f[v[k]]);
  }
}

}  // namespace detail

/// Truncated Euclidean distance from each cell center to the nearest Occupied cell center.
class DistanceField {
 public:
  DistanceField() = default;

  DistanceField(const VoxelGrid& grid, double truncation)
      : origin_(grid.origin()),
        resolution_(grid.resolution()),
        dims_(grid.dims()),
        truncation_(truncation) {
    if (!(truncation > 0.0)) throw DomainError("distance_field: truncation must be > 0");
    compute(grid);
  }

  double truncation() const { return truncation_; }
  const Vec3& origin() const { return origin_; }
  const Index3& dims() const { return dims_; }
  double resolution() const { return resolution_; }

  double at(const Index3& c) const { return values_[flatten(c)]; }
  const std::vector<double>& values() const { return values_; }

  /// Trilinear interpolation over cell centers; queries outside are clamped to the
  /// outermost centers (zero gradient along clamped axes).
  double distance(const Vec3& p) const { return interpolate(p, nullptr); }

  double distance(const Vec3& p, Vec3& gradient) const { return interpolate(p, &gradient); }

 private:
  std::size_t flatten(const Index3& c) const {
    return static_cast<std::size_t>(c.x()) +
           static_cast<std::size_t>(dims_.x()) *
               (static_cast<std::size_t>(c.y()) + static_cast<std::size_t>(dims_.y()) * c.z());
  }

  void compute(const VoxelGrid& grid) {
    const int nx = dims_.x(), ny = dims_.y(), nz = dims_.z();
    std::vector<double> sq(grid.size());
    for (std::size_t i = 0; i < grid.size(); ++i)
      sq[i] = grid.state(i) == CellState::Occupied ? 0.0 : detail::kFar;

    const int n_max = std::max({nx, ny, nz});
    std::vector<double> f(n_max), d(n_max), z(n_max + 1);
    std::vector<int> v(n_max);

    auto pass = [&](int n, auto&& index) {
      for (int q = 0; q < n; ++q) f[q] = sq[index(q)];
      detail::edt_1d(f.data(), d.data(), n, v.data(), z.data());
      for (int q = 0; q < n; ++q) sq[index(q)] = d[q];
    };
    for (int zz = 0; zz < nz; ++zz)
      for (int yy = 0; yy < ny; ++yy)
        pass(nx, [&](int q) { return flatten({q, yy, zz}); });
    for (int zz = 0; zz < nz; ++zz)
      for (int xx = 0; xx < nx; ++xx)
        pass(ny, [&](int q) { return flatten({xx, q, zz}); });
    for (int yy = 0; yy < ny; ++yy)
      for (int xx = 0; xx < nx; ++xx)
        pass(nz, [&](int q) { return flatten({xx, yy, q}); });

    values_.resize(sq.size());
    for (std::size_t i = 0; i < sq.size(); ++i)
      values_[i] = sq[i] >= detail::kFar ? truncation_
                                        : std::min(truncation_, std::sqrt(sq[i]) * resolution_);
  }

  double interpolate(const Vec3& p, Vec3* gradient) const {
    Index3 base;
    Vec3 frac;
    Vec3 active;
    for (int a = 0; a < 3; ++a) {
      const double u = (p[a] - origin_[a]) / resolution_ - 0.5;
      const int n = dims_[a];
      if (n == 1 || u <= 0.0) {
        base[a] = 0;
        frac[a] = 0.0;
        active[a] = 0.0;
      } else if (u >= n - 1) {
        base[a] = n - 2;
        frac[a] = 1.0;
        active[a] = 0.0;
      } else {
        base[a] = std::min(static_cast<int>(std::floor(u)), n - 2);
        frac[a] = u - base[a];
        active[a] = 1.0;
      }
    }
    double c[2][2][2];
    for (int i = 0; i < 2; ++i)
      for (int j = 0; j < 2; ++j)
        for (int k = 0; k < 2; ++k) {
          Index3 idx(base.x() + i, base.y() + j, base.z() + k);
          idx = idx.cwiseMin(dims_ - Index3::Ones());
          c[i][j][k] = values_[flatten(idx)];
        }
    const double fx = frac.x(), fy = frac.y(), fz = frac.z();
    const double c00 = c[0][0][0] * (1 - fx) + c[1][0][0] * fx;
    const double c10 = c[0][1][0] * (1 - fx) + c[1][1][0] * fx;
    const double c01 = c[0][0][1] * (1 - fx) + c[1][0][1] * fx;
    const double c11 = c[0][1][1] * (1 - fx) + c[1][1][1] * fx;
    const double c0 = c00 * (1 - fy) + c10 * fy;
    const double c1 = c01 * (1 - fy) + c11 * fy;
    const double value = c0 * (1 - fz) + c1 * fz;
    if (gradient) {
      const double dx00 = c[1][0][0] - c[0][0][0];
      const double dx10 = c[1][1][0] - c[0][1][0];
      const double dx01 = c[1][0][1] - c[0][0][1];
      const double dx11 = c[1][1][1] - c[0][1][1];
      const double gx = ((dx00 * (1 - fy) + dx10 * fy) * (1 - fz) + (dx01 * (1 - fy) + dx11 * fy) * fz);
      const double gy = (c10 - c00) * (1 - fz) + (c11 - c01) * fz;
      const double gz = c1 - c0;
      *gradient = Vec3(gx, gy, gz).cwiseProduct(active) / resolution_;
    }
    return value;
  }

  Vec3 origin_ = Vec3::Zero();
  double resolution_ = 1.0;
  Index3 dims_ = Index3::Ones();
  double truncation_ = 2.0;
  std::vector<double> values_;
};

inline DistanceField distance_field(const VoxelGrid& grid, double truncation = 2.0) {
  return DistanceField(grid, truncation);
}

}  // namespace coverplan
