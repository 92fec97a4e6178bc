#pragma once

#include <span>
#include <vector>

#include "enclosure/grid.hpp"

namespace enclosure {

// out = L_h u: 3- or 7-point Laplacian, zero Dirichlet ghosts.
inline void apply_laplacian(const Grid& g, std::span<const double> u, std::span<double> out) {
  const int nx = g.extent[0], ny = g.extent[1], nz = g.extent[2];
  const double cx = 1.0 / (g.spacing[0] * g.spacing[0]);
  const double cy = g.dimension == 3 ? 1.0 / (g.spacing[1] * g.spacing[1]) : 0.0;
  const double cz = g.dimension == 3 ? 1.0 / (g.spacing[2] * g.spacing[2]) : 0.0;
  const std::size_t sy = nx, sz = static_cast<std::size_t>(nx) * ny;
  for (int k = 0; k < nz; ++k)
    for (int j = 0; j < ny; ++j) {
      const std::size_t row = g.index(0, j, k);
      for (int i = 0; i < nx; ++i) {
        const std::size_t c = row + i;
        const double uc = u[c];
        const double xm = i > 0 ? u[c - 1] : 0.0;
        const double xp = i + 1 < nx ? u[c + 1] : 0.0;
        double s = cx * (xm - 2.0 * uc + xp);
        if (g.dimension == 3) {
          const double ym = j > 0 ? u[c - sy] : 0.0;
          const double yp = j + 1 < ny ? u[c + sy] : 0.0;
          const double zm = k > 0 ? u[c - sz] : 0.0;
          const double zp = k + 1 < nz ? u[c + sz] : 0.0;
          s += cy * (ym - 2.0 * uc + yp) + cz * (zm - 2.0 * uc + zp);
        }
        out[c] = s;
      }
    }
}

inline std::vector<double> laplacian(const Grid& g, std::span<const double> u) {
  std::vector<double> out(u.size());
  apply_laplacian(g, u, out);
  return out;
}

// Weighted sum of w*u*v times the cell volume.
inline double integrate(const Grid& g, std::span<const double> u, std::span<const double> v) {
  double s = 0.0;
  for (std::size_t i = 0; i < u.size(); ++i) s += u[i] * v[i];
  return s * g.cell_volume();
}

inline double integrate(const Grid& g, std::span<const double> u) {
  double s = 0.0;
  for (double x : u) s += x;
  return s * g.cell_volume();
}

inline double l2_norm(const Grid& g, std::span<const double> u) {
  return std::sqrt(integrate(g, u, u));
}

// Discrete ∫∇u·∇v over all faces, boundary faces against the zero ghost.
// Satisfies grad_dot(u, v) = -integrate(L_h u, v) exactly.
inline double grad_dot(const Grid& g, std::span<const double> u, std::span<const double> v) {
  double s = 0.0;
  const int nx = g.extent[0], ny = g.extent[1], nz = g.extent[2];
  const std::array<std::size_t, 3> stride{1, static_cast<std::size_t>(nx), static_cast<std::size_t>(nx) * ny};
  for (int a = 0; a < g.dimension; ++a) {
    const double w = 1.0 / (g.spacing[a] * g.spacing[a]);
    const int n = g.extent[a];
    double part = 0.0;
    for (int k = 0; k < nz; ++k)
      for (int j = 0; j < ny; ++j)
        for (int i = 0; i < nx; ++i) {
          const int pos = a == 0 ? i : (a == 1 ? j : k);
          const std::size_t c = g.index(i, j, k);
          const double up = pos + 1 < n ? u[c + stride[a]] : 0.0;
          const double vp = pos + 1 < n ? v[c + stride[a]] : 0.0;
          part += (up - u[c]) * (vp - v[c]);
          if (pos == 0) part += u[c] * v[c];
        }
    s += w * part;
  }
  return s * g.cell_volume();
}

}  // namespace enclosure
