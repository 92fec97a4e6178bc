#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>
#include <utility>
#include <vector>

#include <boost/math/quadrature/gauss.hpp>

#include "enclosure/grid.hpp"

namespace enclosure {

enum class RegionKind { Empty, Interval, Ball, Box, Union };

inline double overlap(double a0, double a1, double b0, double b1) {
  return std::max(0.0, std::min(a1, b1) - std::max(a0, b0));
}

namespace detail {

// Volume of {|y - c| < r} inside the box [lo, hi] (3D), by integrating the
// exact z-chord over x and y with breakpoints at the chord kinks.
inline double ball_box_volume(const Point& c, double r, const Point& lo, const Point& hi) {
  using Rule = boost::math::quadrature::gauss<double, 20>;
  const double x0 = std::max(lo[0], c[0] - r);
  const double x1 = std::min(hi[0], c[0] + r);
  if (x1 <= x0) return 0.0;
  auto slab = [&](double x) {
    const double rx2 = r * r - (x - c[0]) * (x - c[0]);
    if (rx2 <= 0.0) return 0.0;
    const double rx = std::sqrt(rx2);
    const double y0 = std::max(lo[1], c[1] - rx);
    const double y1 = std::min(hi[1], c[1] + rx);
    if (y1 <= y0) return 0.0;
    // chord kinks where the half-chord equals the distance to a z face
    std::vector<double> cuts{y0, y1};
    for (double zf : {lo[2], hi[2]}) {
      const double s2 = rx2 - (zf - c[2]) * (zf - c[2]);
      if (s2 > 0.0) {
        const double dy = std::sqrt(s2);
        for (double y : {c[1] - dy, c[1] + dy})
          if (y > y0 && y < y1) cuts.push_back(y);
      }
    }
    std::sort(cuts.begin(), cuts.end());
    auto chord = [&](double y) {
      const double s2 = rx2 - (y - c[1]) * (y - c[1]);
      if (s2 <= 0.0) return 0.0;
      const double s = std::sqrt(s2);
      return overlap(lo[2], hi[2], c[2] - s, c[2] + s);
    };
    double area = 0.0;
    for (std::size_t i = 0; i + 1 < cuts.size(); ++i)
      if (cuts[i + 1] > cuts[i]) area += Rule::integrate(chord, cuts[i], cuts[i + 1]);
    return area;
  };
  const double xm = std::clamp(c[0], x0, x1);
  double vol = 0.0;
  if (xm > x0) vol += Rule::integrate(slab, x0, xm);
  if (x1 > xm) vol += Rule::integrate(slab, xm, x1);
  return vol;
}

}  // namespace detail

// Bounded region built from intervals, balls and boxes. In 1D a ball is the
// interval [c - r, c + r] and boxes use axis 0 only.
struct Region {
  RegionKind kind = RegionKind::Empty;
  Point lo{0.0, 0.0, 0.0};
  Point hi{0.0, 0.0, 0.0};
  Point center{0.0, 0.0, 0.0};
  double radius = 0.0;
  std::vector<Region> parts;

  static Region empty() { return {}; }

  static Region interval(double a, double b) {
    Region r;
    r.kind = RegionKind::Interval;
    r.lo = {a, 0.0, 0.0};
    r.hi = {b, 0.0, 0.0};
    return r;
  }

  static Region ball(const Point& c, double radius) {
    Region r;
    r.kind = RegionKind::Ball;
    r.center = c;
    r.radius = radius;
    return r;
  }

  static Region box(const Point& lo, const Point& hi) {
    Region r;
    r.kind = RegionKind::Box;
    r.lo = lo;
    r.hi = hi;
    return r;
  }

  static Region union_of(std::vector<Region> parts) {
    Region r;
    r.kind = RegionKind::Union;
    r.parts = std::move(parts);
    return r;
  }

  bool is_empty() const {
    switch (kind) {
      case RegionKind::Empty: return true;
      case RegionKind::Union:
        return std::all_of(parts.begin(), parts.end(), [](const Region& p) { return p.is_empty(); });
      default: return false;
    }
  }

  // Axis-aligned bounding box [lo, hi].
  std::pair<Point, Point> bbox(int dim) const {
    constexpr double inf = std::numeric_limits<double>::infinity();
    Point a{0.0, 0.0, 0.0}, b{0.0, 0.0, 0.0};
    switch (kind) {
      case RegionKind::Empty: return {a, b};
      case RegionKind::Interval:
        a[0] = lo[0];
        b[0] = hi[0];
        return {a, b};
      case RegionKind::Ball:
        for (int k = 0; k < dim; ++k) {
          a[k] = center[k] - radius;
          b[k] = center[k] + radius;
        }
        return {a, b};
      case RegionKind::Box:
        for (int k = 0; k < dim; ++k) {
          a[k] = lo[k];
          b[k] = hi[k];
        }
        return {a, b};
      case RegionKind::Union: {
        for (int k = 0; k < dim; ++k) {
          a[k] = inf;
          b[k] = -inf;
        }
        for (const auto& p : parts) {
          if (p.is_empty()) continue;
          auto [pa, pb] = p.bbox(dim);
          for (int k = 0; k < dim; ++k) {
            a[k] = std::min(a[k], pa[k]);
            b[k] = std::max(b[k], pb[k]);
          }
        }
        return {a, b};
      }
    }
    return {a, b};
  }

  // Euclidean distance from x to the region, 0 inside.
  double distance_from(const Point& x, int dim) const {
    switch (kind) {
      case RegionKind::Empty: return std::numeric_limits<double>::infinity();
      case RegionKind::Interval: return std::max({lo[0] - x[0], 0.0, x[0] - hi[0]});
      case RegionKind::Ball: {
        double s = 0.0;
        for (int k = 0; k < dim; ++k) s += (x[k] - center[k]) * (x[k] - center[k]);
        return std::max(std::sqrt(s) - radius, 0.0);
      }
      case RegionKind::Box: {
        double s = 0.0;
        for (int k = 0; k < dim; ++k) {
          const double d = std::max({lo[k] - x[k], 0.0, x[k] - hi[k]});
          s += d * d;
        }
        return std::sqrt(s);
      }
      case RegionKind::Union: {
        double d = std::numeric_limits<double>::infinity();
        for (const auto& p : parts) d = std::min(d, p.distance_from(x, dim));
        return d;
      }
    }
    return 0.0;
  }

  // Fraction of the cell covered by the region, exact for intervals and
  // boxes, quadrature of the exact chord for 3D balls. Union parts are
  // assumed disjoint.
  double coverage(const Grid& g, std::size_t cell) const {
    const auto m = g.multi_index(cell);
    Point clo{0.0, 0.0, 0.0}, chi{0.0, 0.0, 0.0};
    for (int a = 0; a < g.dimension; ++a) {
      clo[a] = g.cell_lo(a, m[a]);
      chi[a] = g.cell_hi(a, m[a]);
    }
    return coverage_of_box(clo, chi, g.dimension);
  }

  double coverage_of_box(const Point& clo, const Point& chi, int dim) const {
    double vol = 1.0;
    for (int a = 0; a < dim; ++a) vol *= chi[a] - clo[a];
    switch (kind) {
      case RegionKind::Empty: return 0.0;
      case RegionKind::Interval: return overlap(clo[0], chi[0], lo[0], hi[0]) / (chi[0] - clo[0]);
      case RegionKind::Box: {
        double f = 1.0;
        for (int a = 0; a < dim; ++a) f *= overlap(clo[a], chi[a], lo[a], hi[a]) / (chi[a] - clo[a]);
        return f;
      }
      case RegionKind::Ball: {
        if (dim == 1)
          return overlap(clo[0], chi[0], center[0] - radius, center[0] + radius) / (chi[0] - clo[0]);
        double near2 = 0.0, far2 = 0.0;
        for (int a = 0; a < 3; ++a) {
          const double n = std::max({clo[a] - center[a], 0.0, center[a] - chi[a]});
          const double f = std::max(std::fabs(clo[a] - center[a]), std::fabs(chi[a] - center[a]));
          near2 += n * n;
          far2 += f * f;
        }
        if (near2 >= radius * radius) return 0.0;
        if (far2 <= radius * radius) return 1.0;
        return std::clamp(detail::ball_box_volume(center, radius, clo, chi) / vol, 0.0, 1.0);
      }
      case RegionKind::Union: {
        double f = 0.0;
        for (const auto& p : parts) f += p.coverage_of_box(clo, chi, dim);
        return std::min(f, 1.0);
      }
    }
    return 0.0;
  }

  Region translated(const Point& d) const {
    Region r = *this;
    for (int a = 0; a < 3; ++a) {
      r.lo[a] += d[a];
      r.hi[a] += d[a];
      r.center[a] += d[a];
    }
    for (auto& p : r.parts) p = p.translated(d);
    return r;
  }

  bool valid(int dim) const {
    switch (kind) {
      case RegionKind::Empty: return true;
      case RegionKind::Interval: return dim == 1 && lo[0] < hi[0];
      case RegionKind::Ball: return radius > 0.0;
      case RegionKind::Box:
        for (int a = 0; a < dim; ++a)
          if (!(lo[a] < hi[a])) return false;
        return true;
      case RegionKind::Union:
        return std::all_of(parts.begin(), parts.end(), [dim](const Region& p) { return p.valid(dim); });
    }
    return false;
  }
};

// Per-cell coverage fractions.
inline std::vector<double> coverage_field(const Region& r, const Grid& g) {
  std::vector<double> out(g.size(), 0.0);
  if (r.is_empty()) return out;
  auto [lo, hi] = r.bbox(g.dimension);
  // only visit cells intersecting the bounding box
  std::array<int, 3> i0{0, 0, 0}, i1{1, 1, 1};
  for (int a = 0; a < g.dimension; ++a) {
    i0[a] = std::max(0, static_cast<int>(std::floor((lo[a] - g.origin[a]) / g.spacing[a])) - 1);
    i1[a] = std::min(g.extent[a], static_cast<int>(std::ceil((hi[a] - g.origin[a]) / g.spacing[a])) + 1);
  }
  for (int k = i0[2]; k < i1[2]; ++k)
    for (int j = i0[1]; j < i1[1]; ++j)
      for (int i = i0[0]; i < i1[0]; ++i) {
        const std::size_t idx = g.index(i, j, k);
        out[idx] = r.coverage(g, idx);
      }
  return out;
}

}  // namespace enclosure
