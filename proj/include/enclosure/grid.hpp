#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "enclosure/errors.hpp"

namespace enclosure {

using Point = std::array<double, 3>;

// Cell-centred regular grid. Unused axes (dimension 1) have extent 1.
struct Grid {
  int dimension = 1;
  Point origin{0.0, 0.0, 0.0};  // lower corner of cell 0
  Point spacing{1.0, 1.0, 1.0};
  std::array<int, 3> extent{1, 1, 1};

  std::size_t size() const {
    return static_cast<std::size_t>(extent[0]) * extent[1] * extent[2];
  }

  std::size_t index(int i, int j, int k) const {
    return (static_cast<std::size_t>(k) * extent[1] + j) * extent[0] + i;
  }

  std::array<int, 3> multi_index(std::size_t idx) const {
    const int i = static_cast<int>(idx % extent[0]);
    const std::size_t rest = idx / extent[0];
    return {i, static_cast<int>(rest % extent[1]), static_cast<int>(rest / extent[1])};
  }

  double cell_lo(int axis, int i) const { return origin[axis] + i * spacing[axis]; }
  double cell_hi(int axis, int i) const { return origin[axis] + (i + 1) * spacing[axis]; }
  double coord(int axis, int i) const { return origin[axis] + (i + 0.5) * spacing[axis]; }

  Point center(std::size_t idx) const {
    const auto m = multi_index(idx);
    Point c{0.0, 0.0, 0.0};
    for (int a = 0; a < dimension; ++a) c[a] = coord(a, m[a]);
    return c;
  }

  double cell_volume() const {
    double v = 1.0;
    for (int a = 0; a < dimension; ++a) v *= spacing[a];
    return v;
  }

  double min_spacing() const {
    double h = spacing[0];
    for (int a = 1; a < dimension; ++a) h = std::min(h, spacing[a]);
    return h;
  }

  Point upper() const {
    Point u = origin;
    for (int a = 0; a < dimension; ++a) u[a] = origin[a] + extent[a] * spacing[a];
    return u;
  }

  // True if the cell touches the box boundary.
  bool on_boundary(std::size_t idx) const {
    const auto m = multi_index(idx);
    for (int a = 0; a < dimension; ++a)
      if (m[a] == 0 || m[a] == extent[a] - 1) return true;
    return false;
  }

  void validate() const {
    if (dimension != 1 && dimension != 3)
      throw InvariantError("grid.dimension", "must be 1 or 3, got " + std::to_string(dimension));
    for (int a = 0; a < dimension; ++a) {
      if (!(spacing[a] > 0.0))
        throw InvariantError("grid.spacing", "spacing must be positive");
      if (extent[a] < 8)
        throw InvariantError("grid.extent", "at least 8 cells per axis required");
    }
    for (int a = dimension; a < 3; ++a)
      if (extent[a] != 1) throw InvariantError("grid.extent", "unused axes must have extent 1");
  }
};

inline double distance(const Point& x, const Point& y) {
  return std::sqrt((x[0] - y[0]) * (x[0] - y[0]) + (x[1] - y[1]) * (x[1] - y[1]) +
                   (x[2] - y[2]) * (x[2] - y[2]));
}

inline std::vector<std::size_t> all_cells(const Grid& g) {
  std::vector<std::size_t> cells(g.size());
  for (std::size_t i = 0; i < cells.size(); ++i) cells[i] = i;
  return cells;
}

// Cells whose weight is nonzero.
inline std::vector<std::size_t> support(std::span<const double> weight) {
  std::vector<std::size_t> cells;
  for (std::size_t i = 0; i < weight.size(); ++i)
    if (weight[i] != 0.0) cells.push_back(i);
  return cells;
}

// Sampled scalar function on a grid.
struct ScalarField {
  Grid grid;
  std::vector<double> values;

  double ess_inf() const { return *std::min_element(values.begin(), values.end()); }
  double ess_sup() const { return *std::max_element(values.begin(), values.end()); }
};

}  // namespace enclosure
