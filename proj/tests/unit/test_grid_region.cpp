#include <cmath>

#include <gtest/gtest.h>

#include "enclosure/grid.hpp"
#include "enclosure/region.hpp"

using namespace enclosure;

namespace {
Grid cube(int n, double h, double lo) {
  Grid g;
  g.dimension = 3;
  g.extent = {n, n, n};
  g.spacing = {h, h, h};
  g.origin = {lo, lo, lo};
  return g;
}
}  // namespace

TEST(Grid, IndexRoundTrip) {
  const Grid g = cube(5, 0.1, -0.25);
  for (std::size_t i = 0; i < g.size(); ++i) {
    const auto m = g.multi_index(i);
    EXPECT_EQ(g.index(m[0], m[1], m[2]), i);
  }
  EXPECT_EQ(g.index(1, 0, 0), 1u);
  EXPECT_EQ(g.index(0, 1, 0), 5u);
  EXPECT_NEAR(g.coord(0, 0), -0.2, 1e-15);
  EXPECT_NEAR(g.cell_volume(), 1e-3, 1e-18);
  EXPECT_TRUE(g.on_boundary(0));
  EXPECT_FALSE(g.on_boundary(g.index(2, 2, 2)));
}

TEST(Region, IntervalCoverageIsExact) {
  Grid g;
  g.dimension = 1;
  g.extent = {10, 1, 1};
  g.spacing = {0.1, 1.0, 1.0};
  g.origin = {0.0, 0.0, 0.0};
  const Region r = Region::interval(0.25, 0.62);
  const auto cov = coverage_field(r, g);
  double total = 0.0;
  for (double c : cov) total += c * g.cell_volume();
  EXPECT_NEAR(total, 0.37, 1e-14);
  EXPECT_NEAR(cov[2], 0.5, 1e-12);
  EXPECT_NEAR(cov[6], 0.2, 1e-12);
  EXPECT_EQ(cov[0], 0.0);
}

TEST(Region, BallCoverageSumsToVolume) {
  const Grid g = cube(16, 1.0 / 16, -0.5);
  const Region b = Region::ball({0.03, -0.05, 0.11}, 0.3);
  const auto cov = coverage_field(b, g);
  double total = 0.0;
  for (double c : cov) {
    EXPECT_GE(c, 0.0);
    EXPECT_LE(c, 1.0 + 1e-12);
    total += c * g.cell_volume();
  }
  EXPECT_NEAR(total, 4.0 / 3.0 * M_PI * 0.027, 1e-9);
}

TEST(Region, DistancesAndBoxes) {
  const Region b = Region::ball({0.0, 0.0, 0.0}, 1.0);
  EXPECT_NEAR(b.distance_from({3.0, 4.0, 0.0}, 3), 4.0, 1e-15);
  EXPECT_EQ(b.distance_from({0.1, 0.0, 0.0}, 3), 0.0);
  const Region i = Region::interval(2.0, 3.0);
  EXPECT_NEAR(i.distance_from({0.5, 0.0, 0.0}, 1), 1.5, 1e-15);
  const Region u = Region::union_of({i, Region::interval(-2.0, -1.5)});
  EXPECT_NEAR(u.distance_from({0.0, 0.0, 0.0}, 1), 1.5, 1e-15);
  auto [lo, hi] = u.bbox(1);
  EXPECT_EQ(lo[0], -2.0);
  EXPECT_EQ(hi[0], 3.0);
  EXPECT_TRUE(Region::empty().is_empty());
  EXPECT_FALSE(Region::interval(1.0, 1.0).valid(1));
  EXPECT_NEAR(b.translated({1.0, 0.0, 0.0}).distance_from({3.0, 0.0, 0.0}, 3), 1.0, 1e-15);
}
