#include <cmath>
#include <vector>

#include <gtest/gtest.h>

#include "enclosure/indicator.hpp"

using namespace enclosure;

namespace {

// log|I(τ)| = c - 2 d τ with the given sign
IndicatorSeries synthetic(double T, double d, int sign, double c = -3.0, int count = 31) {
  IndicatorSeries s;
  s.T = T;
  for (int k = 0; k < count; ++k) {
    const double tau = 2.0 + 10.0 * k / (count - 1);
    s.push(tau, SignedLog::from_log(sign, c - 2.0 * d * tau), 1e-300);
  }
  return s;
}

ClassifyOptions options(double m0 = 1.0, double M0 = 1.0) {
  ClassifyOptions o;
  o.m0 = m0;
  o.M0 = M0;
  return o;
}

}  // namespace

TEST(FitLine, ExactOnLine) {
  const std::vector<double> x{1.0, 2.0, 4.0, 7.0};
  std::vector<double> y;
  for (double v : x) y.push_back(3.0 - 0.25 * v);
  auto [slope, rms] = fit_line(x, y);
  EXPECT_NEAR(slope, -0.25, 1e-14);
  EXPECT_NEAR(rms, 0.0, 1e-14);
}

TEST(Indicator, WeightedQuadrature) {
  const std::vector<double> w{1.0, 2.0, 3.0}, v{0.5, 2.5, 3.0}, wt{2.0, 1.0, 7.0};
  EXPECT_NEAR(indicator(w, v, wt).to_double(), 0.5, 1e-15);
  EXPECT_TRUE(indicator(w, w, wt).is_zero());
  EXPECT_THROW(indicator(w, v, std::vector<double>{1.0}), std::invalid_argument);
}

TEST(Classify, NegativeIndicatorIsObstacleAI) {
  const auto s = synthetic(7.0, 2.4, -1);
  const Verdict v = classify(s, options(1.0, 2.0));
  EXPECT_EQ(v.cls, VerdictClass::ObstacleAI);
  EXPECT_NEAR(v.rate, -2.4, 1e-12);
  EXPECT_NEAR(v.distance_lo, 1.2, 1e-12);
  EXPECT_NEAR(v.distance_hi, 2.4, 1e-12);
  EXPECT_EQ(v.sign, -1);
  EXPECT_NEAR(v.monotonicity, 1.0, 1e-15);
  EXPECT_GT(v.delta_g, 2.0);
  EXPECT_EQ(v.trimmed, 0u);
  EXPECT_NEAR(v.window_lo, 12.0 - 10.0 / 3.0, 1e-12);
}

TEST(Classify, PositiveIndicatorIsObstacleAII) {
  const Verdict v = classify(synthetic(7.0, 2.4, 1), options());
  EXPECT_EQ(v.cls, VerdictClass::ObstacleAII);
  EXPECT_EQ(v.sign, 1);
}

TEST(Classify, DecayFasterThanTIsEmpty) {
  // |I| ~ e^{-τ(T + 1)}
  const Verdict v = classify(synthetic(7.0, 4.0, -1), options());
  EXPECT_EQ(v.cls, VerdictClass::Empty);
  EXPECT_LT(v.delta_g, 0.0);
  EXPECT_TRUE(std::isnan(v.distance_lo));
}

TEST(Classify, ZeroIndicatorIsEmpty) {
  IndicatorSeries s;
  s.T = 5.0;
  for (int k = 0; k < 10; ++k) s.push(1.0 + k, SignedLog::zero(), 1e-300);
  const Verdict v = classify(s, options());
  EXPECT_EQ(v.cls, VerdictClass::Empty);
  EXPECT_EQ(v.trimmed, 4u);
  EXPECT_TRUE(v.used.empty());
}

TEST(Classify, ShortRiseIsInconclusive) {
  // g rises by (T - 2d) * window = 0.3 * 3.33 = 1 < delta_min
  const Verdict v = classify(synthetic(5.0, 2.35, -1), options());
  EXPECT_EQ(v.cls, VerdictClass::Inconclusive);
  EXPECT_GT(v.delta_g, 0.0);
}

TEST(Classify, SignChangeIsInconclusive) {
  auto s = synthetic(7.0, 2.4, -1);
  s.I[s.size() - 3] = -s.I[s.size() - 3];
  const Verdict v = classify(s, options());
  EXPECT_EQ(v.cls, VerdictClass::Inconclusive);
  EXPECT_EQ(v.sign, 0);
}

TEST(Classify, InvariantUnderRescaling) {
  const auto s = synthetic(7.0, 2.4, -1);
  auto scaled = s;
  for (auto& I : scaled.I) I = I.times_exp(250.0);
  const Verdict a = classify(s, options()), b = classify(scaled, options());
  EXPECT_EQ(a.cls, b.cls);
  EXPECT_NEAR(a.rate, b.rate, 1e-12);
  EXPECT_NEAR(a.delta_g, b.delta_g, 1e-12);
}

TEST(Classify, TrimsBelowNoiseFloor) {
  auto s = synthetic(7.0, 2.4, -1);
  const std::size_t last = s.size() - 1;
  s.noise_floor[last] = std::exp(s.I[last].log_abs());  // within the factor 10
  s.noise_floor[last - 1] = std::exp(s.I[last - 1].log_abs()) / 100.0;
  const Verdict v = classify(s, options());
  EXPECT_EQ(v.trimmed, 1u);
  EXPECT_EQ(v.used.back(), last - 1);
  EXPECT_EQ(v.cls, VerdictClass::ObstacleAI);
}

TEST(Classify, ExplicitWindow) {
  const auto s = synthetic(7.0, 2.4, -1);
  ClassifyOptions o = options();
  o.window = std::make_pair(2.0, 5.0);
  const Verdict v = classify(s, o);
  EXPECT_NEAR(v.window_lo, 2.0, 0.0);
  EXPECT_LE(s.taus[v.used.back()], 5.0 + 1e-9);
  EXPECT_EQ(v.cls, VerdictClass::ObstacleAI);
}

TEST(Classify, RejectsThinSweeps) {
  EXPECT_THROW(classify(synthetic(7.0, 2.4, -1, -3.0, 7), options()), ConfigError);
  IndicatorSeries s;
  s.T = 5.0;
  for (int k = 0; k < 10; ++k) s.push(10.0 + k, SignedLog::from_double(-1.0), 1e-300);
  EXPECT_THROW(classify(s, options()), ConfigError);
  EXPECT_THROW(s.push(3.0, SignedLog::zero(), 0.0), std::invalid_argument);
}

TEST(Dissipative, DistanceEqualsRate) {
  ClassifyOptions o = options();
  o.mode = Mode::Dissipative;
  const Verdict v = classify(synthetic(5.0, 2.0, -1), o);
  EXPECT_NEAR(v.distance_lo, 2.0, 1e-12);
  EXPECT_NEAR(v.distance_hi, 2.0, 1e-12);
}

TEST(BoundCertificates, IntegralsAndCheck) {
  Grid g;
  g.dimension = 1;
  g.spacing = {0.5, 1.0, 1.0};
  g.extent = {4, 1, 1};
  const std::vector<double> a0(4, 1.0), a{1.0, 2.0, 2.0, 1.0}, q(4, 0.0);
  const std::vector<std::size_t> cells{1, 2};
  const std::vector<double> v{1.0, 2.0};
  const double tau = 3.0;
  const BoundCheck b = bound_integrals(g, Mode::Refractive, tau, cells, v, a, a0, q, q);
  // τ² h Σ (α0 - α) v²  and  τ² h Σ (α0/α)(α0 - α) v²
  EXPECT_NEAR(b.lower, 9.0 * 0.5 * -5.0, 1e-12);
  EXPECT_NEAR(b.upper, 9.0 * 0.5 * -2.5, 1e-12);
  EXPECT_TRUE(check_bounds(b, -15.0, 0.0).ok);
  EXPECT_THROW(check_bounds(b, -5.0, 0.1), CheckFailure);
  EXPECT_FALSE(check_bounds(b, -5.0, 0.1, false).ok);
  EXPECT_TRUE(check_bounds(b, -11.0, 0.3).ok);
}
