#include <cmath>
#include <limits>

#include <gtest/gtest.h>

#include "enclosure/log_value.hpp"

using enclosure::SignedLog;

TEST(SignedLog, RoundTripsDoubles) {
  for (double x : {-3.5, -1e-300, 0.0, 2.0, 7.25e200}) {
    const auto s = SignedLog::from_double(x);
    EXPECT_NEAR(s.to_double(), x, 1e-13 * std::fabs(x));
  }
  EXPECT_TRUE(SignedLog::from_double(0.0).is_zero());
  EXPECT_EQ(SignedLog::zero().log_abs(), -std::numeric_limits<double>::infinity());
}

TEST(SignedLog, ProductsBeyondDoubleRange) {
  const auto tiny = SignedLog::from_log(-1, -900.0);
  const auto big = SignedLog::from_log(1, 880.0);
  const auto p = tiny * big;
  EXPECT_EQ(p.sign(), -1);
  EXPECT_NEAR(p.log_abs(), -20.0, 1e-12);
  EXPECT_NEAR(p.to_double(), -std::exp(-20.0), 1e-22);
  EXPECT_NEAR((tiny / big).log_abs(), -1780.0, 1e-9);
  EXPECT_NEAR(tiny.times_exp(1000.0).log_abs(), 100.0, 1e-12);
}

TEST(SignedLog, SumsKeepSignAndMagnitude) {
  const auto a = SignedLog::from_log(1, -800.0);
  const auto b = SignedLog::from_log(-1, -800.0 + std::log(3.0));
  const auto s = a + b;  // e^-800 (1 - 3)
  EXPECT_EQ(s.sign(), -1);
  EXPECT_NEAR(s.log_abs(), -800.0 + std::log(2.0), 1e-12);
  EXPECT_TRUE((a - a).is_zero());
  EXPECT_NEAR((SignedLog::from_double(2.0) + SignedLog::from_double(-0.5)).to_double(), 1.5, 1e-15);
  EXPECT_EQ((a + SignedLog::zero()).log_abs(), a.log_abs());
}

TEST(SignedLog, FinitenessFlag) {
  EXPECT_TRUE(SignedLog::zero().finite());
  EXPECT_TRUE(SignedLog::from_log(1, 1e5).finite());
  EXPECT_FALSE((SignedLog::from_double(1.0) / SignedLog::zero()).finite());
}
