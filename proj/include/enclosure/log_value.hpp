#pragma once

#include <cmath>
#include <limits>

namespace enclosure {

// Real number held as a sign and the natural log of its magnitude.
// Zero is an explicit state (sign 0), never log(0).
class SignedLog {
 public:
  SignedLog() = default;

  static SignedLog zero() { return SignedLog(); }

  static SignedLog from_double(double x) {
    if (x == 0.0) return SignedLog();
    return SignedLog(x > 0 ? 1 : -1, std::log(std::fabs(x)));
  }

  static SignedLog from_log(int sign, double log_abs) {
    if (sign == 0) return SignedLog();
    return SignedLog(sign > 0 ? 1 : -1, log_abs);
  }

  // e^x
  static SignedLog exp(double x) { return SignedLog(1, x); }

  int sign() const { return sign_; }
  bool is_zero() const { return sign_ == 0; }
  double log_abs() const {
    return sign_ == 0 ? -std::numeric_limits<double>::infinity() : log_abs_;
  }
  bool finite() const { return sign_ == 0 || std::isfinite(log_abs_); }

  double to_double() const { return sign_ == 0 ? 0.0 : sign_ * std::exp(log_abs_); }

  SignedLog operator-() const { return SignedLog(-sign_, log_abs_); }

  // this * e^x
  SignedLog times_exp(double x) const {
    return sign_ == 0 ? SignedLog() : SignedLog(sign_, log_abs_ + x);
  }

  friend SignedLog operator*(const SignedLog& x, const SignedLog& y) {
    if (x.sign_ == 0 || y.sign_ == 0) return SignedLog();
    return SignedLog(x.sign_ * y.sign_, x.log_abs_ + y.log_abs_);
  }

  friend SignedLog operator/(const SignedLog& x, const SignedLog& y) {
    if (x.sign_ == 0) return SignedLog();
    if (y.sign_ == 0)
      return SignedLog(x.sign_, std::numeric_limits<double>::infinity());
    return SignedLog(x.sign_ * y.sign_, x.log_abs_ - y.log_abs_);
  }

  friend SignedLog operator+(const SignedLog& x, const SignedLog& y) {
    if (x.sign_ == 0) return y;
    if (y.sign_ == 0) return x;
    const SignedLog& big = x.log_abs_ >= y.log_abs_ ? x : y;
    const SignedLog& small = x.log_abs_ >= y.log_abs_ ? y : x;
    const double diff = small.log_abs_ - big.log_abs_;
    if (big.sign_ == small.sign_)
      return SignedLog(big.sign_, big.log_abs_ + std::log1p(std::exp(diff)));
    if (diff == 0.0) return SignedLog();
    return SignedLog(big.sign_, big.log_abs_ + std::log(-std::expm1(diff)));
  }

  friend SignedLog operator-(const SignedLog& x, const SignedLog& y) { return x + (-y); }

  SignedLog& operator+=(const SignedLog& o) { return *this = *this + o; }
  SignedLog& operator*=(const SignedLog& o) { return *this = *this * o; }

 private:
  SignedLog(int s, double l) : sign_(s), log_abs_(l) {}

  int sign_ = 0;
  double log_abs_ = 0.0;
};

}  // namespace enclosure
