#pragma once

#include <array>
#include <cmath>
#include <optional>
#include <ostream>
#include <string>

#include "enclosure/errors.hpp"
#include "enclosure/log_value.hpp"
#include "enclosure/scenario.hpp"

namespace enclosure {

// 1D background α0 = k0 on ]a, b[ and 1 elsewhere, source χ_B with
// B = ]p - ε, p + ε[, obstacle ]c, d[ beyond the wall.
struct LayeredMedium1D {
  double a = 1.0, b = 1.5, k0 = 4.0;
  double p = 0.0, eps = 0.1;
  double c = 2.5, d = 3.0;

  void validate() const {
    if (!(p + eps < a && a < b && b < c && c < d))
      throw InvariantError("layered.ordering", "need p+eps < a < b < c < d");
    if (!(k0 > 0.0) || !(eps > 0.0)) throw InvariantError("layered.positive", "need k0 > 0 and eps > 0");
  }

  // optical distance from the edge of B to the obstacle through the wall
  double travel_time() const { return a - (p + eps) + std::sqrt(k0) * (b - a) + (c - b); }
};

// Recognises the layered geometry in a 1D refractive scenario.
inline std::optional<LayeredMedium1D> layered_from_scenario(const Scenario& sc) {
  const auto& m = sc.medium;
  if (sc.grid.dimension != 1 || m.mode != Mode::Refractive || m.alpha0.value != 1.0 || m.alpha0.layers.size() != 1)
    return std::nullopt;
  const auto& wall = m.alpha0.layers[0];
  if (wall.region.kind != RegionKind::Interval) return std::nullopt;
  LayeredMedium1D L;
  L.a = wall.region.lo[0];
  L.b = wall.region.hi[0];
  L.k0 = wall.value;
  L.p = sc.source.p[0];
  L.eps = sc.source.eta;
  if (m.obstacle.kind == RegionKind::Interval) {
    L.c = m.obstacle.lo[0];
    L.d = m.obstacle.hi[0];
  } else {
    L.c = L.b + 1.0;
    L.d = L.c + 1.0;
  }
  if (!(L.p + L.eps < L.a && L.a < L.b && L.b < L.c && L.c < L.d)) return std::nullopt;
  return L;
}

// Closed-form solution of v'' - α0τ²v + α0χ_B = 0 on the line, five branches:
//   x < p-ε        A e^{τx}
//   p-ε < x < p+ε  B e^{τx} + C e^{-τx} + 1/τ²
//   p+ε < x < a    D e^{τx} + G e^{-τx}
//   a < x < b      H e^{√k0 τx} + K e^{-√k0 τx}
//   b < x          L e^{-τx}
// Coefficients follow from continuity of v and v' at the four interfaces.
struct LayeredSolution {
  LayeredMedium1D m;
  double tau = 0.0;
  SignedLog A, B, C, D, G, H, K, L;

  static constexpr const char* names = "ABCDGHKL";

  std::array<SignedLog, 8> coefficients() const { return {A, B, C, D, G, H, K, L}; }

  int branch_of(double x) const {
    if (x < m.p - m.eps) return 0;
    if (x <= m.p + m.eps) return 1;
    if (x < m.a) return 2;
    if (x <= m.b) return 3;
    return 4;
  }

  // v on branch `br` (analytic continuation outside its interval).
  SignedLog eval_branch(int br, double x) const {
    const double s = std::sqrt(m.k0);
    switch (br) {
      case 0: return A.times_exp(tau * x);
      case 1: return B.times_exp(tau * x) + C.times_exp(-tau * x) + SignedLog::from_double(1.0 / (tau * tau));
      case 2: return D.times_exp(tau * x) + G.times_exp(-tau * x);
      case 3: return H.times_exp(s * tau * x) + K.times_exp(-s * tau * x);
      default: return L.times_exp(-tau * x);
    }
  }

  // v' on branch `br`.
  SignedLog deriv_branch(int br, double x) const {
    const double s = std::sqrt(m.k0);
    const SignedLog t = SignedLog::from_double(tau);
    const SignedLog st = SignedLog::from_double(s * tau);
    switch (br) {
      case 0: return t * A.times_exp(tau * x);
      case 1: return t * (B.times_exp(tau * x) - C.times_exp(-tau * x));
      case 2: return t * (D.times_exp(tau * x) - G.times_exp(-tau * x));
      case 3: return st * (H.times_exp(s * tau * x) - K.times_exp(-s * tau * x));
      default: return -(t * L.times_exp(-tau * x));
    }
  }

  SignedLog eval(double x) const {
    const SignedLog v = eval_branch(branch_of(x), x);
    if (!v.finite()) throw NumericalError("analytic_v_1d: log-magnitude not representable at x = " + std::to_string(x));
    return v;
  }

  // log of 2τ e^{2τφ} ∫_c^d v² dx
  double log_leading_order() const {
    const double phi = m.travel_time();
    return 2.0 * tau * phi + 2.0 * L.log_abs() - 2.0 * tau * m.c + std::log(-std::expm1(-2.0 * tau * (m.d - m.c)));
  }
};

inline LayeredSolution analytic_v_1d(const LayeredMedium1D& m, double tau) {
  m.validate();
  if (!(tau > 0.0)) throw std::invalid_argument("analytic_v_1d: tau must be positive");
  LayeredSolution S;
  S.m = m;
  S.tau = tau;
  const double s = std::sqrt(m.k0);
  const double delta = m.b - m.a;
  const double r = (s - 1.0) / (s + 1.0);
  const double ew = std::exp(-2.0 * s * tau * delta);
  const double l2t2 = std::log(2.0 * tau * tau);
  const double one_minus_eb = -std::expm1(-2.0 * tau * m.eps);  // 1 - e^{-2τε}
  const double denom = 1.0 - r * r * ew;

  S.G = SignedLog::from_log(1, tau * (m.p + m.eps) + std::log(one_minus_eb) - l2t2);
  S.C = SignedLog::from_log(-1, tau * (m.p - m.eps) - l2t2);
  const double travel = tau * (m.a - m.p - m.eps);
  if (m.k0 == 1.0) {
    S.D = SignedLog::zero();
  } else {
    const double mag = std::fabs(m.k0 - 1.0) / ((s + 1.0) * (s + 1.0)) * (-std::expm1(-2.0 * s * tau * delta)) *
                       one_minus_eb / denom;
    S.D = SignedLog::from_log(m.k0 > 1.0 ? -1 : 1, std::log(mag) - travel - tau * m.a - l2t2);
  }
  const double wall = 4.0 * s / ((s + 1.0) * (s + 1.0));
  S.L = SignedLog::from_log(1, tau * m.b - s * tau * delta - travel + std::log(wall * one_minus_eb / denom) - l2t2);

  const SignedLog cp = SignedLog::from_double((s + 1.0) / (2.0 * s));
  const SignedLog cm = SignedLog::from_double((s - 1.0) / (2.0 * s));
  // wall coefficients from the outgoing side; matching at a cancels badly for large τ
  S.H = cm * S.L.times_exp(-tau * (1.0 + s) * m.b);
  S.K = cp * S.L.times_exp(tau * (s - 1.0) * m.b);
  S.A = S.D + SignedLog::from_log(1, -tau * (m.p - m.eps) + std::log(one_minus_eb) - l2t2);
  S.B = S.D + SignedLog::from_log(-1, -tau * (m.p + m.eps) - l2t2);
  for (const auto& coef : S.coefficients())
    if (!coef.finite()) throw NumericalError("analytic_v_1d: coefficient log-magnitude overflow at tau " + std::to_string(tau));
  return S;
}

// CSV rows: tau,name,sign,log_abs
inline void write_coefficient_csv(std::ostream& out, const std::vector<LayeredSolution>& sols) {
  out << "tau,name,sign,log_abs\n";
  char buf[128];
  for (const auto& S : sols) {
    const auto c = S.coefficients();
    for (int i = 0; i < 8; ++i) {
      std::snprintf(buf, sizeof buf, "%.17g,%c,%d,%.17g\n", S.tau, LayeredSolution::names[i], c[i].sign(),
                    c[i].log_abs());
      out << buf;
    }
  }
}

}  // namespace enclosure
