#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <span>
#include <string>
#include <vector>

#include "enclosure/errors.hpp"
#include "enclosure/format.hpp"
#include "enclosure/grid.hpp"
#include "enclosure/log_value.hpp"
#include "enclosure/scenario.hpp"
#include "enclosure/stencil.hpp"

namespace enclosure {

// Quadrature of weight * (w - v) over the B cells. weight already carries
// α0 f times the cell volume (f times the volume in dissipative mode).
inline SignedLog indicator(std::span<const double> w_on_B, std::span<const double> v_on_B,
                           std::span<const double> weight) {
  if (w_on_B.size() != v_on_B.size() || w_on_B.size() != weight.size())
    throw std::invalid_argument("indicator: w, v and weight must share the B cell set");
  double s = 0.0;
  for (std::size_t i = 0; i < weight.size(); ++i) s += weight[i] * (w_on_B[i] - v_on_B[i]);
  return SignedLog::from_double(s);
}

struct IndicatorSeries {
  double T = 0.0;
  std::vector<double> taus;
  std::vector<SignedLog> I;
  std::vector<double> noise_floor;  // absolute, per τ

  std::size_t size() const { return taus.size(); }
  double g(std::size_t k) const { return taus[k] * T + I[k].log_abs(); }
  double s(std::size_t k) const { return I[k].log_abs() / (2.0 * taus[k]); }

  void push(double tau, SignedLog value, double floor) {
    if (!taus.empty() && !(tau > taus.back())) throw std::invalid_argument("IndicatorSeries: tau must increase");
    taus.push_back(tau);
    I.push_back(value);
    noise_floor.push_back(floor);
  }
};

enum class VerdictClass { Empty, ObstacleAI, ObstacleAII, Inconclusive };

inline const char* to_string(VerdictClass c) {
  switch (c) {
    case VerdictClass::Empty: return "Empty";
    case VerdictClass::ObstacleAI: return "Obstacle_AI";
    case VerdictClass::ObstacleAII: return "Obstacle_AII";
    case VerdictClass::Inconclusive: return "Inconclusive";
  }
  return "?";
}

struct ClassifyOptions {
  Mode mode = Mode::Refractive;
  double m0 = 1.0, M0 = 1.0;
  double window_fraction = 1.0 / 3.0;
  std::optional<std::pair<double, double>> window;
  double delta_min = 2.0;
  double floor_factor = 10.0;

  static ClassifyOptions from(const Scenario& sc) {
    ClassifyOptions o;
    o.mode = sc.medium.mode;
    o.m0 = sc.medium.m0;
    o.M0 = sc.medium.M0;
    o.window_fraction = sc.run.window_fraction;
    o.window = sc.run.window;
    o.delta_min = sc.run.delta_min;
    return o;
  }
};

struct Verdict {
  VerdictClass cls = VerdictClass::Inconclusive;
  double rate = std::numeric_limits<double>::quiet_NaN();  // slope of log|I| over the window, halved
  double distance_lo = std::numeric_limits<double>::quiet_NaN();
  double distance_hi = std::numeric_limits<double>::quiet_NaN();
  double window_lo = 0.0, window_hi = 0.0;
  std::vector<std::size_t> used;  // indices kept for the fit
  std::size_t trimmed = 0;
  double fit_residual = 0.0;  // RMS of the log|I| fit
  double delta_g = 0.0;       // g(last) - g(first) over the kept window
  double monotonicity = 0.0;  // fraction of increasing steps of g
  int sign = 0;               // common sign over the window, 0 if mixed
  std::string reason;
};

// Least-squares slope and RMS residual.
inline std::pair<double, double> fit_line(const std::vector<double>& x, const std::vector<double>& y) {
  const std::size_t n = x.size();
  double mx = 0.0, my = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    mx += x[i];
    my += y[i];
  }
  mx /= n;
  my /= n;
  double sxx = 0.0, sxy = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    sxx += (x[i] - mx) * (x[i] - mx);
    sxy += (x[i] - mx) * (y[i] - my);
  }
  const double slope = sxy / sxx;
  double rss = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double r = y[i] - (my + slope * (x[i] - mx));
    rss += r * r;
  }
  return {slope, std::sqrt(rss / n)};
}

// Decision rule over the final τ window: g strictly decreasing (or I at the
// noise floor) gives Empty; g rising by more than delta_min with a stable
// sign gives Obstacle_AI (negative) or Obstacle_AII (positive).
inline Verdict classify(const IndicatorSeries& s, const ClassifyOptions& o) {
  const std::size_t n = s.size();
  if (n < 8) throw ConfigError("classify: need at least 8 tau samples, got " + std::to_string(n));
  if (!(s.taus.back() >= 3.0 * s.taus.front() * (1.0 - 1e-12)))
    throw ConfigError("classify: tau samples must span at least a factor 3");

  Verdict v;
  if (o.window) {
    v.window_lo = o.window->first;
    v.window_hi = o.window->second;
  } else {
    v.window_hi = s.taus.back();
    v.window_lo = s.taus.back() - o.window_fraction * (s.taus.back() - s.taus.front());
  }
  const double eps = 1e-9 * (s.taus.back() - s.taus.front());
  std::vector<std::size_t> window;
  for (std::size_t k = 0; k < n; ++k)
    if (s.taus[k] >= v.window_lo - eps && s.taus[k] <= v.window_hi + eps) window.push_back(k);
  for (std::size_t k : window) {
    const SignedLog& I = s.I[k];
    const bool under = I.is_zero() || I.log_abs() < std::log(o.floor_factor * s.noise_floor[k]);
    if (under) ++v.trimmed;
    else v.used.push_back(k);
  }

  if (v.used.empty()) {
    v.cls = VerdictClass::Empty;
    v.reason = "indicator vanishes to the noise floor over the window";
    return v;
  }

  std::vector<double> x, y;
  for (std::size_t k : v.used) {
    x.push_back(s.taus[k]);
    y.push_back(s.I[k].log_abs());
  }
  const int s0 = s.I[v.used.front()].sign();
  v.sign = std::all_of(v.used.begin(), v.used.end(), [&](std::size_t k) { return s.I[k].sign() == s0; }) ? s0 : 0;
  if (v.used.size() >= 2) {
    auto [slope, res] = fit_line(x, y);
    v.rate = 0.5 * slope;
    v.fit_residual = res;
  }
  std::size_t ups = 0, downs = 0;
  for (std::size_t i = 1; i < v.used.size(); ++i) {
    const double dg = s.g(v.used[i]) - s.g(v.used[i - 1]);
    if (dg > 0.0) ++ups;
    if (dg < 0.0) ++downs;
  }
  const std::size_t steps = v.used.size() > 1 ? v.used.size() - 1 : 0;
  v.monotonicity = steps ? static_cast<double>(ups) / steps : 0.0;
  v.delta_g = s.g(v.used.back()) - s.g(v.used.front());

  if (v.used.size() < 3) {
    v.cls = VerdictClass::Inconclusive;
    v.reason = "fewer than 3 usable samples in the window";
  } else if (downs == steps) {
    v.cls = VerdictClass::Empty;
    v.reason = "g decreases monotonically over the window";
  } else if (v.delta_g > o.delta_min && v.sign != 0) {
    v.cls = v.sign < 0 ? VerdictClass::ObstacleAI : VerdictClass::ObstacleAII;
    v.reason = "g increases by more than delta_min with a stable sign";
  } else {
    v.cls = VerdictClass::Inconclusive;
    v.reason = v.sign == 0 ? "sign changes over the window" : "g rise below delta_min or not monotone";
  }

  if (v.cls == VerdictClass::ObstacleAI || v.cls == VerdictClass::ObstacleAII) {
    const double r = -v.rate;
    if (o.mode == Mode::Dissipative) {
      v.distance_lo = v.distance_hi = std::max(0.0, r);
    } else {
      v.distance_lo = std::max(0.0, r / o.M0);
      v.distance_hi = std::max(0.0, r / o.m0);
    }
  }
  return v;
}

// ----- identities -----------------------------------------------------------

// Full-field data at one τ. Equations, with κ = ατ² + τq, κ0 = α0τ² + τq0:
//   Δv - κ0 v + α0 f = 0,  Δw - κ w + α f = G,  G = e^{-τT}(α(u' + τu) + q u).
struct IdentityFields {
  Grid grid;
  double tau = 0.0;
  std::vector<double> alpha, alpha0, q, q0, f, w, v, G;
  // w - v formed before the quadrature; taken as w - v when empty.  The
  // subtraction loses everything once |R| falls below ε|w|.
  std::vector<double> R;
};

struct IdentityReport {
  double lhs = 0.0, rhs = 0.0;
  double gap = 0.0;    // |lhs - rhs| / scale
  double scale = 0.0;  // largest term magnitude
  std::vector<std::pair<std::string, double>> terms;
};

namespace detail {

inline IdentityReport finish(IdentityReport r) {
  r.scale = 0.0;
  for (auto& [name, val] : r.terms) r.scale = std::max(r.scale, std::fabs(val));
  r.gap = r.scale > 0.0 ? std::fabs(r.lhs - r.rhs) / r.scale : 0.0;
  return r;
}

inline void require_full(const IdentityFields& F) {
  const std::size_t n = F.grid.size();
  for (const auto* v : {&F.alpha, &F.alpha0, &F.q, &F.q0, &F.f, &F.w, &F.v, &F.G})
    if (v->size() != n) throw std::invalid_argument("identity check: missing full-field data");
  if (!F.R.empty() && F.R.size() != n) throw std::invalid_argument("identity check: R has the wrong size");
}

inline std::vector<double> difference(const IdentityFields& F) {
  if (!F.R.empty()) return F.R;
  std::vector<double> R(F.w.size());
  for (std::size_t i = 0; i < R.size(); ++i) R[i] = F.w[i] - F.v[i];
  return R;
}

}  // namespace detail

// ∫f{(α0-α)v + αR} = ∫(κ0-κ)v² + ∫(|∇R|² + κR²) + ∫GR - ∫Gv
// (dissipative form: ∫fR = τ∫(q0-q)v² + ...).
inline IdentityReport check_identity_2_4(const IdentityFields& F) {
  detail::require_full(F);
  const Grid& g = F.grid;
  const double t2 = F.tau * F.tau;
  const std::vector<double> R = detail::difference(F);
  double l1 = 0, l2 = 0, r1 = 0, r2 = 0, r3 = 0, r4 = 0;
  for (std::size_t i = 0; i < g.size(); ++i) {
    const double k = F.alpha[i] * t2 + F.tau * F.q[i];
    const double k0 = F.alpha0[i] * t2 + F.tau * F.q0[i];
    l1 += F.alpha[i] * F.f[i] * R[i];
    l2 += (F.alpha0[i] - F.alpha[i]) * F.f[i] * F.v[i];
    r1 += (k0 - k) * F.v[i] * F.v[i];
    r2 += k * R[i] * R[i];
    r3 += F.G[i] * R[i];
    r4 += F.G[i] * F.v[i];
  }
  const double vol = g.cell_volume();
  const double gr = grad_dot(g, R, R);
  IdentityReport rep;
  rep.terms = {{"f*alpha*R", l1 * vol}, {"f*(alpha0-alpha)*v", l2 * vol}, {"contrast*v^2", r1 * vol},
               {"energy(R)", gr + r2 * vol}, {"G*R", r3 * vol}, {"G*v", r4 * vol}};
  rep.lhs = (l1 + l2) * vol;
  rep.rhs = r1 * vol + gr + r2 * vol + r3 * vol - r4 * vol;
  return detail::finish(rep);
}

// ∫f{(α-α0)w - α0R} = ∫(κ0/κ)(κ-κ0)v² + ∫(|∇R|² + κ|R + (1-κ0/κ)v|²) + ∫GR + ∫Gv
inline IdentityReport check_identity_2_8(const IdentityFields& F) {
  detail::require_full(F);
  const Grid& g = F.grid;
  const double t2 = F.tau * F.tau;
  const std::vector<double> R = detail::difference(F);
  double l1 = 0, l2 = 0, r1 = 0, r2 = 0, r3 = 0, r4 = 0;
  for (std::size_t i = 0; i < g.size(); ++i) {
    const double k = F.alpha[i] * t2 + F.tau * F.q[i];
    const double k0 = F.alpha0[i] * t2 + F.tau * F.q0[i];
    l1 += (F.alpha[i] - F.alpha0[i]) * F.f[i] * F.w[i];
    l2 += -F.alpha0[i] * F.f[i] * R[i];
    r1 += (k0 / k) * (k - k0) * F.v[i] * F.v[i];
    const double m = R[i] + (1.0 - k0 / k) * F.v[i];
    r2 += k * m * m;
    r3 += F.G[i] * R[i];
    r4 += F.G[i] * F.v[i];
  }
  const double vol = g.cell_volume();
  const double gr = grad_dot(g, R, R);
  IdentityReport rep;
  rep.terms = {{"f*(alpha-alpha0)*w", l1 * vol}, {"-f*alpha0*R", l2 * vol}, {"contrast*v^2", r1 * vol},
               {"energy(R)", gr + r2 * vol}, {"G*R", r3 * vol}, {"G*v", r4 * vol}};
  rep.lhs = (l1 + l2) * vol;
  rep.rhs = r1 * vol + gr + r2 * vol + r3 * vol + r4 * vol;
  return detail::finish(rep);
}

// ----- inequality certificates ----------------------------------------------

struct BoundCheck {
  double tau = 0.0;
  double indicator = 0.0;
  double lower = 0.0;  // τ²∫(α0-α)v²   (dissipative: τ∫(q0-q)v²)
  double upper = 0.0;  // τ²∫(α0/α)(α0-α)v²   (dissipative: τ∫((τ+q0)/(τ+q))(q0-q)v²)
  double slack = 0.0;
  bool ok = true;
};

// Evaluates both bound integrals from v on the cells where the medium
// differs from the background.
inline BoundCheck bound_integrals(const Grid& g, Mode mode, double tau, std::span<const std::size_t> cells,
                                  std::span<const double> v_on_cells, std::span<const double> alpha,
                                  std::span<const double> alpha0, std::span<const double> q,
                                  std::span<const double> q0) {
  BoundCheck b;
  b.tau = tau;
  double lo = 0.0, up = 0.0;
  for (std::size_t c = 0; c < cells.size(); ++c) {
    const std::size_t i = cells[c];
    const double v2 = v_on_cells[c] * v_on_cells[c];
    if (mode == Mode::Refractive) {
      const double d = alpha0[i] - alpha[i];
      lo += d * v2;
      up += alpha0[i] / alpha[i] * d * v2;
    } else {
      const double d = q0[i] - q[i];
      lo += d * v2;
      up += (tau + q0[i]) / (tau + q[i]) * d * v2;
    }
  }
  const double f = (mode == Mode::Refractive ? tau * tau : tau) * g.cell_volume();
  b.lower = lo * f;
  b.upper = up * f;
  return b;
}

// lower - slack <= I <= upper + slack; throws with all four numbers otherwise.
inline BoundCheck check_bounds(BoundCheck b, double indicator_value, double slack, bool throw_on_failure = true) {
  b.indicator = indicator_value;
  b.slack = slack;
  b.ok = indicator_value >= b.lower - slack && indicator_value <= b.upper + slack;
  if (!b.ok && throw_on_failure)
    throw CheckFailure("bound check failed at tau " + sci(b.tau) + ": lower " + sci(b.lower) +
                       ", indicator " + sci(indicator_value) + ", upper " + sci(b.upper) +
                       ", slack " + sci(slack));
  return b;
}

}  // namespace enclosure
