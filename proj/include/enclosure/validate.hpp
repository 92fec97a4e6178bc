#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "enclosure/elliptic.hpp"
#include "enclosure/errors.hpp"
#include "enclosure/format.hpp"
#include "enclosure/indicator.hpp"
#include "enclosure/pipeline.hpp"
#include "enclosure/scenario.hpp"
#include "enclosure/stencil.hpp"
#include "enclosure/wave.hpp"

namespace enclosure {

struct CheckResult {
  std::string name;
  bool passed = false;
  bool skipped = false;
  double measured = 0.0;
  double threshold = 0.0;
  std::string detail;
};

struct ValidationReport {
  double tau = 0.0;
  std::vector<CheckResult> checks;

  bool passed() const {
    return std::all_of(checks.begin(), checks.end(), [](const CheckResult& c) { return c.passed || c.skipped; });
  }
  const CheckResult* first_failure() const {
    for (const auto& c : checks)
      if (!c.passed && !c.skipped) return &c;
    return nullptr;
  }
};

enum class Level { Fast, Full };

struct ValidateOptions {
  Level level = Level::Fast;
  bool corrupt_w = false;      // negative control: scales w by 1.01 before the residual check
  std::optional<double> tau;   // probe τ, default: middle of the fit window
};

// Thresholds shared by validate and the test suite.
namespace limits {
inline constexpr double energy_drift = 1e-9;
inline constexpr double energy_increase = 1e-12;
inline constexpr double residual = 1e-3;
inline constexpr double identity = 1e-2;
inline constexpr double bound_tol = 1e-3;
inline constexpr double contraction_slack = 0.02;
inline constexpr double contraction_limit = 1e-6;
inline constexpr double order_lo = 1.5, order_hi = 2.2;
}  // namespace limits

// Same scenario with every grid spacing divided by factor (extent scaled up).
inline Scenario refined(const Scenario& sc, int factor) {
  json cfg = sc.config;
  auto& g = cfg["grid"];
  if (g["spacing"].is_array()) {
    for (auto& s : g["spacing"]) s = s.get<double>() / factor;
  } else {
    g["spacing"] = g["spacing"].get<double>() / factor;
  }
  if (g.contains("extent")) {
    if (g["extent"].is_array()) {
      for (auto& e : g["extent"]) e = e.get<int>() * factor;
    } else {
      g["extent"] = g["extent"].get<int>() * factor;
    }
  }
  if (cfg["run"].contains("margin") == false) cfg["run"]["margin"] = sc.margin();
  return scenario_from_json(cfg);
}

// Relative L2 gap on the given cells.
inline double relative_gap(std::span<const double> a, std::span<const double> b) {
  double num = 0.0, den = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    num += (a[i] - b[i]) * (a[i] - b[i]);
    den += b[i] * b[i];
  }
  return den > 0.0 ? std::sqrt(num / den) : std::sqrt(num);
}

namespace detail {

inline bool constant_field(const std::vector<double>& v) {
  const auto [lo, hi] = std::minmax_element(v.begin(), v.end());
  return *lo == *hi;
}

struct FieldGaps {
  double residual = 0.0, gap_2_4 = 0.0, gap_2_8 = 0.0;
  std::vector<double> v;  // consistent comparison solution, full grid
};

inline FieldGaps field_gaps(const Scenario& sc, double tau, bool corrupt) {
  const RunPair rp = run_pair(sc, {tau});
  IdentityFields idf = identity_fields(sc, rp, tau);
  if (corrupt)
    for (double& x : idf.w) x *= 1.01;
  FieldGaps out;
  const Fields& F = sc.fields;
  out.residual = residual_2_3(sc.grid, idf.w, F.alpha, F.q, F.f, rp.obstacle.final, tau);
  out.gap_2_4 = check_identity_2_4(idf).gap;
  out.gap_2_8 = check_identity_2_8(idf).gap;
  out.v = std::move(idf.v);
  return out;
}

inline CheckResult at_most(std::string name, double measured, double threshold, std::string detail = {}) {
  return {std::move(name), measured <= threshold, false, measured, threshold, std::move(detail)};
}

inline CheckResult skipped(std::string name, std::string why) { return {std::move(name), true, true, 0.0, 0.0, why}; }

}  // namespace detail

// Relative L2 gap between solve_v and the free-space kernel convolution on
// the B and D cells.  Needs a constant background.
inline double kernel_cross_gap(const Scenario& sc, double tau) {
  const Fields& F = sc.fields;
  const EllipticProblem p = comparison_problem(sc, tau);
  const auto v = solve_v(p, SolveOptions{1e-12, 0, nullptr});
  std::vector<double> density(sc.grid.size());
  double lambda = 0.0;
  if (sc.medium.mode == Mode::Refractive) {
    for (std::size_t i = 0; i < density.size(); ++i) density[i] = F.alpha0[i] * F.f[i];
    lambda = std::sqrt(F.alpha0[0]) * tau;
  } else {
    density = F.f;
    lambda = std::sqrt(tau * tau + tau * F.q0[0]);
  }
  auto targets = support(F.f);
  for (std::size_t i : support(F.d_cover)) targets.push_back(i);
  const auto kv = kernel_convolution(sc.grid, density, Kernel{sc.grid.dimension, lambda}, targets);
  std::vector<double> sv(targets.size());
  for (std::size_t t = 0; t < targets.size(); ++t) sv[t] = v[targets[t]];
  return relative_gap(sv, kv);
}

// Allowance for the second-order stencil against the exact kernel: the
// leading truncation term of the 3-point Laplacian on e^{-λ|x|} is (λh)²/12.
inline double kernel_cross_tolerance(const Scenario& sc, double tau) {
  const Fields& F = sc.fields;
  const double lambda = sc.medium.mode == Mode::Refractive ? std::sqrt(F.alpha0[0]) * tau
                                                          : std::sqrt(tau * tau + tau * F.q0[0]);
  const double lh = lambda * sc.grid.min_spacing();
  return std::max(1e-6, (sc.grid.dimension == 1 ? 0.1 : 1.0) * lh * lh);
}

// The stencil decays at acosh(1 + (λh)²/2)/h < λ, so on a constant
// background the discrete v overshoots the upper kernel bound by about
// e^{(λ - λ_h) r} - 1 at distance r from the source.
inline double bound_tolerance(const Scenario& sc, double tau, const std::vector<std::size_t>& targets) {
  const Fields& F = sc.fields;
  const double lambda = sc.medium.mode == Mode::Refractive
                            ? sc.medium.M0 * tau
                            : std::sqrt(tau * tau + tau * *std::max_element(F.q0.begin(), F.q0.end()));
  const double h = sc.grid.min_spacing();
  const double lh = std::acosh(1.0 + 0.5 * lambda * lambda * h * h) / h;
  double r = 0.0;
  for (std::size_t i : targets) r = std::max(r, distance(sc.grid.center(i), sc.source.p));
  return std::max(limits::bound_tol, 2.0 * std::expm1((lambda - lh) * r));
}

inline ValidationReport validate_scenario(const Scenario& sc, const ValidateOptions& opt = {}) {
  ValidationReport rep;
  const double tau = opt.tau ? *opt.tau : probe_tau(sc);
  rep.tau = tau;
  const Fields& F = sc.fields;
  const Grid& g = sc.grid;
  const bool refractive = sc.medium.mode == Mode::Refractive;

  // energy of the obstacle run
  {
    SimulationOptions so;
    so.record_energy = true;
    const auto res = simulate(sc, false, so);
    const auto er = energy_report(res.energy);
    const bool undamped = std::all_of(F.q.begin(), F.q.end(), [](double x) { return x == 0.0; });
    if (undamped)
      rep.checks.push_back(detail::at_most("energy_conservation", er.max_relative_drift, limits::energy_drift));
    else
      rep.checks.push_back(detail::at_most("energy_monotone", er.max_increase, limits::energy_increase));
  }

  const auto gaps = detail::field_gaps(sc, tau, opt.corrupt_w);
  rep.checks.push_back(detail::at_most("residual_2_3", gaps.residual, limits::residual,
                                       opt.corrupt_w ? "w scaled by 1.01" : ""));
  rep.checks.push_back(detail::at_most("identity_2_4", gaps.gap_2_4, limits::identity));
  rep.checks.push_back(detail::at_most("identity_2_8", gaps.gap_2_8, limits::identity));

  // comparison solution against the kernel bounds
  {
    auto targets = support(F.d_cover);
    if (targets.empty()) targets = support(F.f);
    const double tol = bound_tolerance(sc, tau, targets);
    try {
      const auto br = comparison_bounds(g, gaps.v, sc.medium.mode, F.alpha0, F.q0, F.f, sc.medium.m0, sc.medium.M0,
                                        tau, targets, tol);
      const double m = std::min(br.lower_margin, br.upper_margin);
      rep.checks.push_back({"comparison_bounds", true, false, m, -tol,
                            "lower " + sci(br.lower_margin) + " upper " + sci(br.upper_margin)});
    } catch (const CheckFailure& e) {
      rep.checks.push_back({"comparison_bounds", false, false, 0.0, -tol, e.what()});
    }
  }

  const bool constant_bg = refractive ? detail::constant_field(F.alpha0) : detail::constant_field(F.q0);
  if (constant_bg) {
    try {
      rep.checks.push_back(detail::at_most("kernel_cross_validation", kernel_cross_gap(sc, tau),
                                           kernel_cross_tolerance(sc, tau)));
    } catch (const ConfigError& e) {
      rep.checks.push_back(detail::skipped("kernel_cross_validation", e.what()));
    }
  } else
    rep.checks.push_back(detail::skipped("kernel_cross_validation", "background not constant"));

  if (refractive) {
    try {
      const auto cr = contraction_iteration(g, F.f, F.alpha0, sc.medium.m0, sc.medium.M0, tau, 400,
                                            limits::contraction_slack);
      const auto v = solve_v(comparison_problem(sc, tau), SolveOptions{1e-12, 0, nullptr});
      const double gap = relative_gap(cr.limit, v);
      rep.checks.push_back({"contraction_rate", true, false, cr.max_ratio, cr.rate_bound + limits::contraction_slack,
                            std::to_string(cr.iterations) + " iterations"});
      rep.checks.push_back(detail::at_most("contraction_limit", gap, limits::contraction_limit));
      const double worst = std::min(cr.min_first, cr.min_increment);
      rep.checks.push_back({"contraction_monotone", worst >= -1e-12, false, worst, 0.0, ""});
    } catch (const CheckFailure& e) {
      rep.checks.push_back({"contraction_rate", false, false, 0.0, 0.0, e.what()});
    } catch (const ConfigError& e) {
      rep.checks.push_back(detail::skipped("contraction_rate", e.what()));
    }
  } else {
    rep.checks.push_back(detail::skipped("contraction_rate", "dissipative mode"));
  }

  // indicator certificates over the whole sweep
  {
    PipelineOptions po;
    const auto pr = run_pipeline(sc, po);
    double worst = std::numeric_limits<double>::infinity();
    std::string where;
    bool ok = true;
    for (const auto& b : pr.bounds) {
      const double m = std::min(b.indicator - (b.lower - b.slack), (b.upper + b.slack) - b.indicator);
      const double scale = std::max({std::fabs(b.lower), std::fabs(b.upper), std::numeric_limits<double>::min()});
      if (m / scale < worst) {
        worst = m / scale;
        where = "tau " + num(b.tau);
      }
      ok = ok && b.ok;
    }
    rep.checks.push_back({"bound_certificates", ok, false, worst, 0.0, where});
  }

  if (opt.level == Level::Full) {
    const Scenario fine = refined(sc, 2);
    const auto fg = detail::field_gaps(fine, tau, false);
    auto order = [](double coarse, double f) {
      return (coarse > 0.0 && f > 0.0) ? std::log2(coarse / f) : std::numeric_limits<double>::quiet_NaN();
    };
    auto in_range = [](std::string name, double o, double c, double f) {
      CheckResult r{std::move(name), o >= limits::order_lo && o <= limits::order_hi, false, o, limits::order_lo,
                    "gaps " + sci(c) + " -> " + sci(f) + ", accepted [" + brief(limits::order_lo) + ", " +
                        brief(limits::order_hi) + "]"};
      return r;
    };
    rep.checks.push_back(in_range("order_residual_2_3", order(gaps.residual, fg.residual), gaps.residual, fg.residual));
    rep.checks.push_back(in_range("order_identity_2_4", order(gaps.gap_2_4, fg.gap_2_4), gaps.gap_2_4, fg.gap_2_4));
    rep.checks.push_back(in_range("order_identity_2_8", order(gaps.gap_2_8, fg.gap_2_8), gaps.gap_2_8, fg.gap_2_8));
  }
  return rep;
}

}  // namespace enclosure
