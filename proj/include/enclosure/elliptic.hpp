#pragma once

#include <cmath>
#include <limits>
#include <optional>
#include <span>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <boost/math/quadrature/gauss.hpp>

#include "enclosure/errors.hpp"
#include "enclosure/format.hpp"
#include "enclosure/grid.hpp"
#include "enclosure/region.hpp"
#include "enclosure/scenario.hpp"
#include "enclosure/stencil.hpp"

namespace enclosure {

// -Δv + κ v = source on the grid, zero Dirichlet data.
struct EllipticProblem {
  Grid grid;
  std::vector<double> kappa;
  std::vector<double> source;
  // When set, solve_v checks that e^{-decay_rate * dist(box boundary, support)} < 1e-12.
  std::optional<Region> support;
  double decay_rate = 0.0;
};

// Δv - α0 τ² v + α0 f = 0
inline EllipticProblem refractive_problem(const Grid& g, std::span<const double> alpha0, std::span<const double> f,
                                          double tau) {
  EllipticProblem p{g, std::vector<double>(g.size()), std::vector<double>(g.size()), std::nullopt, 0.0};
  for (std::size_t i = 0; i < g.size(); ++i) {
    p.kappa[i] = alpha0[i] * tau * tau;
    p.source[i] = alpha0[i] * f[i];
  }
  return p;
}

// (Δ - τ² - τ q0) v + f = 0
inline EllipticProblem dissipative_problem(const Grid& g, std::span<const double> q0, std::span<const double> f,
                                           double tau) {
  EllipticProblem p{g, std::vector<double>(g.size()), std::vector<double>(f.begin(), f.end()), std::nullopt, 0.0};
  for (std::size_t i = 0; i < g.size(); ++i) p.kappa[i] = tau * tau + tau * q0[i];
  return p;
}

inline EllipticProblem comparison_problem(const Scenario& sc, double tau) {
  const Fields& F = sc.fields;
  auto p = sc.medium.mode == Mode::Refractive ? refractive_problem(sc.grid, F.alpha0, F.f, tau)
                                              : dissipative_problem(sc.grid, F.q0, F.f, tau);
  std::vector<Region> parts{sc.source.ball()};
  if (sc.has_obstacle()) parts.push_back(sc.medium.obstacle);
  p.support = Region::union_of(parts);
  p.decay_rate = sc.medium.mode == Mode::Refractive ? sc.medium.m0 * tau : tau;
  return p;
}

struct SolveOptions {
  double rel_tol = 1e-10;
  int max_iterations = 0;  // 0: 20 * cells
  const std::vector<double>* initial_guess = nullptr;
};

struct SolveReport {
  int iterations = 0;
  double relative_residual = 0.0;
  std::vector<double> history;
};

inline void apply_operator(const EllipticProblem& p, std::span<const double> x, std::span<double> out) {
  apply_laplacian(p.grid, x, out);
  for (std::size_t i = 0; i < x.size(); ++i) out[i] = -out[i] + p.kappa[i] * x[i];
}

inline void check_decay_margin(const EllipticProblem& p) {
  if (!p.support || p.support->is_empty()) return;
  const Grid& g = p.grid;
  auto [lo, hi] = p.support->bbox(g.dimension);
  const Point up = g.upper();
  double dist = std::numeric_limits<double>::infinity();
  for (int a = 0; a < g.dimension; ++a) dist = std::min({dist, lo[a] - g.origin[a], up[a] - hi[a]});
  if (!(std::exp(-p.decay_rate * dist) < 1e-12))
    throw ConfigError("solve_v: truncated domain too small, e^{-rate*dist} = " +
                      sci(std::exp(-p.decay_rate * dist)) + " >= 1e-12");
}

// Jacobi-preconditioned conjugate gradients. Reductions run in a fixed
// serial order so results are bit-reproducible.
inline std::vector<double> solve_v(const EllipticProblem& p, const SolveOptions& opt = {}, SolveReport* report = nullptr) {
  const Grid& g = p.grid;
  const std::size_t n = g.size();
  if (p.kappa.size() != n || p.source.size() != n) throw std::invalid_argument("solve_v: field size mismatch");
  for (double k : p.kappa)
    if (!(k > 0.0)) throw NumericalError("solve_v: indefinite system, coefficient not strictly positive");
  check_decay_margin(p);

  double diag0 = 0.0;
  for (int a = 0; a < g.dimension; ++a) diag0 += 2.0 / (g.spacing[a] * g.spacing[a]);

  std::vector<double> x(n, 0.0);
  if (opt.initial_guess) x = *opt.initial_guess;
  double bnorm = 0.0;
  for (double b : p.source) bnorm += b * b;
  bnorm = std::sqrt(bnorm);
  SolveReport local;
  SolveReport& rep = report ? *report : local;
  rep = SolveReport{};
  if (bnorm == 0.0) {
    std::fill(x.begin(), x.end(), 0.0);
    return x;
  }

  std::vector<double> r(n), z(n), d(n), q(n);
  apply_operator(p, x, q);
  for (std::size_t i = 0; i < n; ++i) r[i] = p.source[i] - q[i];
  double rz = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    z[i] = r[i] / (diag0 + p.kappa[i]);
    d[i] = z[i];
    rz += r[i] * z[i];
  }
  const int cap = opt.max_iterations > 0 ? opt.max_iterations : static_cast<int>(std::min<std::size_t>(20 * n, 2000000));
  for (int it = 0;; ++it) {
    double rr = 0.0;
    for (double v : r) rr += v * v;
    const double rel = std::sqrt(rr) / bnorm;
    rep.history.push_back(rel);
    rep.iterations = it;
    rep.relative_residual = rel;
    if (rel <= opt.rel_tol) break;
    if (it >= cap) {
      std::ostringstream msg;
      msg << "solve_v: no convergence after " << it << " iterations, residual history tail:";
      for (std::size_t k = rep.history.size() > 5 ? rep.history.size() - 5 : 0; k < rep.history.size(); ++k)
        msg << ' ' << rep.history[k];
      throw NumericalError(msg.str());
    }
    apply_operator(p, d, q);
    double dq = 0.0;
    for (std::size_t i = 0; i < n; ++i) dq += d[i] * q[i];
    if (!(dq > 0.0)) throw NumericalError("solve_v: indefinite system detected during iteration");
    const double alpha = rz / dq;
    double rz_new = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      x[i] += alpha * d[i];
      r[i] -= alpha * q[i];
      z[i] = r[i] / (diag0 + p.kappa[i]);
      rz_new += r[i] * z[i];
    }
    const double beta = rz_new / rz;
    rz = rz_new;
    for (std::size_t i = 0; i < n; ++i) d[i] = z[i] + beta * d[i];
  }
  return x;
}

// ----- kernels --------------------------------------------------------------

// K_λ(ξ) = e^{-λ|ξ|}/(2λ) in 1D, e^{-λ|ξ|}/(4π|ξ|) in 3D.
struct Kernel {
  int dimension = 1;
  double lambda = 1.0;
};

inline double kernel_eval(const Kernel& k, const Point& xi) {
  if (!(k.lambda > 0.0)) throw std::invalid_argument("kernel_eval: lambda must be positive");
  if (k.dimension == 1) return std::exp(-k.lambda * std::fabs(xi[0])) / (2.0 * k.lambda);
  if (k.dimension != 3) throw std::invalid_argument("kernel_eval: dimension must be 1 or 3");
  const double r = std::sqrt(xi[0] * xi[0] + xi[1] * xi[1] + xi[2] * xi[2]);
  if (r == 0.0) throw std::domain_error("kernel_eval: 3D kernel is singular at xi = 0");
  return std::exp(-k.lambda * r) / (4.0 * M_PI * r);
}

namespace detail {

// ∫_{y0}^{y1} e^{-λ|x-y|}/(2λ) dy
inline double kernel_cell_1d(double x, double y0, double y1, double lambda) {
  const double l2 = 2.0 * lambda * lambda;
  if (x >= y1) return -std::exp(-lambda * (x - y1)) * std::expm1(-lambda * (y1 - y0)) / l2;
  if (x <= y0) return -std::exp(-lambda * (y0 - x)) * std::expm1(-lambda * (y1 - y0)) / l2;
  return (2.0 - std::exp(-lambda * (x - y0)) - std::exp(-lambda * (y1 - x))) / l2;
}

// ∫ over a 3D cell by tensor Gauss-Legendre, subdivided near the singularity.
inline double kernel_cell_3d(const Point& x, const Point& lo, const Point& h, double lambda) {
  static constexpr double node[3] = {-0.7745966692414834, 0.0, 0.7745966692414834};
  static constexpr double wt[3] = {5.0 / 9.0, 8.0 / 9.0, 5.0 / 9.0};
  double dist2 = 0.0;
  for (int a = 0; a < 3; ++a) {
    const double d = std::max({lo[a] - x[a], 0.0, x[a] - lo[a] - h[a]});
    dist2 += d * d;
  }
  const int sub = dist2 < 4.0 * h[0] * h[0] ? 4 : 1;
  double s = 0.0;
  const Point hs{h[0] / sub, h[1] / sub, h[2] / sub};
  for (int c = 0; c < sub; ++c)
    for (int b = 0; b < sub; ++b)
      for (int a = 0; a < sub; ++a)
        for (int k = 0; k < 3; ++k)
          for (int j = 0; j < 3; ++j)
            for (int i = 0; i < 3; ++i) {
              const Point y{lo[0] + (a + 0.5 * (1 + node[i])) * hs[0], lo[1] + (b + 0.5 * (1 + node[j])) * hs[1],
                            lo[2] + (c + 0.5 * (1 + node[k])) * hs[2]};
              const double r = distance(x, y);
              s += wt[i] * wt[j] * wt[k] * std::exp(-lambda * r) / (4.0 * M_PI * r);
            }
  return s * hs[0] * hs[1] * hs[2] / 8.0;
}

}  // namespace detail

// (density ⋆ K_λ) at the centres of `targets`, density piecewise constant
// per cell. Exact cell integrals in 1D, Gauss-Legendre in 3D.
inline std::vector<double> kernel_convolution(const Grid& g, std::span<const double> density, const Kernel& k,
                                              const std::vector<std::size_t>& targets) {
  const auto src = support(density);
  std::vector<double> out(targets.size(), 0.0);
  for (std::size_t t = 0; t < targets.size(); ++t) {
    const Point x = g.center(targets[t]);
    double s = 0.0;
    for (std::size_t j : src) {
      const auto m = g.multi_index(j);
      if (g.dimension == 1) {
        s += density[j] * detail::kernel_cell_1d(x[0], g.cell_lo(0, m[0]), g.cell_hi(0, m[0]), k.lambda);
      } else {
        const Point lo{g.cell_lo(0, m[0]), g.cell_lo(1, m[1]), g.cell_lo(2, m[2])};
        s += density[j] * detail::kernel_cell_3d(x, lo, g.spacing, k.lambda);
      }
    }
    out[t] = s;
  }
  return out;
}

// ----- comparison bounds ----------------------------------------------------

struct BoundReport {
  std::vector<std::size_t> cells;
  std::vector<double> v, lower, upper;
  double lambda_lower = 0.0, lambda_upper = 0.0;
  // min over cells of (v - lower)/|v| and (upper - v)/|v|
  double lower_margin = std::numeric_limits<double>::infinity();
  double upper_margin = std::numeric_limits<double>::infinity();
  std::size_t worst_lower = 0, worst_upper = 0;
};

// Kernel bounds on v: refractive K_{M0τ} ⋆ α0f <= v <= K_{m0τ} ⋆ α0f;
// dissipative K_{L0(τ)τ} ⋆ f <= v <= K_τ ⋆ f with L0(τ) = sqrt(1 + L0/τ).
inline BoundReport comparison_bounds(const Grid& g, std::span<const double> v, Mode mode,
                                     std::span<const double> alpha0, std::span<const double> q0,
                                     std::span<const double> f, double m0, double M0, double tau,
                                     const std::vector<std::size_t>& targets, double tol = 1e-3) {
  BoundReport rep;
  rep.cells = targets;
  std::vector<double> density(g.size());
  if (mode == Mode::Refractive) {
    for (std::size_t i = 0; i < g.size(); ++i) density[i] = alpha0[i] * f[i];
    rep.lambda_lower = M0 * tau;
    rep.lambda_upper = m0 * tau;
  } else {
    const double L0 = *std::max_element(q0.begin(), q0.end());
    density.assign(f.begin(), f.end());
    rep.lambda_lower = std::sqrt(1.0 + L0 / tau) * tau;
    rep.lambda_upper = tau;
  }
  rep.lower = kernel_convolution(g, density, Kernel{g.dimension, rep.lambda_lower}, targets);
  rep.upper = kernel_convolution(g, density, Kernel{g.dimension, rep.lambda_upper}, targets);
  for (std::size_t t = 0; t < targets.size(); ++t) {
    const double vt = v[targets[t]];
    rep.v.push_back(vt);
    const double scale = std::max(std::fabs(vt), std::numeric_limits<double>::min());
    const double lm = (vt - rep.lower[t]) / scale;
    const double um = (rep.upper[t] - vt) / scale;
    if (lm < rep.lower_margin) {
      rep.lower_margin = lm;
      rep.worst_lower = targets[t];
    }
    if (um < rep.upper_margin) {
      rep.upper_margin = um;
      rep.worst_upper = targets[t];
    }
  }
  auto where = [&](std::size_t cell) {
    const Point c = g.center(cell);
    std::ostringstream s;
    s << "cell " << cell << " at (" << c[0] << ", " << c[1] << ", " << c[2] << ")";
    return s.str();
  };
  if (rep.lower_margin < -tol)
    throw CheckFailure("comparison_bounds: v below lower kernel bound by relative " +
                       sci(-rep.lower_margin) + " at " + where(rep.worst_lower));
  if (rep.upper_margin < -tol)
    throw CheckFailure("comparison_bounds: v above upper kernel bound by relative " +
                       sci(-rep.upper_margin) + " at " + where(rep.worst_upper));
  return rep;
}

// ----- mean-value formula ---------------------------------------------------

// φ(ξ) = ξ cosh ξ - sinh ξ
inline double phi_mean_value(double xi) {
  if (std::fabs(xi) < 1e-2) {
    const double x2 = xi * xi;
    return xi * x2 * (1.0 / 3.0 + x2 * (1.0 / 30.0 + x2 / 840.0));
  }
  return xi * std::cosh(xi) - std::sinh(xi);
}

// log φ(ξ) for ξ > 0, stable for large ξ.
inline double log_phi_mean_value(double xi) {
  if (xi < 20.0) return std::log(phi_mean_value(xi));
  const double e = std::exp(-2.0 * xi);
  return xi + std::log(0.5 * ((xi - 1.0) + (xi + 1.0) * e));
}

// (1/4π)∫_B e^{-λ|x-y|}/|x-y| dy for the 3D ball B(p, η) and |x - p| > η.
inline double mean_value_ball(const Point& p, double eta, double lambda, const Point& x) {
  const double R = distance(x, p);
  if (!(R > eta)) throw std::domain_error("mean_value_ball: x lies in the closure of B");
  const double xi = lambda * eta;
  if (xi < 20.0) return phi_mean_value(xi) / (lambda * lambda * lambda) * std::exp(-lambda * R) / R;
  return std::exp(log_phi_mean_value(xi) - lambda * R) / (lambda * lambda * lambda * R);
}

// ----- fixed-point iteration ------------------------------------------------

struct ContractionReport {
  std::vector<double> limit;
  std::vector<double> ratios;  // ||v_{j+1}-v_j|| / ||v_j-v_{j-1}||
  double rate_bound = 0.0;     // 1 - m0²/M0²
  double max_ratio = 0.0;
  double min_increment = 0.0;  // min over j, cells of (v_{j+1} - v_j), scaled by max|v|
  double min_first = 0.0;      // min v_1, scaled
  double a1_worst = 0.0;       // max ||v||λ²/||g|| over sub-solves (<= 1)
  double a2_worst = 0.0;       // max 2λ||∇v||/||g|| over sub-solves (<= 1)
  int iterations = 0;
};

// v_1 and v_{j+1} from {Δ - (M0τ)²}v_{j+1} + {α0 f + τ²(M0² - α0)v_j} = 0.
inline ContractionReport contraction_iteration(const Grid& g, std::span<const double> f,
                                               std::span<const double> alpha0, double m0, double M0, double tau,
                                               int j_max, double tol = 0.02) {
  const double lambda = M0 * tau;
  ContractionReport rep;
  rep.rate_bound = 1.0 - (m0 * m0) / (M0 * M0);
  EllipticProblem sub{g, std::vector<double>(g.size(), lambda * lambda), std::vector<double>(g.size()), std::nullopt,
                      0.0};
  SolveOptions opt;
  opt.rel_tol = 1e-13;

  auto sub_solve = [&](const std::vector<double>* guess) {
    opt.initial_guess = guess;
    auto v = solve_v(sub, opt);
    const double gn = l2_norm(g, sub.source);
    if (gn > 0.0) {
      rep.a1_worst = std::max(rep.a1_worst, l2_norm(g, v) * lambda * lambda / gn);
      rep.a2_worst = std::max(rep.a2_worst, 2.0 * lambda * std::sqrt(std::max(0.0, grad_dot(g, v, v))) / gn);
    }
    return v;
  };

  for (std::size_t i = 0; i < g.size(); ++i) sub.source[i] = alpha0[i] * f[i];
  std::vector<double> v = sub_solve(nullptr);
  double vmax = 0.0;
  for (double x : v) vmax = std::max(vmax, std::fabs(x));
  rep.min_first = *std::min_element(v.begin(), v.end()) / std::max(vmax, 1e-300);
  rep.min_increment = std::numeric_limits<double>::infinity();
  double prev_diff = -1.0;
  rep.iterations = 1;
  for (int j = 1; j < j_max; ++j) {
    for (std::size_t i = 0; i < g.size(); ++i)
      sub.source[i] = alpha0[i] * f[i] + tau * tau * (M0 * M0 - alpha0[i]) * v[i];
    auto next = sub_solve(&v);
    std::vector<double> diff(g.size());
    double dmin = std::numeric_limits<double>::infinity();
    vmax = 0.0;
    for (std::size_t i = 0; i < g.size(); ++i) {
      diff[i] = next[i] - v[i];
      dmin = std::min(dmin, diff[i]);
      vmax = std::max(vmax, std::fabs(next[i]));
    }
    const double dn = l2_norm(g, diff);
    const double vn = l2_norm(g, next);
    v.swap(next);
    rep.iterations = j + 1;
    // below this level the increments are solver noise
    if (dn <= 1e-8 * vn) break;
    rep.min_increment = std::min(rep.min_increment, dmin / vmax);
    if (prev_diff > 0.0) {
      const double r = dn / prev_diff;
      rep.ratios.push_back(r);
      rep.max_ratio = std::max(rep.max_ratio, r);
    }
    prev_diff = dn;
  }
  if (!std::isfinite(rep.min_increment)) rep.min_increment = 0.0;
  rep.limit = std::move(v);
  if (rep.max_ratio > rep.rate_bound + tol)
    throw CheckFailure("contraction_iteration: L2 ratio " + sci(rep.max_ratio) + " exceeds bound " +
                       sci(rep.rate_bound) + " + " + sci(tol) +
                       " (alpha0 sampling inconsistent with m0/M0)");
  return rep;
}

}  // namespace enclosure
