#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <stdexcept>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "enclosure/errors.hpp"
#include "enclosure/grid.hpp"
#include "enclosure/scenario.hpp"
#include "enclosure/stencil.hpp"

namespace enclosure {

// Exponential trapezoid: exact integral of e^{-θs} against the linear
// interpolant on one step. a weights the left node, b the right node and
// c = a + b e^θ is the interior factor.
struct ExpTrapezoid {
  double a, b, c;

  explicit ExpTrapezoid(double theta) {
    if (theta < 0.1) {
      // alternating series, converges fast for small θ
      a = 0.0;
      b = 0.0;
      double term = 0.5;  // θ^{k-2}/k!
      for (int k = 2; k < 16; ++k) {
        const double sgn = (k % 2 == 0) ? 1.0 : -1.0;
        a += sgn * term;
        b += sgn * (k - 1) * term;
        term *= theta / (k + 1);
      }
    } else {
      const double e = std::exp(-theta);
      a = (theta - 1.0 + e) / (theta * theta);
      b = (1.0 - e - theta * e) / (theta * theta);
    }
    const double s = 2.0 * std::sinh(0.5 * theta) / theta;
    c = theta == 0.0 ? 1.0 : s * s;
  }
};

// Quadrature weight of sample n (t = n dt) for ∫_0^{steps dt} e^{-τt} u dt.
inline double laplace_weight(int n, int steps, double tau, double dt) {
  const ExpTrapezoid q(tau * dt);
  if (n == 0) return dt * q.a;
  if (n == steps) return dt * std::exp(-tau * dt * (n - 1)) * q.b;
  return dt * std::exp(-tau * dt * n) * q.c;
}

// Leapfrog solver for α u_tt - Δu + q u_t = 0, u(0) = 0, u_t(0) = f,
// zero Dirichlet box boundary. Damping uses centred averaging.
class WaveSolver {
 public:
  WaveSolver(const Grid& g, std::vector<double> alpha, std::vector<double> q, std::span<const double> f, double dt)
      : grid_(g), alpha_(std::move(alpha)), q_(std::move(q)), f_(f.begin(), f.end()), dt_(dt),
        prev_(g.size(), 0.0), curr_(g.size(), 0.0), next_(g.size(), 0.0), lap_(g.size(), 0.0) {
    if (alpha_.size() != g.size() || q_.size() != g.size() || f_.size() != g.size())
      throw std::invalid_argument("WaveSolver: field size does not match grid");
    const double amin = *std::min_element(alpha_.begin(), alpha_.end());
    if (!(amin > 0.0)) throw NumericalError("wave: alpha must be positive");
    const double limit = g.min_spacing() * std::sqrt(amin) / std::sqrt(static_cast<double>(g.dimension));
    if (!(dt > 0.0) || dt > limit * (1.0 + 1e-12))
      throw NumericalError("wave: CFL violation, dt = " + std::to_string(dt) + " exceeds " + std::to_string(limit));
  }

  void step() {
    apply_laplacian(grid_, curr_, lap_);
    const double dt2 = dt_ * dt_;
    bool bad = false;
    if (n_ == 0) {
      // ghost u(-dt) = u(dt) - 2 dt f
      for (std::size_t i = 0; i < curr_.size(); ++i) {
        const double a = alpha_[i];
        next_[i] = curr_[i] + dt_ * f_[i] - q_[i] * dt2 * f_[i] / (2.0 * a) + dt2 * lap_[i] / (2.0 * a);
        bad |= !std::isfinite(next_[i]);
      }
    } else {
      for (std::size_t i = 0; i < curr_.size(); ++i) {
        const double a = alpha_[i];
        const double d = 0.5 * q_[i] * dt_;
        next_[i] = (2.0 * a * curr_[i] - (a - d) * prev_[i] + dt2 * lap_[i]) / (a + d);
        bad |= !std::isfinite(next_[i]);
      }
    }
    if (bad) throw NumericalError("wave: non-finite value at step " + std::to_string(n_ + 1));
    prev_.swap(curr_);
    curr_.swap(next_);
    ++n_;
  }

  int step_index() const { return n_; }
  double time() const { return n_ * dt_; }
  double dt() const { return dt_; }
  std::span<const double> current() const { return curr_; }
  std::span<const double> previous() const { return prev_; }

  // Leapfrog energy between the previous and current level:
  // ∫α((u^{n}-u^{n-1})/dt)^2 + ∇u^{n}·∇u^{n-1}. Exactly conserved when q = 0.
  double energy() const {
    double kin = 0.0;
    for (std::size_t i = 0; i < curr_.size(); ++i) {
      const double v = (curr_[i] - prev_[i]) / dt_;
      kin += alpha_[i] * v * v;
    }
    return kin * grid_.cell_volume() + grad_dot(grid_, curr_, prev_);
  }

 private:
  Grid grid_;
  std::vector<double> alpha_, q_, f_;
  double dt_;
  int n_ = 0;
  std::vector<double> prev_, curr_, next_, lap_;
};

// Streaming transform w(x, τ) = ∫_0^T e^{-τt} u(x, t) dt on a cell set.
class LaplaceAccumulator {
 public:
  LaplaceAccumulator() = default;
  LaplaceAccumulator(std::vector<double> taus, double dt, int steps, std::vector<std::size_t> cells)
      : taus_(std::move(taus)), cells_(std::move(cells)), dt_(dt), steps_(steps),
        w_(taus_.size(), std::vector<double>(cells_.size(), 0.0)) {}

  // Adds sample n (t = n dt) of the full field u.
  void add(int n, std::span<const double> u) {
    for (std::size_t k = 0; k < taus_.size(); ++k) {
      const double wt = laplace_weight(n, steps_, taus_[k], dt_);
      auto& row = w_[k];
      for (std::size_t c = 0; c < cells_.size(); ++c) row[c] += wt * u[cells_[c]];
    }
  }

  const std::vector<double>& taus() const { return taus_; }
  const std::vector<std::size_t>& cells() const { return cells_; }
  const std::vector<double>& values(std::size_t k) const { return w_[k]; }

  // Values scattered onto a full grid vector (zero elsewhere).
  std::vector<double> full(std::size_t k, std::size_t n_cells) const {
    std::vector<double> out(n_cells, 0.0);
    for (std::size_t c = 0; c < cells_.size(); ++c) out[cells_[c]] = w_[k][c];
    return out;
  }

 private:
  std::vector<double> taus_;
  std::vector<std::size_t> cells_;
  double dt_ = 0.0;
  int steps_ = 0;
  std::vector<std::vector<double>> w_;
};

// Time history u^n on a cell set, rows n = 0..steps.
struct Trace {
  std::vector<std::size_t> cells;
  int steps = 0;
  std::vector<double> data;

  std::span<const double> row(int n) const { return {data.data() + n * cells.size(), cells.size()}; }
  std::span<double> row(int n) { return {data.data() + n * cells.size(), cells.size()}; }
};

// Post-hoc quadrature of a stored trace, same weights and order as the
// streaming accumulator.
inline std::vector<std::vector<double>> transform_trace(const Trace& tr, const std::vector<double>& taus, double dt) {
  std::vector<std::vector<double>> out(taus.size(), std::vector<double>(tr.cells.size(), 0.0));
  for (int n = 0; n <= tr.steps; ++n) {
    const auto r = tr.row(n);
    for (std::size_t k = 0; k < taus.size(); ++k) {
      const double wt = laplace_weight(n, tr.steps, taus[k], dt);
      for (std::size_t c = 0; c < r.size(); ++c) out[k][c] += wt * r[c];
    }
  }
  return out;
}

// u(T) and u'(T) (central difference with one extra step).
struct FinalTimeData {
  double T = 0.0;
  std::vector<double> u_T, ut_T;

  // Final-time source such that α F = α(u' + τu) + q u.
  // Refractive: u' + τu; dissipative (α = 1): u' + (τ + q)u.
  std::vector<double> F(double tau, std::span<const double> alpha, std::span<const double> q) const {
    std::vector<double> out(u_T.size());
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = ut_T[i] + (tau + q[i] / alpha[i]) * u_T[i];
    return out;
  }
};

struct SimulationOptions {
  std::vector<std::size_t> accumulate_cells;  // streaming w over the τ sweep
  std::vector<std::size_t> trace_cells;       // stored time history
  std::vector<double> full_taus;              // full-field w at these τ
  bool record_energy = false;
  std::function<void(int, std::span<const double>)> observer;
};

struct SimulationResult {
  double dt = 0.0;
  int steps = 0;
  LaplaceAccumulator w;
  std::optional<LaplaceAccumulator> full;
  Trace trace;
  FinalTimeData final;
  std::vector<double> energy;
};

inline SimulationResult simulate(const Grid& g, std::vector<double> alpha, std::vector<double> q,
                                 std::span<const double> f, double dt, int steps, const std::vector<double>& taus,
                                 const SimulationOptions& opt = {}) {
  SimulationResult res;
  res.dt = dt;
  res.steps = steps;
  WaveSolver solver(g, std::move(alpha), std::move(q), f, dt);
  res.w = LaplaceAccumulator(taus, dt, steps, opt.accumulate_cells);
  if (!opt.full_taus.empty()) res.full.emplace(opt.full_taus, dt, steps, all_cells(g));
  res.trace.cells = opt.trace_cells;
  res.trace.steps = steps;
  res.trace.data.assign((steps + 1) * opt.trace_cells.size(), 0.0);

  auto record = [&](int n, std::span<const double> u) {
    res.w.add(n, u);
    if (res.full) res.full->add(n, u);
    auto r = res.trace.row(n);
    for (std::size_t c = 0; c < r.size(); ++c) r[c] = u[opt.trace_cells[c]];
    if (opt.observer) opt.observer(n, u);
  };

  record(0, solver.current());
  std::vector<double> before_last;
  for (int n = 1; n <= steps; ++n) {
    if (n == steps) before_last.assign(solver.current().begin(), solver.current().end());
    solver.step();
    record(n, solver.current());
    if (opt.record_energy) res.energy.push_back(solver.energy());
  }
  if (steps == 0) before_last.assign(g.size(), 0.0);
  res.final.T = steps * dt;
  res.final.u_T.assign(solver.current().begin(), solver.current().end());
  solver.step();
  res.final.ut_T.resize(g.size());
  if (steps == 0) {
    // u'(0) = f exactly
    res.final.ut_T.assign(f.begin(), f.end());
  } else {
    const auto up = solver.current();
    for (std::size_t i = 0; i < up.size(); ++i) res.final.ut_T[i] = (up[i] - before_last[i]) / (2.0 * dt);
  }
  return res;
}

// Runs the scenario with the obstacle medium, or with the background medium
// (α0, q0) when `reference` is set.
inline SimulationResult simulate(const Scenario& sc, bool reference, const SimulationOptions& opt) {
  const Fields& F = sc.fields;
  return simulate(sc.grid, reference ? F.alpha0 : F.alpha, reference ? F.q0 : F.q, F.f, sc.dt, sc.steps, sc.taus,
                  opt);
}

// Relative L2 residual of Δw - (ατ² + τq)w + αf = e^{-τT}(α(u'+τu) + qu)
// over interior cells.
inline double residual_2_3(const Grid& g, std::span<const double> w, std::span<const double> alpha,
                           std::span<const double> q, std::span<const double> f, const FinalTimeData& fin,
                           double tau) {
  const std::size_t n = g.size();
  if (w.size() != n || alpha.size() != n || q.size() != n || f.size() != n || fin.u_T.size() != n ||
      fin.ut_T.size() != n)
    throw std::invalid_argument("residual_2_3: field shapes do not match the grid");
  const auto lw = laplacian(g, w);
  const auto F = fin.F(tau, alpha, q);
  const double e = std::exp(-tau * fin.T);
  double r2 = 0.0, s_lw = 0.0, s_kw = 0.0, s_f = 0.0, s_F = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    if (g.on_boundary(i)) continue;
    const double kw = (alpha[i] * tau * tau + tau * q[i]) * w[i];
    const double af = alpha[i] * f[i];
    const double aF = alpha[i] * e * F[i];
    const double r = lw[i] - kw + af - aF;
    r2 += r * r;
    s_lw += lw[i] * lw[i];
    s_kw += kw * kw;
    s_f += af * af;
    s_F += aF * aF;
  }
  const double scale = std::sqrt(s_lw) + std::sqrt(s_kw) + std::sqrt(s_f) + std::sqrt(s_F);
  if (scale == 0.0) return std::sqrt(r2) == 0.0 ? 0.0 : std::numeric_limits<double>::infinity();
  return std::sqrt(r2) / scale;
}

// Energy history check: relative drift for q = 0, monotonicity otherwise.
struct EnergyReport {
  double max_relative_drift = 0.0;
  double max_increase = 0.0;
};

inline EnergyReport energy_report(const std::vector<double>& e) {
  EnergyReport r;
  if (e.empty()) return r;
  const double e0 = e.front();
  for (std::size_t i = 1; i < e.size(); ++i) {
    if (e0 != 0.0) r.max_relative_drift = std::max(r.max_relative_drift, std::fabs(e[i] - e0) / std::fabs(e0));
    if (e0 != 0.0) r.max_increase = std::max(r.max_increase, (e[i] - e[i - 1]) / std::fabs(e0));
  }
  return r;
}

}  // namespace enclosure
