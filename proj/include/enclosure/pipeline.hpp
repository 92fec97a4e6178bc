#pragma once

#include <chrono>
#include <cmath>
#include <cstdint>
#include <limits>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

#include "enclosure/elliptic.hpp"
#include "enclosure/indicator.hpp"
#include "enclosure/layered.hpp"
#include "enclosure/scenario.hpp"
#include "enclosure/wave.hpp"

namespace enclosure {

enum class Pipeline { Elliptic, Reference };

inline const char* to_string(Pipeline p) { return p == Pipeline::Elliptic ? "elliptic-v" : "reference-v_e"; }

struct PipelineOptions {
  Pipeline pipeline = Pipeline::Elliptic;
  double noise_sigma = 0.0;  // additive Gaussian noise on u at B
  std::uint64_t seed = 0;
  double disc_margin = 0.02;  // relative allowance in the bound certificates
};

// Obstacle run and background (reference) run of one scenario.
struct RunPair {
  SimulationResult obstacle, reference;
  std::vector<std::size_t> b_cells, d_cells;
  std::vector<double> weight;  // α0 f vol on B (f vol in dissipative mode)
};

inline RunPair run_pair(const Scenario& sc, const std::vector<double>& full_taus = {}) {
  RunPair rp;
  const Fields& F = sc.fields;
  rp.b_cells = support(F.f);
  rp.d_cells = support(F.d_cover);
  const double vol = sc.grid.cell_volume();
  for (std::size_t i : rp.b_cells)
    rp.weight.push_back((sc.medium.mode == Mode::Refractive ? F.alpha0[i] : 1.0) * F.f[i] * vol);

  SimulationOptions o;
  o.trace_cells = rp.b_cells;
  o.accumulate_cells = rp.b_cells;
  o.full_taus = full_taus;
  rp.obstacle = simulate(sc, false, o);
  SimulationOptions r = o;
  r.accumulate_cells = rp.d_cells;
  rp.reference = simulate(sc, true, r);
  return rp;
}

// Tail correction ρ: Δρ - κ0ρ + α0 F_V = 0 with F_V from the reference run,
// so that v = v_e + e^{-τT} ρ solves the comparison problem.
inline std::vector<double> tail_solution(const Scenario& sc, const FinalTimeData& ref_final, double tau) {
  const Fields& F = sc.fields;
  const auto FV = ref_final.F(tau, F.alpha0, F.q0);
  EllipticProblem p{sc.grid, std::vector<double>(sc.grid.size()), std::vector<double>(sc.grid.size()), std::nullopt,
                    0.0};
  for (std::size_t i = 0; i < sc.grid.size(); ++i) {
    p.kappa[i] = F.alpha0[i] * tau * tau + tau * F.q0[i];
    p.source[i] = F.alpha0[i] * FV[i];
  }
  return solve_v(p);
}

struct PipelineResult {
  Pipeline pipeline = Pipeline::Elliptic;
  IndicatorSeries series;
  Verdict verdict;
  std::vector<BoundCheck> bounds;  // elliptic pipeline only
  std::vector<std::size_t> b_cells, d_cells;
  std::vector<std::vector<double>> w_on_B;
  std::vector<std::vector<double>> v_on_D;  // v_e + e^{-τT}ρ (elliptic) or v_e (reference)
  double residual_tau = 0.0;
  double residual = 0.0;  // residual_2_3 of the obstacle run at residual_tau
  std::vector<double> w_probe;  // full-grid w at residual_tau
  double seconds = 0.0;
};

namespace detail {

// Indicator from the difference of the two B traces, plus a rounding floor.
inline void difference_indicator(const Scenario& sc, const RunPair& rp, const PipelineOptions& opt,
                                 std::vector<double>& I, std::vector<double>& floor) {
  const Trace& u = rp.obstacle.trace;
  const Trace& V = rp.reference.trace;
  const int N = u.steps;
  std::vector<double> s(N + 1, 0.0), mag(N + 1, 0.0);
  std::mt19937_64 rng(opt.seed);
  std::normal_distribution<double> noise(0.0, opt.noise_sigma > 0.0 ? opt.noise_sigma : 1.0);
  for (int n = 0; n <= N; ++n) {
    const auto ur = u.row(n);
    const auto vr = V.row(n);
    bool differs = false;
    double acc = 0.0, m = 0.0;
    for (std::size_t c = 0; c < ur.size(); ++c) {
      double un = ur[c];
      if (opt.noise_sigma > 0.0) un += noise(rng);
      const double d = un - vr[c];
      differs |= d != 0.0;
      acc += rp.weight[c] * d;
      m += std::fabs(rp.weight[c]) * std::max(std::fabs(un), std::fabs(vr[c]));
    }
    s[n] = acc;
    mag[n] = differs ? m : 0.0;
  }
  const double eps = std::numeric_limits<double>::epsilon();
  I.assign(sc.taus.size(), 0.0);
  floor.assign(sc.taus.size(), 0.0);
  for (std::size_t k = 0; k < sc.taus.size(); ++k) {
    double a = 0.0, b = 0.0;
    for (int n = 0; n <= N; ++n) {
      const double wt = laplace_weight(n, N, sc.taus[k], sc.dt);
      a += wt * s[n];
      b += wt * mag[n];
    }
    I[k] = a;
    floor[k] = 8.0 * eps * std::sqrt(static_cast<double>(N + 1)) * b;
  }
}

inline double norm_of_final_source(const Scenario& sc, const FinalTimeData& fin, double tau, bool reference) {
  const Fields& F = sc.fields;
  const auto& alpha = reference ? F.alpha0 : F.alpha;
  const auto& q = reference ? F.q0 : F.q;
  const auto Fv = fin.F(tau, alpha, q);
  double s = 0.0;
  for (std::size_t i = 0; i < Fv.size(); ++i) s += alpha[i] * alpha[i] * Fv[i] * Fv[i];
  return std::sqrt(s * sc.grid.cell_volume());
}

}  // namespace detail

// Middle of the fit window; used for full-field checks.
inline double probe_tau(const Scenario& sc) {
  const auto o = ClassifyOptions::from(sc);
  if (o.window) return 0.5 * (o.window->first + o.window->second);
  const double lo = sc.run.tau_max - o.window_fraction * (sc.run.tau_max - sc.run.tau_min);
  return 0.5 * (lo + sc.run.tau_max);
}

inline PipelineResult run_pipeline(const Scenario& sc, const PipelineOptions& opt = {}) {
  const auto t0 = std::chrono::steady_clock::now();
  PipelineResult res;
  res.pipeline = opt.pipeline;
  res.residual_tau = probe_tau(sc);
  const RunPair rp = run_pair(sc, {res.residual_tau});
  res.b_cells = rp.b_cells;
  res.d_cells = rp.d_cells;
  res.w_probe = rp.obstacle.full->values(0);
  res.residual = residual_2_3(sc.grid, res.w_probe, sc.fields.alpha, sc.fields.q, sc.fields.f, rp.obstacle.final,
                              res.residual_tau);
  for (std::size_t k = 0; k < sc.taus.size(); ++k) res.w_on_B.push_back(rp.obstacle.w.values(k));

  std::vector<double> I_ref, floor;
  detail::difference_indicator(sc, rp, opt, I_ref, floor);
  res.series.T = sc.run.T;

  const Fields& F = sc.fields;
  const Grid& g = sc.grid;
  const Mode mode = sc.medium.mode;
  for (std::size_t k = 0; k < sc.taus.size(); ++k) {
    const double tau = sc.taus[k];
    SignedLog I = SignedLog::from_double(I_ref[k]);
    double fl = floor[k];
    if (opt.pipeline == Pipeline::Elliptic) {
      const auto rho = tail_solution(sc, rp.reference.final, tau);
      double tail = 0.0;
      for (std::size_t c = 0; c < rp.b_cells.size(); ++c) tail += rp.weight[c] * rho[rp.b_cells[c]];
      const SignedLog corr = SignedLog::from_double(-tail).times_exp(-tau * sc.run.T);
      I = I + corr;
      fl += 1e-8 * std::fabs(corr.to_double());

      // certificates from v on the obstacle cells
      const auto& ve = rp.reference.w.values(k);
      const double e = std::exp(-tau * sc.run.T);
      std::vector<double> vD(rp.d_cells.size());
      for (std::size_t c = 0; c < vD.size(); ++c) vD[c] = ve[c] + e * rho[rp.d_cells[c]];
      BoundCheck b = bound_integrals(g, mode, tau, rp.d_cells, vD, F.alpha, F.alpha0, F.q, F.q0);
      double kmin = std::numeric_limits<double>::infinity(), k0min = kmin;
      double gw = 0.0, gv = 0.0;
      for (std::size_t i = 0; i < g.size(); ++i) {
        kmin = std::min(kmin, F.alpha[i] * tau * tau + tau * F.q[i]);
        k0min = std::min(k0min, F.alpha0[i] * tau * tau + tau * F.q0[i]);
        gw += F.alpha[i] * F.alpha[i] * F.f[i] * F.f[i];
        gv += F.alpha0[i] * F.alpha0[i] * F.f[i] * F.f[i];
      }
      gw = std::sqrt(gw * g.cell_volume());
      gv = std::sqrt(gv * g.cell_volume());
      const double aF = detail::norm_of_final_source(sc, rp.obstacle.final, tau, false);
      const double vn = gv / k0min;
      const double wn = (gw + e * aF) / kmin;
      const double slack = e * aF * (wn + 2.0 * vn) + opt.disc_margin * std::max(std::fabs(b.lower), std::fabs(b.upper));
      res.bounds.push_back(check_bounds(b, I.to_double(), slack, false));
      res.v_on_D.push_back(std::move(vD));
    } else {
      res.v_on_D.push_back(rp.reference.w.values(k));
    }
    res.series.push(tau, I, fl);
  }
  res.verdict = classify(res.series, ClassifyOptions::from(sc));
  res.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return res;
}

// Reference procedure: obstacle run and background run, no elliptic solve.
inline PipelineResult run_with_reference(const Scenario& sc, PipelineOptions opt = {}) {
  opt.pipeline = Pipeline::Reference;
  return run_pipeline(sc, opt);
}

// Full-field data at one τ for the identity checks.
// Full-field transform of u - V, both runs stepped together so the
// difference is taken before the quadrature.
inline std::vector<std::vector<double>> difference_transform(const Scenario& sc, const std::vector<double>& taus) {
  const Fields& F = sc.fields;
  WaveSolver a(sc.grid, F.alpha, F.q, F.f, sc.dt);
  WaveSolver b(sc.grid, F.alpha0, F.q0, F.f, sc.dt);
  LaplaceAccumulator acc(taus, sc.dt, sc.steps, all_cells(sc.grid));
  std::vector<double> d(sc.grid.size());
  for (int n = 0;; ++n) {
    const auto ua = a.current(), ub = b.current();
    for (std::size_t i = 0; i < d.size(); ++i) d[i] = ua[i] - ub[i];
    acc.add(n, d);
    if (n == sc.steps) break;
    a.step();
    b.step();
  }
  std::vector<std::vector<double>> out;
  for (std::size_t k = 0; k < taus.size(); ++k) out.push_back(acc.values(k));
  return out;
}

// rp must carry full fields at tau as its first full τ.
inline IdentityFields identity_fields(const Scenario& sc, const RunPair& rp, double tau) {
  if (!rp.obstacle.full || !rp.reference.full) throw std::invalid_argument("identity_fields: run without full fields");
  const Fields& F = sc.fields;
  IdentityFields out;
  out.grid = sc.grid;
  out.tau = tau;
  out.alpha = F.alpha;
  out.alpha0 = F.alpha0;
  out.q = F.q;
  out.q0 = F.q0;
  out.f = F.f;
  out.w = rp.obstacle.full->values(0);
  const auto rho = tail_solution(sc, rp.reference.final, tau);
  const double e = std::exp(-tau * sc.run.T);
  out.v = rp.reference.full->values(0);
  for (std::size_t i = 0; i < out.v.size(); ++i) out.v[i] += e * rho[i];
  out.R = difference_transform(sc, {tau}).front();
  for (std::size_t i = 0; i < out.R.size(); ++i) out.R[i] -= e * rho[i];
  const auto Fo = rp.obstacle.final.F(tau, F.alpha, F.q);
  out.G.resize(Fo.size());
  for (std::size_t i = 0; i < Fo.size(); ++i) out.G[i] = e * F.alpha[i] * Fo[i];
  return out;
}

inline IdentityFields identity_fields(const Scenario& sc, double tau) { return identity_fields(sc, run_pair(sc, {tau}), tau); }

// Ground truth for reporting: the T threshold beyond which the theory
// guarantees an obstacle verdict.
struct GroundTruth {
  std::optional<double> dist;
  std::optional<double> travel_time;  // layered 1D geometry
  std::optional<double> threshold;
};

inline GroundTruth ground_truth(const Scenario& sc) {
  GroundTruth gt;
  if (!sc.dist_DB) return gt;
  gt.dist = sc.dist_DB;
  if (auto L = layered_from_scenario(sc); L && sc.has_obstacle()) {
    gt.travel_time = L->travel_time();
    gt.threshold = 2.0 * *gt.travel_time;
  } else {
    const double M0 = sc.medium.mode == Mode::Refractive ? sc.medium.M0 : 1.0;
    gt.threshold = 2.0 * M0 * *gt.dist;
  }
  return gt;
}

}  // namespace enclosure
