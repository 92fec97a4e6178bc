#pragma once

#include <cmath>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "enclosure/errors.hpp"
#include "enclosure/grid.hpp"
#include "enclosure/region.hpp"

namespace enclosure {

using json = nlohmann::json;

enum class Mode { Refractive, Dissipative };
enum class ContrastSign { AI, AII };
enum class Truncation { Full, EchoFree };

struct Layer {
  Region region;
  double value = 0.0;
};

// Piecewise-constant field: background value plus layers (assumed disjoint).
struct FieldSpec {
  double value = 0.0;
  std::vector<Layer> layers;

  bool constant() const { return layers.empty(); }

  double min_value() const {
    double m = value;
    for (const auto& l : layers) m = std::min(m, l.value);
    return m;
  }
  double max_value() const {
    double m = value;
    for (const auto& l : layers) m = std::max(m, l.value);
    return m;
  }
};

struct MediumSpec {
  Mode mode = Mode::Refractive;
  FieldSpec alpha0{1.0, {}};
  double m0 = 1.0;
  double M0 = 1.0;
  FieldSpec q0{0.0, {}};
  Region obstacle;
  FieldSpec h{0.0, {}};
  ContrastSign h_sign = ContrastSign::AI;
};

enum class Profile { Indicator, Cosine };

struct SourceSpec {
  Point p{0.0, 0.0, 0.0};
  double eta = 0.1;
  Profile profile = Profile::Indicator;
  double amplitude = 1.0;

  Region ball() const { return Region::ball(p, eta); }
};

struct RunSpec {
  double T = 1.0;
  double tau_min = 1.0;
  double tau_max = 2.0;
  int tau_count = 8;
  double cfl = 0.9;
  std::optional<double> margin;
  Truncation truncation = Truncation::Full;
  double window_fraction = 1.0 / 3.0;
  std::optional<std::pair<double, double>> window;
  double delta_min = 2.0;
};

// Sampled coefficient fields on the scenario grid.
struct Fields {
  std::vector<double> alpha0, alpha, q0, q, f, b_cover, d_cover;
  double alpha_min = 0.0;
  double alpha_max = 0.0;
};

struct Scenario {
  Grid grid;
  MediumSpec medium;
  SourceSpec source;
  RunSpec run;
  std::vector<double> taus;
  std::optional<double> dist_DB;
  double c_max = 1.0;
  double dt = 0.0;
  int steps = 0;
  double truncation_radius = 0.0;
  Fields fields;
  std::string hash;
  json config;

  bool has_obstacle() const { return !medium.obstacle.is_empty(); }
  double margin() const { return run.margin.value_or(4.0 * grid.min_spacing()); }
};

// ----- sampling -------------------------------------------------------------

inline ScalarField sample_field(const FieldSpec& spec, const Grid& g) {
  ScalarField out{g, std::vector<double>(g.size(), spec.value)};
  for (const auto& layer : spec.layers) {
    const auto cover = coverage_field(layer.region, g);
    for (std::size_t i = 0; i < cover.size(); ++i)
      if (cover[i] != 0.0) out.values[i] += cover[i] * (layer.value - spec.value);
  }
  return out;
}

inline ScalarField sample_field(const SourceSpec& src, const Grid& g) {
  ScalarField out{g, coverage_field(src.ball(), g)};
  for (std::size_t i = 0; i < out.values.size(); ++i) {
    double& v = out.values[i];
    if (v == 0.0) continue;
    double profile = 1.0;
    if (src.profile == Profile::Cosine) {
      const double r = std::min(distance(g.center(i), src.p), src.eta);
      profile = 1.0 + 0.5 * std::cos(M_PI * r / src.eta);
    }
    v *= src.amplitude * profile;
  }
  return out;
}

inline Fields sample_fields(const MediumSpec& m, const SourceSpec& s, const Grid& g) {
  Fields F;
  F.alpha0 = sample_field(m.alpha0, g).values;
  F.q0 = sample_field(m.q0, g).values;
  F.d_cover = coverage_field(m.obstacle, g);
  F.b_cover = coverage_field(s.ball(), g);
  F.f = sample_field(s, g).values;
  const auto h = sample_field(m.h, g).values;
  F.alpha = F.alpha0;
  F.q = F.q0;
  auto& target = m.mode == Mode::Refractive ? F.alpha : F.q;
  for (std::size_t i = 0; i < g.size(); ++i) target[i] += h[i] * F.d_cover[i];
  F.alpha_min = *std::min_element(F.alpha.begin(), F.alpha.end());
  F.alpha_max = *std::max_element(F.alpha.begin(), F.alpha.end());
  return F;
}

// Smallest admissible α over the specs (used before a grid exists).
inline double alpha_lower_bound(const MediumSpec& m) {
  if (m.mode == Mode::Dissipative) return 1.0;
  double a = m.alpha0.min_value();
  if (!m.obstacle.is_empty()) a = std::min(a, m.alpha0.min_value() + m.h.min_value());
  return a;
}

// Half-width L of an origin-centred box: max |x|_inf over supp f and D,
// plus c_max T, plus margin.
inline double truncation_radius(const MediumSpec& m, const SourceSpec& s, int dim, double T,
                                double margin, double c_max) {
  double ext = 0.0;
  for (const Region& reg : {m.obstacle, s.ball()}) {
    if (reg.is_empty()) continue;
    auto [lo, hi] = reg.bbox(dim);
    for (int a = 0; a < dim; ++a) ext = std::max({ext, std::fabs(lo[a]), std::fabs(hi[a])});
  }
  return ext + c_max * T + margin;
}

inline double truncation_radius(const Scenario& sc) {
  return truncation_radius(sc.medium, sc.source, sc.grid.dimension, sc.run.T, sc.margin(), sc.c_max);
}

// ----- JSON parsing ---------------------------------------------------------

namespace detail {

inline const json& require(const json& j, const char* key, const std::string& path) {
  if (!j.is_object() || !j.contains(key))
    throw ParseError("missing key '" + path + "." + key + "'");
  return j.at(key);
}

inline double number(const json& j, const std::string& path) {
  if (!j.is_number()) throw ParseError("'" + path + "' must be a number");
  return j.get<double>();
}

inline Point point(const json& j, int dim, const std::string& path) {
  Point p{0.0, 0.0, 0.0};
  if (j.is_number()) {
    if (dim != 1) throw ParseError("'" + path + "' must be an array of " + std::to_string(dim) + " numbers");
    p[0] = j.get<double>();
    return p;
  }
  if (!j.is_array() || static_cast<int>(j.size()) != dim)
    throw ParseError("'" + path + "' must be an array of " + std::to_string(dim) + " numbers");
  for (int a = 0; a < dim; ++a) p[a] = number(j[a], path);
  return p;
}

inline Region region(const json& j, int dim, const std::string& path) {
  if (j.is_null()) return Region::empty();
  const std::string kind = require(j, "kind", path).get<std::string>();
  Region r;
  if (kind == "empty") return r;
  if (kind == "interval") {
    if (dim != 1) throw ParseError("'" + path + "': interval regions are 1D only");
    r = Region::interval(number(require(j, "lo", path), path + ".lo"), number(require(j, "hi", path), path + ".hi"));
  } else if (kind == "ball") {
    r = Region::ball(point(require(j, "center", path), dim, path + ".center"),
                     number(require(j, "radius", path), path + ".radius"));
  } else if (kind == "box") {
    r = Region::box(point(require(j, "lo", path), dim, path + ".lo"), point(require(j, "hi", path), dim, path + ".hi"));
  } else if (kind == "union") {
    std::vector<Region> parts;
    const auto& arr = require(j, "parts", path);
    for (std::size_t i = 0; i < arr.size(); ++i)
      parts.push_back(region(arr[i], dim, path + ".parts[" + std::to_string(i) + "]"));
    r = Region::union_of(std::move(parts));
  } else {
    throw ParseError("'" + path + ".kind' unknown region kind '" + kind + "'");
  }
  if (!r.valid(dim)) throw InvariantError(path, "degenerate region (empty interior)");
  return r;
}

inline FieldSpec field(const json& j, int dim, const std::string& path) {
  FieldSpec f;
  if (j.is_number()) {
    f.value = j.get<double>();
    return f;
  }
  f.value = number(require(j, "value", path), path + ".value");
  if (j.contains("layers")) {
    const auto& arr = j.at("layers");
    for (std::size_t i = 0; i < arr.size(); ++i) {
      const std::string lp = path + ".layers[" + std::to_string(i) + "]";
      f.layers.push_back({region(require(arr[i], "region", lp), dim, lp + ".region"),
                          number(require(arr[i], "value", lp), lp + ".value")});
    }
  }
  return f;
}

inline std::string fnv1a(const std::string& s) {
  std::uint64_t h = 1469598103934665603ull;
  for (unsigned char c : s) {
    h ^= c;
    h *= 1099511628211ull;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

}  // namespace detail

inline std::vector<double> linear_sweep(double lo, double hi, int count) {
  std::vector<double> t(count);
  for (int i = 0; i < count; ++i) t[i] = lo + (hi - lo) * i / (count - 1);
  return t;
}

// Builds and validates a scenario from its JSON description.
inline Scenario scenario_from_json(const json& cfg) {
  using detail::number;
  using detail::require;
  if (!cfg.is_object()) throw ParseError("scenario must be a JSON object");
  Scenario sc;
  sc.config = cfg;
  sc.hash = detail::fnv1a(cfg.dump());

  try {
    const auto& jg = require(cfg, "grid", "");
    Grid& g = sc.grid;
    g.dimension = require(jg, "dimension", "grid").get<int>();
    if (g.dimension != 1 && g.dimension != 3)
      throw InvariantError("grid.dimension", "must be 1 or 3");
    const int dim = g.dimension;
    const auto& js = require(jg, "spacing", "grid");
    if (js.is_number()) {
      for (int a = 0; a < dim; ++a) g.spacing[a] = js.get<double>();
    } else {
      g.spacing = detail::point(js, dim, "grid.spacing");
    }

    // medium
    const auto& jm = require(cfg, "medium", "");
    MediumSpec& m = sc.medium;
    const std::string mode = jm.value("mode", std::string("refractive"));
    if (mode == "refractive") m.mode = Mode::Refractive;
    else if (mode == "dissipative") m.mode = Mode::Dissipative;
    else throw ParseError("'medium.mode' must be refractive or dissipative");
    if (jm.contains("alpha0")) m.alpha0 = detail::field(jm.at("alpha0"), dim, "medium.alpha0");
    if (jm.contains("q0")) m.q0 = detail::field(jm.at("q0"), dim, "medium.q0");
    if (jm.contains("obstacle")) m.obstacle = detail::region(jm.at("obstacle"), dim, "medium.obstacle");
    m.m0 = jm.contains("m0") ? number(jm.at("m0"), "medium.m0") : std::sqrt(m.alpha0.min_value());
    m.M0 = jm.contains("M0") ? number(jm.at("M0"), "medium.M0") : std::sqrt(m.alpha0.max_value());
    if (!m.obstacle.is_empty()) {
      m.h = detail::field(require(jm, "h", "medium"), dim, "medium.h");
      const std::string sign = require(jm, "h_sign", "medium").get<std::string>();
      if (sign == "A.I") m.h_sign = ContrastSign::AI;
      else if (sign == "A.II") m.h_sign = ContrastSign::AII;
      else throw ParseError("'medium.h_sign' must be A.I or A.II");
    }

    // source
    const auto& jsrc = require(cfg, "source", "");
    SourceSpec& s = sc.source;
    s.p = detail::point(require(jsrc, "p", "source"), dim, "source.p");
    s.eta = number(require(jsrc, "eta", "source"), "source.eta");
    if (jsrc.contains("profile")) {
      const auto& jp = jsrc.at("profile");
      const std::string kind = jp.is_string() ? jp.get<std::string>() : require(jp, "kind", "source.profile").get<std::string>();
      if (kind == "indicator") s.profile = Profile::Indicator;
      else if (kind == "cosine") s.profile = Profile::Cosine;
      else throw ParseError("'source.profile.kind' must be indicator or cosine");
      if (jp.is_object() && jp.contains("amplitude")) s.amplitude = number(jp.at("amplitude"), "source.profile.amplitude");
    }

    // run
    const auto& jr = require(cfg, "run", "");
    RunSpec& r = sc.run;
    r.T = number(require(jr, "T", "run"), "run.T");
    r.tau_min = number(require(jr, "tau_min", "run"), "run.tau_min");
    r.tau_max = number(require(jr, "tau_max", "run"), "run.tau_max");
    r.tau_count = require(jr, "tau_count", "run").get<int>();
    if (jr.contains("cfl")) r.cfl = number(jr.at("cfl"), "run.cfl");
    if (jr.contains("margin")) r.margin = number(jr.at("margin"), "run.margin");
    if (jr.contains("truncation")) {
      const std::string t = jr.at("truncation").get<std::string>();
      if (t == "full") r.truncation = Truncation::Full;
      else if (t == "echo-free") r.truncation = Truncation::EchoFree;
      else throw ParseError("'run.truncation' must be full or echo-free");
    }
    if (jr.contains("window_fraction")) r.window_fraction = number(jr.at("window_fraction"), "run.window_fraction");
    if (jr.contains("window")) {
      const auto& w = jr.at("window");
      if (!w.is_array() || w.size() != 2) throw ParseError("'run.window' must be [lo, hi]");
      r.window = std::make_pair(number(w[0], "run.window[0]"), number(w[1], "run.window[1]"));
    }
    if (jr.contains("delta_min")) r.delta_min = number(jr.at("delta_min"), "run.delta_min");

    // invariants that do not need a grid
    if (!(m.m0 > 0.0 && m.m0 <= m.M0)) throw InvariantError("medium.m0_M0", "need 0 < m0 <= M0");
    if (m.mode == Mode::Refractive && (m.q0.value != 0.0 || !m.q0.layers.empty()))
      throw InvariantError("medium.q0", "refractive mode carries no damping; q0 must be 0");
    if (m.mode == Mode::Dissipative && (m.alpha0.value != 1.0 || !m.alpha0.layers.empty()))
      throw InvariantError("medium.alpha0", "dissipative mode requires alpha0 = 1");
    if (m.q0.min_value() < 0.0) throw InvariantError("medium.q0", "q0 must be nonnegative");
    if (!m.obstacle.is_empty()) {
      if (m.h_sign == ContrastSign::AI && !(m.h.min_value() > 0.0))
        throw InvariantError("medium.h_sign", "A.I requires h >= C > 0 on D");
      if (m.h_sign == ContrastSign::AII && !(m.h.max_value() < 0.0))
        throw InvariantError("medium.h_sign", "A.II requires -h >= C > 0 on D");
    }
    if (!(s.eta > 0.0)) throw InvariantError("source.eta", "radius must be positive");
    if (!(s.amplitude > 0.0)) throw InvariantError("source.profile", "amplitude must be positive");
    if (!m.obstacle.is_empty()) {
      const double dD = m.obstacle.distance_from(s.p, dim);
      if (!(dD > s.eta))
        throw InvariantError("source.disjoint", "closure of B meets closure of D");
      sc.dist_DB = dD - s.eta;
    }
    if (!(r.T > 0.0)) throw InvariantError("run.T", "T must be positive");
    if (!(r.tau_min > 0.0 && r.tau_max > r.tau_min))
      throw InvariantError("run.tau_sweep", "need 0 < tau_min < tau_max");
    if (r.tau_count < 2) throw InvariantError("run.tau_sweep", "tau_count must be at least 2");
    if (r.tau_max * r.T > 690.0)
      throw InvariantError("run.tau_max", "tau_max * T exceeds the double exponent range (690)");
    if (!(r.cfl > 0.0 && r.cfl <= 1.0)) throw InvariantError("run.cfl", "cfl must lie in (0, 1]");
    if (r.window && !(r.window->first < r.window->second))
      throw InvariantError("run.window", "window must satisfy lo < hi");
    sc.taus = linear_sweep(r.tau_min, r.tau_max, r.tau_count);

    // truncation box
    const double a_lb = alpha_lower_bound(m);
    if (!(a_lb > 0.0)) throw InvariantError("medium.alpha_positive", "ess-inf of alpha0 + h*1_D must be positive");
    sc.c_max = 1.0 / std::sqrt(a_lb);
    if (r.margin && *r.margin < 0.0) throw InvariantError("run.margin", "margin must be nonnegative");
    const double margin = sc.margin();
    sc.truncation_radius = truncation_radius(m, s, dim, r.T, margin, sc.c_max);

    Point need_lo, need_hi;
    auto grow = [&](const Region& reg, double by, bool first) {
      auto [lo, hi] = reg.bbox(dim);
      for (int a = 0; a < dim; ++a) {
        need_lo[a] = first ? lo[a] - by : std::min(need_lo[a], lo[a] - by);
        need_hi[a] = first ? hi[a] + by : std::max(need_hi[a], hi[a] + by);
      }
    };
    if (r.truncation == Truncation::Full) {
      const double decay_rate = m.mode == Mode::Refractive ? m.m0 * r.tau_min : r.tau_min;
      const double reach = std::max(sc.c_max * r.T, std::log(1e12) / decay_rate) + margin;
      grow(s.ball(), reach, true);
      if (!m.obstacle.is_empty()) grow(m.obstacle, reach, false);
    } else {
      // echoes from the box boundary cannot return to B before T
      grow(s.ball(), 0.5 * sc.c_max * r.T + margin, true);
      if (!m.obstacle.is_empty()) grow(m.obstacle, margin, false);
    }

    if (jg.contains("extent")) {
      const auto& je = jg.at("extent");
      for (int a = 0; a < dim; ++a) g.extent[a] = je.is_number() ? je.get<int>() : je.at(a).get<int>();
      if (jg.contains("origin")) {
        g.origin = detail::point(jg.at("origin"), dim, "grid.origin");
      } else {
        for (int a = 0; a < dim; ++a) {
          const double c = 0.5 * (need_lo[a] + need_hi[a]) - 0.5 * g.extent[a] * g.spacing[a];
          g.origin[a] = std::round(c / g.spacing[a]) * g.spacing[a];
        }
      }
      for (int a = 0; a < dim; ++a)
        if (g.origin[a] > need_lo[a] + 1e-12 || g.upper()[a] < need_hi[a] - 1e-12)
          throw InvariantError("grid.truncation", "grid does not contain the truncation box on axis " +
                                                      std::to_string(a));
    } else {
      for (int a = 0; a < dim; ++a) {
        g.origin[a] = std::floor(need_lo[a] / g.spacing[a]) * g.spacing[a];
        g.extent[a] = std::max(8, static_cast<int>(std::ceil((need_hi[a] - g.origin[a]) / g.spacing[a] - 1e-9)));
      }
    }
    g.validate();
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(std::string("schema: ") + e.what());
  }

  // sampled invariants
  const MediumSpec& m = sc.medium;
  sc.fields = sample_fields(m, sc.source, sc.grid);
  const Fields& F = sc.fields;
  for (std::size_t i = 0; i < F.alpha0.size(); ++i) {
    if (F.alpha0[i] < m.m0 * m.m0 || F.alpha0[i] > m.M0 * m.M0)
      throw InvariantError("medium.alpha0_bounds", "sampled alpha0 leaves [m0^2, M0^2]");
  }
  if (!(F.alpha_min > 0.0)) throw InvariantError("medium.alpha_positive", "sampled alpha has ess-inf <= 0");
  if (m.mode == Mode::Dissipative && *std::min_element(F.q.begin(), F.q.end()) < 0.0)
    throw InvariantError("medium.q_nonnegative", "q = q0 + h*1_D must be nonnegative");
  if (m.mode == Mode::Refractive) sc.c_max = 1.0 / std::sqrt(F.alpha_min);
  if (std::none_of(F.f.begin(), F.f.end(), [](double v) { return v > 0.0; }))
    throw InvariantError("source.resolved", "source ball covers no grid cell");

  const double dt_max = sc.run.cfl * sc.grid.min_spacing() * std::sqrt(F.alpha_min) / std::sqrt(sc.grid.dimension);
  sc.steps = static_cast<int>(std::ceil(sc.run.T / dt_max));
  sc.dt = sc.run.T / sc.steps;
  return sc;
}

inline Scenario load_scenario(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open scenario file '" + path + "'");
  json cfg;
  try {
    cfg = json::parse(in);
  } catch (const json::parse_error& e) {
    throw ParseError(path + ": " + e.what());
  }
  return scenario_from_json(cfg);
}

}  // namespace enclosure
