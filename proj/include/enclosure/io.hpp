#pragma once

#include <cmath>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <ostream>
#include <span>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "enclosure/errors.hpp"
#include "enclosure/format.hpp"
#include "enclosure/grid.hpp"
#include "enclosure/indicator.hpp"
#include "enclosure/layered.hpp"
#include "enclosure/pipeline.hpp"
#include "enclosure/scenario.hpp"
#include "enclosure/validate.hpp"
#include "enclosure/version.hpp"

namespace enclosure {

// Every CSV starts with one comment line naming the tool and scenario.
inline std::string provenance_line(const Scenario& sc) {
  return std::string("# ") + tool_name + " " + tool_version + " scenario " + sc.hash + "\n";
}

inline std::string log_text(const SignedLog& x) { return x.sign() == 0 ? "-inf" : num(x.log_abs()); }

inline void write_series_csv(std::ostream& out, const Scenario& sc, const IndicatorSeries& s) {
  out << provenance_line(sc);
  out << "tau,sign,log_abs_I,g,s\n";
  for (std::size_t k = 0; k < s.size(); ++k) {
    const bool zero = s.I[k].sign() == 0;
    out << num(s.taus[k]) << ',' << s.I[k].sign() << ',' << log_text(s.I[k]) << ',' << (zero ? "-inf" : num(s.g(k)))
        << ',' << (zero ? "-inf" : num(s.s(k))) << '\n';
  }
}

// tau,cell,x,y,z,value
inline void write_cell_values_csv(std::ostream& out, const Scenario& sc, const std::vector<double>& taus,
                                  const std::vector<std::size_t>& cells, const std::vector<std::vector<double>>& values,
                                  const char* column) {
  out << provenance_line(sc);
  out << "tau,cell,x,y,z," << column << '\n';
  for (std::size_t k = 0; k < values.size(); ++k) {
    for (std::size_t c = 0; c < cells.size(); ++c) {
      const Point x = sc.grid.center(cells[c]);
      out << num(taus[k]) << ',' << cells[c] << ',' << num(x[0]) << ',' << num(x[1]) << ',' << num(x[2]) << ','
          << num(values[k][c]) << '\n';
    }
  }
}

inline json number_or_null(double x) { return std::isfinite(x) ? json(x) : json(nullptr); }

inline json ground_truth_json(const Scenario& sc) {
  const GroundTruth gt = ground_truth(sc);
  json j = json::object();
  j["dist"] = gt.dist ? json(*gt.dist) : json(nullptr);
  j["travel_time"] = gt.travel_time ? json(*gt.travel_time) : json(nullptr);
  j["threshold_T"] = gt.threshold ? json(*gt.threshold) : json(nullptr);
  return j;
}

// Disagreements between the verdict and what the theory predicts for this T.
inline std::vector<std::string> verdict_warnings(const Scenario& sc, const Verdict& v) {
  std::vector<std::string> w;
  const GroundTruth gt = ground_truth(sc);
  const bool obstacle_class = v.cls == VerdictClass::ObstacleAI || v.cls == VerdictClass::ObstacleAII;
  if (!sc.has_obstacle()) {
    if (obstacle_class) w.push_back("obstacle verdict on a scenario without obstacle");
    return w;
  }
  if (gt.threshold) {
    if (sc.run.T > *gt.threshold && !obstacle_class)
      w.push_back("T = " + brief(sc.run.T) + " exceeds the threshold " + brief(*gt.threshold) + " but the class is " +
                  to_string(v.cls));
    if (sc.run.T <= *gt.threshold)
      w.push_back("T = " + brief(sc.run.T) + " does not exceed the threshold " + brief(*gt.threshold) +
                  "; the theory gives no guarantee");
  }
  if (obstacle_class) {
    const bool expect_ai = sc.medium.h_sign == ContrastSign::AI;
    if ((v.cls == VerdictClass::ObstacleAI) != expect_ai) w.push_back("class contradicts the declared contrast sign");
  }
  return w;
}

inline json verdict_json(const Scenario& sc, const PipelineResult& r) {
  const Verdict& v = r.verdict;
  json j;
  j["tool"] = tool_name;
  j["version"] = tool_version;
  j["scenario_hash"] = sc.hash;
  j["pipeline"] = to_string(r.pipeline);
  j["class"] = to_string(v.cls);
  j["rate"] = number_or_null(v.rate);
  j["distance_band"] = {number_or_null(v.distance_lo), number_or_null(v.distance_hi)};
  j["window"] = {v.window_lo, v.window_hi};
  j["fit"] = {{"used", v.used.size()},
              {"trimmed", v.trimmed},
              {"delta_g", number_or_null(v.delta_g)},
              {"monotonicity", number_or_null(v.monotonicity)},
              {"sign", v.sign},
              {"reason", v.reason}};
  j["residuals"] = {{"fit_rms", number_or_null(v.fit_residual)},
                    {"residual_2_3", {{"tau", r.residual_tau}, {"value", number_or_null(r.residual)}}}};
  json certs = json::array();
  bool all_ok = true;
  for (const auto& b : r.bounds) {
    certs.push_back({{"tau", b.tau},
                     {"indicator", b.indicator},
                     {"lower", b.lower},
                     {"upper", b.upper},
                     {"slack", b.slack},
                     {"ok", b.ok}});
    all_ok = all_ok && b.ok;
  }
  j["certificates"] = {{"checked", !r.bounds.empty()}, {"all_ok", all_ok}, {"entries", certs}};
  j["ground_truth"] = ground_truth_json(sc);
  j["warnings"] = verdict_warnings(sc, v);
  j["T"] = sc.run.T;
  j["mode"] = sc.medium.mode == Mode::Refractive ? "refractive" : "dissipative";
  j["m0"] = sc.medium.m0;
  j["M0"] = sc.medium.M0;
  return j;
}

inline std::string summary_text(const Scenario& sc, const std::vector<PipelineResult>& results) {
  std::ostringstream out;
  out << tool_name << ' ' << tool_version << ", scenario " << sc.hash << '\n';
  out << "grid " << sc.grid.size() << " cells, h " << brief(sc.grid.min_spacing()) << ", dt " << brief(sc.dt) << ", "
      << sc.steps << " steps, T " << brief(sc.run.T) << '\n';
  const GroundTruth gt = ground_truth(sc);
  if (gt.dist) out << "dist(D,B) " << brief(*gt.dist) << ", threshold T > " << brief(*gt.threshold) << '\n';
  if (gt.travel_time) out << "travel time phi " << brief(*gt.travel_time) << '\n';
  for (const auto& r : results) {
    const Verdict& v = r.verdict;
    out << '\n' << to_string(r.pipeline) << ": " << to_string(v.cls) << '\n';
    out << "  rate " << brief(v.rate) << " over tau [" << brief(v.window_lo) << ", " << brief(v.window_hi) << "], "
        << v.used.size() << " points, " << v.trimmed << " trimmed\n";
    out << "  distance band [" << brief(v.distance_lo) << ", " << brief(v.distance_hi) << "]\n";
    out << "  delta g " << brief(v.delta_g) << ", sign " << v.sign << '\n';
    if (!v.reason.empty()) out << "  " << v.reason << '\n';
    if (!r.bounds.empty()) {
      std::size_t bad = 0;
      for (const auto& b : r.bounds) bad += b.ok ? 0 : 1;
      out << "  certificates " << (r.bounds.size() - bad) << '/' << r.bounds.size() << " ok\n";
    }
    for (const auto& w : verdict_warnings(sc, v)) out << "  warning: " << w << '\n';
  }
  if (results.size() == 2)
    out << "\nrate difference " << brief(std::fabs(results[0].verdict.rate - results[1].verdict.rate)) << '\n';
  return out.str();
}

inline json validation_json(const Scenario& sc, const ValidationReport& rep, Level level) {
  json j;
  j["tool"] = tool_name;
  j["version"] = tool_version;
  j["scenario_hash"] = sc.hash;
  j["level"] = level == Level::Fast ? "fast" : "full";
  j["tau"] = rep.tau;
  j["passed"] = rep.passed();
  json checks = json::array();
  for (const auto& c : rep.checks)
    checks.push_back({{"name", c.name},
                      {"status", c.skipped ? "skip" : (c.passed ? "pass" : "fail")},
                      {"measured", number_or_null(c.measured)},
                      {"threshold", number_or_null(c.threshold)},
                      {"detail", c.detail}});
  j["checks"] = checks;
  return j;
}

// Binary snapshot: "ENCLSNAP", u32 layout version 1, i32 dimension,
// i32 extent[3], f64 origin[3], f64 spacing[3], u64 count, then count f64
// values with i fastest.  All little-endian.
inline void write_snapshot(std::ostream& out, const Grid& g, std::span<const double> values) {
  auto put = [&](std::uint64_t bits, int bytes) {
    for (int b = 0; b < bytes; ++b) out.put(static_cast<char>((bits >> (8 * b)) & 0xff));
  };
  auto put_f64 = [&](double x) {
    std::uint64_t bits;
    std::memcpy(&bits, &x, sizeof bits);
    put(bits, 8);
  };
  out.write("ENCLSNAP", 8);
  put(1, 4);
  put(static_cast<std::uint32_t>(g.dimension), 4);
  for (int a = 0; a < 3; ++a) put(static_cast<std::uint32_t>(g.extent[a]), 4);
  for (int a = 0; a < 3; ++a) put_f64(g.origin[a]);
  for (int a = 0; a < 3; ++a) put_f64(g.spacing[a]);
  put(values.size(), 8);
  for (double x : values) put_f64(x);
}

inline std::ofstream open_output(const std::filesystem::path& p, bool binary = false) {
  std::ofstream f(p, binary ? std::ios::binary : std::ios::out);
  if (!f) throw ConfigError("cannot write '" + p.string() + "'");
  return f;
}

inline void write_text(const std::filesystem::path& p, const std::string& s) {
  auto f = open_output(p);
  f << s;
  if (!f) throw ConfigError("write failed for '" + p.string() + "'");
}

}  // namespace enclosure
