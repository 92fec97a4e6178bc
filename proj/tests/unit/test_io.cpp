#include <cstdint>
#include <cstring>
#include <sstream>
#include <string>
#include <vector>

#include <gtest/gtest.h>

#include "enclosure/io.hpp"
#include "enclosure/sweep.hpp"

using namespace enclosure;

namespace {

json base() {
  return json::parse(R"({
    "grid": {"dimension": 1, "spacing": 0.01},
    "medium": {"mode": "refractive", "alpha0": {"value": 1.0, "layers": [{"region": {"kind": "interval", "lo": 0.5, "hi": 0.7}, "value": 4.0}]},
               "obstacle": {"kind": "union", "parts": [{"kind": "interval", "lo": 1.0, "hi": 1.5},
                                                         {"kind": "interval", "lo": 2.0, "hi": 2.5}]},
               "h": 1.0, "h_sign": "A.I"},
    "source": {"p": 0.0, "eta": 0.1},
    "run": {"T": 3.0, "tau_min": 3.0, "tau_max": 12.0, "tau_count": 10}
  })");
}

std::vector<std::string> lines(const std::string& s) {
  std::vector<std::string> out;
  std::istringstream in(s);
  for (std::string l; std::getline(in, l);) out.push_back(l);
  return out;
}

}  // namespace

TEST(Csv, SeriesHasProvenanceAndHeader) {
  const Scenario sc = scenario_from_json(base());
  IndicatorSeries s;
  s.T = 3.0;
  s.push(3.0, SignedLog::from_double(-0.5), 0.0);
  s.push(4.0, SignedLog::zero(), 0.0);
  std::ostringstream out;
  write_series_csv(out, sc, s);
  const auto l = lines(out.str());
  ASSERT_EQ(l.size(), 4u);
  EXPECT_EQ(l[0], "# enclosure 0.1.0 scenario " + sc.hash);
  EXPECT_EQ(l[1], "tau,sign,log_abs_I,g,s");
  EXPECT_EQ(l[2].substr(0, 5), "3,-1,");
  EXPECT_EQ(l[3], "4,0,-inf,-inf,-inf");
}

TEST(Csv, CellValues) {
  const Scenario sc = scenario_from_json(base());
  std::ostringstream out;
  write_cell_values_csv(out, sc, {2.0}, {0, 3}, {{1.5, -2.0}}, "w");
  const auto l = lines(out.str());
  ASSERT_EQ(l.size(), 4u);
  EXPECT_EQ(l[1], "tau,cell,x,y,z,w");
  EXPECT_EQ(l[3].substr(0, 4), "2,3,");
  EXPECT_EQ(l[3].substr(l[3].size() - 3), ",-2");
}

TEST(Snapshot, ByteLayout) {
  Grid g;
  g.dimension = 1;
  g.extent = {3, 1, 1};
  g.origin = {-1.5, 0.0, 0.0};
  g.spacing = {0.5, 1.0, 1.0};
  const std::vector<double> vals{1.0, -2.0, 0.25};
  std::ostringstream out;
  write_snapshot(out, g, vals);
  const std::string b = out.str();
  ASSERT_EQ(b.size(), 8u + 4 + 4 + 12 + 24 + 24 + 8 + 24);
  EXPECT_EQ(b.substr(0, 8), "ENCLSNAP");
  auto u32 = [&](std::size_t at) {
    std::uint32_t x = 0;
    for (int i = 0; i < 4; ++i) x |= static_cast<std::uint32_t>(static_cast<unsigned char>(b[at + i])) << (8 * i);
    return x;
  };
  auto f64 = [&](std::size_t at) {
    std::uint64_t bits = 0;
    for (int i = 0; i < 8; ++i) bits |= static_cast<std::uint64_t>(static_cast<unsigned char>(b[at + i])) << (8 * i);
    double x;
    std::memcpy(&x, &bits, 8);
    return x;
  };
  EXPECT_EQ(u32(8), 1u);
  EXPECT_EQ(u32(12), 1u);
  EXPECT_EQ(u32(16), 3u);
  EXPECT_EQ(u32(20), 1u);
  EXPECT_EQ(f64(28), -1.5);
  EXPECT_EQ(f64(52), 0.5);
  EXPECT_EQ(u32(76), 3u);
  EXPECT_EQ(f64(84), 1.0);
  EXPECT_EQ(f64(92), -2.0);
  EXPECT_EQ(f64(100), 0.25);
}

TEST(VerdictJson, Fields) {
  const Scenario sc = scenario_from_json(base());
  PipelineResult r;
  r.verdict.cls = VerdictClass::ObstacleAI;
  r.verdict.rate = -0.9;
  r.bounds.push_back(BoundCheck{3.0, -1.0, -2.0, -0.5, 0.0, true});
  const json j = verdict_json(sc, r);
  EXPECT_EQ(j["tool"], "enclosure");
  EXPECT_EQ(j["scenario_hash"], sc.hash);
  EXPECT_EQ(j["pipeline"], "elliptic-v");
  EXPECT_EQ(j["class"], to_string(VerdictClass::ObstacleAI));
  EXPECT_EQ(j["rate"], -0.9);
  EXPECT_TRUE(j["distance_band"][0].is_null());
  EXPECT_TRUE(j["certificates"]["all_ok"].get<bool>());
  EXPECT_EQ(j["certificates"]["entries"].size(), 1u);
  EXPECT_NEAR(j["ground_truth"]["dist"].get<double>(), 0.9, 1e-12);
  EXPECT_EQ(j["mode"], "refractive");
  EXPECT_TRUE(j["warnings"].is_array());
}

TEST(VerdictJson, WarnsOnContradictions) {
  const Scenario sc = scenario_from_json(base());
  Verdict v;
  v.cls = VerdictClass::ObstacleAII;
  const auto w = verdict_warnings(sc, v);
  ASSERT_FALSE(w.empty());
  EXPECT_NE(w.back().find("contrast sign"), std::string::npos);
}

TEST(Sweep, ParamNames) {
  for (const char* n : {"T", "contrast", "k0", "position"}) EXPECT_STREQ(to_string(parse_sweep_param(n)), n);
  EXPECT_THROW(parse_sweep_param("spacing"), ConfigError);
}

TEST(Sweep, AppliesValues) {
  const json cfg = base();
  EXPECT_EQ(apply_sweep(cfg, SweepParam::T, 5.0)["run"]["T"], 5.0);

  const json neg = apply_sweep(cfg, SweepParam::Contrast, -0.5);
  EXPECT_EQ(neg["medium"]["h"], -0.5);
  EXPECT_EQ(neg["medium"]["h_sign"], "A.II");
  EXPECT_NO_THROW(scenario_from_json(neg));

  json k = cfg;
  k["medium"]["M0"] = 2.0;
  k = apply_sweep(k, SweepParam::K0, 9.0);
  EXPECT_EQ(k["medium"]["alpha0"]["layers"][0]["value"], 9.0);
  EXPECT_FALSE(k["medium"].contains("M0"));
  EXPECT_NEAR(scenario_from_json(k).medium.M0, 3.0, 1e-15);

  const json moved = apply_sweep(cfg, SweepParam::Position, 0.25);
  EXPECT_EQ(moved["medium"]["obstacle"]["parts"][0]["lo"], 1.25);
  EXPECT_EQ(moved["medium"]["obstacle"]["parts"][1]["hi"], 2.75);
  EXPECT_NEAR(*scenario_from_json(moved).dist_DB, 1.15, 1e-12);

  json bare = cfg;
  bare["medium"].erase("alpha0");
  EXPECT_THROW(apply_sweep(bare, SweepParam::K0, 2.0), ConfigError);
}
