#pragma once

#include <cmath>
#include <string>

#include <json.hpp>

#include "enclosure/errors.hpp"
#include "enclosure/scenario.hpp"

namespace enclosure {

enum class SweepParam { T, Contrast, K0, Position };

inline SweepParam parse_sweep_param(const std::string& s) {
  if (s == "T") return SweepParam::T;
  if (s == "contrast") return SweepParam::Contrast;
  if (s == "k0") return SweepParam::K0;
  if (s == "position") return SweepParam::Position;
  throw ConfigError("unknown sweep parameter '" + s + "' (expected T, contrast, k0 or position)");
}

inline const char* to_string(SweepParam p) {
  switch (p) {
    case SweepParam::T: return "T";
    case SweepParam::Contrast: return "contrast";
    case SweepParam::K0: return "k0";
    case SweepParam::Position: return "position";
  }
  return "?";
}

namespace detail {

inline void shift_region(json& r, double dx) {
  if (r.is_null()) return;
  const std::string kind = r.value("kind", std::string());
  auto shift = [&](json& p) {
    if (p.is_array()) p[0] = p[0].get<double>() + dx;
    else p = p.get<double>() + dx;
  };
  if (kind == "interval") {
    r["lo"] = r["lo"].get<double>() + dx;
    r["hi"] = r["hi"].get<double>() + dx;
  } else if (kind == "ball") {
    shift(r["center"]);
  } else if (kind == "box") {
    shift(r["lo"]);
    shift(r["hi"]);
  } else if (kind == "union") {
    for (auto& part : r["parts"]) shift_region(part, dx);
  }
}

}  // namespace detail

// Scenario config with one parameter replaced.
//   T         run.T
//   contrast  medium.h (constant on D); the sign picks A.I or A.II
//   k0        value of the first alpha0 layer; m0/M0 re-derived from alpha0
//   position  obstacle translated along the first axis by the value
inline json apply_sweep(json cfg, SweepParam p, double value) {
  switch (p) {
    case SweepParam::T:
      cfg["run"]["T"] = value;
      break;
    case SweepParam::Contrast:
      cfg["medium"]["h"] = value;
      cfg["medium"]["h_sign"] = value > 0.0 ? "A.I" : "A.II";
      break;
    case SweepParam::K0: {
      auto& m = cfg["medium"];
      if (!m.contains("alpha0") || !m["alpha0"].is_object() || !m["alpha0"].contains("layers") ||
          m["alpha0"]["layers"].empty())
        throw ConfigError("k0 sweep needs an alpha0 with at least one layer");
      m["alpha0"]["layers"][0]["value"] = value;
      m.erase("m0");
      m.erase("M0");
      break;
    }
    case SweepParam::Position:
      if (!cfg["medium"].contains("obstacle")) throw ConfigError("position sweep needs an obstacle");
      detail::shift_region(cfg["medium"]["obstacle"], value);
      break;
  }
  return cfg;
}

}  // namespace enclosure
