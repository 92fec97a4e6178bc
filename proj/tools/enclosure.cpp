// enclosure: command-line driver for the indicator experiments.
//   run       simulate, transform, compare and classify one scenario
//   validate  property checks on one scenario
//   sweep     run a scenario over a list of parameter values
//   info      derived quantities of a scenario
// Exit codes: 0 success, 1 configuration, 2 numerical failure, 3 validation failure.

#include <atomic>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <mutex>
#include <string>
#include <thread>
#include <vector>

#include <CLI11.hpp>

#include "enclosure/errors.hpp"
#include "enclosure/io.hpp"
#include "enclosure/layered.hpp"
#include "enclosure/pipeline.hpp"
#include "enclosure/scenario.hpp"
#include "enclosure/sweep.hpp"
#include "enclosure/validate.hpp"
#include "enclosure/version.hpp"

namespace fs = std::filesystem;
using namespace enclosure;

namespace {

std::mutex log_mutex;

void log(const std::string& msg) {
  std::lock_guard<std::mutex> lock(log_mutex);
  std::cerr << "[enclosure] " << msg << '\n';
}

enum Exit { Ok = 0, Config = 1, Numerical = 2, Validation = 3 };

// Runs fn and maps exceptions onto the exit-code families.
template <class Fn>
int guarded(Fn&& fn, std::string* message = nullptr) {
  auto fail = [&](int code, const std::string& what) {
    if (message) *message = what;
    else log("error: " + what);
    return code;
  };
  try {
    return fn();
  } catch (const ConfigError& e) {
    return fail(Config, e.what());
  } catch (const CheckFailure& e) {
    return fail(Validation, e.what());
  } catch (const NumericalError& e) {
    return fail(Numerical, e.what());
  } catch (const std::exception& e) {
    return fail(Numerical, e.what());
  }
}

void ensure_dir(const fs::path& p) {
  std::error_code ec;
  fs::create_directories(p, ec);
  if (ec || !fs::is_directory(p)) throw ConfigError("cannot create output directory '" + p.string() + "'");
}

std::vector<Pipeline> pipelines_for(const std::string& name) {
  if (name == "elliptic") return {Pipeline::Elliptic};
  if (name == "reference") return {Pipeline::Reference};
  if (name == "both") return {Pipeline::Elliptic, Pipeline::Reference};
  throw ConfigError("unknown pipeline '" + name + "'");
}

const char* short_name(Pipeline p) { return p == Pipeline::Elliptic ? "elliptic" : "reference"; }

struct RunFlags {
  std::string pipeline = "elliptic";
  double noise = 0.0;
  std::uint64_t seed = 0;
  bool snapshot = false;
};

// One scenario end to end. Returns the results for aggregation.
std::vector<PipelineResult> run_scenario(const Scenario& sc, const RunFlags& flags, const fs::path& out,
                                         const std::string& tag) {
  ensure_dir(out);
  std::vector<PipelineResult> results;
  for (Pipeline p : pipelines_for(flags.pipeline)) {
    PipelineOptions opt;
    opt.pipeline = p;
    opt.noise_sigma = flags.noise;
    opt.seed = flags.seed;
    log(tag + "running " + to_string(p) + " on " + std::to_string(sc.grid.size()) + " cells, " +
        std::to_string(sc.steps) + " steps");
    PipelineResult r = run_pipeline(sc, opt);
    log(tag + to_string(p) + ": " + to_string(r.verdict.cls) + ", rate " + brief(r.verdict.rate) + " (" +
        brief(r.seconds) + " s)");
    for (const auto& b : r.bounds)
      if (!b.ok) log(tag + "warning: certificate fails at tau " + brief(b.tau));

    const std::string n = short_name(p);
    {
      auto f = open_output(out / ("series_" + n + ".csv"));
      write_series_csv(f, sc, r.series);
    }
    write_text(out / ("verdict_" + n + ".json"), verdict_json(sc, r).dump(2) + "\n");
    {
      auto f = open_output(out / ("v_on_D_" + n + ".csv"));
      write_cell_values_csv(f, sc, sc.taus, r.d_cells, r.v_on_D, "v");
    }
    if (results.empty()) {
      auto f = open_output(out / "w_on_B.csv");
      write_cell_values_csv(f, sc, sc.taus, r.b_cells, r.w_on_B, "w");
      if (flags.snapshot) {
        auto s = open_output(out / "snapshot_w.bin", true);
        write_snapshot(s, sc.grid, r.w_probe);
      }
    }
    results.push_back(std::move(r));
  }
  if (auto L = layered_from_scenario(sc); L && sc.has_obstacle()) {
    std::vector<LayeredSolution> sols;
    for (double tau : sc.taus) sols.push_back(analytic_v_1d(*L, tau));
    auto f = open_output(out / "coefficients.csv");
    f << provenance_line(sc);
    write_coefficient_csv(f, sols);
  }
  write_text(out / "summary.txt", summary_text(sc, results));
  return results;
}

int cmd_run(const std::string& path, const RunFlags& flags, const std::string& out) {
  const Scenario sc = load_scenario(path);
  const auto results = run_scenario(sc, flags, out, "");
  std::cerr << summary_text(sc, results);
  return Ok;
}

int cmd_validate(const std::string& path, const std::string& level, double tau, bool corrupt,
                 const std::string& out) {
  const Scenario sc = load_scenario(path);
  ValidateOptions opt;
  if (level == "fast") opt.level = Level::Fast;
  else if (level == "full") opt.level = Level::Full;
  else throw ConfigError("unknown level '" + level + "' (expected fast or full)");
  if (tau > 0.0) opt.tau = tau;
  opt.corrupt_w = corrupt;
  log("validating at tau " + brief(opt.tau.value_or(probe_tau(sc))) + ", level " + level);
  const ValidationReport rep = validate_scenario(sc, opt);
  for (const auto& c : rep.checks) {
    const char* status = c.skipped ? "SKIP" : (c.passed ? "PASS" : "FAIL");
    std::printf("%-4s %-26s measured %-14s threshold %-14s %s\n", status, c.name.c_str(), sci(c.measured).c_str(),
                sci(c.threshold).c_str(), c.detail.c_str());
  }
  if (!out.empty()) {
    ensure_dir(out);
    write_text(fs::path(out) / "validation.json", validation_json(sc, rep, opt.level).dump(2) + "\n");
  }
  if (const CheckResult* bad = rep.first_failure()) {
    log("validation failed: " + bad->name + (bad->detail.empty() ? "" : " (" + bad->detail + ")"));
    return Validation;
  }
  return Ok;
}

struct SweepRow {
  double value = 0.0;
  int code = 0;
  std::string message;
  std::vector<PipelineResult> results;
  std::string hash;
};

int cmd_sweep(const std::string& path, const std::string& param_name, const std::vector<double>& values,
              const RunFlags& flags, const std::string& out, int jobs) {
  const SweepParam param = parse_sweep_param(param_name);
  const Scenario base = load_scenario(path);
  if (values.empty()) throw ConfigError("sweep needs at least one value");
  ensure_dir(out);

  std::vector<SweepRow> rows(values.size());
  std::atomic<std::size_t> next{0};
  auto worker = [&]() {
    for (std::size_t i = next++; i < values.size(); i = next++) {
      SweepRow& row = rows[i];
      row.value = values[i];
      const std::string tag = std::string(to_string(param)) + "=" + brief(values[i]) + ": ";
      row.code = guarded(
          [&]() {
            const Scenario sc = scenario_from_json(apply_sweep(base.config, param, values[i]));
            row.hash = sc.hash;
            char dir[32];
            std::snprintf(dir, sizeof dir, "run_%03zu", i);
            row.results = run_scenario(sc, flags, fs::path(out) / dir, tag);
            return static_cast<int>(Ok);
          },
          &row.message);
      if (row.code != Ok) log(tag + "failed: " + row.message);
    }
  };
  const int n = std::max(1, std::min<int>(jobs, static_cast<int>(values.size())));
  std::vector<std::thread> pool;
  for (int t = 1; t < n; ++t) pool.emplace_back(worker);
  worker();
  for (auto& t : pool) t.join();

  auto f = open_output(fs::path(out) / "sweep.csv");
  f << provenance_line(base);
  f << "param,value,run,scenario_hash,status,pipeline,class,rate,distance_lo,distance_hi,delta_g,sign,message\n";
  int first_failure = Ok;
  for (std::size_t i = 0; i < rows.size(); ++i) {
    const SweepRow& r = rows[i];
    char dir[32];
    std::snprintf(dir, sizeof dir, "run_%03zu", i);
    if (r.code != Ok) {
      if (first_failure == Ok) first_failure = r.code;
      std::string msg = r.message;
      for (char& c : msg)
        if (c == ',' || c == '\n' || c == '"') c = ' ';
      f << to_string(param) << ',' << num(r.value) << ',' << dir << ',' << r.hash << ",error" << r.code
        << ",,,,,,,," << msg << '\n';
      continue;
    }
    for (const auto& res : r.results) {
      const Verdict& v = res.verdict;
      f << to_string(param) << ',' << num(r.value) << ',' << dir << ',' << r.hash << ",ok," << to_string(res.pipeline)
        << ',' << to_string(v.cls) << ',' << num(v.rate) << ',' << num(v.distance_lo) << ',' << num(v.distance_hi)
        << ',' << num(v.delta_g) << ',' << v.sign << ",\n";
    }
  }
  std::size_t failed = 0;
  for (const auto& r : rows) failed += r.code != Ok ? 1 : 0;
  log("sweep finished: " + std::to_string(rows.size() - failed) + " ok, " + std::to_string(failed) + " failed");
  for (std::size_t i = 0; i < rows.size(); ++i)
    if (rows[i].code != Ok) log("  " + std::string(to_string(param)) + "=" + brief(rows[i].value) + ": " + rows[i].message);
  return first_failure;
}

int cmd_info(const std::string& path) {
  const Scenario sc = load_scenario(path);
  const GroundTruth gt = ground_truth(sc);
  auto line = [](const char* key, const std::string& value) { std::printf("%-18s %s\n", key, value.c_str()); };
  line("scenario_hash", sc.hash);
  line("mode", sc.medium.mode == Mode::Refractive ? "refractive" : "dissipative");
  line("dimension", std::to_string(sc.grid.dimension));
  line("cells", std::to_string(sc.grid.size()));
  line("spacing", brief(sc.grid.min_spacing()));
  line("dt", brief(sc.dt));
  line("steps", std::to_string(sc.steps));
  line("c_max", brief(sc.c_max));
  line("truncation_radius", brief(sc.truncation_radius));
  line("m0", brief(sc.medium.m0));
  line("M0", brief(sc.medium.M0));
  line("dist_DB", gt.dist ? brief(*gt.dist) : "none");
  line("threshold_T", gt.threshold ? brief(*gt.threshold) : "none");
  line("phi", gt.travel_time ? brief(*gt.travel_time) : "none");
  line("T", brief(sc.run.T));
  line("tau_range", brief(sc.run.tau_min) + " " + brief(sc.run.tau_max) + " (" + std::to_string(sc.run.tau_count) + ")");
  return Ok;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Enclosure-method indicator experiments"};
  app.set_version_flag("--version", std::string(tool_name) + " " + tool_version);
  app.require_subcommand(1);

  std::string scenario;
  RunFlags flags;
  std::string out = "out";

  auto* run = app.add_subcommand("run", "Simulate, transform and classify one scenario");
  run->add_option("scenario", scenario, "Scenario JSON file")->required();
  run->add_option("--pipeline", flags.pipeline, "elliptic, reference or both")
      ->check(CLI::IsMember({"elliptic", "reference", "both"}));
  run->add_option("--out", out, "Output directory");
  run->add_option("--noise", flags.noise, "Gaussian noise sigma added to u on B");
  run->add_option("--seed", flags.seed, "Seed for the noise");
  run->add_flag("--snapshot", flags.snapshot, "Also dump w at the probe tau as a binary snapshot");

  std::string level = "fast";
  double tau = 0.0;
  bool corrupt = false;
  std::string vout;
  auto* val = app.add_subcommand("validate", "Run the property checks on a scenario");
  val->add_option("scenario", scenario, "Scenario JSON file")->required();
  val->add_option("--level", level, "fast or full")->check(CLI::IsMember({"fast", "full"}));
  val->add_option("--tau", tau, "Probe tau (default: middle of the fit window)");
  val->add_option("--out", vout, "Directory for validation.json");
  val->add_flag("--corrupt-w", corrupt, "Negative control")->group("");

  std::string param;
  std::vector<double> values;
  int jobs = 1;
  auto* sw = app.add_subcommand("sweep", "Run a scenario over parameter values");
  sw->add_option("scenario", scenario, "Scenario JSON file")->required();
  sw->add_option("--param", param, "T, contrast, k0 or position")->required();
  sw->add_option("--values", values, "Comma separated values")->required()->delimiter(',');
  sw->add_option("--pipeline", flags.pipeline, "elliptic, reference or both")
      ->check(CLI::IsMember({"elliptic", "reference", "both"}));
  sw->add_option("--out", out, "Output directory");
  sw->add_option("--jobs", jobs, "Concurrent runs")->check(CLI::PositiveNumber);

  auto* info = app.add_subcommand("info", "Print derived quantities of a scenario");
  info->add_option("scenario", scenario, "Scenario JSON file")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? Ok : Config;
  }

  if (*run) return guarded([&] { return cmd_run(scenario, flags, out); });
  if (*val) return guarded([&] { return cmd_validate(scenario, level, tau, corrupt, vout); });
  if (*sw) return guarded([&] { return cmd_sweep(scenario, param, values, flags, out, jobs); });
  if (*info) return guarded([&] { return cmd_info(scenario); });
  return Config;
}
