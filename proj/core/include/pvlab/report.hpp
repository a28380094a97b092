#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "pvlab/simulation.hpp"

namespace pvlab {

/// Everything a batch run depends on. Loaded from one JSON file with sections
/// `module`, `converter`, `controllers`, `scenarios` and `sim`; absent keys keep
/// their defaults.
struct BenchConfig {
  ModuleParams module;
  BoostParams converter;
  ControllerSet controllers;
  std::vector<ShadingScenario> scenarios;
  SimConfig sim;  // duration, periods, duty, seed; scenario/controller unused

  static BenchConfig defaults();
  const ShadingScenario& scenario(const std::string& name) const;
  /// Per-run configuration with this config's module, converter and controllers.
  SimConfig sim_for(const ShadingScenario& scenario, const std::string& controller, std::uint64_t seed) const;
};

BenchConfig load_config(const std::string& path);
BenchConfig config_from_json(const nlohmann::json& j);
void to_json(nlohmann::json& j, const BenchConfig& c);

/// FNV-1a 64 over the canonical JSON dump, as 16 hex digits.
std::string config_hash(const BenchConfig& c);

struct GmppRow {
  std::string scenario;
  OperatingPoint op;
  double eta_percent = 0.0;  // relative to the unshaded string
};

std::vector<GmppRow> gmpp_table(const ModuleParams& module, const std::vector<ShadingScenario>& scenarios);
/// CSV `scenario,I_opt_A,V_opt_V,P_opt_W,eta_percent`.
std::string gmpp_csv(const std::vector<GmppRow>& rows);

struct BenchRun {
  std::string scenario;
  std::string controller;
  int repetition = 0;
  std::uint64_t seed = 0;
  OperatingPoint oracle;  // final step
  Metrics metrics;
  SimTrace trace;
};

struct BenchReport {
  std::uint64_t seed = 0;
  std::string config_hash;
  std::string version;
  std::vector<GmppRow> gmpp;
  std::vector<BenchRun> runs;  // scenario-major, then controller, then repetition
};

struct BenchRequest {
  std::vector<std::string> controllers;
  std::vector<std::string> scenarios;
  std::uint64_t seed = 42;
  int repetitions = 1;
  unsigned threads = 0;  // 0: hardware concurrency
};

/// Runs the full matrix on a bounded worker pool. Throws ConfigError for an
/// unknown controller or scenario before any run starts.
BenchReport run_bench(const BenchConfig& config, const BenchRequest& request);

/// CSV, one row per run:
/// `scenario,controller,repetition,seed,settle_time_s,settled,p_final_w,tracking_efficiency,oscillation_w,reached_gmpp,oracle_p_w`.
std::string bench_csv(const BenchReport& report);
/// Metadata plus both tables as JSON.
std::string report_json(const BenchReport& report);

/// I-V and P-V panels with the GMPP and local maxima marked.
std::string curve_svg(const PvCurve& curve, const std::string& title);
/// Power against time, one panel per scenario, every controller overlaid.
std::string bench_svg(const BenchReport& report);
/// Power, duty and phase bands of a single run.
std::string trace_svg(const SimTrace& trace, const OperatingPoint& oracle, const std::string& title);

}  // namespace pvlab
