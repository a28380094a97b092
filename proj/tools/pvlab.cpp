#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "pvlab/errors.hpp"
#include "pvlab/report.hpp"

namespace fs = std::filesystem;
using namespace pvlab;

namespace {

struct Options {
  std::string config;
  std::vector<std::string> scenarios;
  std::string scenario_file;
  std::vector<std::string> controllers;
  std::uint64_t seed = 42;
  bool seed_given = false;
  int repetitions = 1;
  unsigned threads = 0;
  std::string out = "out";
};

void write_file(const fs::path& path, const std::string& text) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw ConfigError("cannot write " + path.string());
  f << text;
}

BenchConfig load(Options& o) {
  BenchConfig c = o.config.empty() ? BenchConfig::defaults() : load_config(o.config);
  if (!o.scenario_file.empty()) {
    auto s = load_scenario_file(o.scenario_file);
    o.scenarios = {s.name};
    auto it = std::find_if(c.scenarios.begin(), c.scenarios.end(), [&](const auto& x) { return x.name == s.name; });
    if (it != c.scenarios.end()) {
      *it = std::move(s);
    } else {
      c.scenarios.push_back(std::move(s));
    }
  }
  if (!o.seed_given) o.seed = c.sim.seed;
  fs::create_directories(o.out);
  return c;
}

std::vector<std::string> all_scenarios(const BenchConfig& c) {
  std::vector<std::string> names;
  for (const auto& s : c.scenarios) names.push_back(s.name);
  return names;
}

int cmd_curve(Options& o) {
  const BenchConfig c = load(o);
  const auto names = o.scenarios.empty() ? all_scenarios(c) : o.scenarios;
  for (const auto& name : names) {
    const auto& s = c.scenario(name);
    const auto curve = string_curve(c.module, s.steps.back().g);
    const auto g = gmpp_oracle(curve);
    const auto peaks = local_maxima(curve, 1.0);
    write_file(fs::path(o.out) / ("curve_" + name + ".csv"), curve_to_csv(curve));
    write_file(fs::path(o.out) / ("curve_" + name + ".svg"), curve_svg(curve, name));
    std::printf("%-12s GMPP %8.2f W at %7.2f V, %5.2f A; %zu local maxima\n", name.c_str(), g.p(), g.v, g.i,
                peaks.size());
  }
  return 0;
}

int cmd_gmpp(Options& o) {
  const BenchConfig c = load(o);
  std::vector<ShadingScenario> list;
  for (const auto& name : o.scenarios.empty() ? all_scenarios(c) : o.scenarios) list.push_back(c.scenario(name));
  const auto rows = gmpp_table(c.module, list);
  const std::string csv = gmpp_csv(rows);
  write_file(fs::path(o.out) / "gmpp.csv", csv);
  std::cout << csv;
  return 0;
}

int cmd_bench(Options& o) {
  const BenchConfig c = load(o);
  BenchRequest req;
  req.controllers = o.controllers.empty() ? controller_ids() : o.controllers;
  req.scenarios = o.scenarios.empty() ? all_scenarios(c) : o.scenarios;
  req.seed = o.seed;
  req.repetitions = o.repetitions;
  req.threads = o.threads;
  const auto report = run_bench(c, req);
  write_file(fs::path(o.out) / "bench.csv", bench_csv(report));
  write_file(fs::path(o.out) / "gmpp.csv", gmpp_csv(report.gmpp));
  write_file(fs::path(o.out) / "report.json", report_json(report));
  write_file(fs::path(o.out) / "bench.svg", bench_svg(report));
  std::printf("%-12s %-8s %9s %9s %7s %s\n", "scenario", "ctrl", "settle_s", "p_final", "eff", "gmpp");
  for (const auto& r : report.runs) {
    const auto& m = r.metrics;
    char settle[16];
    if (m.settle_time) {
      std::snprintf(settle, sizeof settle, "%.3f", *m.settle_time);
    } else {
      std::snprintf(settle, sizeof settle, "unsettled");
    }
    std::printf("%-12s %-8s %9s %9.2f %7.4f %s\n", r.scenario.c_str(), r.controller.c_str(), settle, m.p_final,
                m.tracking_efficiency, m.reached_gmpp ? "yes" : "no");
  }
  std::printf("config %s, seed %llu -> %s\n", report.config_hash.c_str(), static_cast<unsigned long long>(report.seed),
              o.out.c_str());
  return 0;
}

int cmd_simulate(Options& o) {
  const BenchConfig c = load(o);
  if (o.scenarios.size() != 1) throw ConfigError("simulate needs exactly one --scenario");
  if (o.controllers.size() != 1) throw ConfigError("simulate needs exactly one --controller");
  const auto& s = c.scenario(o.scenarios.front());
  const auto& id = o.controllers.front();
  const auto trace = run(c.sim_for(s, id, o.seed));
  const auto oracles = scenario_oracles(s, c.module);
  const auto m = metrics(trace, s, oracles);
  const std::string stem = "trace_" + s.name + "_" + id;
  write_file(fs::path(o.out) / (stem + ".csv"), trace_to_csv(trace));
  write_file(fs::path(o.out) / (stem + ".svg"), trace_svg(trace, oracles.back(), s.name + " / " + id));
  std::printf("%s on %s: settle %s, p_final %.2f W (oracle %.2f W), efficiency %.4f\n", id.c_str(), s.name.c_str(),
              m.settle_time ? std::to_string(*m.settle_time).c_str() : "unsettled", m.p_final, oracles.back().p(),
              m.tracking_efficiency);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"pvlab: PV string MPPT simulator and benchmark"};
  app.require_subcommand(1);
  Options o;

  auto common = [&](CLI::App* sub) {
    sub->add_option("--config", o.config, "JSON config file")->check(CLI::ExistingFile);
    sub->add_option("--scenario,--scenarios", o.scenarios, "scenario names")->delimiter(',');
    sub->add_option("--scenario-file", o.scenario_file, "scenario JSON file")->check(CLI::ExistingFile);
    sub->add_option("--out", o.out, "output directory")->capture_default_str();
  };
  auto seeded = [&](CLI::App* sub) {
    sub->add_option("--controllers,--controller", o.controllers, "controller ids")->delimiter(',');
    sub->add_option("--seed", o.seed, "random seed")->each([&](const std::string&) { o.seed_given = true; });
  };

  auto* curve = app.add_subcommand("curve", "sweep string curves (CSV + SVG)");
  common(curve);
  auto* gmpp = app.add_subcommand("gmpp", "global maximum power point table");
  common(gmpp);
  auto* bench = app.add_subcommand("bench", "controller x scenario benchmark matrix");
  common(bench);
  seeded(bench);
  bench->add_option("--repetitions", o.repetitions, "runs per pair, seeds seed..seed+N-1")->check(CLI::PositiveNumber);
  bench->add_option("--threads", o.threads, "worker threads (0: all cores)");
  auto* simulate = app.add_subcommand("simulate", "single closed-loop run (trace CSV + SVG)");
  common(simulate);
  seeded(simulate);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  }

  try {
    if (*curve) return cmd_curve(o);
    if (*gmpp) return cmd_gmpp(o);
    if (*bench) return cmd_bench(o);
    if (*simulate) return cmd_simulate(o);
  } catch (const ConfigError& e) {
    std::cerr << "pvlab: " << e.what() << '\n';
    return 2;
  } catch (const SolverError& e) {
    std::cerr << "pvlab: numerical failure: " << e.what() << " (residual " << e.residual() << ")\n";
    return 3;
  } catch (const CalibrationError& e) {
    std::cerr << "pvlab: calibration failed: " << e.what() << '\n';
    return 3;
  } catch (const std::exception& e) {
    std::cerr << "pvlab: " << e.what() << '\n';
    return 3;
  }
  return 0;
}
