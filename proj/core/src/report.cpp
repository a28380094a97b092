#include "pvlab/report.hpp"

#include <algorithm>
#include <atomic>
#include <cstdio>
#include <exception>
#include <fstream>
#include <map>
#include <mutex>
#include <sstream>
#include <thread>

#include <nlohmann/json.hpp>

#include "pvlab/errors.hpp"
#include "pvlab/svg.hpp"

#ifndef PVLAB_VERSION
#define PVLAB_VERSION "0.0.0"
#endif

namespace pvlab {

using nlohmann::json;

BenchConfig BenchConfig::defaults() {
  BenchConfig c;
  c.sim = SimConfig::defaults();
  c.module = c.sim.module;
  c.converter = c.sim.converter;
  c.controllers = c.sim.controllers;
  c.scenarios = builtin_scenarios();
  return c;
}

const ShadingScenario& BenchConfig::scenario(const std::string& name) const {
  for (const auto& s : scenarios) {
    if (s.name == name) return s;
  }
  throw ConfigError("unknown scenario '" + name + "'");
}

SimConfig BenchConfig::sim_for(const ShadingScenario& s, const std::string& controller, std::uint64_t seed) const {
  SimConfig c = sim;
  c.scenario = s;
  c.controller = controller;
  c.controllers = controllers;
  c.module = module;
  c.converter = converter;
  c.seed = seed;
  return c;
}

namespace {

json module_json(const ModuleParams& m) {
  return {{"iph_stc", m.iph_stc}, {"i0", m.i0}, {"n", m.n}, {"ns_cells", m.ns_cells}, {"rs", m.rs},
          {"rsh", m.rsh}, {"bypass_drop", m.bypass_drop}, {"t_stc", m.t_stc}};
}

void read_module(const json& j, ModuleParams& m) {
  m.iph_stc = j.value("iph_stc", m.iph_stc);
  m.i0 = j.value("i0", m.i0);
  m.n = j.value("n", m.n);
  m.ns_cells = j.value("ns_cells", m.ns_cells);
  m.rs = j.value("rs", m.rs);
  m.rsh = j.value("rsh", m.rsh);
  m.bypass_drop = j.value("bypass_drop", m.bypass_drop);
  m.t_stc = j.value("t_stc", m.t_stc);
  m.validate();
}

json converter_json(const BoostParams& b) {
  return {{"inductance", b.inductance}, {"capacitance", b.capacitance}, {"load", b.load}, {"fs", b.fs}};
}

void read_converter(const json& j, BoostParams& b) {
  b.inductance = j.value("inductance", b.inductance);
  b.capacitance = j.value("capacitance", b.capacitance);
  b.load = j.value("load", b.load);
  b.fs = j.value("fs", b.fs);
  b.validate();
}

json sim_json(const SimConfig& s) {
  return {{"duration", s.duration},
          {"control_period", s.control_period},
          {"initial_duty", s.initial_duty},
          {"integration_step", s.integration_step},
          {"seed", s.seed},
          {"rated_power", s.zone_estimator.rated_power},
          {"slope_tolerance", s.zone_estimator.slope_tolerance},
          {"initial_zone", zone_index(s.zone_estimator.initial)},
          {"voltage_referenced_zone", s.voltage_referenced_zone}};
}

void read_sim(const json& j, SimConfig& s) {
  s.duration = j.value("duration", s.duration);
  s.control_period = j.value("control_period", s.control_period);
  s.initial_duty = j.value("initial_duty", s.initial_duty);
  s.integration_step = j.value("integration_step", s.integration_step);
  s.seed = j.value("seed", s.seed);
  s.zone_estimator.rated_power = j.value("rated_power", s.zone_estimator.rated_power);
  s.zone_estimator.slope_tolerance = j.value("slope_tolerance", s.zone_estimator.slope_tolerance);
  const int z = j.value("initial_zone", zone_index(s.zone_estimator.initial));
  if (z < 0 || z > 3) throw ConfigError("sim.initial_zone must be 0..3");
  s.zone_estimator.initial = static_cast<ShadingZone>(z);
  s.voltage_referenced_zone = j.value("voltage_referenced_zone", s.voltage_referenced_zone);
}

}  // namespace

BenchConfig config_from_json(const json& j) {
  BenchConfig c = BenchConfig::defaults();
  try {
    if (!j.is_object()) throw ConfigError("config must be a JSON object");
    if (j.contains("module")) read_module(j["module"], c.module);
    if (j.contains("converter")) read_converter(j["converter"], c.converter);
    if (j.contains("controllers")) apply_json(j["controllers"], c.controllers);
    if (j.contains("sim")) read_sim(j["sim"], c.sim);
    if (j.contains("scenarios")) {
      for (const auto& sj : j["scenarios"]) {
        auto s = sj.get<ShadingScenario>();
        const auto it = std::find_if(c.scenarios.begin(), c.scenarios.end(),
                                     [&](const ShadingScenario& x) { return x.name == s.name; });
        if (it != c.scenarios.end()) {
          *it = std::move(s);
        } else {
          c.scenarios.push_back(std::move(s));
        }
      }
    }
  } catch (const json::exception& e) {
    throw ConfigError(std::string("malformed config: ") + e.what());
  }
  c.sim.module = c.module;
  c.sim.converter = c.converter;
  c.sim.controllers = c.controllers;
  return c;
}

BenchConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config " + path);
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw ConfigError("config " + path + " is not valid JSON: " + e.what());
  }
  return config_from_json(j);
}

void to_json(json& j, const BenchConfig& c) {
  j = json::object();
  j["module"] = module_json(c.module);
  j["converter"] = converter_json(c.converter);
  j["controllers"] = c.controllers;
  j["scenarios"] = c.scenarios;
  j["sim"] = sim_json(c.sim);
}

std::string config_hash(const BenchConfig& c) {
  const std::string text = json(c).dump();
  std::uint64_t h = 0xcbf29ce484222325ull;
  for (unsigned char ch : text) {
    h ^= ch;
    h *= 0x100000001b3ull;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

std::vector<GmppRow> gmpp_table(const ModuleParams& module, const std::vector<ShadingScenario>& scenarios) {
  std::vector<GmppRow> rows;
  std::map<std::size_t, double> reference;
  for (const auto& s : scenarios) {
    const std::size_t n = s.module_count();
    if (!reference.count(n)) {
      const std::vector<double> sun(n, 1.0);
      reference[n] = gmpp_oracle(string_curve(module, sun)).p();
    }
    const auto op = gmpp_oracle(string_curve(module, s.steps.back().g));
    rows.push_back({s.name, op, 100.0 * op.p() / reference[n]});
  }
  return rows;
}

std::string gmpp_csv(const std::vector<GmppRow>& rows) {
  std::ostringstream os;
  os << "scenario,I_opt_A,V_opt_V,P_opt_W,eta_percent\n";
  char buf[160];
  for (const auto& r : rows) {
    std::snprintf(buf, sizeof buf, "%s,%.2f,%.2f,%.2f,%.2f\n", r.scenario.c_str(), r.op.i, r.op.v, r.op.p(),
                  r.eta_percent);
    os << buf;
  }
  return os.str();
}

BenchReport run_bench(const BenchConfig& config, const BenchRequest& request) {
  if (request.controllers.empty() || request.scenarios.empty()) {
    throw ConfigError("bench needs at least one controller and one scenario");
  }
  if (request.repetitions < 1) throw ConfigError("repetitions must be >= 1");
  for (const auto& id : request.controllers) {
    if (std::find(controller_ids().begin(), controller_ids().end(), id) == controller_ids().end()) {
      throw ConfigError("unknown controller id '" + id + "'");
    }
  }
  std::vector<ShadingScenario> scenarios;
  for (const auto& name : request.scenarios) scenarios.push_back(config.scenario(name));

  BenchReport report;
  report.seed = request.seed;
  report.config_hash = config_hash(config);
  report.version = PVLAB_VERSION;
  report.gmpp = gmpp_table(config.module, scenarios);

  std::vector<std::vector<OperatingPoint>> oracles;
  for (const auto& s : scenarios) oracles.push_back(scenario_oracles(s, config.module));

  struct Job {
    std::size_t scenario;
    std::string controller;
    int repetition;
  };
  std::vector<Job> jobs;
  for (std::size_t s = 0; s < scenarios.size(); ++s) {
    for (const auto& id : request.controllers) {
      for (int r = 0; r < request.repetitions; ++r) jobs.push_back({s, id, r});
    }
  }
  report.runs.resize(jobs.size());

  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_mutex;
  auto worker = [&] {
    for (std::size_t k = next++; k < jobs.size(); k = next++) {
      try {
        const Job& job = jobs[k];
        const auto& sc = scenarios[job.scenario];
        const std::uint64_t seed = request.seed + static_cast<std::uint64_t>(job.repetition);
        BenchRun out;
        out.scenario = sc.name;
        out.controller = job.controller;
        out.repetition = job.repetition;
        out.seed = seed;
        out.trace = run(config.sim_for(sc, job.controller, seed));
        out.oracle = oracles[job.scenario].back();
        out.metrics = metrics(out.trace, sc, oracles[job.scenario]);
        report.runs[k] = std::move(out);
      } catch (...) {
        std::lock_guard lock(failure_mutex);
        if (!failure) failure = std::current_exception();
      }
    }
  };
  unsigned threads = request.threads ? request.threads : std::max(1u, std::thread::hardware_concurrency());
  threads = static_cast<unsigned>(std::min<std::size_t>(threads, jobs.size()));
  std::vector<std::thread> pool;
  for (unsigned t = 0; t < threads; ++t) pool.emplace_back(worker);
  for (auto& t : pool) t.join();
  if (failure) std::rethrow_exception(failure);
  return report;
}

std::string bench_csv(const BenchReport& report) {
  std::ostringstream os;
  os << "scenario,controller,repetition,seed,settle_time_s,settled,p_final_w,tracking_efficiency,oscillation_w,"
        "reached_gmpp,oracle_p_w\n";
  char buf[320];
  for (const auto& r : report.runs) {
    const auto& m = r.metrics;
    const double duration = static_cast<double>(r.trace.records.size()) * r.trace.control_period;
    std::snprintf(buf, sizeof buf, "%s,%s,%d,%llu,%.4f,%d,%.3f,%.5f,%.3f,%d,%.3f\n", r.scenario.c_str(),
                  r.controller.c_str(), r.repetition, static_cast<unsigned long long>(r.seed),
                  m.settle_or(duration), m.settle_time ? 1 : 0, m.p_final, m.tracking_efficiency,
                  m.oscillation_amplitude, m.reached_gmpp ? 1 : 0, r.oracle.p());
    os << buf;
  }
  return os.str();
}

std::string report_json(const BenchReport& report) {
  json j;
  j["seed"] = report.seed;
  j["config_hash"] = report.config_hash;
  j["version"] = report.version;
  j["gmpp"] = json::array();
  for (const auto& g : report.gmpp) {
    j["gmpp"].push_back({{"scenario", g.scenario}, {"I_opt", g.op.i}, {"V_opt", g.op.v}, {"P_opt", g.op.p()},
                         {"eta_percent", g.eta_percent}});
  }
  j["runs"] = json::array();
  for (const auto& r : report.runs) {
    json settle = r.metrics.settle_time ? json(*r.metrics.settle_time) : json(nullptr);
    j["runs"].push_back({{"scenario", r.scenario},
                         {"controller", r.controller},
                         {"repetition", r.repetition},
                         {"seed", r.seed},
                         {"settle_time", settle},
                         {"p_final", r.metrics.p_final},
                         {"tracking_efficiency", r.metrics.tracking_efficiency},
                         {"oscillation_amplitude", r.metrics.oscillation_amplitude},
                         {"reached_gmpp", r.metrics.reached_gmpp},
                         {"oracle_p", r.oracle.p()}});
  }
  return j.dump(2) + "\n";
}

// ---------------------------------------------------------------- plots

namespace {

std::string watts(double p) {
  char buf[48];
  std::snprintf(buf, sizeof buf, "%.1f W", p);
  return buf;
}

std::size_t stride_for(std::size_t n, std::size_t target = 750) { return std::max<std::size_t>(1, n / target); }

}  // namespace

std::string curve_svg(const PvCurve& curve, const std::string& title) {
  svg::Series iv{"I(V)", svg::palette(0), {}, {}};
  svg::Series pv{"P(V)", svg::palette(1), {}, {}};
  for (const auto& pt : curve.points) {
    iv.x.push_back(pt.v);
    iv.y.push_back(pt.i);
    pv.x.push_back(pt.v);
    pv.y.push_back(pt.p());
  }
  svg::Panel ip{title + ": I-V", "voltage [V]", "current [A]", {iv}, {}, {}};
  svg::Panel pp{title + ": P-V", "voltage [V]", "power [W]", {pv}, {}, {}};
  const auto g = gmpp_oracle(curve);
  for (const auto& m : local_maxima(curve, 1.0)) {
    if (std::abs(m.v - g.v) < 0.5) continue;
    pp.markers.push_back({m.v, m.p(), "local " + watts(m.p()), "#7f7f7f"});
    ip.markers.push_back({m.v, m.i, "", "#7f7f7f"});
  }
  if (g.p() > 0) {
    pp.markers.push_back({g.v, g.p(), "GMPP " + watts(g.p()), "#d62728"});
    ip.markers.push_back({g.v, g.i, "GMPP", "#d62728"});
  }
  return svg::render({ip, pp});
}

std::string bench_svg(const BenchReport& report) {
  std::vector<svg::Panel> panels;
  std::map<std::string, std::size_t> color_of;
  for (const auto& r : report.runs) {
    if (r.repetition != 0) continue;
    if (panels.empty() || panels.back().title != r.scenario) {
      panels.push_back({r.scenario, "time [s]", "PV power [W]", {}, {}, {}});
      panels.back().markers.push_back({0.0, r.oracle.p(), "GMPP " + watts(r.oracle.p()), "#d62728"});
    }
    const std::size_t color = color_of.emplace(r.controller, color_of.size()).first->second;
    svg::Series s{r.controller, svg::palette(color), {}, {}};
    const auto& recs = r.trace.records;
    const std::size_t stride = stride_for(recs.size());
    for (std::size_t k = 0; k < recs.size(); k += stride) {
      s.x.push_back(recs[k].t);
      s.y.push_back(recs[k].p_pv());
    }
    panels.back().series.push_back(std::move(s));
  }
  return svg::render(panels);
}

std::string trace_svg(const SimTrace& trace, const OperatingPoint& oracle, const std::string& title) {
  svg::Series p{"p_pv", svg::palette(0), {}, {}};
  svg::Series out{"p_out", svg::palette(1), {}, {}};
  svg::Series d{"duty", svg::palette(2), {}, {}};
  const auto& recs = trace.records;
  const std::size_t stride = stride_for(recs.size());
  for (std::size_t k = 0; k < recs.size(); k += stride) {
    p.x.push_back(recs[k].t);
    p.y.push_back(recs[k].p_pv());
    out.x.push_back(recs[k].t);
    out.y.push_back(recs[k].p_out);
    d.x.push_back(recs[k].t);
    d.y.push_back(recs[k].duty);
  }
  static const std::map<std::string, std::string> phase_color{
      {"FlcCoarse", "#ff7f0e"}, {"PsoSearch", "#1f77b4"}, {"FlcFine", "#2ca02c"}, {"Hold", "#2ca02c"}};
  std::vector<svg::Band> bands;
  for (std::size_t k = 0; k < recs.size();) {
    std::size_t e = k;
    while (e + 1 < recs.size() && recs[e + 1].phase == recs[k].phase) ++e;
    const auto it = phase_color.find(recs[k].phase);
    if (it != phase_color.end()) {
      bands.push_back({recs[k].t, recs[e].t + trace.control_period, it->second, recs[k].phase});
    }
    k = e + 1;
  }
  svg::Panel power{title + ": power", "time [s]", "power [W]", {p, out}, {}, bands};
  if (oracle.p() > 0) power.markers.push_back({0.0, oracle.p(), "GMPP " + watts(oracle.p()), "#d62728"});
  svg::Panel duty{title + ": duty", "time [s]", "duty", {d}, {}, bands};
  return svg::render({power, duty});
}

}  // namespace pvlab
