#include "pvlab/simulation.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "pvlab/errors.hpp"

namespace pvlab {

namespace {

constexpr double kClosedLoopLoad = 900.0;

std::size_t period_count(const SimConfig& c) {
  return static_cast<std::size_t>(std::llround(c.duration / c.control_period));
}

std::size_t step_index(const ShadingScenario& s, double t) {
  std::size_t k = 0;
  while (k + 1 < s.steps.size() && s.steps[k + 1].t <= t) ++k;
  return k;
}

std::size_t tail_begin(std::size_t n) {
  const std::size_t tail = std::max<std::size_t>(1, n / 10);
  return n - tail;
}

}  // namespace

SimConfig SimConfig::defaults() {
  SimConfig c;
  c.module = default_module();
  c.converter.load = kClosedLoopLoad;
  const auto mpp = module_characteristics(c.module, EnvInput{});
  c.zone_estimator.rated_power = 5.0 * mpp.vmp * mpp.imp;
  return c;
}

void SimConfig::validate() const {
  scenario.validate();
  module.validate();
  converter.validate();
  if (!(zone_estimator.rated_power > 0)) throw ConfigError("rated power must be positive");
  if (!(control_period > 0)) throw ConfigError("control period must be positive");
  if (!(duration >= 10 * control_period)) throw ConfigError("duration must cover at least 10 control periods");
  if (!(integration_step > 0 && integration_step <= control_period)) {
    throw ConfigError("integration step must lie in (0, control_period]");
  }
  if (!(initial_duty >= 0 && initial_duty < 1)) throw ConfigError("initial duty must lie in [0, 1)");
}

SimTrace run(const SimConfig& config) {
  auto controller = make_controller(config.controller, config.controllers, config.seed);
  return run_with(config, *controller);
}

SimTrace run_with(const SimConfig& config, Controller& controller) {
  config.validate();
  std::vector<PvString> strings;
  for (const auto& step : config.scenario.steps) strings.emplace_back(config.module, step.g);

  const std::size_t n = period_count(config);
  const auto substeps = std::max<long long>(1, std::llround(config.control_period / config.integration_step));
  const double dt = config.control_period / static_cast<double>(substeps);
  const double r_load = config.converter.load;

  SimTrace trace;
  trace.control_period = config.control_period;
  trace.records.reserve(n);
  trace.e_pv.reserve(n);
  trace.e_out.reserve(n);
  trace.e_port.reserve(n);
  trace.stored_energy.reserve(n);

  ZoneEstimatorParams zone_params = config.zone_estimator;
  if (config.voltage_referenced_zone && zone_params.reference_curve.empty()) {
    const std::vector<double> sun(config.scenario.module_count(), 1.0);
    for (const auto& pt : string_curve(config.module, sun).points) zone_params.reference_curve.push_back({pt.v, pt.p()});
  }

  controller.reset(config.initial_duty);
  ZoneEstimatorState zone_state;
  zone_state.zone = config.zone_estimator.initial;
  double d = config.initial_duty;
  // The converter starts in equilibrium with the string at the initial duty.
  BoostState x;
  {
    const OperatingPoint op0 = strings.front().operating_point(input_resistance(d, config.converter));
    x.iL = op0.i;
    x.vC = op0.v * steady_gain(d);
  }
  double e_pv = 0.0, e_out = 0.0, e_port = 0.0;
  const auto stored = [&](const BoostState& b) {
    return 0.5 * config.converter.inductance * b.iL * b.iL + 0.5 * config.converter.capacitance * b.vC * b.vC;
  };
  trace.initial_stored_energy = stored(x);

  for (std::size_t k = 0; k < n; ++k) {
    const double t = static_cast<double>(k) * config.control_period;
    const PvString& pv = strings[step_index(config.scenario, t)];
    const OperatingPoint op = pv.operating_point(input_resistance(d, config.converter));

    double p_out = x.vC * x.vC / r_load;
    double p_port = op.v * x.iL;
    for (long long s = 0; s < substeps; ++s) {
      const double out_before = p_out, port_before = p_port;
      x = step_averaged(x, op.v, d, dt, config.converter);
      p_out = x.vC * x.vC / r_load;
      p_port = op.v * x.iL;
      e_out += 0.5 * (out_before + p_out) * dt;
      e_port += 0.5 * (port_before + p_port) * dt;
    }
    e_pv += op.p() * config.control_period;

    const ShadingZone zone = estimate_zone(zone_state, op.v, op.i, zone_params);
    ControllerInput in{op.v, op.i, t, zone};
    const double next = controller.step(in);

    trace.records.push_back({t, d, op.v, op.i, p_out, zone, std::string(controller.phase())});
    trace.e_pv.push_back(e_pv);
    trace.e_out.push_back(e_out);
    trace.e_port.push_back(e_port);
    trace.stored_energy.push_back(stored(x));
    if (const auto g = controller.gbest_power()) trace.gbest_history.push_back(*g);
    d = next;
  }
  return trace;
}

namespace {

Metrics shape_metrics(const SimTrace& trace) {
  if (trace.records.empty()) throw ConfigError("metrics need a non-empty trace");
  const auto& r = trace.records;
  const std::size_t n = r.size();
  const std::size_t tail = tail_begin(n);
  Metrics m;
  double sum = 0.0, lo = r[tail].p_pv(), hi = lo;
  for (std::size_t k = tail; k < n; ++k) {
    const double p = r[k].p_pv();
    sum += p;
    lo = std::min(lo, p);
    hi = std::max(hi, p);
  }
  m.p_final = sum / static_cast<double>(n - tail);
  m.oscillation_amplitude = hi - lo;
  const double band = 0.02 * std::abs(m.p_final);
  std::size_t settled = 0;
  for (std::size_t k = n; k-- > 0;) {
    if (std::abs(r[k].p_pv() - m.p_final) > band) {
      settled = k + 1;
      break;
    }
  }
  if (settled < n) m.settle_time = r[settled].t;
  return m;
}

}  // namespace

Metrics metrics(const SimTrace& trace, const OperatingPoint& oracle) {
  Metrics m = shape_metrics(trace);
  double energy = 0.0;
  for (const auto& rec : trace.records) energy += rec.p_pv() * trace.control_period;
  const double duration = static_cast<double>(trace.records.size()) * trace.control_period;
  m.tracking_efficiency = oracle.p() > 0 ? energy / (oracle.p() * duration) : 0.0;
  m.reached_gmpp = m.p_final >= 0.98 * oracle.p();
  return m;
}

std::vector<OperatingPoint> scenario_oracles(const ShadingScenario& scenario, const ModuleParams& module) {
  std::vector<OperatingPoint> out;
  for (const auto& step : scenario.steps) out.push_back(gmpp_oracle(string_curve(module, step.g)));
  return out;
}

Metrics metrics(const SimTrace& trace, const ShadingScenario& scenario, const std::vector<OperatingPoint>& oracles) {
  if (oracles.size() != scenario.steps.size()) throw ConfigError("one oracle per scenario step required");
  Metrics m = shape_metrics(trace);
  double energy = 0.0, ideal = 0.0;
  for (const auto& rec : trace.records) {
    energy += rec.p_pv() * trace.control_period;
    ideal += oracles[step_index(scenario, rec.t)].p() * trace.control_period;
  }
  m.tracking_efficiency = ideal > 0 ? energy / ideal : 0.0;
  m.reached_gmpp = m.p_final >= 0.98 * oracles.back().p();
  return m;
}

double duty_for_resistance(double r_in, const BoostParams& converter) {
  if (!(r_in > 0)) return 0.0;
  return std::clamp(1.0 - std::sqrt(r_in / converter.load), 0.0, 0.999);
}

namespace {

class OracleController final : public Controller {
 public:
  OracleController(ShadingScenario scenario, std::vector<double> duties, double period)
      : scenario_(std::move(scenario)), duties_(std::move(duties)), period_(period) {}
  std::string_view id() const override { return "oracle"; }
  void reset(double) override {}
  double step(const ControllerInput& in) override { return duties_[step_index(scenario_, in.t + period_)]; }

 private:
  ShadingScenario scenario_;
  std::vector<double> duties_;
  double period_;
};

}  // namespace

std::unique_ptr<Controller> make_oracle_controller(const SimConfig& config) {
  std::vector<double> duties;
  for (const auto& op : scenario_oracles(config.scenario, config.module)) {
    duties.push_back(op.i > 0 ? duty_for_resistance(op.v / op.i, config.converter) : config.initial_duty);
  }
  return std::make_unique<OracleController>(config.scenario, std::move(duties), config.control_period);
}

std::string trace_to_csv(const SimTrace& trace) {
  std::ostringstream os;
  os.precision(6);
  os << "t_s,duty,v_pv,i_pv,p_pv,p_out,zone,phase\n";
  for (const auto& r : trace.records) {
    os << r.t << ',' << r.duty << ',' << r.v_pv << ',' << r.i_pv << ',' << r.p_pv() << ',' << r.p_out << ','
       << zone_name(r.zone) << ',' << r.phase << '\n';
  }
  return os.str();
}

}  // namespace pvlab
