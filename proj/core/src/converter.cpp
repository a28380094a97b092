#include "pvlab/converter.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "pvlab/errors.hpp"

namespace pvlab {

void BoostParams::validate() const {
  if (!(inductance > 0 && capacitance > 0 && load > 0 && fs > 0)) {
    throw ConfigError("converter parameters must be strictly positive");
  }
}

double steady_gain(double d) {
  if (!(d >= 0.0 && d < 1.0)) throw DomainError("steady_gain: duty must lie in [0, 1)");
  return 1.0 / (1.0 - d);
}

double input_resistance(double d, const BoostParams& params) {
  const double off = 1.0 - d;
  return params.load * off * off;
}

BoostState step_averaged(const BoostState& s, double vin, double d, double dt, const BoostParams& p) {
  const double off = 1.0 - d;
  // The diode blocks reverse inductor current.
  auto deriv = [&](double iL, double vC) {
    iL = std::max(iL, 0.0);
    double diL = (vin - off * vC) / p.inductance;
    if (iL <= 0.0 && diL < 0.0) diL = 0.0;
    return std::pair{diL, (off * iL - vC / p.load) / p.capacitance};
  };
  const auto [a1, b1] = deriv(s.iL, s.vC);
  const auto [a2, b2] = deriv(s.iL + 0.5 * dt * a1, s.vC + 0.5 * dt * b1);
  const auto [a3, b3] = deriv(s.iL + 0.5 * dt * a2, s.vC + 0.5 * dt * b2);
  const auto [a4, b4] = deriv(s.iL + dt * a3, s.vC + dt * b3);
  BoostState next;
  next.iL = s.iL + dt / 6.0 * (a1 + 2 * a2 + 2 * a3 + a4);
  next.vC = s.vC + dt / 6.0 * (b1 + 2 * b2 + 2 * b3 + b4);
  next.iL = std::max(next.iL, 0.0);
  next.vC = std::max(next.vC, 0.0);
  return next;
}

double ripple_current(double vin, double d, const BoostParams& p) {
  return vin * d / (p.inductance * p.fs);
}

std::vector<BoostSample> simulate_boost(const BoostParams& params, double vin, double d, double duration,
                                        double dt, BoostState start) {
  params.validate();
  const auto steps = static_cast<std::size_t>(std::llround(duration / dt));
  std::vector<BoostSample> trace;
  trace.reserve(steps + 1);
  trace.push_back({0.0, start});
  BoostState x = start;
  for (std::size_t k = 1; k <= steps; ++k) {
    x = step_averaged(x, vin, d, dt, params);
    trace.push_back({static_cast<double>(k) * dt, x});
  }
  return trace;
}

StepResponse measure_step_response(const std::vector<BoostSample>& trace) {
  StepResponse r;
  if (trace.size() < 10) return r;
  const std::size_t tail = trace.size() - trace.size() / 10;
  double sum = 0.0;
  for (std::size_t k = tail; k < trace.size(); ++k) sum += trace[k].x.vC;
  r.final_value = sum / static_cast<double>(trace.size() - tail);

  auto first_crossing = [&](double level) {
    for (std::size_t k = 1; k < trace.size(); ++k) {
      const double v0 = trace[k - 1].x.vC, v1 = trace[k].x.vC;
      if (v0 < level && v1 >= level) {
        return trace[k - 1].t + (level - v0) / (v1 - v0) * (trace[k].t - trace[k - 1].t);
      }
    }
    return trace.back().t;
  };
  r.rise_time = first_crossing(r.final_value);
  r.rise_time_10_90 = first_crossing(0.9 * r.final_value) - first_crossing(0.1 * r.final_value);
  auto peak = std::max_element(trace.begin(), trace.end(),
                               [](const BoostSample& a, const BoostSample& b) { return a.x.vC < b.x.vC; });
  r.peak_time = peak->t;
  r.overshoot = r.final_value > 0 ? (peak->x.vC - r.final_value) / r.final_value : 0.0;
  return r;
}

std::string boost_trace_to_csv(const std::vector<BoostSample>& trace) {
  std::ostringstream out;
  out << "t_s,iL_amps,vC_volts\n";
  out.precision(9);
  for (const auto& s : trace) out << s.t << ',' << s.x.iL << ',' << s.x.vC << '\n';
  return out.str();
}

}  // namespace pvlab
