#pragma once

#include <string>
#include <vector>

namespace pvlab {

/// Boost converter components. Defaults are the bench converter: 4.7 mH,
/// 470 uF, 10 Ohm load, 25 kHz switching.
struct BoostParams {
  double inductance = 4.7e-3;
  double capacitance = 470e-6;
  double load = 10.0;
  double fs = 25e3;

  void validate() const;
};

struct BoostState {
  double iL = 0.0;
  double vC = 0.0;
};

/// Ideal continuous-conduction voltage ratio 1 / (1 - d). Throws DomainError for d >= 1.
double steady_gain(double d);

/// Load resistance reflected to the converter input, R (1 - d)^2.
double input_resistance(double d, const BoostParams& params);

/// One RK4 step of the averaged model; the inductor current is then clamped at
/// zero (diode blocks reverse current).
BoostState step_averaged(const BoostState& state, double vin, double d, double dt, const BoostParams& params);

/// Peak-to-peak inductor ripple estimate vin d / (L fs).
double ripple_current(double vin, double d, const BoostParams& params);

struct BoostSample {
  double t;
  BoostState x;
};

/// Integrate from `start` with fixed vin and duty.
std::vector<BoostSample> simulate_boost(const BoostParams& params, double vin, double d, double duration,
                                        double dt = 20e-6, BoostState start = {});

struct StepResponse {
  double final_value = 0.0;    // mean output voltage over the last 10% of the run
  double rise_time = 0.0;      // first crossing of the final value (0-100%)
  double rise_time_10_90 = 0.0;
  double overshoot = 0.0;      // (peak - final) / final
  double peak_time = 0.0;
};

/// Output-voltage step-response figures of a zero-initial-state run.
StepResponse measure_step_response(const std::vector<BoostSample>& trace);

/// CSV `t_s,iL_amps,vC_volts`.
std::string boost_trace_to_csv(const std::vector<BoostSample>& trace);

}  // namespace pvlab
