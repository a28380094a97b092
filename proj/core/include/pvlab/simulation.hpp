#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "pvlab/controllers.hpp"
#include "pvlab/converter.hpp"
#include "pvlab/pv_model.hpp"
#include "pvlab/shading.hpp"

namespace pvlab {

struct SimConfig {
  ShadingScenario scenario;
  std::string controller = "po";
  ControllerSet controllers;
  ModuleParams module;
  BoostParams converter;
  double duration = 1.5;
  double control_period = 1e-3;
  double initial_duty = 0.1;
  double integration_step = 20e-6;
  std::uint64_t seed = 42;
  ZoneEstimatorParams zone_estimator;
  /// Reference the zone estimate to the unshaded string power at the operating
  /// voltage rather than to the flat rated power.
  bool voltage_referenced_zone = true;

  /// Module, closed-loop converter (load sized for the string) and rated power
  /// defaults; the scenario and controller are left to the caller.
  static SimConfig defaults();
  void validate() const;
};

struct SimRecord {
  double t = 0.0;
  double duty = 0.0;
  double v_pv = 0.0;
  double i_pv = 0.0;
  double p_out = 0.0;
  ShadingZone zone = ShadingZone::Zone3;
  std::string phase;

  double p_pv() const { return v_pv * i_pv; }
};

struct SimTrace {
  double control_period = 1e-3;
  std::vector<SimRecord> records;
  /// Cumulative energies at the end of each period [J]: load-line PV energy,
  /// energy drawn at the converter input port (v_pv * iL) and load energy.
  std::vector<double> e_pv;
  std::vector<double> e_port;
  std::vector<double> e_out;
  /// Inductor plus capacitor energy at the end of each period, and at t = 0.
  std::vector<double> stored_energy;
  double initial_stored_energy = 0.0;
  /// Swarm controllers: best power seen so far, one entry per period once known.
  std::vector<double> gbest_history;
};

/// Time-stepped closed loop: per control period solve the PV operating point on
/// the converter load line, integrate the converter, then ask the controller for
/// the next duty.
SimTrace run(const SimConfig& config);

/// Same loop with a caller-owned controller (test doubles).
SimTrace run_with(const SimConfig& config, Controller& controller);

struct Metrics {
  std::optional<double> settle_time;  // empty when the trace never settles
  double p_final = 0.0;
  double tracking_efficiency = 0.0;
  double oscillation_amplitude = 0.0;
  bool reached_gmpp = false;

  /// settle_time, or the trace duration when unsettled.
  double settle_or(double duration) const { return settle_time.value_or(duration); }
};

/// Benchmark figures against a single oracle power.
Metrics metrics(const SimTrace& trace, const OperatingPoint& oracle);

/// Oracle GMPP for every step of a scenario.
std::vector<OperatingPoint> scenario_oracles(const ShadingScenario& scenario, const ModuleParams& module);

/// Metrics with the efficiency integrated piecewise against per-step oracles;
/// reached_gmpp compares against the final step's oracle.
Metrics metrics(const SimTrace& trace, const ShadingScenario& scenario, const std::vector<OperatingPoint>& oracles);

/// Duty that places the load line through the given operating point.
double duty_for_resistance(double r_in, const BoostParams& converter);

/// Follows the per-step GMPP duty of the scenario (reference controller).
std::unique_ptr<Controller> make_oracle_controller(const SimConfig& config);

/// CSV `t_s,duty,v_pv,i_pv,p_pv,p_out,zone,phase`.
std::string trace_to_csv(const SimTrace& trace);

}  // namespace pvlab
