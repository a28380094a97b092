#pragma once

#include <optional>
#include <span>
#include <string>
#include <vector>

namespace pvlab {

/// Single-diode parameters of one PV module.
struct ModuleParams {
  double iph_stc = 0.0;      // photocurrent at STC [A]
  double i0 = 0.0;           // diode saturation current [A]
  double n = 1.3;            // ideality factor
  int ns_cells = 54;         // series cells per module
  double rs = 0.0;           // series resistance [Ohm]
  double rsh = 300.0;        // shunt resistance [Ohm]
  double bypass_drop = 0.5;  // bypass diode forward drop [V]
  double t_stc = 25.0;       // reference cell temperature [degC]

  /// Throws ConfigError when any invariant is violated.
  void validate() const;
};

struct EnvInput {
  double g = 1.0;        // irradiance fraction of 1000 W/m^2
  double t_cell = 25.0;  // degC
};

struct OperatingPoint {
  double v = 0.0;
  double i = 0.0;

  double p() const { return v * i; }
};

/// Thermal voltage kT/q at the given cell temperature.
double thermal_voltage(double t_cell_celsius);

/// Residual of the implicit single-diode equation at (v, i).
double module_residual(const ModuleParams& params, const EnvInput& env, double v, double i);

/// Module current at terminal voltage v. Throws SolverError on non-convergence.
double solve_module_current(const ModuleParams& params, const EnvInput& env, double v);

/// Module terminal voltage carrying current i. When no non-negative voltage can
/// carry i the bypass diode conducts and -bypass_drop is returned.
double module_voltage_at_current(const ModuleParams& params, const EnvInput& env, double i);

/// Open-circuit voltage of one module (0 for a dark module).
double module_open_circuit_voltage(const ModuleParams& params, const EnvInput& env);

/// Series string of identical modules, each behind its own bypass diode.
class PvString {
 public:
  PvString(ModuleParams params, std::vector<double> irradiance, double t_cell = 25.0);

  const ModuleParams& params() const { return params_; }
  const std::vector<double>& irradiance() const { return g_; }
  std::size_t module_count() const { return g_.size(); }

  /// Sum of module voltages at a common string current.
  double voltage_at_current(double i) const;
  /// Inverse of voltage_at_current by bisection on current (tolerance 1e-12 A).
  double current_at_voltage(double v) const;
  /// Sum of module open-circuit voltages.
  double open_circuit_voltage() const;
  /// Largest module short-circuit current in the string.
  double max_short_circuit_current() const;

  /// Intersection with the load line v = r_load * i. Bisection on current with
  /// the given tolerance; a degenerate intersection returns (0, 0).
  OperatingPoint operating_point(double r_load, double tol_amps = 1e-6) const;

 private:
  ModuleParams params_;
  std::vector<double> g_;
  double t_cell_;
};

/// Sampled string characteristic, voltages strictly increasing.
struct PvCurve {
  std::vector<OperatingPoint> points;
  std::optional<PvString> source;  // continuous model the samples came from
};

/// Sweep the string with a uniform current grid and re-sample onto a uniform
/// voltage grid of n_points over [0, Voc]. Throws ConfigError for n_points < 100.
PvCurve string_curve(const ModuleParams& params, std::span<const double> g, std::size_t n_points = 2000);

/// Global power maximum of the curve, refined by golden-section search on the
/// underlying model to 1e-3 V.
OperatingPoint gmpp_oracle(const PvCurve& curve);

/// Interior local power maxima with topographic prominence >= min_prominence,
/// ordered by voltage.
std::vector<OperatingPoint> local_maxima(const PvCurve& curve, double min_prominence = 0.0);

struct CalibrationTargets {
  double vmp = 26.346;
  double imp = 7.59;
  double voc = 32.9;
  double isc = 8.20;
};

/// Fixed parameters during calibration; iph_stc, i0 and rs are fitted.
struct CalibrationFixed {
  double n = 1.3;
  int ns_cells = 54;
  double rsh = 300.0;
  double bypass_drop = 0.5;
  double t_stc = 25.0;
};

/// Fit iph_stc, i0, rs so that the STC curve has its maximum power point at
/// (vmp, imp) and passes through (voc, 0). Throws CalibrationError when the
/// targets are infeasible or the short-circuit current misses by more than 1%.
ModuleParams calibrate(const CalibrationTargets& targets, const CalibrationFixed& fixed = {});

/// Calibrated default module (computed once).
const ModuleParams& default_module();

struct ModuleMpp {
  double vmp, imp, voc, isc;
};

/// Maximum power point and end points of a single module at the given irradiance.
ModuleMpp module_characteristics(const ModuleParams& params, const EnvInput& env);

/// CSV with header `v_volts,i_amps,p_watts`, 6 significant digits.
std::string curve_to_csv(const PvCurve& curve);

}  // namespace pvlab
