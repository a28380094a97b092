#include "pvlab/pv_model.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "pvlab/errors.hpp"

namespace pvlab {

namespace {

constexpr double kBoltzmann = 1.380649e-23;
constexpr double kCharge = 1.602176634e-19;
constexpr double kMaxExponent = 700.0;
constexpr int kMaxIterations = 100;
constexpr double kInvPhi = 0.6180339887498949;

double diode_scale(const ModuleParams& p, const EnvInput& env) {
  return p.n * p.ns_cells * thermal_voltage(env.t_cell);
}

double safe_expm1(double x) { return std::expm1(std::min(x, kMaxExponent)); }
double safe_exp(double x) { return std::exp(std::min(x, kMaxExponent)); }

// Root of a strictly decreasing function by Newton steps guarded with bisection.
// f(lo) > 0 > f(hi) must hold on entry.
template <typename F, typename DF>
double guarded_newton(F f, DF df, double lo, double hi, double x, double tol, const char* what) {
  double fx = f(x);
  for (int it = 0; it < kMaxIterations; ++it) {
    if (std::abs(fx) < tol) return x;
    if (fx > 0) lo = x; else hi = x;
    double next = x - fx / df(x);
    if (!(next > lo && next < hi)) next = 0.5 * (lo + hi);
    if (hi - lo < 1e-15 * std::max(1.0, std::abs(x))) return next;
    x = next;
    fx = f(x);
  }
  if (std::abs(fx) < tol) return x;
  throw SolverError(what, fx);
}

double golden_max(auto&& f, double lo, double hi, double tol) {
  double a = lo, b = hi;
  double c = b - kInvPhi * (b - a);
  double d = a + kInvPhi * (b - a);
  double fc = f(c), fd = f(d);
  while (b - a > tol) {
    if (fc > fd) {
      b = d; d = c; fd = fc;
      c = b - kInvPhi * (b - a);
      fc = f(c);
    } else {
      a = c; c = d; fc = fd;
      d = a + kInvPhi * (b - a);
      fd = f(d);
    }
  }
  return 0.5 * (a + b);
}

}  // namespace

void ModuleParams::validate() const {
  if (!(i0 > 0)) throw ConfigError("module: i0 must be positive");
  if (!(iph_stc > 0)) throw ConfigError("module: iph_stc must be positive");
  if (!(n >= 1.0 && n <= 2.0)) throw ConfigError("module: ideality n must lie in [1, 2]");
  if (ns_cells <= 0) throw ConfigError("module: ns_cells must be positive");
  if (!(rs >= 0)) throw ConfigError("module: rs must be non-negative");
  if (!(rsh > 100.0 * rs)) throw ConfigError("module: rsh must exceed 100 * rs");
  if (!(bypass_drop >= 0)) throw ConfigError("module: bypass_drop must be non-negative");
}

double thermal_voltage(double t_cell_celsius) {
  return kBoltzmann * (t_cell_celsius + 273.15) / kCharge;
}

double module_residual(const ModuleParams& p, const EnvInput& env, double v, double i) {
  const double a = diode_scale(p, env);
  const double u = v + i * p.rs;
  return env.g * p.iph_stc - p.i0 * safe_expm1(u / a) - u / p.rsh - i;
}

double solve_module_current(const ModuleParams& p, const EnvInput& env, double v) {
  if (!std::isfinite(v)) throw DomainError("solve_module_current: voltage must be finite");
  const double a = diode_scale(p, env);
  auto f = [&](double i) { return module_residual(p, env, v, i); };
  auto df = [&](double i) {
    const double u = v + i * p.rs;
    return -p.i0 * p.rs / a * safe_exp(u / a) - p.rs / p.rsh - 1.0;
  };
  const double iph = env.g * p.iph_stc;
  double hi = iph + 1.0;
  for (double step = 1.0; f(hi) > 0; step *= 2) hi += step;
  double lo = -1.0;
  for (double step = 1.0; f(lo) < 0; step *= 2) lo -= step;
  const double guess = std::clamp(iph, lo, hi);
  return guarded_newton(f, df, lo, hi, guess, 1e-12, "single-diode current solve did not converge");
}

double module_voltage_at_current(const ModuleParams& p, const EnvInput& env, double i) {
  const double a = diode_scale(p, env);
  const double net = env.g * p.iph_stc - i;
  // h(u) with u = v + i*rs is strictly decreasing in u.
  auto h = [&](double u) { return net - p.i0 * safe_expm1(u / a) - u / p.rsh; };
  auto dh = [&](double u) { return -p.i0 / a * safe_exp(u / a) - 1.0 / p.rsh; };
  const double u_lo = i * p.rs;
  const double h_lo = h(u_lo);
  if (h_lo < 0) return -p.bypass_drop;
  if (h_lo == 0) return 0.0;
  double u_hi = u_lo + a;
  for (double step = a; h(u_hi) > 0; step *= 2) u_hi += step;
  // Start from the diode-dominated approximation; the guard keeps it bracketed.
  const double guess = net > 0 ? std::clamp(a * std::log1p(net / p.i0), u_lo, u_hi) : u_lo;
  const double u = guarded_newton(h, dh, u_lo, u_hi, guess, 1e-12, "module voltage solve did not converge");
  return u - i * p.rs;
}

double module_open_circuit_voltage(const ModuleParams& p, const EnvInput& env) {
  return std::max(0.0, module_voltage_at_current(p, env, 0.0));
}

PvString::PvString(ModuleParams params, std::vector<double> irradiance, double t_cell)
    : params_(params), g_(std::move(irradiance)), t_cell_(t_cell) {
  params_.validate();
  if (g_.empty()) throw ConfigError("string needs at least one module");
  for (double g : g_) {
    if (!(g >= 0.0 && g <= 1.0)) throw ConfigError("irradiance fraction outside [0, 1]");
  }
}

double PvString::voltage_at_current(double i) const {
  double v = 0.0;
  for (double g : g_) v += module_voltage_at_current(params_, {g, t_cell_}, i);
  return v;
}

double PvString::open_circuit_voltage() const {
  double v = 0.0;
  for (double g : g_) v += module_open_circuit_voltage(params_, {g, t_cell_});
  return v;
}

double PvString::max_short_circuit_current() const {
  double best = 0.0;
  for (double g : g_) best = std::max(best, solve_module_current(params_, {g, t_cell_}, 0.0));
  return best;
}

double PvString::current_at_voltage(double v) const {
  double lo = -1.0;
  for (double step = 1.0; voltage_at_current(lo) < v; step *= 2) lo -= step;
  double hi = max_short_circuit_current() + 1.0;
  if (voltage_at_current(hi) >= v) return hi;
  while (hi - lo > 1e-12) {
    const double mid = 0.5 * (lo + hi);
    if (voltage_at_current(mid) >= v) lo = mid; else hi = mid;
  }
  return 0.5 * (lo + hi);
}

OperatingPoint PvString::operating_point(double r_load, double tol_amps) const {
  if (!(r_load > 0)) return {};
  auto gap = [&](double i) { return voltage_at_current(i) - r_load * i; };
  double lo = 0.0;
  if (gap(lo) <= 0) return {};
  double hi = max_short_circuit_current() + 1.0;
  while (hi - lo > tol_amps) {
    const double mid = 0.5 * (lo + hi);
    if (gap(mid) > 0) lo = mid; else hi = mid;
  }
  const double i = 0.5 * (lo + hi);
  return {voltage_at_current(i), i};
}

PvCurve string_curve(const ModuleParams& params, std::span<const double> g, std::size_t n_points) {
  if (n_points < 100) throw ConfigError("string_curve: need at least 100 points");
  PvString string(params, std::vector<double>(g.begin(), g.end()));

  // Current-parameterised sweep; string voltage is single valued in current.
  constexpr std::size_t kCurrentSamples = 2000;
  const double i_max = string.max_short_circuit_current();
  std::vector<double> grid_i(kCurrentSamples), grid_v(kCurrentSamples);
  for (std::size_t k = 0; k < kCurrentSamples; ++k) {
    grid_i[k] = i_max * static_cast<double>(k) / (kCurrentSamples - 1);
    grid_v[k] = string.voltage_at_current(grid_i[k]);
  }

  double v_top = grid_v.front();
  if (v_top <= 1e-9) v_top = 1.0;  // dark string: sweep a nominal range

  PvCurve curve;
  curve.points.reserve(n_points);
  for (std::size_t j = 0; j < n_points; ++j) {
    const double v = v_top * static_cast<double>(j) / (n_points - 1);
    // grid_v is decreasing; bracket v between neighbouring current samples.
    auto it = std::lower_bound(grid_v.rbegin(), grid_v.rend(), v);
    double lo, hi;
    if (it == grid_v.rbegin() || it == grid_v.rend()) {
      curve.points.push_back({v, string.current_at_voltage(v)});
      continue;
    }
    const auto k_hi = static_cast<std::size_t>(grid_v.rend() - it) - 1;  // V(k_hi) >= v
    lo = grid_i[k_hi];
    hi = grid_i[k_hi + 1];
    while (hi - lo > 1e-12) {
      const double mid = 0.5 * (lo + hi);
      if (string.voltage_at_current(mid) >= v) lo = mid; else hi = mid;
    }
    curve.points.push_back({v, 0.5 * (lo + hi)});
  }
  curve.source = std::move(string);
  return curve;
}

OperatingPoint gmpp_oracle(const PvCurve& curve) {
  const auto& pts = curve.points;
  if (pts.empty()) return {};
  std::size_t k = 0;
  for (std::size_t j = 1; j < pts.size(); ++j) {
    if (pts[j].p() > pts[k].p()) k = j;
  }
  OperatingPoint best = pts[k];
  if (!curve.source) return best;
  const auto& s = *curve.source;
  const double lo = pts[k == 0 ? 0 : k - 1].v;
  const double hi = pts[std::min(k + 1, pts.size() - 1)].v;
  auto power = [&](double v) { return v * s.current_at_voltage(v); };
  const double v_star = golden_max(power, lo, hi, 1e-3);
  const OperatingPoint refined{v_star, s.current_at_voltage(v_star)};
  return refined.p() > best.p() ? refined : best;
}

std::vector<OperatingPoint> local_maxima(const PvCurve& curve, double min_prominence) {
  const auto& pts = curve.points;
  std::vector<OperatingPoint> peaks;
  if (pts.size() < 3) return peaks;
  for (std::size_t k = 1; k + 1 < pts.size(); ++k) {
    const double p = pts[k].p();
    if (!(p > pts[k - 1].p() && p >= pts[k + 1].p())) continue;
    // Lowest point passed before reaching higher ground (or the curve end).
    double left_min = p;
    for (std::size_t j = k; j-- > 0;) {
      if (pts[j].p() > p) break;
      left_min = std::min(left_min, pts[j].p());
    }
    double right_min = p;
    for (std::size_t j = k + 1; j < pts.size(); ++j) {
      if (pts[j].p() > p) break;
      right_min = std::min(right_min, pts[j].p());
    }
    if (p - std::max(left_min, right_min) >= min_prominence) peaks.push_back(pts[k]);
  }
  return peaks;
}

ModuleMpp module_characteristics(const ModuleParams& params, const EnvInput& env) {
  ModuleMpp m{};
  m.voc = module_open_circuit_voltage(params, env);
  m.isc = solve_module_current(params, env, 0.0);
  if (m.voc <= 0) return m;
  auto power = [&](double v) { return v * solve_module_current(params, env, v); };
  m.vmp = golden_max(power, 0.0, m.voc, 1e-9);
  m.imp = solve_module_current(params, env, m.vmp);
  return m;
}

ModuleParams calibrate(const CalibrationTargets& t, const CalibrationFixed& fixed) {
  if (!(t.vmp > 0 && t.vmp < t.voc)) throw CalibrationError("calibration requires 0 < vmp < voc");
  if (!(t.imp > 0 && t.imp < t.isc)) throw CalibrationError("calibration requires 0 < imp < isc");
  const double fill_factor = t.vmp * t.imp / (t.voc * t.isc);
  if (fill_factor > 0.85) throw CalibrationError("calibration targets imply fill factor > 0.85");

  ModuleParams p;
  p.n = fixed.n;
  p.ns_cells = fixed.ns_cells;
  p.rsh = fixed.rsh;
  p.bypass_drop = fixed.bypass_drop;
  p.t_stc = fixed.t_stc;
  const double a = p.n * p.ns_cells * thermal_voltage(p.t_stc);

  // Unknowns: photocurrent, log saturation current, series resistance.
  // Equations: current at (vmp, imp), zero power slope at vmp, zero current at voc.
  auto residuals = [&](const Eigen::Vector3d& x) {
    const double iph = x[0], i0 = std::exp(x[1]), rs = x[2];
    const double u = t.vmp + t.imp * rs;
    const double e = std::exp(std::min(u / a, kMaxExponent));
    const double cond = i0 / a * e + 1.0 / p.rsh;
    Eigen::Vector3d r;
    r[0] = iph - i0 * (e - 1.0) - u / p.rsh - t.imp;
    r[1] = t.imp - t.vmp * cond / (1.0 + rs * cond);
    r[2] = iph - i0 * std::expm1(std::min(t.voc / a, kMaxExponent)) - t.voc / p.rsh;
    return r;
  };

  Eigen::Vector3d x(t.isc, std::log(t.isc / std::expm1(t.voc / a)), 0.1 * (t.voc - t.vmp) / t.imp);
  Eigen::Vector3d r = residuals(x);
  for (int it = 0; it < 200 && r.lpNorm<Eigen::Infinity>() > 1e-13; ++it) {
    Eigen::Matrix3d jac;
    for (int c = 0; c < 3; ++c) {
      const double h = 1e-7 * std::max(1.0, std::abs(x[c]));
      Eigen::Vector3d xp = x, xm = x;
      xp[c] += h;
      xm[c] -= h;
      jac.col(c) = (residuals(xp) - residuals(xm)) / (2 * h);
    }
    const Eigen::Vector3d dx = jac.fullPivLu().solve(-r);
    double lambda = 1.0;
    Eigen::Vector3d trial = x + dx;
    Eigen::Vector3d rt = residuals(trial);
    while (lambda > 1e-6 && (!rt.allFinite() || trial[2] < 0 || rt.norm() >= r.norm())) {
      lambda *= 0.5;
      trial = x + lambda * dx;
      rt = residuals(trial);
    }
    if (lambda <= 1e-6) break;
    x = trial;
    r = rt;
  }
  if (!(r.lpNorm<Eigen::Infinity>() < 1e-9)) {
    throw CalibrationError("calibration did not converge for the given targets");
  }

  p.iph_stc = x[0];
  p.i0 = std::exp(x[1]);
  p.rs = x[2];
  try {
    p.validate();
  } catch (const ConfigError& e) {
    throw CalibrationError(std::string("calibrated parameters invalid: ") + e.what());
  }

  const auto m = module_characteristics(p, {1.0, p.t_stc});
  auto rel = [](double got, double want) { return std::abs(got - want) / want; };
  if (rel(m.vmp, t.vmp) > 0.005 || rel(m.imp, t.imp) > 0.005) {
    throw CalibrationError("calibrated maximum power point misses targets by more than 0.5%");
  }
  if (rel(m.voc, t.voc) > 0.01 || rel(m.isc, t.isc) > 0.01) {
    throw CalibrationError("calibrated Voc/Isc miss targets by more than 1%");
  }
  return p;
}

const ModuleParams& default_module() {
  static const ModuleParams params = calibrate(CalibrationTargets{});
  return params;
}

std::string curve_to_csv(const PvCurve& curve) {
  std::ostringstream out;
  out << "v_volts,i_amps,p_watts\n";
  out.precision(6);
  for (const auto& pt : curve.points) out << pt.v << ',' << pt.i << ',' << pt.p() << '\n';
  return out.str();
}

}  // namespace pvlab
