#pragma once

#include <array>
#include <cstdint>
#include <memory>
#include <optional>
#include <random>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "pvlab/fuzzy.hpp"
#include "pvlab/shading.hpp"

namespace pvlab {

struct DutyLimits {
  double d_min = 0.05;
  double d_max = 0.95;

  double clamp(double d) const;
};

struct ControllerInput {
  double v_pv = 0.0;
  double i_pv = 0.0;
  double t = 0.0;
  ShadingZone zone_hint = ShadingZone::Zone3;

  double p() const { return v_pv * i_pv; }
};

// ---------------------------------------------------------------- P&O

struct PoParams {
  double step = 0.005;
  DutyLimits limits;
};

struct PoState {
  double d = 0.1;
  double p_prev = 0.0;
  int direction = +1;
  bool primed = false;
};

double po_step(PoState& state, const ControllerInput& in, const PoParams& params);

// ---------------------------------------------------------------- FLC

struct FlcParams {
  double e_scale = 1.0 / 100.0;  // dP/dV [W/V] -> E universe
  double ce_scale = 1.0 / 50.0;
  double out_half_width = 0.02;  // duty per step
  double probe_step = 0.005;     // first move, before any slope is known
  DutyLimits limits;
};

struct FlcState {
  double d = 0.1;
  double v_prev = 0.0;
  double p_prev = 0.0;
  double e_prev = 0.0;
  double last_delta = 0.0;
  bool primed = false;
};

/// Slope proxy E = dP/dV (0 when |dV| < 1e-6 V) and its change CE, unscaled.
std::pair<double, double> flc_error_terms(const FlcState& state, const ControllerInput& in);

double flc_step(FlcState& state, const ControllerInput& in, const FlcParams& params, const fuzzy::RuleBase& rules,
                double gain = 1.0);

struct DzFlcParams {
  FlcParams base;
  std::array<double, 4> zone_gain{0.5, 1.0, 1.5, 2.0};
  std::array<fuzzy::RuleBase, 4> zone_rules;  // filled with the default table when empty

  DzFlcParams();
};

double dzflc_step(FlcState& state, const ControllerInput& in, const DzFlcParams& params);

/// Duty increment DZ-FLC would emit for scaled inputs (E, CE) in a zone.
double dzflc_increment(const DzFlcParams& params, ShadingZone zone, double e_scaled, double ce_scaled);

// ---------------------------------------------------------------- PSO

/// Portable uniform [0, 1) stream over mt19937_64.
class UniformStream {
 public:
  explicit UniformStream(std::uint64_t seed = 42) : engine_(seed) {}
  double next() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

 private:
  std::mt19937_64 engine_;
};

struct PsoParams {
  int particles = 6;
  double w = 0.6;
  double c1 = 1.8;
  double c2 = 1.8;
  double v_max = 0.1;
  double converge_tol = 0.005;
  DutyLimits limits;
};

struct SwarmBest {
  double d = 0.0;
  double p = -1.0;
};

struct SwarmState {
  std::vector<double> positions;
  std::vector<double> velocities;
  std::vector<SwarmBest> pbest;
  SwarmBest gbest;
  std::size_t eval_index = 0;
  int iteration = 0;
  bool converged = false;
  bool awaiting_first = true;  // next measurement predates the first particle
  double w = 0.6, c1 = 1.8, c2 = 1.8;
  std::vector<double> gbest_history;  // gbest power after each pass
};

/// Particles evenly spaced over [lo, hi] with zero velocity.
SwarmState init_swarm(int particles, double lo, double hi);

/// Duty the swarm wants applied next.
double swarm_output(const SwarmState& s);

/// Record the settled power of the particle currently applied; after a full
/// pass update velocities and positions. Returns the next duty.
double pso_step(SwarmState& state, double measured_power, const PsoParams& params, UniformStream& rng);

struct DsaPsoParams {
  PsoParams base;
  std::array<double, 4> w{0.40, 0.50, 0.60, 0.70};
  std::array<double, 4> c{1.5, 1.5, 2.0, 2.0};
  std::array<std::pair<double, double>, 4> init_range{
      {{0.45, 0.75}, {0.40, 0.80}, {0.30, 0.90}, {0.10, 0.95}}};
  /// Re-seed a converged swarm when the estimated zone turns more severe.
  bool zone_reseed = true;
};

SwarmState dsa_pso_init(const DsaPsoParams& params, ShadingZone zone);
double dsa_pso_step(SwarmState& state, double measured_power, ShadingZone zone, const DsaPsoParams& params,
                    UniformStream& rng);

// ---------------------------------------------------------------- reinit / zone

struct ReinitParams {
  double threshold = 0.10;
  int periods = 3;
};

struct ReinitState {
  bool armed = false;
  double p_ref = 0.0;
  int count = 0;

  void arm(double p) { armed = true; p_ref = p; count = 0; }
  void disarm() { armed = false; count = 0; }
};

/// True once |p_now - p_ref| / max(p_ref, 1 W) exceeds the threshold for the
/// configured number of consecutive periods. Disarms itself on trigger.
bool reinit_detector(ReinitState& state, double p_now, const ReinitParams& params);

struct ZoneEstimatorParams {
  double rated_power = 1000.0;
  /// Optional unshaded-string power curve as (v, p) pairs with increasing v.
  /// When present the reference power is taken at the operating voltage
  /// instead of the flat rated power.
  std::vector<std::array<double, 2>> reference_curve;
  /// A sample counts as near a peak when |dP/dV| <= slope_tolerance * P / V.
  double slope_tolerance = 0.25;
  ShadingZone initial = ShadingZone::Zone3;
};

struct ZoneEstimatorState {
  ShadingZone zone = ShadingZone::Zone3;
  double v_prev = 0.0;
  double p_prev = 0.0;
  bool has_prev = false;
  double g_est = -1.0;
};

ShadingZone estimate_zone(ZoneEstimatorState& state, double v_pv, double i_pv, const ZoneEstimatorParams& params);

// ---------------------------------------------------------------- hybrid

enum class HybridPhase { FlcCoarse, PsoSearch, FlcFine };
std::string_view phase_name(HybridPhase p);

struct HybridParams {
  DzFlcParams flc;
  DsaPsoParams pso;
  double settle_step = 0.002;
  int settle_periods = 5;
  std::array<double, 4> window{0.10, 0.10, 0.20, 0.20};
  ReinitParams reinit;
};

struct HybridState {
  HybridPhase phase = HybridPhase::FlcCoarse;
  double window_lo = 0.05;
  double window_hi = 0.95;
  FlcState flc;
  SwarmState swarm;
  int quiet_periods = 0;
  ReinitState reinit;
};

double hybrid_step(HybridState& state, const ControllerInput& in, double measured_power, const HybridParams& params,
                   UniformStream& rng);

// ---------------------------------------------------------------- runtime interface

/// One controller instance per simulation run.
class Controller {
 public:
  virtual ~Controller() = default;
  virtual std::string_view id() const = 0;
  /// Called once with the initial duty before the first measurement.
  virtual void reset(double initial_duty) = 0;
  /// Consume the measurement taken at the duty last emitted; return the next duty.
  virtual double step(const ControllerInput& in) = 0;
  virtual std::string_view phase() const { return "-"; }
  virtual std::optional<double> gbest_power() const { return std::nullopt; }
};

/// Hyper-parameters for every controller, overridable from JSON keyed by id.
struct ControllerSet {
  PoParams po;
  FlcParams flc;
  DzFlcParams dzflc;
  PsoParams pso;
  DsaPsoParams dsapso;
  HybridParams hybrid;
  ReinitParams reinit;
};

const std::vector<std::string>& controller_ids();

/// Build a controller by id (po, flc, dzflc, pso, dsapso, hybrid). Throws
/// ConfigError for unknown ids.
std::unique_ptr<Controller> make_controller(std::string_view id, const ControllerSet& set, std::uint64_t seed);

/// Emits a fixed duty; test and inspection aid.
std::unique_ptr<Controller> make_constant_controller(double duty);

void to_json(nlohmann::json& j, const ControllerSet& s);
/// Overlays keys present in j onto s (absent keys keep their defaults).
void apply_json(const nlohmann::json& j, ControllerSet& s);

}  // namespace pvlab
