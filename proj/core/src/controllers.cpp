#include "pvlab/controllers.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include <nlohmann/json.hpp>

#include "pvlab/errors.hpp"

namespace pvlab {

double DutyLimits::clamp(double d) const { return std::clamp(d, d_min, d_max); }

// ---------------------------------------------------------------- P&O

double po_step(PoState& s, const ControllerInput& in, const PoParams& params) {
  const double p = in.p();
  if (s.primed) {
    if (!(p - s.p_prev > 0)) s.direction = -s.direction;
  }
  s.primed = true;
  s.p_prev = p;
  s.d = params.limits.clamp(s.d + s.direction * params.step);
  return s.d;
}

// ---------------------------------------------------------------- FLC

std::pair<double, double> flc_error_terms(const FlcState& s, const ControllerInput& in) {
  const double dv = in.v_pv - s.v_prev;
  const double dp = in.p() - s.p_prev;
  const double e = std::abs(dv) < 1e-6 ? 0.0 : dp / dv;
  return {e, e - s.e_prev};
}

double flc_step(FlcState& s, const ControllerInput& in, const FlcParams& params, const fuzzy::RuleBase& rules,
                double gain) {
  double delta = 0.0;
  double e = 0.0;
  if (!s.primed) {
    delta = params.probe_step;
  } else {
    const auto [e_raw, ce_raw] = flc_error_terms(s, in);
    e = e_raw;
    delta = gain * fuzzy::infer(rules, e_raw * params.e_scale, ce_raw * params.ce_scale);
  }
  s.primed = true;
  s.v_prev = in.v_pv;
  s.p_prev = in.p();
  s.e_prev = e;
  const double next = params.limits.clamp(s.d + delta);
  s.last_delta = next - s.d;
  s.d = next;
  return s.d;
}

DzFlcParams::DzFlcParams() {
  for (auto& rb : zone_rules) rb = fuzzy::default_mppt_rule_base(base.out_half_width);
}

double dzflc_step(FlcState& s, const ControllerInput& in, const DzFlcParams& params) {
  const int z = zone_index(in.zone_hint);
  return flc_step(s, in, params.base, params.zone_rules[z], params.zone_gain[z]);
}

double dzflc_increment(const DzFlcParams& params, ShadingZone zone, double e_scaled, double ce_scaled) {
  const int z = zone_index(zone);
  return params.zone_gain[z] * fuzzy::infer(params.zone_rules[z], e_scaled, ce_scaled);
}

// ---------------------------------------------------------------- PSO

SwarmState init_swarm(int particles, double lo, double hi) {
  if (particles < 1) throw ConfigError("swarm needs at least one particle");
  if (lo > hi) std::swap(lo, hi);
  SwarmState s;
  const auto n = static_cast<std::size_t>(particles);
  s.positions.resize(n);
  for (std::size_t k = 0; k < n; ++k) {
    s.positions[k] = n == 1 ? 0.5 * (lo + hi) : std::min(hi, lo + (hi - lo) * static_cast<double>(k) / static_cast<double>(n - 1));
  }
  s.velocities.assign(n, 0.0);
  s.pbest.assign(n, SwarmBest{0.0, -std::numeric_limits<double>::infinity()});
  s.gbest = {s.positions.front(), -std::numeric_limits<double>::infinity()};
  return s;
}

double swarm_output(const SwarmState& s) { return s.converged ? s.gbest.d : s.positions[s.eval_index]; }

namespace {

bool swarm_collapsed(const SwarmState& s, double tol) {
  return std::all_of(s.positions.begin(), s.positions.end(),
                     [&](double x) { return std::abs(x - s.gbest.d) < tol; });
}

void move_swarm(SwarmState& s, const PsoParams& params, UniformStream& rng) {
  for (std::size_t k = 0; k < s.positions.size(); ++k) {
    const double r1 = rng.next();
    const double r2 = rng.next();
    double v = s.w * s.velocities[k] + s.c1 * r1 * (s.pbest[k].d - s.positions[k]) +
               s.c2 * r2 * (s.gbest.d - s.positions[k]);
    v = std::clamp(v, -params.v_max, params.v_max);
    s.velocities[k] = v;
    s.positions[k] = params.limits.clamp(s.positions[k] + v);
  }
}

}  // namespace

double pso_step(SwarmState& s, double measured_power, const PsoParams& params, UniformStream& rng) {
  if (s.converged) return s.gbest.d;
  if (s.awaiting_first) {
    s.awaiting_first = false;
    // Degenerate swarm: every particle parked on the same duty with no motion.
    const bool parked =
        std::all_of(s.velocities.begin(), s.velocities.end(), [](double v) { return v == 0.0; }) &&
        std::all_of(s.positions.begin(), s.positions.end(), [&](double x) { return x == s.positions.front(); });
    if (parked) {
      s.gbest.d = s.positions.front();
      s.converged = true;
    }
    return swarm_output(s);
  }
  const std::size_t k = s.eval_index;
  const double x = s.positions[k];
  if (measured_power > s.pbest[k].p) s.pbest[k] = {x, measured_power};
  if (measured_power > s.gbest.p) s.gbest = {x, measured_power};
  if (++s.eval_index == s.positions.size()) {
    s.eval_index = 0;
    ++s.iteration;
    s.gbest_history.push_back(s.gbest.p);
    move_swarm(s, params, rng);
    if (swarm_collapsed(s, params.converge_tol)) s.converged = true;
  }
  return swarm_output(s);
}

SwarmState dsa_pso_init(const DsaPsoParams& params, ShadingZone zone) {
  const int z = zone_index(zone);
  const auto [lo, hi] = params.init_range[z];
  SwarmState s = init_swarm(params.base.particles, params.base.limits.clamp(lo), params.base.limits.clamp(hi));
  s.w = params.w[z];
  s.c1 = s.c2 = params.c[z];
  return s;
}

double dsa_pso_step(SwarmState& s, double measured_power, ShadingZone zone, const DsaPsoParams& params,
                    UniformStream& rng) {
  const int z = zone_index(zone);
  s.w = params.w[z];
  s.c1 = s.c2 = params.c[z];
  return pso_step(s, measured_power, params.base, rng);
}

// ---------------------------------------------------------------- reinit / zone

bool reinit_detector(ReinitState& s, double p_now, const ReinitParams& params) {
  if (!s.armed) return false;
  const double deviation = std::abs(p_now - s.p_ref) / std::max(s.p_ref, 1.0);
  if (deviation > params.threshold) {
    if (++s.count >= params.periods) {
      s.disarm();
      return true;
    }
  } else {
    s.count = 0;
    s.p_ref = p_now;
  }
  return false;
}

namespace {

double reference_power(const ZoneEstimatorParams& params, double v) {
  const auto& c = params.reference_curve;
  if (c.empty()) return params.rated_power;
  if (v <= c.front()[0]) return c.front()[1];
  if (v >= c.back()[0]) return c.back()[1];
  const auto hi = std::lower_bound(c.begin(), c.end(), v, [](const auto& pt, double x) { return pt[0] < x; });
  const auto lo = hi - 1;
  const double f = (v - (*lo)[0]) / ((*hi)[0] - (*lo)[0]);
  return (*lo)[1] + f * ((*hi)[1] - (*lo)[1]);
}

}  // namespace

ShadingZone estimate_zone(ZoneEstimatorState& s, double v_pv, double i_pv, const ZoneEstimatorParams& params) {
  const double p = v_pv * i_pv;
  if (s.has_prev && std::abs(v_pv - s.v_prev) <= 1e-6) return s.zone;
  if (s.has_prev && v_pv > 0 && p > 0) {
    const double slope = (p - s.p_prev) / (v_pv - s.v_prev);
    const double p_ref = reference_power(params, v_pv);
    if (std::abs(slope) <= params.slope_tolerance * p / v_pv && p_ref > 0) {
      s.g_est = std::clamp(p / p_ref, 0.0, 1.0);
      s.zone = classify_mean_irradiance(s.g_est);
    }
  }
  s.has_prev = true;
  s.v_prev = v_pv;
  s.p_prev = p;
  return s.zone;
}

// ---------------------------------------------------------------- hybrid

std::string_view phase_name(HybridPhase p) {
  switch (p) {
    case HybridPhase::FlcCoarse: return "FlcCoarse";
    case HybridPhase::PsoSearch: return "PsoSearch";
    case HybridPhase::FlcFine: return "FlcFine";
  }
  return "?";
}

double hybrid_step(HybridState& s, const ControllerInput& in, double measured_power, const HybridParams& params,
                   UniformStream& rng) {
  if (s.phase == HybridPhase::FlcFine && reinit_detector(s.reinit, measured_power, params.reinit)) {
    const double d = s.flc.d;
    s = HybridState{};
    s.flc.d = d;
  }

  switch (s.phase) {
    case HybridPhase::FlcCoarse: {
      const double measured_duty = s.flc.d;
      const double next = dzflc_step(s.flc, in, params.flc);
      s.quiet_periods = std::abs(s.flc.last_delta) < params.settle_step ? s.quiet_periods + 1 : 0;
      if (s.quiet_periods < params.settle_periods) return next;

      const int z = zone_index(in.zone_hint);
      const auto& lim = params.pso.base.limits;
      s.window_lo = lim.clamp(measured_duty - params.window[z]);
      s.window_hi = lim.clamp(measured_duty + params.window[z]);
      s.swarm = init_swarm(params.pso.base.particles, s.window_lo, s.window_hi);
      s.swarm.w = params.pso.w[z];
      s.swarm.c1 = s.swarm.c2 = params.pso.c[z];
      // The settled coarse point is the first known candidate.
      s.swarm.gbest = {measured_duty, measured_power};
      s.swarm.awaiting_first = false;
      s.phase = HybridPhase::PsoSearch;
      return swarm_output(s.swarm);
    }
    case HybridPhase::PsoSearch: {
      DsaPsoParams windowed = params.pso;
      windowed.base.limits = {s.window_lo, s.window_hi};
      const double next = dsa_pso_step(s.swarm, measured_power, in.zone_hint, windowed, rng);
      if (!s.swarm.converged) return next;
      s.phase = HybridPhase::FlcFine;
      s.flc = FlcState{};
      s.flc.d = s.swarm.gbest.d;
      s.reinit.arm(s.swarm.gbest.p);
      return s.flc.d;
    }
    case HybridPhase::FlcFine: {
      ControllerInput fine = in;
      fine.zone_hint = ShadingZone::Zone0;
      return dzflc_step(s.flc, fine, params.flc);
    }
  }
  return s.flc.d;
}

// ---------------------------------------------------------------- runtime wrappers

namespace {

class PoController final : public Controller {
 public:
  explicit PoController(PoParams p) : params_(p) {}
  std::string_view id() const override { return "po"; }
  void reset(double d) override { state_ = PoState{}; state_.d = d; }
  double step(const ControllerInput& in) override { return po_step(state_, in, params_); }

 private:
  PoParams params_;
  PoState state_;
};

class FlcController final : public Controller {
 public:
  explicit FlcController(FlcParams p) : params_(p), rules_(fuzzy::default_mppt_rule_base(p.out_half_width)) {}
  std::string_view id() const override { return "flc"; }
  void reset(double d) override { state_ = FlcState{}; state_.d = d; }
  double step(const ControllerInput& in) override { return flc_step(state_, in, params_, rules_); }

 private:
  FlcParams params_;
  fuzzy::RuleBase rules_;
  FlcState state_;
};

class DzFlcController final : public Controller {
 public:
  explicit DzFlcController(DzFlcParams p) : params_(std::move(p)) {}
  std::string_view id() const override { return "dzflc"; }
  void reset(double d) override { state_ = FlcState{}; state_.d = d; }
  double step(const ControllerInput& in) override { return dzflc_step(state_, in, params_); }

 private:
  DzFlcParams params_;
  FlcState state_;
};

// Shared driver for the two swarm controllers: lazily seeds the swarm from the
// first measurement, holds gbest after convergence, re-seeds on a power jump.
class SwarmController : public Controller {
 public:
  SwarmController(std::uint64_t seed, ReinitParams reinit) : rng_(seed), reinit_params_(reinit) {}

  void reset(double d) override {
    started_ = false;
    duty_ = d;
    reinit_ = ReinitState{};
  }

  double step(const ControllerInput& in) override {
    const double p = in.p();
    if (started_ && swarm_.converged &&
        (reinit_detector(reinit_, p, reinit_params_) || reseed_for(in.zone_hint))) {
      started_ = false;
    }
    if (!started_) {
      swarm_ = seed_swarm(in.zone_hint);
      swarm_.awaiting_first = true;
      started_ = true;
    }
    const bool was_converged = swarm_.converged;
    duty_ = advance(p, in.zone_hint);
    if (swarm_.converged && !was_converged) reinit_.arm(swarm_.gbest.p);
    return duty_;
  }

  std::string_view phase() const override { return started_ && swarm_.converged ? "Hold" : "PsoSearch"; }
  std::optional<double> gbest_power() const override {
    if (!started_ || swarm_.gbest_history.empty()) return std::nullopt;
    return swarm_.gbest.p;
  }

 protected:
  virtual SwarmState seed_swarm(ShadingZone zone) = 0;
  virtual double advance(double p, ShadingZone zone) = 0;
  virtual bool reseed_for(ShadingZone) const { return false; }

  SwarmState swarm_;
  UniformStream rng_;

 private:
  ReinitParams reinit_params_;
  ReinitState reinit_;
  bool started_ = false;
  double duty_ = 0.1;
};

class PsoController final : public SwarmController {
 public:
  PsoController(PsoParams p, ReinitParams r, std::uint64_t seed) : SwarmController(seed, r), params_(p) {}
  std::string_view id() const override { return "pso"; }

 protected:
  SwarmState seed_swarm(ShadingZone) override {
    SwarmState s = init_swarm(params_.particles, params_.limits.d_min, params_.limits.d_max);
    s.w = params_.w;
    s.c1 = params_.c1;
    s.c2 = params_.c2;
    return s;
  }
  double advance(double p, ShadingZone) override { return pso_step(swarm_, p, params_, rng_); }

 private:
  PsoParams params_;
};

class DsaPsoController final : public SwarmController {
 public:
  DsaPsoController(DsaPsoParams p, ReinitParams r, std::uint64_t seed) : SwarmController(seed, r), params_(p) {}
  std::string_view id() const override { return "dsapso"; }

 protected:
  SwarmState seed_swarm(ShadingZone zone) override {
    seeded_ = zone;
    return dsa_pso_init(params_, zone);
  }
  double advance(double p, ShadingZone zone) override { return dsa_pso_step(swarm_, p, zone, params_, rng_); }
  // A more severe zone than the one seeded for calls for the wider range.
  bool reseed_for(ShadingZone zone) const override {
    return params_.zone_reseed && zone_index(zone) > zone_index(seeded_);
  }

 private:
  DsaPsoParams params_;
  ShadingZone seeded_ = ShadingZone::Zone0;
};

class HybridController final : public Controller {
 public:
  HybridController(HybridParams p, std::uint64_t seed) : params_(std::move(p)), rng_(seed) {}
  std::string_view id() const override { return "hybrid"; }
  void reset(double d) override {
    state_ = HybridState{};
    state_.flc.d = d;
  }
  double step(const ControllerInput& in) override { return hybrid_step(state_, in, in.p(), params_, rng_); }
  std::string_view phase() const override { return phase_name(state_.phase); }
  std::optional<double> gbest_power() const override {
    if (state_.phase == HybridPhase::FlcCoarse || state_.swarm.gbest_history.empty()) return std::nullopt;
    return state_.swarm.gbest.p;
  }

 private:
  HybridParams params_;
  HybridState state_;
  UniformStream rng_;
};

class ConstantController final : public Controller {
 public:
  explicit ConstantController(double d) : duty_(d) {}
  std::string_view id() const override { return "constant"; }
  void reset(double) override {}
  double step(const ControllerInput&) override { return duty_; }

 private:
  double duty_;
};

}  // namespace

const std::vector<std::string>& controller_ids() {
  static const std::vector<std::string> ids{"po", "flc", "dzflc", "pso", "dsapso", "hybrid"};
  return ids;
}

std::unique_ptr<Controller> make_controller(std::string_view id, const ControllerSet& set, std::uint64_t seed) {
  if (id == "po") return std::make_unique<PoController>(set.po);
  if (id == "flc") return std::make_unique<FlcController>(set.flc);
  if (id == "dzflc") return std::make_unique<DzFlcController>(set.dzflc);
  if (id == "pso") return std::make_unique<PsoController>(set.pso, set.reinit, seed);
  if (id == "dsapso") return std::make_unique<DsaPsoController>(set.dsapso, set.reinit, seed);
  if (id == "hybrid") return std::make_unique<HybridController>(set.hybrid, seed);
  throw ConfigError("unknown controller id '" + std::string(id) + "'");
}

std::unique_ptr<Controller> make_constant_controller(double duty) {
  return std::make_unique<ConstantController>(duty);
}

// ---------------------------------------------------------------- JSON

namespace {

using nlohmann::json;

json limits_json(const DutyLimits& l) { return {{"d_min", l.d_min}, {"d_max", l.d_max}}; }

void read_limits(const json& j, DutyLimits& l) {
  if (!j.contains("limits")) return;
  const auto& lj = j.at("limits");
  l.d_min = lj.value("d_min", l.d_min);
  l.d_max = lj.value("d_max", l.d_max);
  if (!(l.d_min >= 0 && l.d_min < l.d_max && l.d_max < 1)) throw ConfigError("duty limits need 0 <= d_min < d_max < 1");
}

json flc_json(const FlcParams& p) {
  return {{"e_scale", p.e_scale}, {"ce_scale", p.ce_scale}, {"out_half_width", p.out_half_width},
          {"probe_step", p.probe_step}, {"limits", limits_json(p.limits)}};
}

void read_flc(const json& j, FlcParams& p) {
  p.e_scale = j.value("e_scale", p.e_scale);
  p.ce_scale = j.value("ce_scale", p.ce_scale);
  p.out_half_width = j.value("out_half_width", p.out_half_width);
  p.probe_step = j.value("probe_step", p.probe_step);
  read_limits(j, p.limits);
}

json pso_json(const PsoParams& p) {
  return {{"particles", p.particles}, {"w", p.w}, {"c1", p.c1}, {"c2", p.c2}, {"v_max", p.v_max},
          {"converge_tol", p.converge_tol}, {"limits", limits_json(p.limits)}};
}

void read_pso(const json& j, PsoParams& p) {
  p.particles = j.value("particles", p.particles);
  p.w = j.value("w", p.w);
  p.c1 = j.value("c1", p.c1);
  p.c2 = j.value("c2", p.c2);
  p.v_max = j.value("v_max", p.v_max);
  p.converge_tol = j.value("converge_tol", p.converge_tol);
  read_limits(j, p.limits);
  if (p.particles < 1) throw ConfigError("pso: particles must be >= 1");
}

json dzflc_json(const DzFlcParams& p) {
  json j = flc_json(p.base);
  j["zone_gain"] = p.zone_gain;
  j["zone_rules"] = json::array();
  for (const auto& rb : p.zone_rules) j["zone_rules"].push_back(rb);
  return j;
}

void read_dzflc(const json& j, DzFlcParams& p) {
  const double old_width = p.base.out_half_width;
  read_flc(j, p.base);
  if (j.contains("zone_gain")) p.zone_gain = j.at("zone_gain").get<std::array<double, 4>>();
  if (j.contains("zone_rules")) {
    const auto& rules = j.at("zone_rules");
    if (rules.size() != 4) throw ConfigError("dzflc: zone_rules needs four rule bases");
    for (std::size_t z = 0; z < 4; ++z) p.zone_rules[z] = rules[z].get<fuzzy::RuleBase>();
  } else if (p.base.out_half_width != old_width) {
    for (auto& rb : p.zone_rules) rb = fuzzy::default_mppt_rule_base(p.base.out_half_width);
  }
}

json dsapso_json(const DsaPsoParams& p) {
  json j = pso_json(p.base);
  j["zone_w"] = p.w;
  j["zone_c"] = p.c;
  j["zone_init_range"] = json::array();
  for (const auto& [lo, hi] : p.init_range) j["zone_init_range"].push_back({lo, hi});
  j["zone_reseed"] = p.zone_reseed;
  return j;
}

void read_dsapso(const json& j, DsaPsoParams& p) {
  read_pso(j, p.base);
  p.zone_reseed = j.value("zone_reseed", p.zone_reseed);
  if (j.contains("zone_w")) p.w = j.at("zone_w").get<std::array<double, 4>>();
  if (j.contains("zone_c")) p.c = j.at("zone_c").get<std::array<double, 4>>();
  if (j.contains("zone_init_range")) {
    const auto& r = j.at("zone_init_range");
    if (r.size() != 4) throw ConfigError("dsapso: zone_init_range needs four [lo, hi] pairs");
    for (std::size_t z = 0; z < 4; ++z) {
      const auto pair = r[z].get<std::vector<double>>();
      if (pair.size() != 2 || !(pair[0] <= pair[1])) throw ConfigError("dsapso: bad zone_init_range entry");
      p.init_range[z] = {pair[0], pair[1]};
    }
  }
}

json reinit_json(const ReinitParams& r) { return {{"threshold", r.threshold}, {"periods", r.periods}}; }

void read_reinit(const json& j, ReinitParams& r) {
  r.threshold = j.value("threshold", r.threshold);
  r.periods = j.value("periods", r.periods);
}

}  // namespace

void to_json(nlohmann::json& j, const ControllerSet& s) {
  j = json::object();
  j["po"] = {{"step", s.po.step}, {"limits", limits_json(s.po.limits)}};
  j["flc"] = flc_json(s.flc);
  j["dzflc"] = dzflc_json(s.dzflc);
  j["pso"] = pso_json(s.pso);
  j["dsapso"] = dsapso_json(s.dsapso);
  j["hybrid"] = {{"flc", dzflc_json(s.hybrid.flc)},
                 {"pso", dsapso_json(s.hybrid.pso)},
                 {"settle_step", s.hybrid.settle_step},
                 {"settle_periods", s.hybrid.settle_periods},
                 {"window", s.hybrid.window},
                 {"reinit", reinit_json(s.hybrid.reinit)}};
  j["reinit"] = reinit_json(s.reinit);
}

void apply_json(const nlohmann::json& j, ControllerSet& s) {
  try {
    if (j.contains("po")) {
      s.po.step = j["po"].value("step", s.po.step);
      read_limits(j["po"], s.po.limits);
    }
    if (j.contains("flc")) read_flc(j["flc"], s.flc);
    if (j.contains("dzflc")) read_dzflc(j["dzflc"], s.dzflc);
    if (j.contains("pso")) read_pso(j["pso"], s.pso);
    if (j.contains("dsapso")) read_dsapso(j["dsapso"], s.dsapso);
    if (j.contains("reinit")) read_reinit(j["reinit"], s.reinit);
    if (j.contains("hybrid")) {
      const auto& h = j["hybrid"];
      if (h.contains("flc")) read_dzflc(h["flc"], s.hybrid.flc);
      if (h.contains("pso")) read_dsapso(h["pso"], s.hybrid.pso);
      s.hybrid.settle_step = h.value("settle_step", s.hybrid.settle_step);
      s.hybrid.settle_periods = h.value("settle_periods", s.hybrid.settle_periods);
      if (h.contains("window")) s.hybrid.window = h["window"].get<std::array<double, 4>>();
      if (h.contains("reinit")) read_reinit(h["reinit"], s.hybrid.reinit);
    }
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("malformed controller config: ") + e.what());
  }
}

}  // namespace pvlab
