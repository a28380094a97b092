#include <gtest/gtest.h>

#include <random>
#include <regex>

#include <nlohmann/json.hpp>

#include "pvlab/controllers.hpp"
#include "pvlab/errors.hpp"
#include "pvlab/simulation.hpp"

using namespace pvlab;

namespace {

ControllerInput at(double v, double i, ShadingZone z = ShadingZone::Zone0) { return {v, i, 0.0, z}; }

SimConfig config_for(const std::string& scenario, const std::string& controller) {
  auto c = SimConfig::defaults();
  c.scenario = *find_builtin(scenario);
  c.controller = controller;
  return c;
}

}  // namespace

// ---------------------------------------------------------------- P&O

TEST(Po, KeepsDirectionOnGain) {
  PoState s{0.5, 100.0, +1, true};
  EXPECT_DOUBLE_EQ(po_step(s, at(10.0, 10.5), PoParams{}), 0.505);
  EXPECT_EQ(s.direction, +1);
}

TEST(Po, ReversesOnLoss) {
  PoState s{0.5, 100.0, +1, true};
  EXPECT_DOUBLE_EQ(po_step(s, at(10.0, 9.5), PoParams{}), 0.495);
  EXPECT_EQ(s.direction, -1);
}

TEST(Po, RespectsLimits) {
  PoState s{0.95, 0.0, +1, false};
  EXPECT_DOUBLE_EQ(po_step(s, at(1, 1), PoParams{}), 0.95);
}

// ---------------------------------------------------------------- FLC

TEST(Flc, ErrorTerms) {
  FlcState s;
  s.v_prev = 100;
  s.p_prev = 500;
  s.e_prev = 1.0;
  const auto [e, ce] = flc_error_terms(s, at(102, 5));
  EXPECT_DOUBLE_EQ(e, 5.0);
  EXPECT_DOUBLE_EQ(ce, 4.0);
  const auto [e0, ce0] = flc_error_terms(s, at(100.0 + 1e-7, 5));
  EXPECT_DOUBLE_EQ(e0, 0.0);
  EXPECT_DOUBLE_EQ(ce0, -1.0);
}

TEST(Flc, NoMoveAtPeak) {
  const auto rules = fuzzy::default_mppt_rule_base();
  FlcState s;
  s.primed = true;
  s.d = 0.4;
  s.v_prev = 100;
  s.p_prev = 500;
  EXPECT_NEAR(flc_step(s, at(100.0, 5.0), FlcParams{}, rules), 0.4, 1e-6);
}

TEST(Flc, PositiveSlopeLowersDuty) {
  const auto rules = fuzzy::default_mppt_rule_base();
  FlcState s;
  s.primed = true;
  s.d = 0.4;
  s.v_prev = 100;
  s.p_prev = 500;
  s.e_prev = 80.0;
  EXPECT_LT(flc_step(s, at(101.0, 580.0 / 101.0), FlcParams{}, rules), 0.4);
}

TEST(Flc, SignConventionClosedLoop) {
  // Left of the NoShading peak dP/dV > 0: the PV voltage must rise, so the duty falls.
  auto c = config_for("NoShading", "flc");
  c.initial_duty = 0.90;
  c.duration = 0.01;
  const auto tr = run(c);
  ASSERT_GE(tr.records.size(), 3u);
  EXPECT_LT(tr.records[1].v_pv, 131.73);
  EXPECT_LT(tr.records[2].duty, tr.records[1].duty);
}

TEST(DzFlc, ZeroInputZeroMove) {
  EXPECT_NEAR(dzflc_increment(DzFlcParams{}, ShadingZone::Zone0, 0.0, 0.0), 0.0, 1e-9);
}

TEST(DzFlc, GainMonotoneInZone) {
  const DzFlcParams p;
  for (int a = -10; a <= 10; ++a) {
    for (int b = -10; b <= 10; ++b) {
      double prev = 0.0;
      for (int z = 0; z < 4; ++z) {
        const double mag = std::abs(dzflc_increment(p, ShadingZone(z), a / 10.0, b / 10.0));
        ASSERT_GE(mag + 1e-15, prev);
        prev = mag;
      }
    }
  }
}

// ---------------------------------------------------------------- PSO

TEST(Pso, ParkedSwarmConvergesImmediately) {
  SwarmState s = init_swarm(4, 0.42, 0.42);
  UniformStream rng;
  EXPECT_DOUBLE_EQ(pso_step(s, 0.0, PsoParams{}, rng), 0.42);
  EXPECT_TRUE(s.converged);
  EXPECT_DOUBLE_EQ(pso_step(s, 10.0, PsoParams{}, rng), 0.42);
}

TEST(Pso, PureInertiaAdvancesByVelocity) {
  PsoParams p;
  p.c1 = p.c2 = 0.0;
  p.w = 1.0;
  p.converge_tol = 0.0;
  SwarmState s = init_swarm(3, 0.2, 0.6);
  s.w = 1.0;
  s.c1 = s.c2 = 0.0;
  s.velocities = {0.01, -0.02, 0.03};
  UniformStream rng;
  pso_step(s, 0.0, p, rng);  // measurement predating the first particle
  for (int k = 0; k < 3; ++k) pso_step(s, 1.0 + k, p, rng);
  EXPECT_NEAR(s.positions[0], 0.21, 1e-12);
  EXPECT_NEAR(s.positions[1], 0.38, 1e-12);
  EXPECT_NEAR(s.positions[2], 0.63, 1e-12);
}

TEST(Pso, SingleStillParticleNeverMoves) {
  PsoParams p;
  p.particles = 1;
  p.c1 = p.c2 = 0.0;
  SwarmState s = init_swarm(1, 0.3, 0.7);
  s.c1 = s.c2 = 0.0;
  UniformStream rng;
  for (int k = 0; k < 50; ++k) ASSERT_DOUBLE_EQ(pso_step(s, 100.0 * k, p, rng), 0.5);
}

TEST(Pso, UniformStreamDeterministic) {
  UniformStream a(42), b(42), c(43);
  for (int k = 0; k < 100; ++k) {
    const double x = a.next();
    ASSERT_EQ(x, b.next());
    ASSERT_GE(x, 0.0);
    ASSERT_LT(x, 1.0);
  }
  EXPECT_NE(a.next(), c.next());
}

TEST(Pso, ReachesCase2Gmpp) {
  const auto c = config_for("Case2", "pso");
  const auto oracle = gmpp_oracle(string_curve(c.module, c.scenario.steps[0].g));
  const auto m = metrics(run(c), oracle);
  EXPECT_GE(m.p_final, 0.98 * oracle.p());
}

TEST(DsaPso, Schedule) {
  const DsaPsoParams p;
  const auto s0 = dsa_pso_init(p, ShadingZone::Zone0);
  const auto s3 = dsa_pso_init(p, ShadingZone::Zone3);
  EXPECT_DOUBLE_EQ(s0.w, 0.40);
  EXPECT_DOUBLE_EQ(s3.w, 0.70);
  EXPECT_GT(s3.w, s0.w);
  EXPECT_DOUBLE_EQ(s0.c1, 1.5);
  EXPECT_DOUBLE_EQ(s3.c2, 2.0);
  EXPECT_DOUBLE_EQ(s0.positions.front(), 0.45);
  EXPECT_DOUBLE_EQ(s0.positions.back(), 0.75);
  EXPECT_DOUBLE_EQ(s3.positions.front(), 0.10);
  EXPECT_DOUBLE_EQ(s3.positions.back(), 0.95);
  for (int z = 1; z < 4; ++z) EXPECT_GE(p.w[z], p.w[z - 1]);
}

TEST(DsaPso, StepUsesZoneCoefficients) {
  const DsaPsoParams p;
  SwarmState s = dsa_pso_init(p, ShadingZone::Zone3);
  UniformStream rng;
  dsa_pso_step(s, 0.0, ShadingZone::Zone1, p, rng);
  EXPECT_DOUBLE_EQ(s.w, 0.50);
  EXPECT_DOUBLE_EQ(s.c1, 1.5);
}

// ---------------------------------------------------------------- reinit / zone

TEST(Reinit, SteadyPowerNeverTriggers) {
  ReinitState s;
  s.arm(500);
  for (int k = 0; k < 1000; ++k) ASSERT_FALSE(reinit_detector(s, 500.0, ReinitParams{}));
}

TEST(Reinit, RippleBelowThreshold) {
  ReinitState s;
  s.arm(500);
  for (int k = 0; k < 1000; ++k) ASSERT_FALSE(reinit_detector(s, 500.0 * (1 + 0.05 * std::sin(0.3 * k)), ReinitParams{}));
}

TEST(Reinit, DropTriggersAfterPeriods) {
  ReinitState s;
  s.arm(1000);
  EXPECT_FALSE(reinit_detector(s, 180, ReinitParams{}));
  EXPECT_FALSE(reinit_detector(s, 180, ReinitParams{}));
  EXPECT_TRUE(reinit_detector(s, 180, ReinitParams{}));
  EXPECT_FALSE(s.armed);
  EXPECT_FALSE(reinit_detector(s, 10, ReinitParams{}));
}

TEST(Reinit, TransientResetsCount) {
  ReinitState s;
  s.arm(1000);
  EXPECT_FALSE(reinit_detector(s, 500, ReinitParams{}));
  EXPECT_FALSE(reinit_detector(s, 1000, ReinitParams{}));
  EXPECT_FALSE(reinit_detector(s, 500, ReinitParams{}));
  EXPECT_FALSE(reinit_detector(s, 500, ReinitParams{}));
  EXPECT_TRUE(reinit_detector(s, 500, ReinitParams{}));
}

TEST(Reinit, IrradianceStepWithinFourPeriods) {
  auto c = SimConfig::defaults();
  c.scenario = {"step", {{0.0, std::vector<double>(5, 1.0)}, {0.5, std::vector<double>(5, 0.2)}}};
  c.controller = "dsapso";
  const auto tr = run(c);
  const auto k0 = static_cast<std::size_t>(0.5 / c.control_period);
  bool restarted = false;
  for (std::size_t k = k0; k < k0 + 4 && k < tr.records.size(); ++k) {
    if (tr.records[k].phase == "PsoSearch") restarted = true;
  }
  EXPECT_EQ(tr.records[k0 - 1].phase, "Hold");
  EXPECT_TRUE(restarted);
}

TEST(ZoneEstimator, HealthyPeak) {
  ZoneEstimatorParams p;
  p.rated_power = 999.83;
  ZoneEstimatorState s;
  estimate_zone(s, 131.0, 999.0 / 131.0, p);
  EXPECT_EQ(estimate_zone(s, 131.73, 999.83 / 131.73, p), ShadingZone::Zone0);
  EXPECT_NEAR(s.g_est, 1.0, 1e-3);
}

TEST(ZoneEstimator, FullShadePeak) {
  ZoneEstimatorParams p;
  p.rated_power = 1000.0;
  ZoneEstimatorState s;
  s.zone = ShadingZone::Zone0;
  estimate_zone(s, 123.0, 182.40 / 123.0, p);
  EXPECT_EQ(estimate_zone(s, 123.41, 182.44 / 123.41, p), ShadingZone::Zone3);
  EXPECT_NEAR(s.g_est, 0.182, 0.001);
}

TEST(ZoneEstimator, HoldsDuringTransient) {
  ZoneEstimatorParams p;
  ZoneEstimatorState s;
  s.zone = ShadingZone::Zone1;
  estimate_zone(s, 100.0, 5.0, p);
  EXPECT_EQ(estimate_zone(s, 101.0, 300.0 / 101.0, p), ShadingZone::Zone1);
  EXPECT_EQ(estimate_zone(s, 101.0, 100.0 / 101.0, p), ShadingZone::Zone1);
}

TEST(ZoneEstimator, ReferenceCurve) {
  ZoneEstimatorParams p;
  p.reference_curve = {{0.0, 0.0}, {100.0, 800.0}, {150.0, 0.0}};
  ZoneEstimatorState s;
  estimate_zone(s, 49.0, 399.0 / 49.0, p);
  estimate_zone(s, 50.0, 400.0 / 50.0, p);
  EXPECT_NEAR(s.g_est, 1.0, 1e-9);
  EXPECT_EQ(s.zone, ShadingZone::Zone0);
}

// ---------------------------------------------------------------- runtime interface

TEST(Controllers, UnknownIdThrows) {
  EXPECT_THROW(make_controller("nope", ControllerSet{}, 42), ConfigError);
  for (const auto& id : controller_ids()) EXPECT_EQ(make_controller(id, ControllerSet{}, 42)->id(), id);
}

TEST(Controllers, DutyStaysInLimits) {
  std::mt19937_64 rng(17);
  std::uniform_real_distribution<double> uv(-50.0, 250.0), ui(-2.0, 12.0);
  std::uniform_int_distribution<int> uz(0, 3);
  const ControllerSet set;
  for (const auto& id : controller_ids()) {
    auto c = make_controller(id, set, 42);
    c->reset(0.1);
    for (int k = 0; k < 20000; ++k) {
      const double d = c->step({uv(rng), ui(rng), k * 1e-3, ShadingZone(uz(rng))});
      ASSERT_GE(d, 0.05) << id;
      ASSERT_LE(d, 0.95) << id;
    }
  }
}

TEST(Controllers, DeterministicDutySequence) {
  for (const auto& id : controller_ids()) {
    const auto c = config_for("Case4", id);
    const auto a = run(c), b = run(c);
    ASSERT_EQ(a.records.size(), b.records.size());
    for (std::size_t k = 0; k < a.records.size(); ++k) ASSERT_EQ(a.records[k].duty, b.records[k].duty) << id;
  }
}

TEST(Controllers, GbestNonDecreasing) {
  // An empty gbest marks a fresh swarm; within one swarm it never drops.
  class Recorder final : public Controller {
   public:
    explicit Recorder(std::unique_ptr<Controller> inner) : inner_(std::move(inner)) {}
    std::string_view id() const override { return inner_->id(); }
    void reset(double d) override { inner_->reset(d); }
    double step(const ControllerInput& in) override {
      const double d = inner_->step(in);
      seen.push_back(inner_->gbest_power());
      return d;
    }
    std::string_view phase() const override { return inner_->phase(); }
    std::vector<std::optional<double>> seen;

   private:
    std::unique_ptr<Controller> inner_;
  };
  for (const auto& sc : builtin_scenarios()) {
    for (const char* id : {"pso", "dsapso", "hybrid"}) {
      const auto c = config_for(sc.name, id);
      Recorder rec(make_controller(id, c.controllers, c.seed));
      run_with(c, rec);
      std::size_t known = 0;
      for (std::size_t k = 1; k < rec.seen.size(); ++k) {
        if (!rec.seen[k]) continue;
        ++known;
        if (rec.seen[k - 1]) ASSERT_GE(*rec.seen[k], *rec.seen[k - 1]) << sc.name << " " << id << " k=" << k;
      }
      EXPECT_GT(known, 0u) << sc.name << " " << id;
    }
  }
}

TEST(Controllers, PsoGbestHistoryMonotone) {
  SwarmState s = init_swarm(6, 0.05, 0.95);
  UniformStream rng(42);
  std::mt19937_64 noise(1);
  std::uniform_real_distribution<double> u(0.0, 1000.0);
  for (int k = 0; k < 600 && !s.converged; ++k) pso_step(s, u(noise), PsoParams{}, rng);
  ASSERT_GT(s.gbest_history.size(), 2u);
  for (std::size_t k = 1; k < s.gbest_history.size(); ++k) ASSERT_GE(s.gbest_history[k], s.gbest_history[k - 1]);
}

TEST(Hybrid, PhaseSequence) {
  const std::regex episode("^(CSF?)+$");
  for (const auto& sc : builtin_scenarios()) {
    const auto tr = run(config_for(sc.name, "hybrid"));
    std::string seq;
    for (const auto& r : tr.records) {
      const char c = r.phase == "FlcCoarse" ? 'C' : r.phase == "PsoSearch" ? 'S' : 'F';
      if (seq.empty() || seq.back() != c) seq += c;
    }
    EXPECT_TRUE(std::regex_match(seq, episode)) << sc.name;
    EXPECT_NE(seq.find('F'), std::string::npos) << sc.name;
  }
}

TEST(Hybrid, NoShadingFromHalfDuty) {
  auto c = config_for("NoShading", "hybrid");
  c.initial_duty = 0.5;
  const auto tr = run(c);
  EXPECT_EQ(tr.records.back().phase, "FlcFine");
  EXPECT_NEAR(metrics(tr, gmpp_oracle(string_curve(c.module, c.scenario.steps[0].g))).p_final, 1000.11,
              0.02 * 1000.11);
}

TEST(Hybrid, Case3TableValue) {
  const auto c = config_for("Case3", "hybrid");
  const auto m = metrics(run(c), gmpp_oracle(string_curve(c.module, c.scenario.steps[0].g)));
  EXPECT_NEAR(m.p_final, 697.28, 0.02 * 697.28);
}

TEST(DsaPso, Case3TableValue) {
  const auto c = config_for("Case3", "dsapso");
  const auto m = metrics(run(c), gmpp_oracle(string_curve(c.module, c.scenario.steps[0].g)));
  EXPECT_TRUE(m.reached_gmpp);
  EXPECT_NEAR(m.p_final, 697.28, 0.02 * 697.28);
}

TEST(DsaPso, NotWorseThanPsoPerCase) {
  for (const char* name : {"Case1", "Case2", "Case3", "Case4"}) {
    const auto dsa = config_for(name, "dsapso");
    const auto oracle = gmpp_oracle(string_curve(dsa.module, dsa.scenario.steps[0].g));
    const auto md = metrics(run(dsa), oracle);
    const auto mp = metrics(run(config_for(name, "pso")), oracle);
    EXPECT_LE(md.settle_or(dsa.duration), mp.settle_or(dsa.duration)) << name;
    EXPECT_GE(md.tracking_efficiency, mp.tracking_efficiency) << name;
  }
}

TEST(Po, SingleHillTerminalDuty) {
  auto c = config_for("NoShading", "po");
  c.duration = 2.0;
  const auto tr = run(c);
  const auto oracle = gmpp_oracle(string_curve(c.module, c.scenario.steps[0].g));
  const double d_star = duty_for_resistance(oracle.v / oracle.i, c.converter);
  EXPECT_NEAR(tr.records.back().duty, d_star, 2 * c.controllers.po.step);
}

TEST(Flc, FasterThanPoOnNoShading) {
  const auto po = config_for("NoShading", "po");
  const auto oracle = gmpp_oracle(string_curve(po.module, po.scenario.steps[0].g));
  const auto mp = metrics(run(po), oracle);
  const auto mf = metrics(run(config_for("NoShading", "flc")), oracle);
  EXPECT_LT(mf.settle_or(po.duration), mp.settle_or(po.duration));
  EXPECT_TRUE(mf.reached_gmpp);
}

TEST(DzFlc, FasterThanFlcOnCases) {
  double dz = 0, flc = 0;
  for (const char* name : {"Case1", "Case2", "Case3", "Case4"}) {
    const auto c = config_for(name, "dzflc");
    const auto oracle = gmpp_oracle(string_curve(c.module, c.scenario.steps[0].g));
    dz += metrics(run(c), oracle).settle_or(c.duration);
    flc += metrics(run(config_for(name, "flc")), oracle).settle_or(c.duration);
  }
  EXPECT_LT(dz, flc);
}

TEST(ControllerJson, OverlayKeepsDefaults) {
  ControllerSet s;
  apply_json(nlohmann::json::parse(R"({"po":{"step":0.01},"dsapso":{"zone_w":[0.1,0.2,0.3,0.4],"zone_reseed":false}})"), s);
  EXPECT_DOUBLE_EQ(s.po.step, 0.01);
  EXPECT_DOUBLE_EQ(s.po.limits.d_max, 0.95);
  EXPECT_DOUBLE_EQ(s.dsapso.w[3], 0.4);
  EXPECT_FALSE(s.dsapso.zone_reseed);
  EXPECT_DOUBLE_EQ(s.pso.w, 0.6);

  nlohmann::json j;
  to_json(j, s);
  ControllerSet back;
  apply_json(j, back);
  nlohmann::json j2;
  to_json(j2, back);
  EXPECT_EQ(j, j2);
}
