#include <gtest/gtest.h>

#include <cmath>

#include "pvlab/converter.hpp"
#include "pvlab/errors.hpp"

using namespace pvlab;

TEST(Gain, Examples) {
  EXPECT_DOUBLE_EQ(steady_gain(0.0), 1.0);
  EXPECT_DOUBLE_EQ(steady_gain(0.5), 2.0);
  EXPECT_NEAR(steady_gain(0.7), 10.0 / 3.0, 1e-12);
  EXPECT_NEAR(30.0 * steady_gain(0.7), 100.0, 1e-9);
  EXPECT_THROW(steady_gain(1.0), DomainError);
  EXPECT_THROW(steady_gain(-0.1), DomainError);
}

TEST(InputResistance, Examples) {
  const BoostParams p;
  EXPECT_DOUBLE_EQ(input_resistance(0.0, p), 10.0);
  EXPECT_NEAR(input_resistance(0.7, p), 0.9, 1e-12);
  double prev = input_resistance(0.05, p);
  for (int k = 1; k <= 90; ++k) {
    const double r = input_resistance(0.05 + 0.01 * k, p);
    ASSERT_LT(r, prev);
    prev = r;
  }
}

TEST(Params, Validate) {
  BoostParams p;
  EXPECT_NO_THROW(p.validate());
  p.capacitance = 0;
  EXPECT_THROW(p.validate(), ConfigError);
}

TEST(Averaged, EquilibriumIsFixedPoint) {
  const BoostParams p;
  for (double d : {0.2, 0.5, 0.7}) {
    const double vin = 30.0;
    const BoostState eq{vin / ((1 - d) * (1 - d) * p.load), vin / (1 - d)};
    const auto next = step_averaged(eq, vin, d, 20e-6, p);
    EXPECT_NEAR(next.iL, eq.iL, 1e-9);
    EXPECT_NEAR(next.vC, eq.vC, 1e-9);
  }
}

TEST(Averaged, PassThrough) {
  const auto tr = simulate_boost(BoostParams{}, 30.0, 0.0, 1.0);
  EXPECT_NEAR(tr.back().x.vC, 30.0, 0.01);
}

TEST(Averaged, SteadyGainSweep) {
  const BoostParams p;
  for (int k = 1; k <= 9; ++k) {
    const double d = 0.1 * k;
    const auto tr = simulate_boost(p, 30.0, d, 3.0);
    EXPECT_NEAR(tr.back().x.vC, 30.0 * steady_gain(d), 0.005 * 30.0 * steady_gain(d)) << "d=" << d;
  }
}

TEST(Averaged, HalvingStepConverges) {
  const BoostParams p;
  const auto a = simulate_boost(p, 30.0, 0.7, 0.05, 20e-6);
  const auto b = simulate_boost(p, 30.0, 0.7, 0.05, 10e-6);
  EXPECT_NEAR(a.back().x.vC, b.back().x.vC, 1e-3 * std::abs(b.back().x.vC));
  EXPECT_NEAR(a.back().x.iL, b.back().x.iL, 1e-3 * std::abs(b.back().x.iL));
}

TEST(Averaged, SteadyStateEnergyBalance) {
  const BoostParams p;
  const auto tr = simulate_boost(p, 30.0, 0.6, 1.0);
  const auto& x = tr.back().x;
  EXPECT_NEAR(30.0 * x.iL, x.vC * x.vC / p.load, 0.01 * x.vC * x.vC / p.load);
}

TEST(Averaged, InductorCurrentNeverNegative) {
  const BoostParams p;
  auto x = step_averaged({0.0, 200.0}, 30.0, 0.1, 20e-6, p);
  EXPECT_GE(x.iL, 0.0);
}

TEST(Ripple, Formula) {
  EXPECT_NEAR(ripple_current(30.0, 0.7, BoostParams{}), 30.0 * 0.7 / (4.7e-3 * 25e3), 1e-12);
}

TEST(StepResponse, FrozenFigures) {
  const auto r = measure_step_response(simulate_boost(BoostParams{}, 30.0, 0.7, 0.3));
  EXPECT_NEAR(r.final_value, 100.0, 0.01);
  EXPECT_NEAR(r.rise_time, 12.4e-3, 0.1e-3);
  EXPECT_NEAR(r.rise_time_10_90, 8.4e-3, 0.1e-3);
  EXPECT_NEAR(r.overshoot, 0.1425, 0.001);
  EXPECT_NEAR(r.peak_time, 18.3e-3, 0.1e-3);
}

TEST(StepResponse, AnalyticSecondOrder) {
  // Linearised averaged model: wn = (1-d)/sqrt(LC), zeta = sqrt(L/C) / (2 R (1-d)).
  const BoostParams p;
  const double off = 0.3;
  const double wn = off / std::sqrt(p.inductance * p.capacitance);
  const double zeta = std::sqrt(p.inductance / p.capacitance) / (2 * p.load * off);
  const double wd = wn * std::sqrt(1 - zeta * zeta);
  const double t_rise = (M_PI - std::acos(zeta)) / wd;
  const double overshoot = std::exp(-zeta * M_PI / std::sqrt(1 - zeta * zeta));
  const auto r = measure_step_response(simulate_boost(p, 30.0, 0.7, 0.3));
  EXPECT_NEAR(r.rise_time, t_rise, 0.03 * t_rise);
  EXPECT_NEAR(r.overshoot, overshoot, 0.03);
}

TEST(StepResponse, TenToNinetyRiseTimeInBand) {
  const auto r = measure_step_response(simulate_boost(BoostParams{}, 30.0, 0.7, 0.3));
  EXPECT_NEAR(r.rise_time_10_90, 13e-3, 0.3 * 13e-3);
  EXPECT_NEAR(r.overshoot, 0.129, 0.04);
}

TEST(BoostCsv, Header) {
  const auto csv = boost_trace_to_csv(simulate_boost(BoostParams{}, 30.0, 0.5, 0.001));
  EXPECT_EQ(csv.substr(0, csv.find('\n')), "t_s,iL_amps,vC_volts");
}
