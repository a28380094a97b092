#include <gtest/gtest.h>

#include <random>

#include <nlohmann/json.hpp>

#include "centroid_oracle.hpp"
#include "pvlab/errors.hpp"
#include "pvlab/fuzzy.hpp"

using namespace pvlab;
using namespace pvlab::fuzzy;

namespace {

// Random variable whose terms cover the universe: sorted knots, each term a
// triangle or trapezoid spanning its neighbours.
LinguisticVariable random_variable(std::mt19937_64& rng, const std::string& name, double lo, double hi) {
  std::uniform_int_distribution<int> count(2, 7);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  const int n = count(rng);
  std::vector<double> centre(n);
  for (int k = 0; k < n; ++k) centre[k] = lo + (hi - lo) * (k + 0.8 * (u(rng) - 0.5) * (k > 0 && k + 1 < n)) / (n - 1);
  std::sort(centre.begin(), centre.end());
  centre.front() = lo;
  centre.back() = hi;
  LinguisticVariable v{name, lo, hi, {}};
  for (int k = 0; k < n; ++k) {
    const double a = k == 0 ? lo : centre[k - 1];
    const double c = k + 1 == n ? hi : centre[k + 1];
    const std::string label = "T" + std::to_string(k);
    if (u(rng) < 0.3) {
      const double b1 = centre[k] - 0.3 * (centre[k] - a) * u(rng);
      const double b2 = centre[k] + 0.3 * (c - centre[k]) * u(rng);
      v.terms.push_back({label, MembershipFunction::trapezoid(a, b1, b2, c)});
    } else {
      v.terms.push_back({label, MembershipFunction::triangle(a, centre[k], c)});
    }
  }
  return v;
}

RuleBase random_rule_base(std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(-2.0, 2.0);
  const double lo = u(rng), hi = lo + 0.1 + std::abs(u(rng));
  RuleBase rb;
  rb.input1 = random_variable(rng, "a", -1, 1);
  rb.input2 = random_variable(rng, "b", -1, 1);
  rb.output = random_variable(rng, "y", lo, hi);
  std::uniform_int_distribution<std::size_t> pick(0, rb.output.terms.size() - 1);
  rb.rules.assign(rb.input1.terms.size(), std::vector<std::size_t>(rb.input2.terms.size()));
  for (auto& row : rb.rules) {
    for (auto& r : row) r = pick(rng);
  }
  rb.validate();
  return rb;
}

}  // namespace

TEST(Membership, TriangleExamples) {
  const auto mf = MembershipFunction::triangle(-1, 0, 1);
  EXPECT_DOUBLE_EQ(mf(0.0), 1.0);
  EXPECT_DOUBLE_EQ(mf(0.5), 0.5);
  EXPECT_DOUBLE_EQ(mf(2.0), 0.0);
  EXPECT_DOUBLE_EQ(mf_eval(mf, -0.25), 0.75);
}

TEST(Membership, TrapezoidAndShoulders) {
  const auto tz = MembershipFunction::trapezoid(0, 1, 2, 4);
  EXPECT_DOUBLE_EQ(tz(1.5), 1.0);
  EXPECT_DOUBLE_EQ(tz(3.0), 0.5);
  const auto shoulder = MembershipFunction::triangle(-1, -1, 0);
  EXPECT_DOUBLE_EQ(shoulder(-1.0), 1.0);
  EXPECT_DOUBLE_EQ(shoulder(-0.5), 0.5);
  EXPECT_THROW(MembershipFunction::triangle(1, 0, 2), ConfigError);
}

TEST(Variable, Validation) {
  auto v = uniform_triangles("x", -1, 1, {"N", "Z", "P"});
  EXPECT_NO_THROW(v.validate());
  auto gap = v;
  gap.terms[1].mf = MembershipFunction::triangle(-0.2, 0.0, 0.2);
  gap.terms[0].mf = MembershipFunction::triangle(-1, -1, -0.5);
  EXPECT_THROW(gap.validate(), ConfigError);
  auto dup = v;
  dup.terms[1].label = "N";
  EXPECT_THROW(dup.validate(), ConfigError);
  auto outside = v;
  outside.terms[2].mf = MembershipFunction::triangle(0, 1, 2);
  EXPECT_THROW(outside.validate(), ConfigError);
  EXPECT_THROW(v.index_of("Q"), ConfigError);
}

TEST(Infer, ZeroAtCentre) {
  const auto rb = default_mppt_rule_base();
  EXPECT_NEAR(infer(rb, 0.0, 0.0), 0.0, 1e-6);
}

TEST(Infer, SingleSymmetricConsequent) {
  RuleBase rb;
  rb.input1 = uniform_triangles("a", -1, 1, {"N", "Z", "P"});
  rb.input2 = uniform_triangles("b", -1, 1, {"N", "Z", "P"});
  rb.output = {"y", 0.0, 0.08, {{"L", MembershipFunction::triangle(0.0, 0.0, 0.04)},
                                {"C", MembershipFunction::triangle(0.02, 0.04, 0.06)},
                                {"H", MembershipFunction::triangle(0.04, 0.08, 0.08)}}};
  rb.rules = {{0, 0, 0}, {0, 1, 0}, {0, 0, 0}};
  rb.validate();
  EXPECT_NEAR(infer(rb, 0.0, 0.0), 0.04, 1e-3);
}

TEST(Infer, NothingFiresGivesMidpoint) {
  RuleBase rb;
  rb.input1 = {"a", -1, 1, {{"Z", MembershipFunction::triangle(-0.2, 0.0, 0.2)}}};
  rb.input2 = rb.input1;
  rb.output = uniform_triangles("y", 1.0, 3.0, {"L", "H"});
  rb.rules = {{1}};
  EXPECT_DOUBLE_EQ(infer(rb, 0.9, 0.0), 2.0);
  EXPECT_GT(infer(rb, 0.0, 0.0), 2.0);
}

TEST(Infer, OutputStaysInUniverse) {
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> u(-3.0, 3.0);
  const auto rb = default_mppt_rule_base();
  for (int k = 0; k < 5000; ++k) {
    const double y = infer(rb, u(rng), u(rng));
    ASSERT_GE(y, rb.output.lo);
    ASSERT_LE(y, rb.output.hi);
  }
}

TEST(Infer, DefaultTableAntisymmetric) {
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  const auto rb = default_mppt_rule_base();
  for (int k = 0; k < 2000; ++k) {
    const double a = u(rng), b = u(rng);
    ASSERT_NEAR(infer(rb, a, b), -infer(rb, -a, -b), 1e-6);
  }
}

TEST(Infer, SignConvention) {
  const auto rb = default_mppt_rule_base();
  EXPECT_LT(infer(rb, 0.8, 0.0), 0.0);
  EXPECT_GT(infer(rb, -0.8, 0.0), 0.0);
}

TEST(Infer, MatchesAnalyticCentroid) {
  std::mt19937_64 rng(42);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  double worst = 0;
  for (int k = 0; k < 1000; ++k) {
    const auto rb = random_rule_base(rng);
    const double a = u(rng), b = u(rng);
    const double err = std::abs(infer(rb, a, b) - oracle::analytic_centroid(rb, a, b)) / rb.output.width();
    worst = std::max(worst, err);
  }
  EXPECT_LT(worst, 1e-3);
}

TEST(Infer, AnalyticOracleExactCases) {
  // One full-strength symmetric triangle: centroid is the apex.
  const auto rb = default_mppt_rule_base();
  EXPECT_NEAR(oracle::analytic_centroid(rb, 0.0, 0.0), 0.0, 1e-12);
  EXPECT_NEAR(oracle::analytic_centroid(rb, -0.5, -1.0), 0.01, 1e-12);
}

TEST(Infer, SamplingRefinementStable) {
  std::mt19937_64 rng(9);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  for (int k = 0; k < 500; ++k) {
    const auto rb = random_rule_base(rng);
    const double a = u(rng), b = u(rng);
    const double coarse = infer(rb, a, b, {201});
    const double fine = infer(rb, a, b, {2001});
    ASSERT_LT(std::abs(coarse - fine), 1e-3 * rb.output.width());
  }
}

TEST(RuleBase, ValidationErrors) {
  auto rb = default_mppt_rule_base();
  rb.rules[0][0] = 9;
  EXPECT_THROW(rb.validate(), ConfigError);
  rb = default_mppt_rule_base();
  rb.rules.pop_back();
  EXPECT_THROW(rb.validate(), ConfigError);
}

TEST(RuleBase, JsonRoundTrip) {
  const auto rb = default_mppt_rule_base(0.03);
  const nlohmann::json j = rb;
  const auto back = nlohmann::json::parse(j.dump()).get<RuleBase>();
  EXPECT_EQ(back.rules, rb.rules);
  EXPECT_EQ(back.output.terms[4].mf.breakpoints(), rb.output.terms[4].mf.breakpoints());
  EXPECT_DOUBLE_EQ(infer(back, 0.3, -0.2), infer(rb, 0.3, -0.2));
  auto bad = j;
  bad["rules"][0][0] = "XX";
  EXPECT_THROW(bad.get<RuleBase>(), ConfigError);
}
