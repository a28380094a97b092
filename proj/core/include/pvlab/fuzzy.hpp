#pragma once

#include <array>
#include <string>
#include <vector>

#include <nlohmann/json_fwd.hpp>

namespace pvlab::fuzzy {

/// Triangular (a, b, c) or trapezoidal (a, b, c, d) membership function.
/// A triangle is stored as a trapezoid with c == b. Coincident breakpoints
/// give vertical flanks (shoulders at the edge of a universe).
class MembershipFunction {
 public:
  MembershipFunction() = default;
  static MembershipFunction triangle(double a, double b, double c);
  static MembershipFunction trapezoid(double a, double b, double c, double d);

  double operator()(double x) const;

  bool is_triangle() const { return triangle_; }
  const std::array<double, 4>& breakpoints() const { return pts_; }
  double support_lo() const { return pts_[0]; }
  double support_hi() const { return pts_[3]; }

 private:
  MembershipFunction(std::array<double, 4> pts, bool triangle);
  std::array<double, 4> pts_{};
  bool triangle_ = true;
};

inline double mf_eval(const MembershipFunction& mf, double x) { return mf(x); }

struct Term {
  std::string label;
  MembershipFunction mf;
};

struct LinguisticVariable {
  std::string name;
  double lo = -1.0;
  double hi = 1.0;
  std::vector<Term> terms;

  /// Throws ConfigError on bad universe, duplicate labels, out-of-universe
  /// terms, or uncovered stretches of the universe.
  void validate() const;
  std::size_t index_of(const std::string& label) const;
  double clamp(double x) const;
  double width() const { return hi - lo; }
};

/// `count` uniformly spaced triangles with 50% overlap; the outermost terms are
/// shoulders that end at the universe edges.
LinguisticVariable uniform_triangles(std::string name, double lo, double hi,
                                     const std::vector<std::string>& labels);

/// Two-input, one-output Mamdani rule table. rules[i][j] is the output term
/// index for input1 term i and input2 term j.
struct RuleBase {
  LinguisticVariable input1;
  LinguisticVariable input2;
  LinguisticVariable output;
  std::vector<std::vector<std::size_t>> rules;

  void validate() const;
};

struct InferenceOptions {
  std::size_t centroid_samples = 201;
};

/// Per-output-term clip levels after min-AND firing and max accumulation.
std::vector<double> clip_levels(const RuleBase& rb, double x1, double x2);

/// Mamdani inference: min AND, min implication, max aggregation, discrete
/// centroid with trapezoid weights (end samples count half). Returns the
/// output-universe midpoint when nothing fires.
double infer(const RuleBase& rb, double x1, double x2, const InferenceOptions& opts = {});

/// Standard 5x5 MPPT table over {NB, NS, ZE, PS, PB}: inputs are the scaled
/// power/voltage slope and its change, output is a duty increment in
/// [-out_half_width, out_half_width].
RuleBase default_mppt_rule_base(double out_half_width = 0.02);

void to_json(nlohmann::json& j, const MembershipFunction& mf);
void from_json(const nlohmann::json& j, MembershipFunction& mf);
void to_json(nlohmann::json& j, const LinguisticVariable& v);
void from_json(const nlohmann::json& j, LinguisticVariable& v);
void to_json(nlohmann::json& j, const RuleBase& rb);
void from_json(const nlohmann::json& j, RuleBase& rb);

}  // namespace pvlab::fuzzy
