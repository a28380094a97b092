#include "pvlab/fuzzy.hpp"

#include <algorithm>
#include <cmath>
#include <set>

#include <nlohmann/json.hpp>

#include "pvlab/errors.hpp"

namespace pvlab::fuzzy {

MembershipFunction::MembershipFunction(std::array<double, 4> pts, bool triangle)
    : pts_(pts), triangle_(triangle) {
  for (double p : pts_) {
    if (!std::isfinite(p)) throw ConfigError("membership breakpoints must be finite");
  }
  if (!(pts_[0] <= pts_[1] && pts_[1] <= pts_[2] && pts_[2] <= pts_[3])) {
    throw ConfigError("membership breakpoints must be non-decreasing");
  }
}

MembershipFunction MembershipFunction::triangle(double a, double b, double c) {
  return MembershipFunction({a, b, b, c}, true);
}

MembershipFunction MembershipFunction::trapezoid(double a, double b, double c, double d) {
  return MembershipFunction({a, b, c, d}, false);
}

double MembershipFunction::operator()(double x) const {
  const auto& [a, b, c, d] = pts_;
  if (x < a || x > d) return 0.0;
  if (x < b) return (x - a) / (b - a);
  if (x <= c) return 1.0;
  return (d - x) / (d - c);
}

void LinguisticVariable::validate() const {
  if (!(lo < hi)) throw ConfigError("variable '" + name + "': universe needs lo < hi");
  if (terms.empty()) throw ConfigError("variable '" + name + "' has no terms");
  std::set<std::string> labels;
  for (const auto& t : terms) {
    if (!labels.insert(t.label).second) {
      throw ConfigError("variable '" + name + "': duplicate label " + t.label);
    }
    if (t.mf.support_lo() < lo || t.mf.support_hi() > hi) {
      throw ConfigError("variable '" + name + "': term " + t.label + " leaves the universe");
    }
  }
  constexpr int kProbe = 2001;
  for (int k = 0; k < kProbe; ++k) {
    const double x = std::min(hi, lo + (hi - lo) * k / (kProbe - 1));
    const bool covered = std::any_of(terms.begin(), terms.end(), [&](const Term& t) { return t.mf(x) > 0; });
    if (!covered) throw ConfigError("variable '" + name + "': universe not covered near " + std::to_string(x));
  }
}

std::size_t LinguisticVariable::index_of(const std::string& label) const {
  for (std::size_t k = 0; k < terms.size(); ++k) {
    if (terms[k].label == label) return k;
  }
  throw ConfigError("variable '" + name + "' has no term " + label);
}

double LinguisticVariable::clamp(double x) const { return std::clamp(x, lo, hi); }

LinguisticVariable uniform_triangles(std::string name, double lo, double hi,
                                     const std::vector<std::string>& labels) {
  if (labels.size() < 2) throw ConfigError("uniform_triangles needs at least two labels");
  LinguisticVariable v{std::move(name), lo, hi, {}};
  const double step = (hi - lo) / static_cast<double>(labels.size() - 1);
  for (std::size_t k = 0; k < labels.size(); ++k) {
    const double centre = lo + step * static_cast<double>(k);
    const double a = k == 0 ? lo : centre - step;
    const double c = k + 1 == labels.size() ? hi : centre + step;
    v.terms.push_back({labels[k], MembershipFunction::triangle(a, centre, c)});
  }
  return v;
}

void RuleBase::validate() const {
  input1.validate();
  input2.validate();
  output.validate();
  if (rules.size() != input1.terms.size()) throw ConfigError("rule table rows must match input1 terms");
  for (const auto& row : rules) {
    if (row.size() != input2.terms.size()) throw ConfigError("rule table columns must match input2 terms");
    for (std::size_t out : row) {
      if (out >= output.terms.size()) throw ConfigError("rule consequent out of range");
    }
  }
}

std::vector<double> clip_levels(const RuleBase& rb, double x1, double x2) {
  x1 = rb.input1.clamp(x1);
  x2 = rb.input2.clamp(x2);
  std::vector<double> mu1(rb.input1.terms.size()), mu2(rb.input2.terms.size());
  for (std::size_t i = 0; i < mu1.size(); ++i) mu1[i] = rb.input1.terms[i].mf(x1);
  for (std::size_t j = 0; j < mu2.size(); ++j) mu2[j] = rb.input2.terms[j].mf(x2);
  std::vector<double> level(rb.output.terms.size(), 0.0);
  for (std::size_t i = 0; i < mu1.size(); ++i) {
    for (std::size_t j = 0; j < mu2.size(); ++j) {
      const std::size_t out = rb.rules[i][j];
      level[out] = std::max(level[out], std::min(mu1[i], mu2[j]));
    }
  }
  return level;
}

double infer(const RuleBase& rb, double x1, double x2, const InferenceOptions& opts) {
  const auto level = clip_levels(rb, x1, x2);
  const auto& out = rb.output;
  const std::size_t n = std::max<std::size_t>(opts.centroid_samples, 2);
  double num = 0.0, den = 0.0;
  for (std::size_t k = 0; k < n; ++k) {
    const double y = std::min(out.hi, out.lo + out.width() * static_cast<double>(k) / static_cast<double>(n - 1));
    double mu = 0.0;
    for (std::size_t t = 0; t < level.size(); ++t) {
      if (level[t] > 0) mu = std::max(mu, std::min(level[t], out.terms[t].mf(y)));
    }
    const double w = (k == 0 || k + 1 == n) ? 0.5 : 1.0;
    num += w * y * mu;
    den += w * mu;
  }
  if (den <= 0) return 0.5 * (out.lo + out.hi);
  return num / den;
}

RuleBase default_mppt_rule_base(double out_half_width) {
  const std::vector<std::string> labels{"NB", "NS", "ZE", "PS", "PB"};
  RuleBase rb;
  rb.input1 = uniform_triangles("E", -1.0, 1.0, labels);
  rb.input2 = uniform_triangles("CE", -1.0, 1.0, labels);
  rb.output = uniform_triangles("dD", -out_half_width, out_half_width, labels);
  // Rows: E (dP/dV). Negative slope means the operating voltage is above the
  // peak, so the duty rises. Columns: CE; a slope already heading back toward
  // zero softens the step. The table is antisymmetric under (E, CE) -> -(E, CE).
  rb.rules = {
      {4, 4, 4, 3, 3},
      {3, 3, 3, 2, 2},
      {2, 2, 2, 2, 2},
      {2, 2, 1, 1, 1},
      {1, 1, 0, 0, 0},
  };
  rb.validate();
  return rb;
}

void to_json(nlohmann::json& j, const MembershipFunction& mf) {
  const auto& p = mf.breakpoints();
  if (mf.is_triangle()) {
    j = {{"type", "triangle"}, {"points", {p[0], p[1], p[3]}}};
  } else {
    j = {{"type", "trapezoid"}, {"points", {p[0], p[1], p[2], p[3]}}};
  }
}

void from_json(const nlohmann::json& j, MembershipFunction& mf) {
  const auto type = j.at("type").get<std::string>();
  const auto pts = j.at("points").get<std::vector<double>>();
  if (type == "triangle" && pts.size() == 3) {
    mf = MembershipFunction::triangle(pts[0], pts[1], pts[2]);
  } else if (type == "trapezoid" && pts.size() == 4) {
    mf = MembershipFunction::trapezoid(pts[0], pts[1], pts[2], pts[3]);
  } else {
    throw ConfigError("membership function must be triangle[3] or trapezoid[4]");
  }
}

void to_json(nlohmann::json& j, const LinguisticVariable& v) {
  j = {{"name", v.name}, {"universe", {v.lo, v.hi}}, {"terms", nlohmann::json::array()}};
  for (const auto& t : v.terms) j["terms"].push_back({{"label", t.label}, {"mf", t.mf}});
}

void from_json(const nlohmann::json& j, LinguisticVariable& v) {
  v.name = j.at("name").get<std::string>();
  const auto u = j.at("universe").get<std::vector<double>>();
  if (u.size() != 2) throw ConfigError("universe must be [lo, hi]");
  v.lo = u[0];
  v.hi = u[1];
  v.terms.clear();
  for (const auto& t : j.at("terms")) {
    v.terms.push_back({t.at("label").get<std::string>(), t.at("mf").get<MembershipFunction>()});
  }
}

void to_json(nlohmann::json& j, const RuleBase& rb) {
  j = {{"input1", rb.input1}, {"input2", rb.input2}, {"output", rb.output}, {"rules", nlohmann::json::array()}};
  for (const auto& row : rb.rules) {
    nlohmann::json r = nlohmann::json::array();
    for (std::size_t out : row) r.push_back(rb.output.terms.at(out).label);
    j["rules"].push_back(std::move(r));
  }
}

void from_json(const nlohmann::json& j, RuleBase& rb) {
  try {
    rb.input1 = j.at("input1").get<LinguisticVariable>();
    rb.input2 = j.at("input2").get<LinguisticVariable>();
    rb.output = j.at("output").get<LinguisticVariable>();
    rb.rules.clear();
    for (const auto& row : j.at("rules")) {
      std::vector<std::size_t> r;
      for (const auto& label : row) r.push_back(rb.output.index_of(label.get<std::string>()));
      rb.rules.push_back(std::move(r));
    }
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("malformed rule base: ") + e.what());
  }
  rb.validate();
}

}  // namespace pvlab::fuzzy
