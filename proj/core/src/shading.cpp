#include "pvlab/shading.hpp"

#include <algorithm>
#include <fstream>
#include <numeric>

#include <nlohmann/json.hpp>

#include "pvlab/errors.hpp"

namespace pvlab {

std::string_view zone_name(ShadingZone z) {
  switch (z) {
    case ShadingZone::Zone0: return "Zone0";
    case ShadingZone::Zone1: return "Zone1";
    case ShadingZone::Zone2: return "Zone2";
    case ShadingZone::Zone3: return "Zone3";
  }
  return "Zone?";
}

void ShadingScenario::validate() const {
  if (steps.empty()) throw ConfigError("scenario '" + name + "' has no steps");
  if (steps.front().t != 0.0) throw ConfigError("scenario '" + name + "' must start at t = 0");
  const std::size_t modules = steps.front().g.size();
  if (modules == 0) throw ConfigError("scenario '" + name + "' has no modules");
  for (std::size_t k = 0; k < steps.size(); ++k) {
    if (k > 0 && !(steps[k].t > steps[k - 1].t)) {
      throw ConfigError("scenario '" + name + "' step times must be strictly increasing");
    }
    if (steps[k].g.size() != modules) {
      throw ConfigError("scenario '" + name + "' steps differ in module count");
    }
    for (double g : steps[k].g) {
      if (!(g >= 0.0 && g <= 1.0)) throw ConfigError("scenario '" + name + "' irradiance outside [0, 1]");
    }
  }
}

const std::vector<ShadingScenario>& builtin_scenarios() {
  static const std::vector<ShadingScenario> presets = {
      {"NoShading", {{0.0, {1.0, 1.0, 1.0, 1.0, 1.0}}}},
      {"Case1", {{0.0, {0.6, 0.4, 1.0, 1.0, 1.0}}}},
      {"Case2", {{0.0, {0.6, 0.4, 0.2, 1.0, 1.0}}}},
      {"Case3", {{0.0, {1.0, 1.0, 0.4, 0.2, 1.0}}}},
      {"Case4", {{0.0, {0.6, 0.4, 0.2, 0.6, 0.4}}}},
      {"FullShading", {{0.0, {0.2, 0.2, 0.2, 0.2, 0.2}}}},
  };
  return presets;
}

std::optional<ShadingScenario> find_builtin(std::string_view name) {
  for (const auto& s : builtin_scenarios()) {
    if (s.name == name) return s;
  }
  return std::nullopt;
}

const std::vector<double>& scenario_at(const ShadingScenario& scenario, double t) {
  auto it = std::upper_bound(scenario.steps.begin(), scenario.steps.end(), t,
                             [](double time, const ShadingStep& s) { return time < s.t; });
  if (it == scenario.steps.begin()) return scenario.steps.front().g;
  return std::prev(it)->g;
}

ShadingZone classify_mean_irradiance(double g_mean) {
  if (g_mean >= 0.90) return ShadingZone::Zone0;
  if (g_mean >= 0.65) return ShadingZone::Zone1;
  if (g_mean >= 0.40) return ShadingZone::Zone2;
  return ShadingZone::Zone3;
}

ShadingZone classify_zone(const std::vector<double>& g) {
  if (g.empty()) return ShadingZone::Zone3;
  const double mean = std::accumulate(g.begin(), g.end(), 0.0) / static_cast<double>(g.size());
  return classify_mean_irradiance(mean);
}

void to_json(nlohmann::json& j, const ShadingScenario& s) {
  j = nlohmann::json{{"name", s.name}, {"steps", nlohmann::json::array()}};
  for (const auto& step : s.steps) j["steps"].push_back({{"t", step.t}, {"g", step.g}});
}

void from_json(const nlohmann::json& j, ShadingScenario& s) {
  try {
    s.name = j.at("name").get<std::string>();
    s.steps.clear();
    for (const auto& step : j.at("steps")) {
      s.steps.push_back({step.at("t").get<double>(), step.at("g").get<std::vector<double>>()});
    }
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("malformed scenario: ") + e.what());
  }
  s.validate();
}

ShadingScenario load_scenario_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open scenario file " + path);
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError("invalid JSON in " + path + ": " + e.what());
  }
  return j.get<ShadingScenario>();
}

void save_scenario_file(const ShadingScenario& s, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw ConfigError("cannot write scenario file " + path);
  out << nlohmann::json(s).dump(2) << '\n';
}

}  // namespace pvlab
