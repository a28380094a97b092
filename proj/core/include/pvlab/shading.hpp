#pragma once

#include <compare>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json_fwd.hpp>

namespace pvlab {

/// Shading severity, ordered from healthy to severe.
enum class ShadingZone { Zone0 = 0, Zone1 = 1, Zone2 = 2, Zone3 = 3 };

constexpr int zone_index(ShadingZone z) { return static_cast<int>(z); }
std::string_view zone_name(ShadingZone z);

struct ShadingStep {
  double t = 0.0;         // start time [s]
  std::vector<double> g;  // irradiance fraction per module
};

/// Piecewise-constant irradiance profile over a module string.
struct ShadingScenario {
  std::string name;
  std::vector<ShadingStep> steps;

  /// Throws ConfigError when steps are empty, unordered, or out of range.
  void validate() const;
  std::size_t module_count() const { return steps.empty() ? 0 : steps.front().g.size(); }
};

/// The six fixed presets: NoShading, Case1..Case4, FullShading.
const std::vector<ShadingScenario>& builtin_scenarios();
std::optional<ShadingScenario> find_builtin(std::string_view name);

/// Irradiance of the last step whose start time is <= t.
const std::vector<double>& scenario_at(const ShadingScenario& scenario, double t);

/// Zone of the mean irradiance fraction.
ShadingZone classify_zone(const std::vector<double>& g);
ShadingZone classify_mean_irradiance(double g_mean);

void to_json(nlohmann::json& j, const ShadingScenario& s);
void from_json(const nlohmann::json& j, ShadingScenario& s);

ShadingScenario load_scenario_file(const std::string& path);
void save_scenario_file(const ShadingScenario& s, const std::string& path);

}  // namespace pvlab
