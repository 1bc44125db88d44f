#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <stdexcept>
#include <string>

#include "emrs/locomotion_manager.hpp"
#include "emrs/sim/terrain.hpp"
#include "emrs/sim/tracking.hpp"
#include "emrs/sim/world.hpp"

namespace emrs::harness {

/// Raised for malformed or schema-violating configuration files.
class ConfigError : public std::runtime_error {
 public:
  enum class Kind { ParseError, SchemaViolation, IoError };

  ConfigError(Kind kind, std::string location, const std::string& message)
      : std::runtime_error(location.empty() ? message : location + ": " + message),
        kind_(kind),
        location_(std::move(location)) {}

  Kind kind() const noexcept { return kind_; }
  /// "line L, column C" for parse errors, a field path for schema violations.
  const std::string& location() const noexcept { return location_; }

 private:
  Kind kind_;
  std::string location_;
};

/// Everything a run needs besides the script: rover, actuators, safety, terrains.
struct ScenarioSet {
  std::filesystem::path source;
  std::string rng_algorithm{std::string(sim::SplitRng::kAlgorithm)};
  std::uint64_t rng_seed{0};
  sim::SimConfig sim;
  SafetyLimits safety;
  SteeringProfile steering_profile;
  double transition_grace_s{2.0};
  double steering_settle_tol_rad{0.03};
  sim::TrackingNoise tracking;
  std::map<std::string, sim::TerrainModel> terrains;

  ManagerConfig manager_config() const;
  const sim::TerrainModel& terrain(const std::string& name) const;
};

ScenarioSet parse_scenario(const std::string& text, const std::filesystem::path& source = {});
ScenarioSet load_scenario(const std::filesystem::path& path);

/// Path of the scenario file shipped with the project.
std::filesystem::path default_scenario_path();
std::filesystem::path default_campaign_path();

}  // namespace emrs::harness
