#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "emrs/harness/scenario.hpp"
#include "emrs/kinematics.hpp"

namespace emrs::harness {

/// Mission figures the campaign reports against.
struct RequirementConstants {
  static constexpr double kMinTraverseSpeedMps = 0.025;
  static constexpr double kMaxStaticPitchRollDeg = 15.0;
  static constexpr int kIsruPayloadKg = 300;
  static constexpr int kIsruCycles = 42;
  static constexpr int kIsruTotalKg = kIsruPayloadKg * kIsruCycles;
};
static_assert(RequirementConstants::kIsruTotalKg == 12600);

namespace manoeuvre {
struct ModeMatrix {
  double hold_s{2.0};
};
struct FlatTraverse {
  std::vector<double> speeds_mps;
  double distance_m{5.0};
};
struct UpSlope {
  double angle_deg{0};
  double speed_mps{0.05};
  double distance_m{2.0};
};
struct CrossSlope {
  double angle_deg{0};
  double speed_mps{0.05};
  double distance_m{3.0};
};
struct PointTurnOnSlope {
  double angle_deg{0};
  double yaw_rate_radps{0.2};
  double turn_deg{360.0};
};
struct ObstacleRun {
  std::vector<double> heights_m;
  double speed_mps{0.05};
  double spacing_m{2.0};
};
struct Excavation {
  double payload_kg{300.0};
  double drag_n{200.0};
  double speed_mps{0.05};
  double distance_m{3.0};
};
}  // namespace manoeuvre

using Manoeuvre = std::variant<manoeuvre::ModeMatrix, manoeuvre::FlatTraverse, manoeuvre::UpSlope,
                               manoeuvre::CrossSlope, manoeuvre::PointTurnOnSlope, manoeuvre::ObstacleRun,
                               manoeuvre::Excavation>;

enum class ManoeuvreFamily { LocomotionModes, FlatSurface, UpSlope, CrossSlope, ObstacleClearing, Excavator };

inline constexpr ManoeuvreFamily kAllFamilies[] = {ManoeuvreFamily::LocomotionModes, ManoeuvreFamily::FlatSurface,
                                                   ManoeuvreFamily::UpSlope,         ManoeuvreFamily::CrossSlope,
                                                   ManoeuvreFamily::ObstacleClearing, ManoeuvreFamily::Excavator};

std::string_view to_string(ManoeuvreFamily family);
ManoeuvreFamily family_of(const Manoeuvre& m);
/// Type tag used in campaign files, e.g. "up_slope".
std::string_view type_name(const Manoeuvre& m);

enum class Flag { SignificantSlip };
std::string_view to_string(Flag flag);
std::optional<Flag> parse_flag(std::string_view text);

/// Pass thresholds. Absent fields are not checked.
struct Criteria {
  std::optional<double> speed_tolerance;
  std::optional<double> max_drift_fraction;
  std::optional<double> max_mean_slip;
  std::optional<double> min_yaw_efficiency;
  /// Yaw efficiency below this raises SignificantSlip.
  std::optional<double> significant_slip_below;
  /// Strict upper bounds; filled from the safety limits when requested.
  std::optional<double> max_current_a;
  std::optional<double> max_temp_c;
  std::optional<int> required_transitions;

  bool operator==(const Criteria&) const = default;
};

struct StallInjection {
  std::size_t wheel{0};
  double at_s{0};
};

struct TestCase {
  std::string id;
  std::string terrain;
  Manoeuvre manoeuvre;
  std::optional<Pose2p5> start;
  Criteria criteria;
  /// When set, max_current_a / max_temp_c are taken from the scenario safety limits.
  bool within_safety_limits{false};
  std::vector<Flag> expected_flags;
  std::optional<StallInjection> inject;
  std::string note;
};

struct Campaign {
  std::string name;
  std::filesystem::path source;
  ScenarioSet scenario;
  std::uint64_t seed{0};
  std::vector<TestCase> cases;

  const TestCase* find(const std::string& id) const;
};

Campaign parse_campaign(const std::string& text, const std::filesystem::path& source);
Campaign load_campaign(const std::filesystem::path& path);

/// Default terrain and start pose for a manoeuvre.
std::string default_terrain(const Manoeuvre& m);
Pose2p5 default_start(const Manoeuvre& m);

}  // namespace emrs::harness
