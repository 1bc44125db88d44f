#include "emrs/harness/campaign.hpp"

#include <fstream>
#include <numbers>
#include <set>
#include <sstream>

#include "json_fields.hpp"

namespace emrs::harness {

using detail::Fields;
using detail::json;
using detail::schema_error;

std::string_view to_string(ManoeuvreFamily family) {
  switch (family) {
    case ManoeuvreFamily::LocomotionModes: return "locomotion_modes";
    case ManoeuvreFamily::FlatSurface: return "flat_surface";
    case ManoeuvreFamily::UpSlope: return "up_slope";
    case ManoeuvreFamily::CrossSlope: return "cross_slope";
    case ManoeuvreFamily::ObstacleClearing: return "obstacle_clearing";
    case ManoeuvreFamily::Excavator: return "excavator";
  }
  return "?";
}

ManoeuvreFamily family_of(const Manoeuvre& m) {
  using F = ManoeuvreFamily;
  static constexpr F table[] = {F::LocomotionModes, F::FlatSurface,      F::UpSlope,  F::CrossSlope,
                                F::LocomotionModes, F::ObstacleClearing, F::Excavator};
  return table[m.index()];
}

std::string_view type_name(const Manoeuvre& m) {
  static constexpr std::string_view names[] = {"mode_matrix",        "flat_traverse", "up_slope", "cross_slope",
                                               "point_turn_on_slope", "obstacle_run",  "excavation"};
  return names[m.index()];
}

std::string_view to_string(Flag flag) {
  switch (flag) {
    case Flag::SignificantSlip: return "significant_slip";
  }
  return "?";
}

std::optional<Flag> parse_flag(std::string_view text) {
  if (text == "significant_slip") return Flag::SignificantSlip;
  return std::nullopt;
}

const TestCase* Campaign::find(const std::string& id) const {
  for (const auto& c : cases) {
    if (c.id == id) return &c;
  }
  return nullptr;
}

std::string default_terrain(const Manoeuvre& m) {
  switch (family_of(m)) {
    case ManoeuvreFamily::UpSlope:
    case ManoeuvreFamily::CrossSlope:
    case ManoeuvreFamily::Excavator: return "pel";
    default: break;
  }
  return std::holds_alternative<manoeuvre::PointTurnOnSlope>(m) ? "pel" : "spot";
}

Pose2p5 default_start(const Manoeuvre& m) {
  return std::visit(
      []<typename T>(const T&) -> Pose2p5 {
        if constexpr (std::is_same_v<T, manoeuvre::ModeMatrix>) return {7.5, 6.0, 0, 0, 0};
        if constexpr (std::is_same_v<T, manoeuvre::FlatTraverse>) return {1.5, 6.0, 0, 0, 0};
        if constexpr (std::is_same_v<T, manoeuvre::UpSlope>) return {7.2, 2.75, 0, 0, 0};
        if constexpr (std::is_same_v<T, manoeuvre::CrossSlope>) return {8.25, 1.0, std::numbers::pi / 2, 0, 0};
        if constexpr (std::is_same_v<T, manoeuvre::PointTurnOnSlope>) return {8.25, 2.75, 0, 0, 0};
        if constexpr (std::is_same_v<T, manoeuvre::ObstacleRun>) return {1.5, 3.0, 0, 0, 0};
        if constexpr (std::is_same_v<T, manoeuvre::Excavation>) return {1.5, 2.75, 0, 0, 0};
        return {};
      },
      m);
}

namespace {

double slope_angle(Fields& f) {
  const double a = f.number("angle_deg");
  if (!(a >= 0)) schema_error(f.child("angle_deg"), "must be non-negative");
  if (a > sim::kMaxTiltDeg) schema_error(f.child("angle_deg"), "exceeds the 30 deg tilt-bed limit");
  return a;
}

double speed(Fields& f, double fallback) {
  const double v = f.positive("speed_mps", fallback);
  if (v > 0.2 + 1e-12) schema_error(f.child("speed_mps"), "exceeds the rover speed limit");
  return v;
}

Manoeuvre read_manoeuvre(Fields f) {
  const std::string type = f.string("type");
  Manoeuvre m;
  if (type == "mode_matrix") {
    manoeuvre::ModeMatrix x;
    x.hold_s = f.positive("hold_s", x.hold_s);
    m = x;
  } else if (type == "flat_traverse") {
    manoeuvre::FlatTraverse x;
    x.speeds_mps = f.numbers("speeds_mps");
    if (x.speeds_mps.empty()) schema_error(f.child("speeds_mps"), "needs at least one speed");
    for (std::size_t i = 0; i < x.speeds_mps.size(); ++i) {
      const double v = x.speeds_mps[i];
      if (!(v > 0 && v <= 0.2 + 1e-12)) {
        schema_error(f.child("speeds_mps") + "[" + std::to_string(i) + "]", "must lie in (0, 0.2] m/s");
      }
    }
    x.distance_m = f.positive("distance_m", x.distance_m);
    m = x;
  } else if (type == "up_slope") {
    manoeuvre::UpSlope x;
    x.angle_deg = slope_angle(f);
    x.speed_mps = speed(f, x.speed_mps);
    x.distance_m = f.positive("distance_m", x.distance_m);
    m = x;
  } else if (type == "cross_slope") {
    manoeuvre::CrossSlope x;
    x.angle_deg = slope_angle(f);
    x.speed_mps = speed(f, x.speed_mps);
    x.distance_m = f.positive("distance_m", x.distance_m);
    m = x;
  } else if (type == "point_turn_on_slope") {
    manoeuvre::PointTurnOnSlope x;
    x.angle_deg = slope_angle(f);
    x.yaw_rate_radps = f.positive("yaw_rate_radps", x.yaw_rate_radps);
    if (x.yaw_rate_radps > 0.5 + 1e-12) schema_error(f.child("yaw_rate_radps"), "exceeds the yaw-rate limit");
    x.turn_deg = f.positive("turn_deg", x.turn_deg);
    m = x;
  } else if (type == "obstacle_run") {
    manoeuvre::ObstacleRun x;
    x.heights_m = f.numbers("heights_m");
    if (x.heights_m.empty()) schema_error(f.child("heights_m"), "needs at least one obstacle");
    for (std::size_t i = 0; i < x.heights_m.size(); ++i) {
      if (!(x.heights_m[i] > 0)) schema_error(f.child("heights_m") + "[" + std::to_string(i) + "]", "must be positive");
    }
    x.speed_mps = speed(f, x.speed_mps);
    x.spacing_m = f.positive("spacing_m", x.spacing_m);
    m = x;
  } else if (type == "excavation") {
    manoeuvre::Excavation x;
    x.payload_kg = f.non_negative("payload_kg", x.payload_kg);
    if (x.payload_kg > sim::kMaxPayloadKg) schema_error(f.child("payload_kg"), "exceeds 300 kg");
    x.drag_n = f.non_negative("drag_n", x.drag_n);
    x.speed_mps = speed(f, x.speed_mps);
    x.distance_m = f.positive("distance_m", x.distance_m);
    m = x;
  } else {
    schema_error(f.child("type"), "unknown manoeuvre type '" + type + "'");
  }
  f.finish();
  return m;
}

Criteria read_criteria(Fields f, bool& within_safety_limits) {
  Criteria c;
  const auto opt = [&](const char* key, std::optional<double>& out) {
    if (f.has(key)) out = f.non_negative(key, 0.0);
  };
  opt("speed_tolerance", c.speed_tolerance);
  opt("max_drift_fraction", c.max_drift_fraction);
  opt("max_mean_slip", c.max_mean_slip);
  opt("min_yaw_efficiency", c.min_yaw_efficiency);
  opt("significant_slip_below", c.significant_slip_below);
  if (const json* v = f.optional_raw("required_transitions")) {
    if (!v->is_number_unsigned()) schema_error(f.child("required_transitions"), "expected a non-negative integer");
    c.required_transitions = v->get<int>();
  }
  within_safety_limits = f.boolean("within_safety_limits", false);
  f.finish();
  return c;
}

Pose2p5 read_start(Fields f) {
  Pose2p5 p;
  p.x_m = f.number("x_m");
  p.y_m = f.number("y_m");
  p.yaw_rad = f.number("yaw_deg", 0.0) * std::numbers::pi / 180.0;
  f.finish();
  return p;
}

TestCase read_case(Fields f, const ScenarioSet& scenario) {
  TestCase c;
  c.id = f.string("id");
  if (c.id.empty()) schema_error(f.child("id"), "must not be empty");
  c.manoeuvre = read_manoeuvre(Fields(f.raw("manoeuvre"), f.child("manoeuvre")));
  c.terrain = f.string("terrain", default_terrain(c.manoeuvre));
  if (!scenario.terrains.contains(c.terrain)) schema_error(f.child("terrain"), "unknown terrain '" + c.terrain + "'");
  if (const json* v = f.optional_raw("start")) c.start = read_start(Fields(*v, f.child("start")));
  if (const json* v = f.optional_raw("criteria")) {
    c.criteria = read_criteria(Fields(*v, f.child("criteria")), c.within_safety_limits);
  }
  if (const json* v = f.optional_raw("expected_flags")) {
    if (!v->is_array()) schema_error(f.child("expected_flags"), "expected an array of flag names");
    for (std::size_t i = 0; i < v->size(); ++i) {
      const auto path = f.child("expected_flags") + "[" + std::to_string(i) + "]";
      const auto flag = parse_flag(Fields::as_string((*v)[i], path));
      if (!flag) schema_error(path, "unknown flag");
      c.expected_flags.push_back(*flag);
    }
  }
  if (const json* v = f.optional_raw("inject")) {
    Fields inj(*v, f.child("inject"));
    StallInjection s;
    const json& w = inj.raw("steering_stall_wheel");
    if (!w.is_number_unsigned() || w.get<std::size_t>() >= kWheelCount) {
      schema_error(inj.child("steering_stall_wheel"), "expected a wheel index 0..3");
    }
    s.wheel = w.get<std::size_t>();
    s.at_s = inj.non_negative("at_s", 0.0);
    inj.finish();
    c.inject = s;
  }
  c.note = f.string("note", "");
  f.finish();
  return c;
}

}  // namespace

Campaign parse_campaign(const std::string& text, const std::filesystem::path& source) {
  if (text.find_first_not_of(" \t\r\n") == std::string::npos) {
    throw ConfigError(ConfigError::Kind::ParseError, source.string() + ":line 1, column 1", "empty campaign file");
  }
  const json doc = detail::parse_json(text, source.string());
  Fields root(doc, "");
  if (root.string("schema") != "emrs-campaign/1") schema_error("schema", "expected 'emrs-campaign/1'");
  Campaign c;
  c.source = source;
  c.name = root.string("name");
  std::filesystem::path scenario_path = root.string("scenario_file");
  if (scenario_path.is_relative()) scenario_path = source.parent_path() / scenario_path;
  c.scenario = load_scenario(scenario_path);
  c.seed = root.unsigned_integer("seed", c.scenario.rng_seed);

  const json& cases = root.raw("cases");
  if (!cases.is_array() || cases.empty()) schema_error("cases", "expected a non-empty array");
  std::set<std::string> ids;
  for (std::size_t i = 0; i < cases.size(); ++i) {
    const auto path = "cases[" + std::to_string(i) + "]";
    auto tc = read_case(Fields(cases[i], path), c.scenario);
    if (!ids.insert(tc.id).second) schema_error(path + ".id", "duplicate case id '" + tc.id + "'");
    c.cases.push_back(std::move(tc));
  }
  root.finish();
  return c;
}

Campaign load_campaign(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError(ConfigError::Kind::IoError, path.string(), "cannot open file");
  std::stringstream buffer;
  buffer << in.rdbuf();
  return parse_campaign(buffer.str(), path);
}

}  // namespace emrs::harness
