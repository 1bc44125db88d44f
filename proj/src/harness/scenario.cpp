#include "emrs/harness/scenario.hpp"

#include <fstream>
#include <numbers>
#include <sstream>

#include "json_fields.hpp"

#ifndef EMRS_DATA_DIR
#define EMRS_DATA_DIR "data"
#endif

namespace emrs::harness {

using detail::Fields;
using detail::json;
using detail::schema_error;

namespace {

constexpr double kDeg = std::numbers::pi / 180.0;

void read_rover(Fields f, sim::SimConfig& sim) {
  auto& g = sim.geometry;
  g.wheelbase_m = f.positive("wheelbase_m", g.wheelbase_m);
  g.track_m = f.positive("track_m", g.track_m);
  g.wheel_radius_m = f.positive("wheel_radius_m", g.wheel_radius_m);
  g.steering_offset_m = f.non_negative("steering_offset_m", g.steering_offset_m);
  g.steering_limit_rad = f.positive("steering_limit_deg", g.steering_limit_rad / kDeg) * kDeg;
  g.chassis_mass_kg = f.positive("chassis_mass_kg", g.chassis_mass_kg);
  g.payload_mass_kg = f.non_negative("payload_mass_kg", g.payload_mass_kg);
  if (f.has("cog_body_m")) {
    const auto c = f.numbers("cog_body_m", 3);
    g.cog_body = {c[0], c[1], c[2]};
  }
  if (f.has("payload_cog_body_m")) {
    const auto c = f.numbers("payload_cog_body_m", 3);
    sim.payload_cog_body = {c[0], c[1], c[2]};
  }
  auto& l = sim.limits;
  l.max_speed_mps = f.positive("max_speed_mps", l.max_speed_mps);
  l.max_yaw_rate_radps = f.positive("max_yaw_rate_radps", l.max_yaw_rate_radps);
  l.skid_factor = f.positive("skid_factor", l.skid_factor);
  f.finish();
  try {
    g.validate();
  } catch (const GeometryError& e) {
    schema_error(f.path(), e.what());
  }
  if (g.payload_mass_kg > sim::kMaxPayloadKg) schema_error(f.child("payload_mass_kg"), "exceeds 300 kg");
}

void read_motor(Fields& f, control::MotorParams& m) {
  m.damping_nms = f.non_negative("damping_nms", m.damping_nms);
  m.torque_constant_nm_per_a = f.positive("torque_constant_nm_per_a", m.torque_constant_nm_per_a);
  m.resistance_ohm = f.positive("resistance_ohm", m.resistance_ohm);
  m.thermal_capacity_j_per_c = f.positive("thermal_capacity_j_per_c", m.thermal_capacity_j_per_c);
  m.dissipation_w_per_c = f.non_negative("dissipation_w_per_c", m.dissipation_w_per_c);
  m.ambient_c = f.number("ambient_c", m.ambient_c);
}

void read_pi(Fields& f, control::VelocityLoopGains& g, const std::string& prefix) {
  g.kp = f.non_negative(prefix + "kp", g.kp);
  g.ki = f.non_negative(prefix + "ki", g.ki);
  g.output_limit_nm = f.positive(prefix + "torque_limit_nm", g.output_limit_nm);
  g.integrator_limit = f.non_negative(prefix + "integrator_limit", g.integrator_limit);
}

void read_wheel_drive(Fields f, sim::WheelDriveConfig& d) {
  d.rotor_inertia_kgm2 = f.positive("rotor_inertia_kgm2", d.rotor_inertia_kgm2);
  read_motor(f, d.motor);
  read_pi(f, d.gains, "");
  f.finish();
}

void read_steering_drive(Fields f, sim::SteeringDriveConfig& d) {
  d.motor.inertia_kgm2 = f.positive("inertia_kgm2", d.motor.inertia_kgm2);
  read_motor(f, d.motor);
  read_pi(f, d.rate_gains, "rate_");
  d.position_gains.kp = f.non_negative("position_kp", d.position_gains.kp);
  d.position_gains.kd = f.non_negative("position_kd", d.position_gains.kd);
  d.position_gains.output_limit_radps = f.positive("rate_limit_radps", d.position_gains.output_limit_radps);
  f.finish();
}

void read_profile(Fields f, ScenarioSet& s) {
  s.steering_profile.max_rate_radps = f.positive("max_rate_deg_s", s.steering_profile.max_rate_radps / kDeg) * kDeg;
  s.steering_profile.max_accel_radps2 =
      f.positive("max_accel_deg_s2", s.steering_profile.max_accel_radps2 / kDeg) * kDeg;
  s.transition_grace_s = f.non_negative("transition_grace_s", s.transition_grace_s);
  s.steering_settle_tol_rad = f.positive("settle_tolerance_rad", s.steering_settle_tol_rad);
  f.finish();
}

void read_traction(Fields f, sim::TractionParams& t) {
  t.contact_area_m2 = f.non_negative("contact_area_m2", t.contact_area_m2);
  t.patch_length_m = f.positive("patch_length_m", t.patch_length_m);
  t.rolling_resistance = f.non_negative("rolling_resistance", t.rolling_resistance);
  t.turn_scrub_coeff = f.non_negative("turn_scrub_coeff", t.turn_scrub_coeff);
  t.resistive_speed_scale_mps = f.positive("resistive_speed_scale_mps", t.resistive_speed_scale_mps);
  f.finish();
}

void read_safety(Fields f, SafetyLimits& s) {
  s.max_motor_current_a = f.positive("max_motor_current_a", s.max_motor_current_a);
  s.max_motor_temp_c = f.positive("max_motor_temp_c", s.max_motor_temp_c);
  s.max_tracking_err_radps = f.positive("max_tracking_err_radps", s.max_tracking_err_radps);
  s.max_steering_err_rad = f.positive("max_steering_err_rad", s.max_steering_err_rad);
  s.command_timeout_s = f.positive("command_timeout_s", s.command_timeout_s);
  s.sustain_window_s = f.non_negative("sustain_window_s", s.sustain_window_s);
  f.finish();
}

void read_rates(Fields f, sim::SimRates& r) {
  r.physics_hz = f.positive("physics", r.physics_hz);
  r.control_hz = f.positive("control", r.control_hz);
  r.telemetry_hz = f.positive("telemetry", r.telemetry_hz);
  r.tracking_hz = f.positive("tracking", r.tracking_hz);
  f.finish();
  try {
    (void)r.control_divider();
  } catch (const std::invalid_argument& e) {
    schema_error(f.path(), e.what());
  }
  const double ratio = r.physics_hz / r.telemetry_hz;
  if (std::abs(ratio - std::round(ratio)) > 1e-9) {
    schema_error(f.child("telemetry"), "physics rate must be a multiple of the telemetry rate");
  }
}

void read_tracking(Fields f, sim::TrackingNoise& t) {
  t.sigma_position_m = f.non_negative("sigma_position_m", t.sigma_position_m);
  t.sigma_angle_rad = f.non_negative("sigma_angle_deg", t.sigma_angle_rad / kDeg) * kDeg;
  f.finish();
}

sim::SoilParams read_soil(Fields f) {
  sim::SoilParams s;
  s.cohesion_kpa = f.non_negative("cohesion_kpa", s.cohesion_kpa);
  s.friction_angle_deg = f.number("friction_angle_deg", s.friction_angle_deg);
  s.density_kg_m3 = f.positive("density_kg_m3", s.density_kg_m3);
  if (f.has("granulometry_mm")) {
    const auto g = f.numbers("granulometry_mm", 2);
    s.granulometry_min_mm = g[0];
    s.granulometry_max_mm = g[1];
  }
  s.slip_knee = f.number("slip_knee", s.slip_knee);
  f.finish();
  try {
    s.validate();
  } catch (const std::exception& e) {
    schema_error(f.path(), e.what());
  }
  return s;
}

sim::Obstacle read_obstacle(Fields f) {
  sim::Obstacle o;
  o.height_m = f.positive("height_m", 0.0);
  const json& fp = f.raw("footprint_m");
  const auto path = f.child("footprint_m");
  if (!fp.is_array() || fp.size() < 3) schema_error(path, "expected a polygon of at least three [x, y] points");
  for (std::size_t i = 0; i < fp.size(); ++i) {
    const auto p = Fields::as_numbers(fp[i], path + "[" + std::to_string(i) + "]", 2);
    o.footprint.emplace_back(p[0], p[1]);
  }
  f.finish();
  return o;
}

sim::TerrainModel read_terrain(Fields f, const std::string& name, const std::map<std::string, sim::SoilParams>& soils) {
  sim::TerrainModel t;
  t.name = name;
  const auto size = f.numbers("size_m", 2);
  const double cell = f.positive("cell_m", 0.5);
  if (f.has("heights_m")) {
    const json& rows = f.raw("heights_m");
    const auto path = f.child("heights_m");
    if (!rows.is_array() || rows.empty() || !rows[0].is_array()) schema_error(path, "expected a 2-D array");
    t.heightmap.cell_size_m = cell;
    t.heightmap.heights_m.resize(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(rows[0].size()));
    for (std::size_t i = 0; i < rows.size(); ++i) {
      const auto row = Fields::as_numbers(rows[i], path + "[" + std::to_string(i) + "]", rows[0].size());
      for (std::size_t j = 0; j < row.size(); ++j) {
        t.heightmap.heights_m(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = row[j];
      }
    }
    if (std::abs(t.heightmap.size_x_m() - size[0]) > 1e-9 || std::abs(t.heightmap.size_y_m() - size[1]) > 1e-9) {
      schema_error(path, "grid does not match size_m and cell_m");
    }
  } else {
    if (!(size[0] > 0 && size[1] > 0)) schema_error(f.child("size_m"), "must be positive");
    t.heightmap = sim::Heightmap::flat(size[0], size[1], cell);
  }
  const std::string soil = f.string("soil");
  const auto it = soils.find(soil);
  if (it == soils.end()) schema_error(f.child("soil"), "unknown soil '" + soil + "'");
  t.soil = it->second;
  if (const json* bed = f.optional_raw("tilt_bed")) {
    Fields b(*bed, f.child("tilt_bed"));
    sim::TiltBed tilt;
    tilt.hinge_x_m = b.number("hinge_x_m");
    const double angle = b.number("angle_deg", 0.0);
    if (!(angle >= 0 && angle <= sim::kMaxTiltDeg)) schema_error(b.child("angle_deg"), "must lie in [0, 30]");
    tilt.angle_rad = angle * kDeg;
    tilt.blend_width_m = b.positive("blend_width_m", tilt.blend_width_m);
    b.finish();
    t.tilt_bed = tilt;
  }
  if (const json* obstacles = f.optional_raw("obstacles")) {
    if (!obstacles->is_array()) schema_error(f.child("obstacles"), "expected an array");
    for (std::size_t i = 0; i < obstacles->size(); ++i) {
      t.obstacles.push_back(read_obstacle(Fields((*obstacles)[i], f.child("obstacles") + "[" + std::to_string(i) + "]")));
    }
  }
  f.finish();
  try {
    t.validate();
  } catch (const std::exception& e) {
    schema_error(f.path(), e.what());
  }
  return t;
}

}  // namespace

ManagerConfig ScenarioSet::manager_config() const {
  return {sim.geometry, sim.limits, steering_profile, transition_grace_s, steering_settle_tol_rad};
}

const sim::TerrainModel& ScenarioSet::terrain(const std::string& name) const {
  const auto it = terrains.find(name);
  if (it == terrains.end()) throw ConfigError(ConfigError::Kind::SchemaViolation, "terrains", "unknown terrain '" + name + "'");
  return it->second;
}

ScenarioSet parse_scenario(const std::string& text, const std::filesystem::path& source) {
  const json doc = detail::parse_json(text, source.string());
  Fields root(doc, "");
  ScenarioSet s;
  s.source = source;
  const std::string schema = root.string("schema");
  if (schema != "emrs-scenario/1") schema_error("schema", "expected 'emrs-scenario/1'");

  if (const json* rng = root.optional_raw("rng")) {
    Fields f(*rng, "rng");
    s.rng_algorithm = f.string("algorithm", s.rng_algorithm);
    if (s.rng_algorithm != sim::SplitRng::kAlgorithm) schema_error("rng.algorithm", "only mt19937_64 is supported");
    s.rng_seed = f.unsigned_integer("seed", s.rng_seed);
    f.finish();
  }
  if (const json* v = root.optional_raw("rover")) read_rover(Fields(*v, "rover"), s.sim);
  if (const json* v = root.optional_raw("steering_profile")) read_profile(Fields(*v, "steering_profile"), s);
  if (const json* v = root.optional_raw("wheel_drive")) read_wheel_drive(Fields(*v, "wheel_drive"), s.sim.wheel_drive);
  if (const json* v = root.optional_raw("steering_drive")) read_steering_drive(Fields(*v, "steering_drive"), s.sim.steering);
  if (const json* v = root.optional_raw("traction")) read_traction(Fields(*v, "traction"), s.sim.traction);
  if (const json* v = root.optional_raw("safety")) read_safety(Fields(*v, "safety"), s.safety);
  if (const json* v = root.optional_raw("rates_hz")) read_rates(Fields(*v, "rates_hz"), s.sim.rates);
  if (const json* v = root.optional_raw("tracking")) read_tracking(Fields(*v, "tracking"), s.tracking);
  s.sim.gravity_mps2 = root.positive("gravity_mps2", s.sim.gravity_mps2);

  std::map<std::string, sim::SoilParams> soils;
  const json& soil_doc = root.raw("soils");
  if (!soil_doc.is_object() || soil_doc.empty()) schema_error("soils", "expected a non-empty object");
  for (const auto& [name, value] : soil_doc.items()) soils[name] = read_soil(Fields(value, "soils." + name));

  const json& terrain_doc = root.raw("terrains");
  if (!terrain_doc.is_object() || terrain_doc.empty()) schema_error("terrains", "expected a non-empty object");
  for (const auto& [name, value] : terrain_doc.items()) {
    s.terrains[name] = read_terrain(Fields(value, "terrains." + name), name, soils);
  }
  root.finish();
  return s;
}

ScenarioSet load_scenario(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError(ConfigError::Kind::IoError, path.string(), "cannot open file");
  std::stringstream buffer;
  buffer << in.rdbuf();
  return parse_scenario(buffer.str(), path);
}

std::filesystem::path default_scenario_path() { return std::filesystem::path(EMRS_DATA_DIR) / "default_scenario.json"; }
std::filesystem::path default_campaign_path() { return std::filesystem::path(EMRS_DATA_DIR) / "default_campaign.json"; }

}  // namespace emrs::harness
