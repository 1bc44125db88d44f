#include "emrs/sim/world.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace emrs::sim {

int SimRates::control_divider() const {
  const double ratio = physics_hz / control_hz;
  const auto divider = static_cast<int>(std::lround(ratio));
  if (divider < 1 || std::abs(ratio - divider) > 1e-9) {
    throw std::invalid_argument("physics rate must be an integer multiple of the control rate");
  }
  return divider;
}

std::string_view to_string(SimEventKind kind) {
  switch (kind) {
    case SimEventKind::TipOver: return "TipOver";
    case SimEventKind::OutOfBounds: return "OutOfBounds";
    case SimEventKind::ObstacleBlocked: return "ObstacleBlocked";
    case SimEventKind::ObstacleClimbed: return "ObstacleClimbed";
  }
  return "?";
}

World::World(SimConfig config, TerrainModel terrain, const Pose2p5& start)
    : config_(std::move(config)), terrain_(std::move(terrain)) {
  config_.geometry.validate();
  terrain_.validate();
  control_divider_ = config_.rates.control_divider();
  state_.true_pose = start;
  state_.true_pose.yaw_rad = normalize_angle(start.yaw_rad);
  state_.payload_kg = config_.geometry.payload_mass_kg;
  for (auto& m : state_.drive_motors) m.temp_c = config_.wheel_drive.motor.ambient_c;
  for (auto& m : state_.steer_motors) m.temp_c = config_.steering.motor.ambient_c;
  update_attitude();
}

void World::set_payload(double payload_kg) {
  if (!(payload_kg >= 0 && payload_kg <= kMaxPayloadKg)) {
    throw std::invalid_argument("payload must lie in [0, 300] kg");
  }
  state_.payload_kg = payload_kg;
}

void World::set_tilt(double angle_rad) {
  terrain_.set_tilt(angle_rad);
  update_attitude();
}

double World::wheel_inertia() const {
  const double mass = config_.geometry.chassis_mass_kg + state_.payload_kg;
  const double r = config_.geometry.wheel_radius_m;
  return config_.wheel_drive.rotor_inertia_kgm2 + mass / kWheelCount * r * r;
}

Eigen::Vector3d World::cog_body() const {
  const double chassis = config_.geometry.chassis_mass_kg;
  const double payload = state_.payload_kg;
  return (chassis * config_.geometry.cog_body + payload * config_.payload_cog_body) / (chassis + payload);
}

std::array<Eigen::Vector2d, kWheelCount> World::contact_positions() const {
  const Eigen::Rotation2Dd yaw(state_.true_pose.yaw_rad);
  const Eigen::Vector2d origin(state_.true_pose.x_m, state_.true_pose.y_m);
  std::array<Eigen::Vector2d, kWheelCount> out;
  for (std::size_t i = 0; i < kWheelCount; ++i) {
    out[i] = origin + yaw * contact_point(config_.geometry, i, state_.wheel_states[i].steering_angle_rad);
  }
  return out;
}

Eigen::Vector4d World::current_wheel_loads() const {
  std::array<Eigen::Vector2d, kWheelCount> contacts;
  for (std::size_t i = 0; i < kWheelCount; ++i) {
    contacts[i] = contact_point(config_.geometry, i, state_.wheel_states[i].steering_angle_rad);
  }
  const double mass = config_.geometry.chassis_mass_kg + state_.payload_kg;
  return static_wheel_loads<double>(
      contacts, cog_body(), mass,
      gravity_in_body(state_.true_pose.pitch_rad, state_.true_pose.roll_rad, config_.gravity_mps2));
}

void World::set_terminal(SimEventKind kind, std::string detail) {
  if (state_.terminal) return;
  SimEvent event{kind, state_.time_s, std::move(detail)};
  events_.push_back(event);
  state_.terminal = std::move(event);
  state_.actual_twist = {};
}

void World::update_attitude() {
  const auto contacts = contact_positions();
  Eigen::Matrix<double, 4, 3> design;
  Eigen::Vector4d heights;
  try {
    for (std::size_t i = 0; i < kWheelCount; ++i) {
      const auto sample = terrain_.query(contacts[i].x(), contacts[i].y());
      const auto row = static_cast<Eigen::Index>(i);
      design.row(row) << 1.0, contacts[i].x(), contacts[i].y();
      heights(row) = sample.height_m + state_.wheel_elevation_m[i];
    }
    terrain_.query(state_.true_pose.x_m, state_.true_pose.y_m);
  } catch (const TerrainError& e) {
    set_terminal(SimEventKind::OutOfBounds, e.what());
    return;
  }
  const Eigen::Vector3d plane = (design.transpose() * design).ldlt().solve(design.transpose() * heights);
  const Eigen::Vector3d normal = Eigen::Vector3d(-plane(1), -plane(2), 1.0).normalized();
  const double yaw = state_.true_pose.yaw_rad;
  const Eigen::Vector3d heading(std::cos(yaw), std::sin(yaw), 0.0);
  const Eigen::Vector3d x_axis = (heading - heading.dot(normal) * normal).normalized();
  const Eigen::Vector3d y_axis = normal.cross(x_axis);
  state_.true_pose.pitch_rad = std::asin(std::clamp(-x_axis.z(), -1.0, 1.0));
  state_.true_pose.roll_rad = std::atan2(y_axis.z(), normal.z());
  state_.height_m = plane(0) + plane(1) * state_.true_pose.x_m + plane(2) * state_.true_pose.y_m;
}

void World::run_control(const WheelSetpointArray& setpoints) {
  const double dt = 1.0 / config_.rates.control_hz;
  for (std::size_t i = 0; i < kWheelCount; ++i) {
    const auto wheel = control::velocity_loop_step(wheel_loops_[i], config_.wheel_drive.gains,
                                                   setpoints[i].wheel_speed_radps,
                                                   state_.drive_motors[i].speed_radps, dt);
    wheel_loops_[i] = wheel.state;
    drive_torque_cmd_[i] = wheel.torque_nm;

    const auto steer = control::position_loop_step(
        steer_position_loops_[i], config_.steering.position_gains, setpoints[i].steering_angle_rad,
        state_.wheel_states[i].steering_angle_rad, state_.steer_motors[i].speed_radps, dt);
    steer_position_loops_[i] = steer.state;
    steer_rate_cmd_[i] = steer.rate_cmd_radps;
  }
}

void World::step(const WheelSetpointArray& setpoints) {
  const double dt = config_.rates.physics_dt();
  if (state_.terminal) {
    state_.time_s = static_cast<double>(++state_.tick) * dt;
    return;
  }
  if (state_.tick % static_cast<std::uint64_t>(control_divider_) == 0) run_control(setpoints);

  const auto& geometry = config_.geometry;
  const double limit = geometry.steering_limit_rad;

  // Steering drives: inner rate loop and plant.
  for (std::size_t i = 0; i < kWheelCount; ++i) {
    auto& motor = state_.steer_motors[i];
    double& angle = state_.wheel_states[i].steering_angle_rad;
    if (stalled_steering_ == i) {
      motor = control::motor_step(motor, config_.steering.motor, 0.0, 0.0, dt);
      motor.speed_radps = 0.0;
      continue;
    }
    const auto rate = control::velocity_loop_step(steer_rate_loops_[i], config_.steering.rate_gains,
                                                  steer_rate_cmd_[i], motor.speed_radps, dt);
    steer_rate_loops_[i] = rate.state;
    motor = control::motor_step(motor, config_.steering.motor, rate.torque_nm, 0.0, dt);
    angle += motor.speed_radps * dt;
    if (std::abs(angle) > limit) {
      angle = std::copysign(limit, angle);
      motor.speed_radps = 0.0;
    }
  }

  // Quasi-static loads and traction demand on the current state.
  Eigen::Vector4d loads;
  try {
    loads = current_wheel_loads();
  } catch (const TipOverError& e) {
    set_terminal(SimEventKind::TipOver, e.what());
    state_.time_s = static_cast<double>(++state_.tick) * dt;
    return;
  }
  const double mass = geometry.chassis_mass_kg + state_.payload_kg;
  const Eigen::Vector3d gravity =
      gravity_in_body(state_.true_pose.pitch_rad, state_.true_pose.roll_rad, config_.gravity_mps2);

  TractionInputs in;
  in.mass_kg = mass;
  in.wheel_radius_m = geometry.wheel_radius_m;
  in.gravity_tangential = gravity.head<2>();
  in.body_velocity = {state_.actual_twist.vx_mps, state_.actual_twist.vy_mps};
  in.body_yaw_rate = state_.actual_twist.omega_radps;
  in.blade_drag_n = state_.blade_drag_n;
  for (std::size_t i = 0; i < kWheelCount; ++i) {
    in.normal_n[i] = loads(static_cast<Eigen::Index>(i));
    in.steering_rad[i] = state_.wheel_states[i].steering_angle_rad;
    in.contacts[i] = contact_point(geometry, i, in.steering_rad[i]);
    in.wheel_speed_radps[i] = state_.drive_motors[i].speed_radps;
    in.wheel_accel_radps2[i] = state_.drive_motors[i].accel_radps2;
  }
  const auto traction = evaluate_traction(in, terrain_.soil, config_.traction);

  // Wheel drive plants.
  control::MotorParams drive = config_.wheel_drive.motor;
  drive.inertia_kgm2 = wheel_inertia();
  for (std::size_t i = 0; i < kWheelCount; ++i) {
    state_.drive_motors[i] =
        control::motor_step(state_.drive_motors[i], drive, drive_torque_cmd_[i], traction[i].load_torque_nm, dt);
    state_.wheel_states[i].wheel_speed_radps = state_.drive_motors[i].speed_radps;
    in.wheel_speed_radps[i] = state_.drive_motors[i].speed_radps;
    state_.slip_ratios[i] = traction[i].slip;
    state_.normal_loads_n[i] = in.normal_n[i];
  }

  // Body motion from the contact ground velocities.
  const auto ground = contact_ground_velocities(in, traction);
  const BodyTwist twist = fit_body_twist<double>(in.contacts, ground).twist;

  const Pose2p5 previous = state_.true_pose;
  const Eigen::Vector3d surface =
      (Eigen::AngleAxisd(previous.pitch_rad, Eigen::Vector3d::UnitY()) *
       Eigen::AngleAxisd(previous.roll_rad, Eigen::Vector3d::UnitX())) *
      Eigen::Vector3d(twist.vx_mps, twist.vy_mps, 0.0);
  const BodyTwist horizontal =
      previous.pitch_rad == 0.0 && previous.roll_rad == 0.0 ? twist
                                                            : BodyTwist{surface.x(), surface.y(), twist.omega_radps};
  state_.true_pose = integrate_pose(previous, horizontal, dt);
  state_.actual_twist = twist;

  // Obstacle climbing: a wheel stepping up onto an obstacle must pass the climb rule.
  const auto positions = contact_positions();
  double available_total = 0;
  double demand_total = 0;
  for (const auto& w : traction) {
    available_total += w.available_n;
    demand_total += std::abs(w.demand_long_n);
  }
  bool blocked = false;
  std::array<double, kWheelCount> elevation = state_.wheel_elevation_m;
  for (std::size_t i = 0; i < kWheelCount; ++i) {
    const double h = terrain_.obstacle_height(positions[i]);
    if (h > elevation[i] + 1e-12) {
      const double climb = h - elevation[i];
      const double required = in.normal_n[i] * climb / geometry.wheel_radius_m + demand_total;
      const double margin = required > 0 ? available_total / required : std::numeric_limits<double>::infinity();
      if (obstacle_check(climb, geometry.wheel_radius_m, margin) == ObstacleVerdict::Blocked) {
        if (!blocked_) {
          events_.push_back({SimEventKind::ObstacleBlocked, state_.time_s,
                             std::string("wheel ") + wheel_name(i) + " blocked by obstacle"});
        }
        blocked = true;
      } else {
        events_.push_back({SimEventKind::ObstacleClimbed, state_.time_s,
                           std::string("wheel ") + wheel_name(i) + " climbed obstacle"});
        elevation[i] = h;
      }
    } else {
      elevation[i] = h;
    }
  }
  blocked_ = blocked;
  if (blocked) {
    state_.true_pose = previous;
    state_.actual_twist = {};
    for (std::size_t i = 0; i < kWheelCount; ++i) {
      if (std::abs(state_.drive_motors[i].speed_radps) > 1e-9) state_.slip_ratios[i] = 1.0;
    }
  } else {
    state_.wheel_elevation_m = elevation;
  }

  update_attitude();
  state_.time_s = static_cast<double>(++state_.tick) * dt;
}

void sim_step(World& world, const WheelSetpointArray& setpoints, double dt) {
  if (std::abs(dt - world.config().rates.physics_dt()) > 1e-12) {
    throw std::invalid_argument("sim_step must be called with the physics period");
  }
  world.step(setpoints);
}

}  // namespace emrs::sim
