#include "emrs/locomotion_manager.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace emrs {

namespace ms = manager_state;
namespace mc = manager_command;

ManagerStateKind kind_of(const ManagerState& state) {
  return static_cast<ManagerStateKind>(state.index());
}

SteeringAngles home_configuration(LocomotionMode mode, const RoverGeometry& geometry, double crab_heading_rad) {
  switch (mode) {
    case LocomotionMode::PointTurn: return point_turn_angles(geometry);
    case LocomotionMode::Crab: {
      const double limit = std::min(geometry.steering_limit_rad, std::numbers::pi / 2);
      const double h = std::clamp(crab_heading_rad, -limit, limit);
      return {h, h, h, h};
    }
    case LocomotionMode::Ackermann:
    case LocomotionMode::SkidSteer: break;
  }
  return {};
}

LocomotionManager::LocomotionManager(ManagerConfig config) : config_(std::move(config)) {
  config_.geometry.validate();
}

std::optional<LocomotionMode> LocomotionManager::mode() const {
  if (const auto* d = std::get_if<ms::Driving>(&state_)) return d->mode;
  if (const auto* r = std::get_if<ms::Reconfiguring>(&state_)) return r->to;
  return std::nullopt;
}

BodyTwist LocomotionManager::commanded_twist() const {
  if (std::holds_alternative<ms::Driving>(state_) && active_) return emrs::commanded_twist(*active_);
  return {};
}

void LocomotionManager::stop_wheels() {
  for (auto& w : target_) w.wheel_speed_radps = 0.0;
  for (auto& w : output_) w.wheel_speed_radps = 0.0;
  active_.reset();
}

void LocomotionManager::refresh_output_speeds() {
  const bool driving = std::holds_alternative<ms::Driving>(state_);
  for (std::size_t i = 0; i < kWheelCount; ++i) {
    output_[i].steering_angle_rad = steering_[i];
    output_[i].wheel_speed_radps = driving ? target_[i].wheel_speed_radps : 0.0;
  }
}

ManagerOutput LocomotionManager::reject(std::string message) {
  stop_wheels();
  refresh_output_speeds();
  return {output_, std::move(message)};
}

void LocomotionManager::enter_reconfiguring(std::optional<LocomotionMode> from, LocomotionMode to, double now_s) {
  stop_wheels();
  const auto home = home_configuration(to, config_.geometry, crab_heading_);
  for (std::size_t i = 0; i < kWheelCount; ++i) target_[i] = {home[i], 0.0};
  state_ = ms::Reconfiguring{from, to, plan_steering_transition(steering_, home, config_.profile), now_s};
}

std::optional<std::string> LocomotionManager::apply_speed(const BodyMotionCommand& motion) {
  try {
    const auto wheels = inverse_kinematics(motion, config_.geometry, config_.limits);
    target_ = wheels;
    active_ = motion;
    if (const auto* crab = std::get_if<CrabCommand<double>>(&motion)) crab_heading_ = crab->heading_rad;
    return std::nullopt;
  } catch (const KinematicsError& e) {
    return std::string(to_string(e.kind())) + ": " + e.what();
  }
}

ManagerOutput LocomotionManager::handle_command(const ManagerCommand& command, double now_s) {
  if (std::holds_alternative<mc::EStop>(command)) {
    state_ = ms::Fault{FaultReason::EStop};
    stop_wheels();
    latched_.reset();
    refresh_output_speeds();
    return {output_, std::nullopt};
  }
  if (std::holds_alternative<mc::Reset>(command)) {
    if (!std::holds_alternative<ms::Fault>(state_)) return reject("InvalidCommandInState: reset outside fault");
    state_ = ms::Idle{};
    stop_wheels();
    refresh_output_speeds();
    return {output_, std::nullopt};
  }
  if (std::holds_alternative<ms::Fault>(state_)) return reject("InvalidCommandInState: rover is in fault");

  if (const auto* change = std::get_if<mc::ChangeMode>(&command)) {
    if (const auto* driving = std::get_if<ms::Driving>(&state_)) {
      if (driving->mode != change->mode) {
        latched_.reset();
        enter_reconfiguring(driving->mode, change->mode, now_s);
      }
    } else if (const auto* reconf = std::get_if<ms::Reconfiguring>(&state_)) {
      if (reconf->to != change->mode) {
        const auto from = reconf->from;
        latched_.reset();
        enter_reconfiguring(from, change->mode, now_s);
      }
    } else {
      enter_reconfiguring(std::nullopt, change->mode, now_s);
    }
    refresh_output_speeds();
    return {output_, std::nullopt};
  }

  const auto& motion = std::get<mc::Speed>(command).motion;
  if (const auto* driving = std::get_if<ms::Driving>(&state_)) {
    if (mode_of(motion) != driving->mode) return reject("InvalidCommandInState: speed command for another mode");
    if (auto error = apply_speed(motion)) return reject(*error);
    refresh_output_speeds();
    return {output_, std::nullopt};
  }
  if (const auto* reconf = std::get_if<ms::Reconfiguring>(&state_)) {
    if (mode_of(motion) != reconf->to) return reject("InvalidCommandInState: speed command for another mode");
    latched_ = motion;
    refresh_output_speeds();
    return {output_, std::nullopt};
  }
  return reject("InvalidCommandInState: no locomotion mode selected");
}

WheelSetpointArray LocomotionManager::tick(double now_s, double dt_s,
                                           const std::optional<SteeringAngles>& measured_steering) {
  if (auto* reconf = std::get_if<ms::Reconfiguring>(&state_)) {
    const double elapsed = now_s - reconf->start_time_s;
    // Wheels resume only after a full tick parked at the home configuration.
    const bool parked = steering_ == reconf->trajectory.end();
    steering_ = reconf->trajectory.sample(elapsed);
    bool settled = parked && elapsed >= reconf->trajectory.duration_s();
    if (settled && measured_steering) {
      for (std::size_t i = 0; i < kWheelCount; ++i) {
        if (std::abs((*measured_steering)[i] - reconf->trajectory.end()[i]) > config_.steering_settle_tol_rad) {
          settled = false;
        }
      }
    }
    if (settled) {
      const LocomotionMode mode = reconf->to;
      state_ = ms::Driving{mode};
      const auto pending = latched_;
      latched_.reset();
      if (!pending || apply_speed(*pending)) {
        apply_speed(zero_command(mode, crab_heading_));
      }
    } else if (elapsed > reconf->trajectory.duration_s() + config_.transition_grace_s) {
      state_ = ms::Fault{FaultReason::TransitionTimeout};
      stop_wheels();
    }
  } else if (std::holds_alternative<ms::Driving>(state_)) {
    const double step = config_.profile.max_rate_radps * dt_s;
    for (std::size_t i = 0; i < kWheelCount; ++i) {
      steering_[i] += std::clamp(target_[i].steering_angle_rad - steering_[i], -step, step);
    }
  }
  refresh_output_speeds();
  return output_;
}

void LocomotionManager::raise_fault(FaultReason reason) {
  state_ = ms::Fault{reason};
  latched_.reset();
  stop_wheels();
  refresh_output_speeds();
}

HealthVerdict HealthSupervisor::supervise(const TelemetryFrame& frame, double now_s) {
  for (std::size_t i = 0; i < kWheelCount; ++i) {
    const auto& w = frame.wheels[i];
    if (std::max(std::abs(w.drive_current_a), std::abs(w.steer_current_a)) > limits_.max_motor_current_a) {
      return {FaultReason::OverCurrent, std::string("motor current limit exceeded on ") + wheel_name(i)};
    }
    if (std::max(w.drive_temp_c, w.steer_temp_c) > limits_.max_motor_temp_c) {
      return {FaultReason::OverTemperature, std::string("motor temperature limit exceeded on ") + wheel_name(i)};
    }
  }

  const auto sustained = [&](bool violating, std::optional<double>& since) {
    if (!violating) {
      since.reset();
      return false;
    }
    if (!since) since = now_s;
    return now_s - *since > limits_.sustain_window_s;
  };

  bool wheel_violation = false;
  bool steering_violation = false;
  for (const auto& w : frame.wheels) {
    wheel_violation |= std::abs(w.speed_setpoint_radps - w.speed_radps) > limits_.max_tracking_err_radps;
    steering_violation |= std::abs(w.steering_setpoint_rad - w.steering_angle_rad) > limits_.max_steering_err_rad;
  }
  if (frame.manager_state == ManagerStateKind::Reconfiguring) steering_violation = false;

  if (sustained(wheel_violation, wheel_error_since_)) {
    return {FaultReason::WheelTrackingError, "wheel velocity tracking error sustained"};
  }
  if (sustained(steering_violation, steering_error_since_)) {
    return {FaultReason::SteeringTrackingError, "steering position error sustained"};
  }
  if (frame.manager_state == ManagerStateKind::Driving && frame.last_command_time_s &&
      now_s - *frame.last_command_time_s > limits_.command_timeout_s) {
    return {FaultReason::CommandTimeout, "no operator command within timeout"};
  }
  return {};
}

}  // namespace emrs
