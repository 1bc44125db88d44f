#pragma once

namespace emrs::control {

/// First-order DC drive referred to the wheel (or steering) shaft.
struct MotorParams {
  double inertia_kgm2{1.6};
  double damping_nms{0.5};
  double torque_constant_nm_per_a{8.0};
  double resistance_ohm{0.5};
  double thermal_capacity_j_per_c{400.0};
  double dissipation_w_per_c{0.5};
  double ambient_c{20.0};
};

struct MotorState {
  double speed_radps{0};
  double current_a{0};
  double temp_c{20.0};
  /// Shaft acceleration over the last step; diagnostic only.
  double accel_radps2{0};
};

/// One forward-Euler step of the drive plant.
///
/// speed' = (torque_cmd - load_torque - damping * speed) / inertia
/// current = torque_cmd / torque_constant
/// capacity * temp' = current^2 * resistance - dissipation * (temp - ambient)
MotorState motor_step(const MotorState& state, const MotorParams& params, double torque_cmd_nm,
                      double load_torque_nm, double dt);

struct VelocityLoopGains {
  double kp{40.0};
  double ki{100.0};
  double output_limit_nm{80.0};
  /// Anti-windup clamp on the integrator (rad/s * s).
  double integrator_limit{0.8};
};

struct VelocityLoopState {
  double integrator{0};
  double last_error{0};
};

struct VelocityLoopOutput {
  double torque_nm;
  VelocityLoopState state;
};

/// PI speed loop with clamped integrator, frozen while the output saturates.
VelocityLoopOutput velocity_loop_step(const VelocityLoopState& state, const VelocityLoopGains& gains,
                                      double setpoint_radps, double measured_radps, double dt);

struct PositionLoopGains {
  double kp{40.0};
  double kd{0.05};
  /// Rate command clamp (rad/s).
  double output_limit_radps{0.6};
};

struct PositionLoopState {
  double last_setpoint{0};
  bool primed{false};
};

struct PositionLoopOutput {
  double rate_cmd_radps;
  PositionLoopState state;
};

/// PD position loop producing a steering rate command.
///
/// The derivative acts on the error rate, estimated from the setpoint increment
/// and the measured rate.
PositionLoopOutput position_loop_step(const PositionLoopState& state, const PositionLoopGains& gains,
                                      double setpoint_rad, double measured_rad, double measured_rate_radps,
                                      double dt);

}  // namespace emrs::control
