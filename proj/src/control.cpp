#include "emrs/control.hpp"

#include <algorithm>
#include <cmath>

namespace emrs::control {

MotorState motor_step(const MotorState& state, const MotorParams& params, double torque_cmd_nm,
                      double load_torque_nm, double dt) {
  MotorState next = state;
  const double accel =
      (torque_cmd_nm - load_torque_nm - params.damping_nms * state.speed_radps) / params.inertia_kgm2;
  next.speed_radps = state.speed_radps + accel * dt;
  next.accel_radps2 = accel;
  next.current_a = torque_cmd_nm / params.torque_constant_nm_per_a;
  const double heat = next.current_a * next.current_a * params.resistance_ohm;
  const double cooling = params.dissipation_w_per_c * (state.temp_c - params.ambient_c);
  next.temp_c = std::max(params.ambient_c, state.temp_c + (heat - cooling) * dt / params.thermal_capacity_j_per_c);
  return next;
}

VelocityLoopOutput velocity_loop_step(const VelocityLoopState& state, const VelocityLoopGains& gains,
                                      double setpoint_radps, double measured_radps, double dt) {
  const double error = setpoint_radps - measured_radps;
  const double candidate =
      std::clamp(state.integrator + error * dt, -gains.integrator_limit, gains.integrator_limit);
  const double unsaturated = gains.kp * error + gains.ki * candidate;

  VelocityLoopState next{state.integrator, error};
  double torque = unsaturated;
  if (std::abs(unsaturated) > gains.output_limit_nm) {
    torque = std::copysign(gains.output_limit_nm, unsaturated);
    // Integrator frozen while saturated; only allow it to unwind.
    if (std::abs(candidate) < std::abs(state.integrator)) next.integrator = candidate;
  } else {
    next.integrator = candidate;
  }
  torque = std::clamp(gains.kp * error + gains.ki * next.integrator, -gains.output_limit_nm, gains.output_limit_nm);
  return {torque, next};
}

PositionLoopOutput position_loop_step(const PositionLoopState& state, const PositionLoopGains& gains,
                                      double setpoint_rad, double measured_rad, double measured_rate_radps,
                                      double dt) {
  const double setpoint_rate = state.primed ? (setpoint_rad - state.last_setpoint) / dt : 0.0;
  const double error = setpoint_rad - measured_rad;
  const double error_rate = setpoint_rate - measured_rate_radps;
  const double rate =
      std::clamp(gains.kp * error + gains.kd * error_rate, -gains.output_limit_radps, gains.output_limit_radps);
  return {rate, {setpoint_rad, true}};
}

}  // namespace emrs::control
