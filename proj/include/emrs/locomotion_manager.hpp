#pragma once

#include <optional>
#include <string>
#include <variant>

#include "emrs/fault.hpp"
#include "emrs/geometry.hpp"
#include "emrs/kinematics.hpp"
#include "emrs/steering_trajectory.hpp"
#include "emrs/telemetry.hpp"

namespace emrs {

namespace manager_state {
struct Idle {
  bool operator==(const Idle&) const = default;
};
struct Driving {
  LocomotionMode mode;
  bool operator==(const Driving&) const = default;
};
struct Reconfiguring {
  std::optional<LocomotionMode> from;
  LocomotionMode to;
  SteeringTrajectory trajectory;
  double start_time_s;
};
struct Fault {
  FaultReason reason;
  bool operator==(const Fault&) const = default;
};
}  // namespace manager_state

using ManagerState =
    std::variant<manager_state::Idle, manager_state::Driving, manager_state::Reconfiguring, manager_state::Fault>;

ManagerStateKind kind_of(const ManagerState& state);

namespace manager_command {
struct Speed {
  BodyMotionCommand motion;
};
struct ChangeMode {
  LocomotionMode mode;
};
struct EStop {};
struct Reset {};
}  // namespace manager_command

using ManagerCommand =
    std::variant<manager_command::Speed, manager_command::ChangeMode, manager_command::EStop, manager_command::Reset>;

struct ManagerConfig {
  RoverGeometry geometry;
  KinematicLimits limits;
  SteeringProfile profile;
  /// Extra time after the planned trajectory before a reconfiguration is declared stuck.
  double transition_grace_s{2.0};
  /// Measured steering must be this close to the home configuration to finish a reconfiguration.
  double steering_settle_tol_rad{0.03};
};

struct ManagerOutput {
  WheelSetpointArray setpoints{};
  /// Set when the command was refused (InvalidCommandInState or a kinematics error).
  std::optional<std::string> rejection;
};

/// Steering configuration a mode starts from.
SteeringAngles home_configuration(LocomotionMode mode, const RoverGeometry& geometry, double crab_heading_rad = 0);

/// Supervisory locomotion state machine.
///
/// Speed commands are only honoured in Driving; mode changes stop the wheels,
/// re-aim the steering along a synchronised trajectory and then resume. Steering
/// setpoints are rate limited at every tick. Fault is absorbing until Reset.
class LocomotionManager {
 public:
  explicit LocomotionManager(ManagerConfig config);

  ManagerOutput handle_command(const ManagerCommand& command, double now_s);

  /// Control-rate update. `measured_steering`, when given, must settle on the
  /// home configuration before a reconfiguration completes.
  WheelSetpointArray tick(double now_s, double dt_s, const std::optional<SteeringAngles>& measured_steering = {});

  void raise_fault(FaultReason reason);

  const ManagerState& state() const { return state_; }
  ManagerStateKind state_kind() const { return kind_of(state_); }
  std::optional<LocomotionMode> mode() const;
  /// Setpoints emitted by the most recent handle_command/tick.
  const WheelSetpointArray& setpoints() const { return output_; }
  /// Body command currently being executed (zero outside Driving).
  BodyTwist commanded_twist() const;
  const ManagerConfig& config() const { return config_; }

 private:
  ManagerOutput reject(std::string message);
  void stop_wheels();
  void enter_reconfiguring(std::optional<LocomotionMode> from, LocomotionMode to, double now_s);
  std::optional<std::string> apply_speed(const BodyMotionCommand& motion);
  void refresh_output_speeds();

  ManagerConfig config_;
  ManagerState state_{manager_state::Idle{}};
  SteeringAngles steering_{};
  WheelSetpointArray target_{};
  WheelSetpointArray output_{};
  std::optional<BodyMotionCommand> active_;
  std::optional<BodyMotionCommand> latched_;
  double crab_heading_{0};
};

struct SafetyLimits {
  double max_motor_current_a{10.0};
  double max_motor_temp_c{80.0};
  double max_tracking_err_radps{1.0};
  double max_steering_err_rad{0.15};
  double command_timeout_s{0.5};
  /// Tracking errors must persist this long before they trip.
  double sustain_window_s{0.5};
};

struct HealthVerdict {
  std::optional<FaultReason> fault;
  std::string detail;
  bool healthy() const { return !fault.has_value(); }
};

/// Watches telemetry against SafetyLimits. Current and temperature trip
/// immediately; tracking errors trip when sustained; the deadman trips when the
/// manager is driving and the operator has been silent too long. Steering error
/// is not judged while reconfiguring, where the manager's own deadline applies.
class HealthSupervisor {
 public:
  explicit HealthSupervisor(SafetyLimits limits = {}) : limits_(limits) {}

  HealthVerdict supervise(const TelemetryFrame& frame, double now_s);

  const SafetyLimits& limits() const { return limits_; }

 private:
  SafetyLimits limits_;
  std::optional<double> wheel_error_since_;
  std::optional<double> steering_error_since_;
};

}  // namespace emrs
