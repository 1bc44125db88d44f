#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>

#include "emrs/fault.hpp"
#include "emrs/kinematics.hpp"

namespace emrs {

enum class ManagerStateKind { Idle, Driving, Reconfiguring, Fault };

inline constexpr std::string_view to_string(ManagerStateKind kind) {
  switch (kind) {
    case ManagerStateKind::Idle: return "idle";
    case ManagerStateKind::Driving: return "driving";
    case ManagerStateKind::Reconfiguring: return "reconfiguring";
    case ManagerStateKind::Fault: return "fault";
  }
  return "?";
}

struct WheelTelemetry {
  double steering_setpoint_rad{0};
  double steering_angle_rad{0};
  double speed_setpoint_radps{0};
  double speed_radps{0};
  double drive_current_a{0};
  double drive_temp_c{0};
  double steer_current_a{0};
  double steer_temp_c{0};
  double slip_ratio{0};
  bool operator==(const WheelTelemetry&) const = default;
};

/// Immutable snapshot of the rover published at telemetry rate.
struct TelemetryFrame {
  std::uint64_t sequence{0};
  double timestamp_s{0};
  ManagerStateKind manager_state{ManagerStateKind::Idle};
  std::optional<LocomotionMode> mode;
  BodyTwist commanded_twist;
  BodyTwist actual_twist;
  std::array<WheelTelemetry, kWheelCount> wheels{};
  Pose2p5 true_pose;
  Pose2p5 tracked_pose;
  std::optional<FaultReason> fault;
  /// Receipt time of the latest operator command; absent when no deadman applies.
  std::optional<double> last_command_time_s;
  std::string advisory;
  bool operator==(const TelemetryFrame&) const = default;
};

}  // namespace emrs
