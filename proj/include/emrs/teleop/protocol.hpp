#pragma once

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <variant>

#include "emrs/kinematics.hpp"
#include "emrs/telemetry.hpp"

namespace emrs::teleop {

inline constexpr double kMaxTiltDeg = 30.0;
inline constexpr std::size_t kMaxTelemetryBytes = 4096;

namespace client_command {
struct Speed {
  BodyMotionCommand motion;
  bool operator==(const Speed&) const = default;
};
struct ChangeMode {
  LocomotionMode mode;
  bool operator==(const ChangeMode&) const = default;
};
struct EStop {
  bool operator==(const EStop&) const = default;
};
struct Reset {
  bool operator==(const Reset&) const = default;
};
struct LoadScenario {
  std::string name;
  bool operator==(const LoadScenario&) const = default;
};
struct SetTilt {
  double angle_deg;
  bool operator==(const SetTilt&) const = default;
};
}  // namespace client_command

using ClientCommand = std::variant<client_command::Speed, client_command::ChangeMode, client_command::EStop,
                                   client_command::Reset, client_command::LoadScenario, client_command::SetTilt>;

std::string_view type_name(const ClientCommand& cmd);

class MalformedMessage : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A command with its optional client-assigned sequence number.
struct ClientMessage {
  ClientCommand command;
  std::optional<std::uint64_t> seq;
  bool operator==(const ClientMessage&) const = default;
};

/// Strict parse of one text frame. Units: m/s, rad/s, rad for headings, deg for tilt.
ClientMessage decode_message(const std::string& text);
ClientCommand decode_command(const std::string& text);
std::string encode_command(const ClientCommand& cmd, std::optional<std::uint64_t> seq = std::nullopt);

/// Telemetry as one JSON text frame, fixed field order, 9 significant digits.
std::string encode_telemetry(const TelemetryFrame& frame);
TelemetryFrame decode_telemetry(const std::string& text);

std::string encode_error(const std::string& message, std::optional<std::uint64_t> seq = std::nullopt);
std::string encode_ack(const ClientCommand& cmd, std::optional<std::uint64_t> seq);

std::optional<LocomotionMode> parse_mode(std::string_view text);

}  // namespace emrs::teleop
