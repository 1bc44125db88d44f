#pragma once

#include <array>
#include <optional>
#include <string_view>

namespace emrs {

enum class FaultReason {
  EStop,
  OverCurrent,
  OverTemperature,
  WheelTrackingError,
  SteeringTrackingError,
  CommandTimeout,
  TransitionTimeout,
  TipOver,
  OutOfBounds,
};

inline constexpr std::array<FaultReason, 9> kAllFaultReasons{
    FaultReason::EStop,          FaultReason::OverCurrent,       FaultReason::OverTemperature,
    FaultReason::WheelTrackingError, FaultReason::SteeringTrackingError, FaultReason::CommandTimeout,
    FaultReason::TransitionTimeout,  FaultReason::TipOver,           FaultReason::OutOfBounds};

inline constexpr std::string_view to_string(FaultReason reason) {
  switch (reason) {
    case FaultReason::EStop: return "EStop";
    case FaultReason::OverCurrent: return "OverCurrent";
    case FaultReason::OverTemperature: return "OverTemperature";
    case FaultReason::WheelTrackingError: return "WheelTrackingError";
    case FaultReason::SteeringTrackingError: return "SteeringTrackingError";
    case FaultReason::CommandTimeout: return "CommandTimeout";
    case FaultReason::TransitionTimeout: return "TransitionTimeout";
    case FaultReason::TipOver: return "TipOver";
    case FaultReason::OutOfBounds: return "OutOfBounds";
  }
  return "?";
}

inline std::optional<FaultReason> parse_fault_reason(std::string_view text) {
  for (const auto reason : kAllFaultReasons) {
    if (to_string(reason) == text) return reason;
  }
  return std::nullopt;
}

}  // namespace emrs
