#pragma once

#include <cstdint>
#include <optional>
#include <string>

#include "emrs/harness/scenario.hpp"
#include "emrs/locomotion_manager.hpp"
#include "emrs/sim/random.hpp"
#include "emrs/sim/tracking.hpp"
#include "emrs/sim/world.hpp"
#include "emrs/telemetry.hpp"

namespace emrs::harness {

/// Closed loop of manager, simulated rover, health supervisor and tracker.
///
/// Each call to step() advances one physics period. The manager and the
/// supervisor run at control rate, the tracker at its own rate, and a telemetry
/// frame is published at telemetry rate.
class RoverLoop {
 public:
  RoverLoop(const ScenarioSet& scenario, sim::TerrainModel terrain, const Pose2p5& start, const sim::SplitRng& rng);

  /// Routes a command to the manager. Operator commands feed the deadman.
  ManagerOutput command(const ManagerCommand& cmd, bool from_operator = true);

  void step();

  double time_s() const { return world_.state().time_s; }
  std::uint64_t tick() const { return world_.state().tick; }
  bool control_tick() const { return control_tick_; }

  /// Latest published frame and whether the last step published it.
  const TelemetryFrame& telemetry() const { return published_; }
  bool telemetry_published() const { return published_now_; }

  const sim::TrackingMeasurement& tracked() const { return tracked_; }
  bool tracking_updated() const { return tracked_now_; }

  /// Builds a frame for the current instant without publishing it.
  TelemetryFrame snapshot() const;

  sim::World& world() { return world_; }
  const sim::World& world() const { return world_; }
  LocomotionManager& manager() { return manager_; }
  const LocomotionManager& manager() const { return manager_; }

  std::optional<FaultReason> fault() const;
  const std::string& fault_detail() const { return fault_detail_; }

  void set_deadman(bool enabled) { deadman_ = enabled; }
  void set_advisory(std::string text) { advisory_ = std::move(text); }
  std::optional<double> last_command_time_s() const { return last_command_time_; }

 private:
  void trip(FaultReason reason, std::string detail);

  sim::World world_;
  LocomotionManager manager_;
  HealthSupervisor supervisor_;
  sim::TrackingEmulator tracker_;
  sim::TrackingMeasurement tracked_;
  TelemetryFrame published_;
  std::uint64_t sequence_{0};
  int control_divider_;
  int telemetry_divider_;
  bool control_tick_{false};
  bool published_now_{false};
  bool tracked_now_{false};
  bool deadman_{true};
  std::optional<double> last_command_time_;
  std::string advisory_;
  std::string fault_detail_;
  WheelSetpointArray setpoints_{};
};

}  // namespace emrs::harness
