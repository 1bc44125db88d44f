#pragma once

#include <cstdint>
#include <deque>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "emrs/harness/rover_loop.hpp"
#include "emrs/harness/scenario.hpp"
#include "emrs/teleop/protocol.hpp"

namespace emrs::teleop {

struct WatchdogActions {
  bool inject_zero_speed{false};
  std::optional<std::string> advisory;
  bool publish_telemetry{false};
};

/// Operator-link deadman and telemetry cadence.
///
/// While the manager is driving, silence longer than the timeout injects one
/// zero-speed command per silence episode and raises a CommandTimeout advisory.
class SessionWatchdog {
 public:
  explicit SessionWatchdog(double timeout_s = 0.5, double telemetry_hz = 20.0)
      : timeout_s_(timeout_s), telemetry_period_s_(1.0 / telemetry_hz) {}

  void on_command(double now_s);
  WatchdogActions tick(double now_s, ManagerStateKind state);

  std::optional<double> last_command_s() const { return last_command_s_; }

 private:
  double timeout_s_;
  double telemetry_period_s_;
  std::optional<double> last_command_s_;
  bool fired_{false};
  long telemetry_index_{0};
};

inline WatchdogActions session_tick(SessionWatchdog& session, double now_s, ManagerStateKind state) {
  return session.tick(now_s, state);
}

using ClientId = std::uint64_t;

struct AppliedCommand {
  ClientId client;
  std::optional<std::uint64_t> seq;
  std::string type;
  double time_s;
  bool forwarded;
};

/// Sole owner and stepper of the simulated rover behind the teleop service.
///
/// Producers on any thread call submit(); the stepper thread calls advance_to(),
/// which applies queued commands in receipt order and then steps the world.
class TeleopCore {
 public:
  struct Output {
    std::vector<std::string> telemetry;
    std::vector<std::pair<ClientId, std::string>> replies;
  };

  TeleopCore(harness::ScenarioSet scenario, std::string terrain, std::uint64_t seed);

  ClientId connect();
  void submit(ClientId client, ClientMessage message);

  /// Applies pending commands and advances the simulation to `time_s` (monotone).
  Output advance_to(double time_s);

  double time_s() const;
  std::string terrain_name() const;
  std::string healthz_json() const;
  std::vector<AppliedCommand> applied_log() const;
  TelemetryFrame latest_frame() const;

 private:
  void apply(ClientId client, const ClientMessage& message, Output& out);
  void load(const std::string& terrain);
  TelemetryFrame frame() const;

  mutable std::mutex queue_mutex_;
  std::deque<std::pair<ClientId, ClientMessage>> queue_;
  ClientId next_client_{1};

  mutable std::mutex state_mutex_;
  harness::ScenarioSet scenario_;
  std::uint64_t seed_;
  std::string terrain_;
  std::unique_ptr<harness::RoverLoop> loop_;
  SessionWatchdog watchdog_;
  double epoch_s_{0};
  std::uint64_t sequence_{0};
  std::string advisory_;
  std::optional<ClientId> last_commander_;
  std::vector<AppliedCommand> log_;
  TelemetryFrame latest_;
};

}  // namespace emrs::teleop
