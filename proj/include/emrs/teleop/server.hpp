#pragma once

#include <atomic>
#include <filesystem>
#include <memory>
#include <string>
#include <thread>

#include "emrs/teleop/session.hpp"

namespace emrs::teleop {

struct ServerOptions {
  std::string address{"0.0.0.0"};
  unsigned short port{8080};
  std::filesystem::path static_dir;
  /// Simulation pacing relative to wall clock; 1 is real time.
  double time_scale{1.0};
};

/// HTTP + WebSocket front end: "/" static console files, "/healthz", "/ws".
///
/// One I/O thread serves all connections; a stepper thread advances the core
/// at wall-clock pace and fans telemetry out to every WebSocket client.
class TeleopServer {
 public:
  TeleopServer(TeleopCore& core, ServerOptions options);
  ~TeleopServer();

  /// Binds and starts the I/O and stepper threads. Returns the bound port.
  unsigned short start();
  void stop();
  /// Blocks until stop() is called from another thread or a signal arrives.
  void wait();

  unsigned short port() const { return port_; }

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
  unsigned short port_{0};
};

}  // namespace emrs::teleop
