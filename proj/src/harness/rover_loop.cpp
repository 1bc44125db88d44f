#include "emrs/harness/rover_loop.hpp"

#include <cmath>
#include <stdexcept>

namespace emrs::harness {

namespace {

int divider(double fast_hz, double slow_hz, const char* what) {
  const double ratio = fast_hz / slow_hz;
  const auto n = static_cast<int>(std::lround(ratio));
  if (n < 1 || std::abs(ratio - n) > 1e-9) {
    throw std::invalid_argument(std::string("physics rate must be a multiple of the ") + what + " rate");
  }
  return n;
}

}  // namespace

RoverLoop::RoverLoop(const ScenarioSet& scenario, sim::TerrainModel terrain, const Pose2p5& start,
                     const sim::SplitRng& rng)
    : world_(scenario.sim, std::move(terrain), start),
      manager_(scenario.manager_config()),
      supervisor_(scenario.safety),
      tracker_(rng.split("tracking"), scenario.tracking, scenario.sim.rates.tracking_hz),
      control_divider_(scenario.sim.rates.control_divider()),
      telemetry_divider_(divider(scenario.sim.rates.physics_hz, scenario.sim.rates.telemetry_hz, "telemetry")) {
  tracked_ = tracker_.measure(world_.state().true_pose, 0.0);
  published_ = snapshot();
}

ManagerOutput RoverLoop::command(const ManagerCommand& cmd, bool from_operator) {
  if (from_operator) last_command_time_ = time_s();
  auto out = manager_.handle_command(cmd, time_s());
  setpoints_ = out.setpoints;
  return out;
}

std::optional<FaultReason> RoverLoop::fault() const {
  if (const auto* f = std::get_if<manager_state::Fault>(&manager_.state())) return f->reason;
  return std::nullopt;
}

void RoverLoop::trip(FaultReason reason, std::string detail) {
  if (manager_.state_kind() == ManagerStateKind::Fault) return;
  manager_.raise_fault(reason);
  setpoints_ = manager_.setpoints();
  fault_detail_ = std::move(detail);
}

TelemetryFrame RoverLoop::snapshot() const {
  const auto& s = world_.state();
  TelemetryFrame f;
  f.sequence = sequence_;
  f.timestamp_s = s.time_s;
  f.manager_state = manager_.state_kind();
  f.mode = manager_.mode();
  f.commanded_twist = manager_.commanded_twist();
  f.actual_twist = s.actual_twist;
  for (std::size_t i = 0; i < kWheelCount; ++i) {
    auto& w = f.wheels[i];
    w.steering_setpoint_rad = setpoints_[i].steering_angle_rad;
    w.steering_angle_rad = s.wheel_states[i].steering_angle_rad;
    w.speed_setpoint_radps = setpoints_[i].wheel_speed_radps;
    w.speed_radps = s.drive_motors[i].speed_radps;
    w.drive_current_a = s.drive_motors[i].current_a;
    w.drive_temp_c = s.drive_motors[i].temp_c;
    w.steer_current_a = s.steer_motors[i].current_a;
    w.steer_temp_c = s.steer_motors[i].temp_c;
    w.slip_ratio = s.slip_ratios[i];
  }
  f.true_pose = s.true_pose;
  f.tracked_pose = tracked_.pose;
  f.fault = fault();
  if (deadman_) f.last_command_time_s = last_command_time_;
  f.advisory = advisory_;
  return f;
}

void RoverLoop::step() {
  const auto tick = world_.state().tick;
  const double now = time_s();
  control_tick_ = tick % static_cast<std::uint64_t>(control_divider_) == 0;
  if (control_tick_) {
    SteeringAngles measured{};
    for (std::size_t i = 0; i < kWheelCount; ++i) measured[i] = world_.state().wheel_states[i].steering_angle_rad;
    setpoints_ = manager_.tick(now, 1.0 / world_.config().rates.control_hz, measured);
    const auto verdict = supervisor_.supervise(snapshot(), now);
    if (verdict.fault) trip(*verdict.fault, verdict.detail);
  }

  world_.step(setpoints_);
  if (const auto& terminal = world_.state().terminal) {
    trip(terminal->kind == sim::SimEventKind::TipOver ? FaultReason::TipOver : FaultReason::OutOfBounds,
         terminal->detail);
  }

  tracked_now_ = tracker_.due(time_s());
  if (tracked_now_) tracked_ = tracker_.measure(world_.state().true_pose, time_s());

  published_now_ = world_.state().tick % static_cast<std::uint64_t>(telemetry_divider_) == 0;
  if (published_now_) {
    ++sequence_;
    published_ = snapshot();
  }
}

}  // namespace emrs::harness
