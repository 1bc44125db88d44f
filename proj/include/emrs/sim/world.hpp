#pragma once

#include <array>
#include <cstdint>
#include <numbers>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "emrs/control.hpp"
#include "emrs/kinematics.hpp"
#include "emrs/sim/loads.hpp"
#include "emrs/sim/terrain.hpp"
#include "emrs/sim/traction.hpp"

namespace emrs::sim {

inline constexpr double kMaxPayloadKg = 300.0;

struct SimRates {
  double physics_hz{1000.0};
  double control_hz{100.0};
  double telemetry_hz{20.0};
  double tracking_hz{60.0};

  double physics_dt() const { return 1.0 / physics_hz; }
  int control_divider() const;
};

struct WheelDriveConfig {
  /// Rotor inertia at the wheel; the chassis share is added per wheel.
  double rotor_inertia_kgm2{0.2};
  control::MotorParams motor{1.6, 0.5, 16.0, 0.5, 400.0, 0.5, 20.0};
  control::VelocityLoopGains gains{40.0, 100.0, 120.0, 0.8};
};

struct SteeringDriveConfig {
  control::MotorParams motor{0.05, 0.2, 2.0, 1.0, 200.0, 0.5, 20.0};
  /// Inner rate loop of the steering drive, run at physics rate.
  control::VelocityLoopGains rate_gains{25.0, 250.0, 20.0, 0.08};
  control::PositionLoopGains position_gains;
};

struct SimConfig {
  RoverGeometry geometry;
  Eigen::Vector3d payload_cog_body{0.0, 0.0, 0.4};
  KinematicLimits limits;
  WheelDriveConfig wheel_drive;
  SteeringDriveConfig steering;
  TractionParams traction;
  SimRates rates;
  double gravity_mps2{kGravity};
};

enum class SimEventKind { TipOver, OutOfBounds, ObstacleBlocked, ObstacleClimbed };

struct SimEvent {
  SimEventKind kind;
  double time_s;
  std::string detail;
};

std::string_view to_string(SimEventKind kind);

struct WorldState {
  Pose2p5 true_pose;
  double height_m{0};
  WheelStateArray wheel_states{};
  std::array<control::MotorState, kWheelCount> drive_motors{};
  std::array<control::MotorState, kWheelCount> steer_motors{};
  double payload_kg{0};
  double blade_drag_n{0};
  double time_s{0};
  std::uint64_t tick{0};
  BodyTwist actual_twist;
  std::array<double, kWheelCount> slip_ratios{};
  std::array<double, kWheelCount> normal_loads_n{};
  std::array<double, kWheelCount> wheel_elevation_m{};
  /// Set once the simulation hit TipOver or OutOfBounds; the world is frozen afterwards.
  std::optional<SimEvent> terminal;
};

/// Deterministic 2.5D rover world.
///
/// One physics tick runs, in order: the control loops (at control rate), the
/// motor plants, the traction/slip model, pose integration and attitude from
/// the terrain under the four contacts.
class World {
 public:
  World(SimConfig config, TerrainModel terrain, const Pose2p5& start);

  void step(const WheelSetpointArray& setpoints);

  const WorldState& state() const { return state_; }
  const SimConfig& config() const { return config_; }
  const TerrainModel& terrain() const { return terrain_; }
  const std::vector<SimEvent>& events() const { return events_; }

  void set_payload(double payload_kg);
  void set_blade_drag(double drag_n) { state_.blade_drag_n = drag_n; }
  void set_tilt(double angle_rad);
  /// Locks the steering actuator of one wheel (fault injection).
  void stall_steering(std::size_t wheel) { stalled_steering_ = wheel; }

  /// Steering contacts in the world frame.
  std::array<Eigen::Vector2d, kWheelCount> contact_positions() const;
  Eigen::Vector3d cog_body() const;
  /// Normal loads for the current pose and steering.
  Eigen::Vector4d current_wheel_loads() const;

 private:
  void run_control(const WheelSetpointArray& setpoints);
  void update_attitude();
  void set_terminal(SimEventKind kind, std::string detail);
  double wheel_inertia() const;

  SimConfig config_;
  TerrainModel terrain_;
  WorldState state_;
  std::vector<SimEvent> events_;
  std::array<control::VelocityLoopState, kWheelCount> wheel_loops_{};
  std::array<control::VelocityLoopState, kWheelCount> steer_rate_loops_{};
  std::array<control::PositionLoopState, kWheelCount> steer_position_loops_{};
  std::array<double, kWheelCount> drive_torque_cmd_{};
  std::array<double, kWheelCount> steer_rate_cmd_{};
  std::optional<std::size_t> stalled_steering_;
  bool blocked_{false};
  int control_divider_{10};
};

/// Advances `world` by one physics period; `dt` must equal that period.
void sim_step(World& world, const WheelSetpointArray& setpoints, double dt);

}  // namespace emrs::sim
