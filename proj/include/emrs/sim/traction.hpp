#pragma once

#include <array>

#include <Eigen/Dense>

#include "emrs/geometry.hpp"
#include "emrs/sim/terrain.hpp"

namespace emrs::sim {

struct TractionParams {
  /// Contact patch area feeding the cohesive thrust term.
  double contact_area_m2{0.02};
  double patch_length_m{0.1};
  double rolling_resistance{0.05};
  /// Resistance of a contact patch dragged round a tight turn, per unit load.
  double turn_scrub_coeff{1.875};
  /// Speed below which resistive forces fade in linearly (avoids chatter at rest).
  double resistive_speed_scale_mps{0.01};
};

/// Thrust ratio -> slip ratio: zero up to the knee, linear to full slip at 1.
double slip_from_thrust_ratio(double thrust_ratio, double slip_knee);

/// Maximum soil thrust a wheel can develop under `normal_n`.
double available_thrust(double normal_n, const SoilParams& soil, const TractionParams& params);

struct TractionInputs {
  std::array<double, kWheelCount> normal_n{};
  std::array<double, kWheelCount> steering_rad{};
  std::array<double, kWheelCount> wheel_speed_radps{};
  std::array<double, kWheelCount> wheel_accel_radps2{};
  std::array<Eigen::Vector2d, kWheelCount> contacts{};
  /// In-plane gravity in the body frame (m/s^2).
  Eigen::Vector2d gravity_tangential{Eigen::Vector2d::Zero()};
  double mass_kg{0};
  double wheel_radius_m{0.15};
  /// Body twist from the previous step; orients drag and turn scrub.
  Eigen::Vector2d body_velocity{Eigen::Vector2d::Zero()};
  double body_yaw_rate{0};
  double blade_drag_n{0};
};

struct WheelTraction {
  double available_n{0};
  /// Force the wheel has to develop along / across its rolling direction.
  double demand_long_n{0};
  double demand_lat_n{0};
  double thrust_ratio{0};
  double slip{0};
  /// Ground reaction torque opposing the wheel drive.
  double load_torque_nm{0};
};

std::array<WheelTraction, kWheelCount> evaluate_traction(const TractionInputs& in, const SoilParams& soil,
                                                         const TractionParams& params);

/// Ground velocity of each contact (body frame) given wheel rates and slip.
std::array<Eigen::Vector2d, kWheelCount> contact_ground_velocities(
    const TractionInputs& in, const std::array<WheelTraction, kWheelCount>& traction);

enum class ObstacleVerdict { Traversable, Blocked };

/// A wheel can climb an obstacle no taller than its radius, provided the
/// available thrust covers what the climb needs.
ObstacleVerdict obstacle_check(double obstacle_height_m, double wheel_radius_m, double thrust_margin);

}  // namespace emrs::sim
