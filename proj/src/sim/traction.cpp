#include "emrs/sim/traction.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <numbers>

namespace emrs::sim {

double slip_from_thrust_ratio(double thrust_ratio, double slip_knee) {
  if (!(thrust_ratio > slip_knee)) return 0.0;
  if (thrust_ratio >= 1.0) return 1.0;
  return (thrust_ratio - slip_knee) / (1.0 - slip_knee);
}

double available_thrust(double normal_n, const SoilParams& soil, const TractionParams& params) {
  const double tan_phi = std::tan(soil.friction_angle_deg * std::numbers::pi / 180.0);
  return soil.cohesion_kpa * 1e3 * params.contact_area_m2 + std::max(0.0, normal_n) * tan_phi;
}

std::array<WheelTraction, kWheelCount> evaluate_traction(const TractionInputs& in, const SoilParams& soil,
                                                         const TractionParams& params) {
  std::array<WheelTraction, kWheelCount> out{};
  double total_normal = 0;
  for (const double n : in.normal_n) total_normal += n;
  if (total_normal <= 0) return out;

  const double speed = in.body_velocity.norm();
  const Eigen::Vector2d drag_dir = speed > 0 ? Eigen::Vector2d(in.body_velocity / speed) : Eigen::Vector2d::Zero();
  const double drag = in.blade_drag_n * std::min(1.0, speed / params.resistive_speed_scale_mps);

  std::optional<Eigen::Vector2d> icr;
  if (std::abs(in.body_yaw_rate) > 1e-6) {
    icr = Eigen::Vector2d(-in.body_velocity.y() / in.body_yaw_rate, in.body_velocity.x() / in.body_yaw_rate);
  }

  for (std::size_t i = 0; i < kWheelCount; ++i) {
    const double share = in.normal_n[i] / total_normal;
    const double mass = in.mass_kg * share;
    const Eigen::Vector2d along(std::cos(in.steering_rad[i]), std::sin(in.steering_rad[i]));
    const Eigen::Vector2d across(-along.y(), along.x());
    const double rim_speed = in.wheel_speed_radps[i] * in.wheel_radius_m;
    const double motion = std::clamp(rim_speed / params.resistive_speed_scale_mps, -1.0, 1.0);

    // Force the wheel must supply to hold against gravity and push the blade.
    const Eigen::Vector2d external = -mass * in.gravity_tangential + drag * share * drag_dir;
    double resist = params.rolling_resistance * in.normal_n[i];
    if (icr) {
      const double radius = (in.contacts[i] - *icr).norm();
      resist += params.turn_scrub_coeff * in.normal_n[i] *
                std::min(1.0, params.patch_length_m / std::max(radius, 1e-9));
    }
    const double long_static = external.dot(along) + resist * motion;
    const double lat = external.dot(across);
    const double inertial = mass * in.wheel_radius_m * in.wheel_accel_radps2[i];

    auto& w = out[i];
    w.available_n = available_thrust(in.normal_n[i], soil, params);
    w.demand_long_n = long_static + inertial;
    w.demand_lat_n = lat;
    w.thrust_ratio = w.available_n > 0 ? std::hypot(w.demand_long_n, w.demand_lat_n) / w.available_n
                                       : std::numeric_limits<double>::infinity();
    w.slip = slip_from_thrust_ratio(w.thrust_ratio, soil.slip_knee);
    const double static_mag = std::hypot(long_static, lat);
    const double transmitted = static_mag > w.available_n ? w.available_n / static_mag : 1.0;
    w.load_torque_nm = long_static * transmitted * in.wheel_radius_m;
  }
  return out;
}

std::array<Eigen::Vector2d, kWheelCount> contact_ground_velocities(
    const TractionInputs& in, const std::array<WheelTraction, kWheelCount>& traction) {
  std::array<Eigen::Vector2d, kWheelCount> out;
  for (std::size_t i = 0; i < kWheelCount; ++i) {
    const Eigen::Vector2d along(std::cos(in.steering_rad[i]), std::sin(in.steering_rad[i]));
    const Eigen::Vector2d across(-along.y(), along.x());
    const double rim_speed = in.wheel_speed_radps[i] * in.wheel_radius_m;
    const auto& w = traction[i];
    out[i] = rim_speed * (1.0 - w.slip) * along;
    const double demand = std::hypot(w.demand_long_n, w.demand_lat_n);
    if (w.slip > 0 && demand > 0) {
      out[i] -= w.slip * std::abs(rim_speed) * (w.demand_lat_n / demand) * across;
    }
  }
  return out;
}

ObstacleVerdict obstacle_check(double obstacle_height_m, double wheel_radius_m, double thrust_margin) {
  return obstacle_height_m <= wheel_radius_m && thrust_margin >= 1.0 ? ObstacleVerdict::Traversable
                                                                      : ObstacleVerdict::Blocked;
}

}  // namespace emrs::sim
