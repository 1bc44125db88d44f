#pragma once

#include <array>
#include <cmath>
#include <cstddef>
#include <numbers>
#include <stdexcept>
#include <string>

#include <Eigen/Dense>

namespace emrs {

/// Wheel slots. Order is normative everywhere a 4-array of per-wheel values appears.
enum class Wheel : std::size_t { FrontLeft = 0, FrontRight = 1, RearLeft = 2, RearRight = 3 };

inline constexpr std::size_t kWheelCount = 4;

template <typename Scalar>
using Vector2 = Eigen::Matrix<Scalar, 2, 1>;

template <typename Scalar>
using Vector3 = Eigen::Matrix<Scalar, 3, 1>;

class GeometryError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Four-wheel, independently steered chassis with on-side steering.
///
/// Body frame: x forward, y left, z up; yaw positive counter-clockwise.
/// Each steering pivot sits at (+-wheelbase/2, +-track/2). The wheel contact
/// is displaced from its pivot by `steering_offset_m` along the wheel axle,
/// pointing outboard, so the contact point moves as the wheel is steered.
template <typename Scalar>
struct BasicRoverGeometry {
  Scalar wheelbase_m{1.2};
  Scalar track_m{1.0};
  Scalar wheel_radius_m{0.15};
  Scalar steering_offset_m{0.05};
  Scalar steering_limit_rad{std::numbers::pi_v<Scalar> / 2};
  Scalar chassis_mass_kg{250};
  Scalar payload_mass_kg{0};
  Vector3<Scalar> cog_body{Scalar(0), Scalar(0), Scalar(0.4)};

  Vector2<Scalar> pivot(std::size_t wheel) const {
    const Scalar sx = wheel < 2 ? Scalar(1) : Scalar(-1);
    const Scalar sy = wheel % 2 == 0 ? Scalar(1) : Scalar(-1);
    return {sx * wheelbase_m / 2, sy * track_m / 2};
  }

  /// Signed lateral offset of the contact from the pivot (positive = +y).
  Scalar signed_offset(std::size_t wheel) const {
    return wheel % 2 == 0 ? steering_offset_m : -steering_offset_m;
  }

  Scalar total_mass_kg() const { return chassis_mass_kg + payload_mass_kg; }

  void validate() const {
    if (!(wheelbase_m > 0) || !(track_m > 0) || !(wheel_radius_m > 0)) {
      throw GeometryError("wheelbase, track and wheel radius must be positive");
    }
    if (!(std::abs(steering_offset_m) < track_m / 2)) {
      throw GeometryError("steering offset must be smaller than half the track");
    }
    if (!(steering_limit_rad > 0) || steering_limit_rad > std::numbers::pi_v<Scalar>) {
      throw GeometryError("steering limit must lie in (0, pi]");
    }
    if (chassis_mass_kg <= 0 || payload_mass_kg < 0) {
      throw GeometryError("chassis mass must be positive and payload non-negative");
    }
  }
};

using RoverGeometry = BasicRoverGeometry<double>;

inline constexpr const char* wheel_name(std::size_t wheel) {
  constexpr std::array<const char*, kWheelCount> names{"front_left", "front_right", "rear_left",
                                                        "rear_right"};
  return wheel < kWheelCount ? names[wheel] : "?";
}

}  // namespace emrs
