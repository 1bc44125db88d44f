#pragma once

#include <array>
#include <numbers>

#include "emrs/geometry.hpp"

namespace emrs {

using SteeringAngles = std::array<double, kWheelCount>;

struct SteeringProfile {
  double max_rate_radps{30.0 * std::numbers::pi / 180.0};
  double max_accel_radps2{60.0 * std::numbers::pi / 180.0};
};

/// Time-synchronised trapezoidal steering move for all four wheels.
///
/// The wheel with the largest move follows a trapezoidal (or triangular) rate
/// profile; every other wheel follows the same normalised progress curve, so all
/// wheels start and finish together and never exceed the rate/accel limits.
class SteeringTrajectory {
 public:
  SteeringTrajectory() = default;
  SteeringTrajectory(const SteeringAngles& start, const SteeringAngles& end, const SteeringProfile& profile);

  double duration_s() const { return duration_; }
  const SteeringAngles& start() const { return start_; }
  const SteeringAngles& end() const { return end_; }
  const SteeringProfile& profile() const { return profile_; }

  /// Progress in [0, 1] at time t since start.
  double progress(double t) const;
  SteeringAngles sample(double t) const;

 private:
  SteeringAngles start_{};
  SteeringAngles end_{};
  SteeringProfile profile_{};
  double span_{0};
  double duration_{0};
  double accel_time_{0};
  double cruise_rate_{0};
};

SteeringTrajectory plan_steering_transition(const SteeringAngles& current, const SteeringAngles& target,
                                            const SteeringProfile& profile = {});

/// Duration of a rest-to-rest move of `distance` under the profile.
double trapezoid_duration(double distance, const SteeringProfile& profile);

}  // namespace emrs
