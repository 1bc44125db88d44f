#include "emrs/steering_trajectory.hpp"

#include <algorithm>
#include <cmath>

namespace emrs {

double trapezoid_duration(double distance, const SteeringProfile& profile) {
  const double d = std::abs(distance);
  if (d == 0.0) return 0.0;
  const double v = profile.max_rate_radps;
  const double a = profile.max_accel_radps2;
  if (d <= v * v / a) return 2.0 * std::sqrt(d / a);
  return d / v + v / a;
}

SteeringTrajectory::SteeringTrajectory(const SteeringAngles& start, const SteeringAngles& end,
                                       const SteeringProfile& profile)
    : start_(start), end_(end), profile_(profile) {
  for (std::size_t i = 0; i < kWheelCount; ++i) span_ = std::max(span_, std::abs(end[i] - start[i]));
  duration_ = trapezoid_duration(span_, profile);
  if (span_ == 0.0) return;
  const double a = profile.max_accel_radps2;
  if (span_ <= profile.max_rate_radps * profile.max_rate_radps / a) {
    accel_time_ = duration_ / 2.0;
    cruise_rate_ = a * accel_time_;
  } else {
    accel_time_ = profile.max_rate_radps / a;
    cruise_rate_ = profile.max_rate_radps;
  }
}

double SteeringTrajectory::progress(double t) const {
  if (span_ == 0.0 || t >= duration_) return 1.0;
  if (t <= 0.0) return 0.0;
  const double a = profile_.max_accel_radps2;
  double travelled;
  if (t < accel_time_) {
    travelled = 0.5 * a * t * t;
  } else if (t <= duration_ - accel_time_) {
    travelled = 0.5 * a * accel_time_ * accel_time_ + cruise_rate_ * (t - accel_time_);
  } else {
    const double remaining = duration_ - t;
    travelled = span_ - 0.5 * a * remaining * remaining;
  }
  return std::clamp(travelled / span_, 0.0, 1.0);
}

SteeringAngles SteeringTrajectory::sample(double t) const {
  if (t >= duration_) return end_;
  const double s = progress(t);
  SteeringAngles out{};
  for (std::size_t i = 0; i < kWheelCount; ++i) {
    const auto [lo, hi] = std::minmax(start_[i], end_[i]);
    out[i] = std::clamp(start_[i] + (end_[i] - start_[i]) * s, lo, hi);
  }
  return out;
}

SteeringTrajectory plan_steering_transition(const SteeringAngles& current, const SteeringAngles& target,
                                            const SteeringProfile& profile) {
  return SteeringTrajectory(current, target, profile);
}

}  // namespace emrs
