#include "emrs/sim/tracking.hpp"

namespace emrs::sim {

TrackingMeasurement TrackingEmulator::measure(const Pose2p5& truth, double timestamp_s) {
  std::normal_distribution<double> unit(0.0, 1.0);
  auto& engine = rng_.engine();
  TrackingMeasurement m{truth, timestamp_s, true};
  m.pose.x_m += noise_.sigma_position_m * unit(engine);
  m.pose.y_m += noise_.sigma_position_m * unit(engine);
  m.pose.yaw_rad = normalize_angle(m.pose.yaw_rad + noise_.sigma_angle_rad * unit(engine));
  m.pose.pitch_rad += noise_.sigma_angle_rad * unit(engine);
  m.pose.roll_rad += noise_.sigma_angle_rad * unit(engine);
  return m;
}

bool TrackingEmulator::due(double now_s) {
  // Schedule on integer multiples of the period to avoid drift.
  if (now_s + 1e-12 < static_cast<double>(next_index_) * period_) return false;
  ++next_index_;
  return true;
}

}  // namespace emrs::sim
