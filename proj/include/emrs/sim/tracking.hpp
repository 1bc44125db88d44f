#pragma once

#include <numbers>
#include <random>

#include "emrs/kinematics.hpp"
#include "emrs/sim/random.hpp"

namespace emrs::sim {

struct TrackingNoise {
  double sigma_position_m{0.001};
  double sigma_angle_rad{std::numbers::pi / 180.0};
};

struct TrackingMeasurement {
  Pose2p5 pose;
  double timestamp_s{0};
  bool valid{true};
};

/// Motion-capture style pose tracker: truth plus zero-mean Gaussian noise.
class TrackingEmulator {
 public:
  TrackingEmulator(SplitRng rng, TrackingNoise noise = {}, double rate_hz = 60.0)
      : rng_(std::move(rng)), noise_(noise), period_(1.0 / rate_hz) {}

  TrackingMeasurement measure(const Pose2p5& truth, double timestamp_s);

  /// True when a measurement is due at `now_s`; advances the internal schedule.
  bool due(double now_s);

  double period_s() const { return period_; }
  const TrackingNoise& noise() const { return noise_; }

 private:
  SplitRng rng_;
  TrackingNoise noise_;
  double period_;
  long next_index_{0};
};

inline TrackingMeasurement tracking_emulate(const Pose2p5& truth, TrackingEmulator& emulator, double timestamp_s) {
  return emulator.measure(truth, timestamp_s);
}

}  // namespace emrs::sim
