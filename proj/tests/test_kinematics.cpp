#include <cmath>
#include <numbers>
#include <random>

#include "doctest.h"
#include "emrs/kinematics.hpp"

using namespace emrs;

namespace {

constexpr double kPi = std::numbers::pi;

RoverGeometry square_geometry() {
  RoverGeometry g;
  g.wheelbase_m = 1.0;
  g.track_m = 1.0;
  g.steering_offset_m = 0.0;
  return g;
}

// Contact point written out with explicit sines and cosines.
std::pair<double, double> rotated_contact(double px, double py, double angle, double offset) {
  return {px - offset * std::sin(angle), py + offset * std::cos(angle)};
}

// Distance from the ICR to the axle line of one wheel at a trial steering angle.
double wheel_axle_miss(const RoverGeometry& g, std::size_t wheel, double angle, double icr_x, double icr_y) {
  const auto p = g.pivot(wheel);
  const auto [cx, cy] = rotated_contact(p.x(), p.y(), angle, g.signed_offset(wheel));
  return std::abs((icr_x - cx) * std::cos(angle) + (icr_y - cy) * std::sin(angle));
}

double grid_search_angle(const RoverGeometry& g, std::size_t wheel, double icr_x, double icr_y) {
  double best = 0;
  double best_miss = INFINITY;
  const long steps = static_cast<long>(kPi / 1e-5);
  for (long k = 0; k <= steps; ++k) {
    const double a = -kPi / 2 + static_cast<double>(k) * 1e-5;
    const double miss = wheel_axle_miss(g, wheel, a, icr_x, icr_y);
    if (miss < best_miss) {
      best_miss = miss;
      best = a;
    }
  }
  return best;
}

BodyMotionCommand random_command(LocomotionMode mode, std::mt19937_64& rng, const KinematicLimits& lim) {
  std::uniform_real_distribution<double> v(-lim.max_speed_mps, lim.max_speed_mps);
  std::uniform_real_distribution<double> w(-lim.max_yaw_rate_radps, lim.max_yaw_rate_radps);
  std::uniform_real_distribution<double> h(-kPi / 2, kPi / 2);
  switch (mode) {
    case LocomotionMode::Ackermann: return AckermannCommand<double>{v(rng), w(rng)};
    case LocomotionMode::PointTurn: return PointTurnCommand<double>{w(rng)};
    case LocomotionMode::Crab: return CrabCommand<double>{v(rng), h(rng)};
    case LocomotionMode::SkidSteer: return SkidCommand<double>{v(rng), w(rng)};
  }
  return AckermannCommand<double>{};
}

}  // namespace

TEST_CASE("contact point examples") {
  const auto a = contact_point<double>({0.6, 0.5}, 0.0, 0.05);
  CHECK(a.x() == doctest::Approx(0.6));
  CHECK(a.y() == doctest::Approx(0.55));

  const auto b = contact_point<double>({0.6, 0.5}, kPi / 2, 0.05);
  CHECK(b.x() == doctest::Approx(0.55).epsilon(1e-12));
  CHECK(b.y() == doctest::Approx(0.5).epsilon(1e-12));

  const auto c = contact_point<double>({0.6, -0.5}, 0.3, -0.05);
  const auto [ox, oy] = rotated_contact(0.6, -0.5, 0.3, -0.05);
  CHECK(std::abs(c.x() - ox) < 1e-15);
  CHECK(std::abs(c.y() - oy) < 1e-15);
}

TEST_CASE("crab straight line") {
  const auto sp = inverse_kinematics<double>(CrabCommand<double>{0.1, 0.0}, RoverGeometry{});
  for (const auto& w : sp) {
    CHECK(w.steering_angle_rad == 0.0);
    CHECK(w.wheel_speed_radps == doctest::Approx(0.6667).epsilon(1e-4));
  }
}

TEST_CASE("point turn on a square footprint") {
  const auto g = square_geometry();
  const auto sp = inverse_kinematics<double>(PointTurnCommand<double>{0.2}, g);
  for (const auto& w : sp) {
    CHECK(std::abs(w.steering_angle_rad) == doctest::Approx(kPi / 4).epsilon(1e-9));
    CHECK(std::abs(w.wheel_speed_radps) == doctest::Approx(std::sqrt(2.0) / 2 * 0.2 / 0.15).epsilon(1e-9));
  }
  CHECK(sp[0].wheel_speed_radps < 0);
  CHECK(sp[1].wheel_speed_radps > 0);
  CHECK(icr_residual<double>(sp, g, {0.0, 0.0}) < 1e-9);
}

TEST_CASE("skid differential drive") {
  RoverGeometry g;
  const auto sp = inverse_kinematics<double>(SkidCommand<double>{0.1, 0.1}, g);
  for (std::size_t i = 0; i < kWheelCount; ++i) {
    CHECK(sp[i].steering_angle_rad == 0.0);
    CHECK(sp[i].wheel_speed_radps == doctest::Approx(i % 2 == 0 ? 1.0 / 3.0 : 1.0).epsilon(1e-12));
  }
}

TEST_CASE("ackermann matches grid-search oracle") {
  const RoverGeometry g;
  const auto sp = inverse_kinematics<double>(AckermannCommand<double>{0.1, 0.1}, g);
  for (std::size_t i = 0; i < kWheelCount; ++i) {
    const double oracle = grid_search_angle(g, i, 0.0, 1.0);
    CHECK(std::abs(sp[i].steering_angle_rad - oracle) < 2e-5);

    const auto p = g.pivot(i);
    const auto [cx, cy] = rotated_contact(p.x(), p.y(), sp[i].steering_angle_rad, g.signed_offset(i));
    const double radius = std::hypot(cx, cy - 1.0);
    CHECK(sp[i].wheel_speed_radps == doctest::Approx(radius * 0.1 / 0.15).epsilon(1e-9));
  }
  // Inner wheels steer harder than outer ones.
  CHECK(sp[0].steering_angle_rad > sp[1].steering_angle_rad);
  CHECK(icr_residual<double>(sp, g, {0.0, 1.0}) < 1e-6);
}

TEST_CASE("forward odometry examples") {
  const RoverGeometry g;
  WheelStateArray forward{};
  for (auto& w : forward) w = {0.0, 2.0};
  auto est = forward_odometry(forward, g);
  CHECK(est.twist.vx_mps == doctest::Approx(0.3));
  CHECK(std::abs(est.twist.vy_mps) < 1e-12);
  CHECK(std::abs(est.twist.omega_radps) < 1e-12);
  CHECK(est.residual_mps < 1e-12);

  WheelStateArray crab{};
  for (auto& w : crab) w = {0.4, 2.0};
  est = forward_odometry(crab, g);
  CHECK(est.twist.vx_mps == doctest::Approx(0.3 * std::cos(0.4)));
  CHECK(est.twist.vy_mps == doctest::Approx(0.3 * std::sin(0.4)));
  CHECK(std::abs(est.twist.omega_radps) < 1e-12);
  CHECK(est.residual_mps < 1e-12);

  est = forward_odometry(inverse_kinematics<double>(AckermannCommand<double>{0.1, 0.1}, g), g);
  CHECK(std::abs(est.twist.vx_mps - 0.1) < 1e-6);
  CHECK(std::abs(est.twist.omega_radps - 0.1) < 1e-6);
  CHECK(est.residual_mps < 1e-6);
}

TEST_CASE("degenerate odometry geometry is reported") {
  std::array<Vector2<double>, kWheelCount> same;
  same.fill(Vector2<double>(0.3, 0.2));
  std::array<Vector2<double>, kWheelCount> vel;
  vel.fill(Vector2<double>(0.1, 0.0));
  try {
    fit_body_twist(same, vel);
    FAIL("expected DegenerateGeometry");
  } catch (const KinematicsError& e) {
    CHECK(e.kind() == KinematicsError::Kind::DegenerateGeometry);
  }
}

TEST_CASE("pose integration") {
  auto p = integrate_pose<double>({}, {0.1, 0, 0}, 10.0);
  CHECK(p.x_m == doctest::Approx(1.0));
  CHECK(std::abs(p.y_m) < 1e-12);

  p = integrate_pose<double>({}, {0, 0, 0.1}, 10.0);
  CHECK(std::abs(p.x_m) < 1e-12);
  CHECK(p.yaw_rad == doctest::Approx(1.0));

  p = integrate_pose<double>({}, {0.1, 0, 0.1}, kPi / 0.1 / 2);
  CHECK(std::abs(p.x_m - 1.0) < 1e-9);
  CHECK(std::abs(p.y_m - 1.0) < 1e-9);
  CHECK(std::abs(std::hypot(p.x_m, p.y_m - 1.0) - 1.0) < 1e-9);

  // Many small arcs land on the same circle as one large one.
  Pose2p5 q{};
  for (int k = 0; k < 1000; ++k) q = integrate_pose<double>(q, {0.1, 0.02, 0.3}, 0.01);
  const auto one = integrate_pose<double>({}, {0.1, 0.02, 0.3}, 10.0);
  CHECK(std::abs(q.x_m - one.x_m) < 1e-9);
  CHECK(std::abs(q.y_m - one.y_m) < 1e-9);
  CHECK(std::abs(normalize_angle(q.yaw_rad - one.yaw_rad)) < 1e-9);
}

TEST_CASE("icr residual of parallel axles is positive") {
  const RoverGeometry g;
  const auto sp = inverse_kinematics<double>(CrabCommand<double>{0.1, 0.3}, g);
  for (const auto& icr : {Vector2<double>(0, 0), Vector2<double>(3, -2), Vector2<double>(-50, 40)}) {
    CHECK(icr_residual<double>(sp, g, icr) > 0);
  }
}

TEST_CASE("random round trips per mode") {
  const RoverGeometry g;
  KinematicLimits lim;
  lim.skid_factor = skid_consistent_factor(g);
  std::mt19937_64 rng(7);
  for (const auto mode : kAllModes) {
    int accepted = 0;
    int attempts = 0;
    while (accepted < 1000) {
      ++attempts;
      const auto cmd = random_command(mode, rng, lim);
      WheelSetpointArray sp;
      try {
        sp = inverse_kinematics(mode, cmd, g, lim);
      } catch (const KinematicsError& e) {
        // Only Ackermann turns about a point inside the footprint may be refused.
        REQUIRE(mode == LocomotionMode::Ackermann);
        REQUIRE(e.kind() == KinematicsError::Kind::SteeringLimitExceeded);
        const auto& a = std::get<AckermannCommand<double>>(cmd);
        REQUIRE(std::abs(a.v_mps / a.omega_radps) < g.track_m / 2 + g.steering_offset_m + 0.01);
        continue;
      }
      ++accepted;
      for (const auto& w : sp) REQUIRE(std::abs(w.steering_angle_rad) <= g.steering_limit_rad);
      const auto want = commanded_twist(cmd);
      const auto got = forward_odometry(sp, g).twist;
      REQUIRE(std::abs(got.vx_mps - want.vx_mps) < 1e-6);
      REQUIRE(std::abs(got.vy_mps - want.vy_mps) < 1e-6);
      REQUIRE(std::abs(got.omega_radps - want.omega_radps) < 1e-6);

      if (const auto* a = std::get_if<AckermannCommand<double>>(&cmd);
          a && std::abs(a->omega_radps) >= kinematics_constants::kStraightLineYawRate) {
        REQUIRE(icr_residual<double>(sp, g, {0.0, a->v_mps / a->omega_radps}) < 1e-6);
      }
      if (mode == LocomotionMode::PointTurn) REQUIRE(icr_residual<double>(sp, g, {0.0, 0.0}) < 1e-6);
    }
    MESSAGE(to_string(mode) << ": " << attempts - accepted << " of " << attempts << " refused");
  }
}

TEST_CASE("ackermann rejects turns about a point inside the footprint") {
  const RoverGeometry g;
  try {
    inverse_kinematics<double>(AckermannCommand<double>{0.05, 0.5}, g);  // ICR at y = 0.1
    FAIL("expected SteeringLimitExceeded");
  } catch (const KinematicsError& e) {
    CHECK(e.kind() == KinematicsError::Kind::SteeringLimitExceeded);
  }
  CHECK_THROWS_AS(inverse_kinematics<double>(AckermannCommand<double>{0.5, 0.0}, g), KinematicsError);
  CHECK_THROWS_AS(inverse_kinematics<double>(LocomotionMode::Crab, AckermannCommand<double>{0.1, 0.0}, g),
                  KinematicsError);
  CHECK_THROWS_AS(inverse_kinematics<double>(CrabCommand<double>{0.1, 1.7}, g), KinematicsError);
}

TEST_CASE("ackermann continuity across the straight-line switch") {
  const RoverGeometry g;
  const double eps = kinematics_constants::kStraightLineYawRate;
  for (const double w : {eps, -eps}) {
    const auto sp = inverse_kinematics<double>(AckermannCommand<double>{0.2, w}, g);
    for (const auto& wheel : sp) CHECK(std::abs(wheel.steering_angle_rad) < 1e-4);
  }
}

TEST_CASE("sign symmetry") {
  const RoverGeometry g;
  const auto check_negated = [&](const BodyMotionCommand& cmd, const BodyMotionCommand& neg) {
    const auto a = inverse_kinematics(cmd, g);
    const auto b = inverse_kinematics(neg, g);
    for (std::size_t i = 0; i < kWheelCount; ++i) {
      CHECK(b[i].steering_angle_rad == a[i].steering_angle_rad);
      CHECK(b[i].wheel_speed_radps == -a[i].wheel_speed_radps);
    }
  };
  check_negated(AckermannCommand<double>{0.1, 0.05}, AckermannCommand<double>{-0.1, -0.05});
  check_negated(PointTurnCommand<double>{0.2}, PointTurnCommand<double>{-0.2});
  check_negated(CrabCommand<double>{0.1, 0.4}, CrabCommand<double>{-0.1, 0.4});
  check_negated(SkidCommand<double>{0.1, 0.3}, SkidCommand<double>{-0.1, -0.3});
}

TEST_CASE("skid consistent factor closes the yaw round trip") {
  const RoverGeometry g;
  const double chi = skid_consistent_factor(g);
  const double half_base = 0.6;
  const double lateral = 0.55;
  CHECK(chi == doctest::Approx((half_base * half_base + lateral * lateral) / (0.5 * lateral)));
  KinematicLimits lim;
  lim.skid_factor = chi;
  const auto est = forward_odometry(inverse_kinematics<double>(SkidCommand<double>{0.1, 0.2}, g, lim), g);
  CHECK(est.twist.omega_radps == doctest::Approx(0.2).epsilon(1e-12));
  CHECK(est.twist.vx_mps == doctest::Approx(0.1).epsilon(1e-12));
  // Skidding always leaves a lateral mismatch at the wheels.
  CHECK(est.residual_mps > 0);
}

TEST_CASE("geometry validation") {
  RoverGeometry g;
  CHECK_NOTHROW(g.validate());
  g.steering_offset_m = 0.6;
  CHECK_THROWS_AS(g.validate(), GeometryError);
  g = {};
  g.steering_limit_rad = 4.0;
  CHECK_THROWS_AS(g.validate(), GeometryError);
  CHECK(RoverGeometry{}.steering_limit_rad == kPi / 2);
}

TEST_CASE("float instantiation") {
  const BasicRoverGeometry<float> g;
  const auto sp = inverse_kinematics<float>(AckermannCommand<float>{0.1f, 0.1f}, g);
  CHECK(icr_residual<float>(sp, g, {0.0f, 1.0f}) < 1e-4f);
}
