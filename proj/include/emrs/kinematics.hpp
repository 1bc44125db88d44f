#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <limits>
#include <numbers>
#include <stdexcept>
#include <string>
#include <string_view>
#include <type_traits>
#include <variant>

#include <Eigen/Dense>

#include "emrs/geometry.hpp"

namespace emrs {

enum class LocomotionMode { Ackermann, PointTurn, Crab, SkidSteer };

inline constexpr std::array<LocomotionMode, 4> kAllModes{
    LocomotionMode::Ackermann, LocomotionMode::PointTurn, LocomotionMode::Crab,
    LocomotionMode::SkidSteer};

inline constexpr std::string_view to_string(LocomotionMode mode) {
  switch (mode) {
    case LocomotionMode::Ackermann: return "ackermann";
    case LocomotionMode::PointTurn: return "point_turn";
    case LocomotionMode::Crab: return "crab";
    case LocomotionMode::SkidSteer: return "skid";
  }
  return "?";
}

template <typename Scalar>
struct AckermannCommand {
  Scalar v_mps{0};
  Scalar omega_radps{0};
  bool operator==(const AckermannCommand&) const = default;
};

template <typename Scalar>
struct PointTurnCommand {
  Scalar omega_radps{0};
  bool operator==(const PointTurnCommand&) const = default;
};

template <typename Scalar>
struct CrabCommand {
  Scalar v_mps{0};
  Scalar heading_rad{0};
  bool operator==(const CrabCommand&) const = default;
};

template <typename Scalar>
struct SkidCommand {
  Scalar v_mps{0};
  Scalar omega_radps{0};
  bool operator==(const SkidCommand&) const = default;
};

template <typename Scalar>
using BasicBodyMotionCommand = std::variant<AckermannCommand<Scalar>, PointTurnCommand<Scalar>,
                                            CrabCommand<Scalar>, SkidCommand<Scalar>>;

using BodyMotionCommand = BasicBodyMotionCommand<double>;

template <typename Scalar>
LocomotionMode mode_of(const BasicBodyMotionCommand<Scalar>& cmd) {
  return static_cast<LocomotionMode>(cmd.index());
}

/// Zero-motion command for a mode. Crab keeps the supplied heading.
template <typename Scalar = double>
BasicBodyMotionCommand<Scalar> zero_command(LocomotionMode mode, Scalar crab_heading = 0) {
  switch (mode) {
    case LocomotionMode::Ackermann: return AckermannCommand<Scalar>{};
    case LocomotionMode::PointTurn: return PointTurnCommand<Scalar>{};
    case LocomotionMode::Crab: return CrabCommand<Scalar>{Scalar(0), crab_heading};
    case LocomotionMode::SkidSteer: return SkidCommand<Scalar>{};
  }
  return AckermannCommand<Scalar>{};
}

/// Steering angle and signed wheel rate for one wheel. Used both for commanded
/// setpoints and for measured states.
template <typename Scalar>
struct WheelState {
  Scalar steering_angle_rad{0};
  Scalar wheel_speed_radps{0};
  bool operator==(const WheelState&) const = default;
};

template <typename Scalar>
using BasicWheelArray = std::array<WheelState<Scalar>, kWheelCount>;

using WheelSetpointArray = BasicWheelArray<double>;
using WheelStateArray = BasicWheelArray<double>;

template <typename Scalar>
struct BasicBodyTwist {
  Scalar vx_mps{0};
  Scalar vy_mps{0};
  Scalar omega_radps{0};
  bool operator==(const BasicBodyTwist&) const = default;
};

using BodyTwist = BasicBodyTwist<double>;

/// Planar pose plus terrain-induced attitude. Height is a terrain lookup, not state.
template <typename Scalar>
struct BasicPose2p5 {
  Scalar x_m{0};
  Scalar y_m{0};
  Scalar yaw_rad{0};
  Scalar pitch_rad{0};
  Scalar roll_rad{0};
  bool operator==(const BasicPose2p5&) const = default;
};

using Pose2p5 = BasicPose2p5<double>;

template <typename Scalar>
struct BasicKinematicLimits {
  Scalar max_speed_mps{0.2};
  Scalar max_yaw_rate_radps{0.5};
  /// Effective-track multiplier applied by skid steering.
  Scalar skid_factor{1.0};
};

using KinematicLimits = BasicKinematicLimits<double>;

class KinematicsError : public std::runtime_error {
 public:
  enum class Kind { SteeringLimitExceeded, NonConvergence, DegenerateGeometry, CommandOutOfLimits, ModeMismatch };

  KinematicsError(Kind kind, const std::string& what) : std::runtime_error(what), kind_(kind) {}

  Kind kind() const noexcept { return kind_; }

 private:
  Kind kind_;
};

inline constexpr std::string_view to_string(KinematicsError::Kind kind) {
  switch (kind) {
    case KinematicsError::Kind::SteeringLimitExceeded: return "SteeringLimitExceeded";
    case KinematicsError::Kind::NonConvergence: return "NonConvergence";
    case KinematicsError::Kind::DegenerateGeometry: return "DegenerateGeometry";
    case KinematicsError::Kind::CommandOutOfLimits: return "CommandOutOfLimits";
    case KinematicsError::Kind::ModeMismatch: return "ModeMismatch";
  }
  return "?";
}

namespace kinematics_constants {
/// Below this yaw rate an Ackermann command is a straight line.
inline constexpr double kStraightLineYawRate = 1e-6;
inline constexpr double kFixedPointTolerance = 1e-9;
inline constexpr int kFixedPointMaxIterations = 50;
inline constexpr double kGridResolution = 1e-5;
/// Below this yaw increment pose integration takes the straight-line branch.
inline constexpr double kArcThreshold = 1e-9;
}  // namespace kinematics_constants

template <typename Scalar>
Scalar normalize_angle(Scalar angle) {
  constexpr Scalar pi = std::numbers::pi_v<Scalar>;
  angle = std::remainder(angle, 2 * pi);
  if (angle <= -pi) angle += 2 * pi;
  return angle;
}

/// Ground contact of a wheel whose pivot sits at `pivot`, steered by `steering_angle`.
template <typename Scalar>
Vector2<Scalar> contact_point(const Vector2<Scalar>& pivot, Scalar steering_angle, Scalar signed_offset) {
  const Eigen::Rotation2D<Scalar> rotation(steering_angle);
  return pivot + rotation * Vector2<Scalar>(Scalar(0), signed_offset);
}

template <typename Scalar>
Vector2<Scalar> contact_point(const BasicRoverGeometry<Scalar>& geometry, std::size_t wheel,
                              Scalar steering_angle) {
  return contact_point(geometry.pivot(wheel), steering_angle, geometry.signed_offset(wheel));
}

template <typename Scalar>
Vector2<Scalar> rolling_direction(Scalar steering_angle) {
  return {std::cos(steering_angle), std::sin(steering_angle)};
}

/// Twist the body performs when a command is executed without slip.
template <typename Scalar>
BasicBodyTwist<Scalar> commanded_twist(const BasicBodyMotionCommand<Scalar>& cmd) {
  return std::visit(
      [](const auto& c) -> BasicBodyTwist<Scalar> {
        using T = std::decay_t<decltype(c)>;
        if constexpr (std::is_same_v<T, AckermannCommand<Scalar>>) {
          return {c.v_mps, Scalar(0), c.omega_radps};
        } else if constexpr (std::is_same_v<T, PointTurnCommand<Scalar>>) {
          return {Scalar(0), Scalar(0), c.omega_radps};
        } else if constexpr (std::is_same_v<T, CrabCommand<Scalar>>) {
          return {c.v_mps * std::cos(c.heading_rad), c.v_mps * std::sin(c.heading_rad), Scalar(0)};
        } else {
          return {c.v_mps, Scalar(0), c.omega_radps};
        }
      },
      cmd);
}

namespace detail {

/// Solves angle = tangent(contact_point(angle)) for one wheel.
///
/// `tangent` maps a contact point to the steering angle whose rolling direction is
/// perpendicular to the ICR->contact vector. Fixed-point iteration first, then a
/// grid search over the steering range when the iteration does not converge.
template <typename Scalar, typename TangentFn>
Scalar solve_steering_angle(const BasicRoverGeometry<Scalar>& geometry, std::size_t wheel,
                            TangentFn tangent) {
  using namespace kinematics_constants;
  const Scalar limit = geometry.steering_limit_rad;
  const auto map = [&](Scalar angle) { return tangent(contact_point(geometry, wheel, angle)); };

  const auto out_of_range = [&] {
    return KinematicsError(KinematicsError::Kind::SteeringLimitExceeded,
                           std::string("required steering angle exceeds limit on wheel ") + wheel_name(wheel));
  };
  Scalar angle = tangent(geometry.pivot(wheel));
  for (int it = 0; it < kFixedPointMaxIterations; ++it) {
    // The offset lies along the axle, so a fixed point that leaves the range has no in-range twin.
    if (!(std::abs(angle) <= limit)) throw out_of_range();
    const Scalar next = map(angle);
    if (std::abs(next - angle) < Scalar(kFixedPointTolerance)) {
      if (!(std::abs(next) <= limit)) throw out_of_range();
      return next;
    }
    angle = next;
  }

  // Grid fallback: look for a fixed point inside the steering range.
  Scalar best_angle = 0;
  Scalar best_residual = std::numeric_limits<Scalar>::infinity();
  const auto steps = static_cast<long>(std::floor(2 * limit / Scalar(kGridResolution)));
  for (long i = 0; i <= steps; ++i) {
    const Scalar candidate = -limit + Scalar(i) * Scalar(kGridResolution);
    const Scalar residual = std::abs(normalize_angle(map(candidate) - candidate));
    if (residual < best_residual) {
      best_residual = residual;
      best_angle = candidate;
    }
  }
  if (best_residual < Scalar(kGridResolution)) {
    const Scalar refined = map(best_angle);
    return std::abs(refined) <= limit ? refined : best_angle;
  }
  throw KinematicsError(KinematicsError::Kind::NonConvergence,
                        std::string("steering solve did not converge on wheel ") + wheel_name(wheel));
}

template <typename Scalar>
void require(bool condition, KinematicsError::Kind kind, const char* what) {
  if (!condition) throw KinematicsError(kind, what);
}

}  // namespace detail

/// Steering angles of the point-turn configuration (wheels tangent to circles about the origin).
template <typename Scalar>
std::array<Scalar, kWheelCount> point_turn_angles(const BasicRoverGeometry<Scalar>& geometry) {
  std::array<Scalar, kWheelCount> angles{};
  for (std::size_t i = 0; i < kWheelCount; ++i) {
    angles[i] = detail::solve_steering_angle(geometry, i, [](const Vector2<Scalar>& c) {
      return std::atan(-c.x() / c.y());
    });
  }
  return angles;
}

/// Body command -> per-wheel steering angles and wheel rates.
template <typename Scalar>
BasicWheelArray<Scalar> inverse_kinematics(const BasicBodyMotionCommand<Scalar>& cmd,
                                           const BasicRoverGeometry<Scalar>& geometry,
                                           const BasicKinematicLimits<Scalar>& limits = {}) {
  using Kind = KinematicsError::Kind;
  const Scalar r = geometry.wheel_radius_m;
  const Scalar limit = geometry.steering_limit_rad;
  const auto check_speed = [&](Scalar v) {
    detail::require<Scalar>(std::isfinite(v) && std::abs(v) <= limits.max_speed_mps, Kind::CommandOutOfLimits,
                            "linear speed outside limits");
  };
  const auto check_yaw = [&](Scalar w) {
    detail::require<Scalar>(std::isfinite(w) && std::abs(w) <= limits.max_yaw_rate_radps, Kind::CommandOutOfLimits,
                            "yaw rate outside limits");
  };

  BasicWheelArray<Scalar> out{};
  if (const auto* ack = std::get_if<AckermannCommand<Scalar>>(&cmd)) {
    check_speed(ack->v_mps);
    check_yaw(ack->omega_radps);
    const Scalar v = ack->v_mps;
    const Scalar w = ack->omega_radps;
    if (std::abs(w) < Scalar(kinematics_constants::kStraightLineYawRate)) {
      for (auto& wheel : out) wheel = {Scalar(0), v / r};
      return out;
    }
    const Scalar icr_y = v / w;
    detail::require<Scalar>(icr_y != 0, Kind::SteeringLimitExceeded, "Ackermann ICR at the body origin");
    const Scalar side = icr_y > 0 ? Scalar(1) : Scalar(-1);
    for (std::size_t i = 0; i < kWheelCount; ++i) {
      const Scalar angle = detail::solve_steering_angle(geometry, i, [&](const Vector2<Scalar>& c) {
        return std::atan2(side * c.x(), side * (icr_y - c.y()));
      });
      const Vector2<Scalar> c = contact_point(geometry, i, angle);
      const Vector2<Scalar> velocity(-w * (c.y() - icr_y), w * c.x());
      out[i] = {angle, velocity.dot(rolling_direction(angle)) / r};
    }
    return out;
  }
  if (const auto* pt = std::get_if<PointTurnCommand<Scalar>>(&cmd)) {
    check_yaw(pt->omega_radps);
    const Scalar w = pt->omega_radps;
    const auto angles = point_turn_angles(geometry);
    for (std::size_t i = 0; i < kWheelCount; ++i) {
      detail::require<Scalar>(std::abs(angles[i]) <= limit, Kind::SteeringLimitExceeded,
                              "point-turn angle exceeds steering limit");
      const Vector2<Scalar> c = contact_point(geometry, i, angles[i]);
      const Vector2<Scalar> velocity(-w * c.y(), w * c.x());
      out[i] = {angles[i], velocity.dot(rolling_direction(angles[i])) / r};
    }
    return out;
  }
  if (const auto* crab = std::get_if<CrabCommand<Scalar>>(&cmd)) {
    check_speed(crab->v_mps);
    detail::require<Scalar>(std::isfinite(crab->heading_rad) && std::abs(crab->heading_rad) <= limit &&
                                std::abs(crab->heading_rad) <= std::numbers::pi_v<Scalar> / 2,
                            Kind::SteeringLimitExceeded, "crab heading exceeds steering limit");
    for (auto& wheel : out) wheel = {crab->heading_rad, crab->v_mps / r};
    return out;
  }
  const auto& skid = std::get<SkidCommand<Scalar>>(cmd);
  check_speed(skid.v_mps);
  check_yaw(skid.omega_radps);
  const Scalar differential = skid.omega_radps * limits.skid_factor * geometry.track_m / 2;
  for (std::size_t i = 0; i < kWheelCount; ++i) {
    const bool left = i % 2 == 0;
    out[i] = {Scalar(0), (left ? skid.v_mps - differential : skid.v_mps + differential) / r};
  }
  return out;
}

/// Same as above, but rejects a command whose variant does not match `mode`.
template <typename Scalar>
BasicWheelArray<Scalar> inverse_kinematics(LocomotionMode mode, const BasicBodyMotionCommand<Scalar>& cmd,
                                           const BasicRoverGeometry<Scalar>& geometry,
                                           const BasicKinematicLimits<Scalar>& limits = {}) {
  if (mode_of(cmd) != mode) {
    throw KinematicsError(KinematicsError::Kind::ModeMismatch, "command does not match locomotion mode");
  }
  return inverse_kinematics(cmd, geometry, limits);
}

/// Skid factor for which least-squares odometry recovers the commanded yaw rate
/// exactly (unsteered wheels, contacts at +-(track/2 + offset)).
template <typename Scalar>
Scalar skid_consistent_factor(const BasicRoverGeometry<Scalar>& geometry) {
  const Scalar half_base = geometry.wheelbase_m / 2;
  const Scalar lateral = geometry.track_m / 2 + geometry.steering_offset_m;
  return (half_base * half_base + lateral * lateral) / (geometry.track_m / 2 * lateral);
}

template <typename Scalar>
struct BasicOdometryEstimate {
  BasicBodyTwist<Scalar> twist;
  /// RMS per-wheel mismatch between fitted and measured contact velocity.
  Scalar residual_mps{0};
};

using OdometryEstimate = BasicOdometryEstimate<double>;

/// Least-squares rigid-body twist explaining the velocities of four contact points.
template <typename Scalar>
BasicOdometryEstimate<Scalar> fit_body_twist(const std::array<Vector2<Scalar>, kWheelCount>& contacts,
                                             const std::array<Vector2<Scalar>, kWheelCount>& velocities) {
  Eigen::Matrix<Scalar, 2 * kWheelCount, 3> design;
  Eigen::Matrix<Scalar, 2 * kWheelCount, 1> rhs;
  for (std::size_t i = 0; i < kWheelCount; ++i) {
    const auto row = static_cast<Eigen::Index>(2 * i);
    design.row(row) << Scalar(1), Scalar(0), -contacts[i].y();
    design.row(row + 1) << Scalar(0), Scalar(1), contacts[i].x();
    rhs(row) = velocities[i].x();
    rhs(row + 1) = velocities[i].y();
  }
  const Eigen::Matrix<Scalar, 3, 3> normal = design.transpose() * design;
  const Eigen::FullPivLU<Eigen::Matrix<Scalar, 3, 3>> lu(normal);
  if (lu.rank() < 3) {
    throw KinematicsError(KinematicsError::Kind::DegenerateGeometry, "odometry normal matrix is singular");
  }
  const Vector3<Scalar> x = lu.solve(design.transpose() * rhs);
  const Scalar residual = std::sqrt((design * x - rhs).squaredNorm() / Scalar(kWheelCount));
  return {{x(0), x(1), x(2)}, residual};
}

/// Least-squares body twist explaining the measured rolling velocities of all four wheels.
template <typename Scalar>
BasicOdometryEstimate<Scalar> forward_odometry(const BasicWheelArray<Scalar>& wheels,
                                               const BasicRoverGeometry<Scalar>& geometry) {
  std::array<Vector2<Scalar>, kWheelCount> contacts;
  std::array<Vector2<Scalar>, kWheelCount> velocities;
  for (std::size_t i = 0; i < kWheelCount; ++i) {
    const Scalar angle = wheels[i].steering_angle_rad;
    contacts[i] = contact_point(geometry, i, angle);
    velocities[i] = wheels[i].wheel_speed_radps * geometry.wheel_radius_m * rolling_direction(angle);
  }
  return fit_body_twist(contacts, velocities);
}

/// Exact constant-twist integration of a planar pose over `dt`.
template <typename Scalar>
BasicPose2p5<Scalar> integrate_pose(const BasicPose2p5<Scalar>& pose, const BasicBodyTwist<Scalar>& twist,
                                    Scalar dt) {
  const Scalar dyaw = twist.omega_radps * dt;
  Vector2<Scalar> body_step;
  if (std::abs(dyaw) < Scalar(kinematics_constants::kArcThreshold)) {
    body_step = Vector2<Scalar>(twist.vx_mps, twist.vy_mps) * dt;
  } else {
    const Scalar s = std::sin(dyaw) / twist.omega_radps;
    const Scalar c = (Scalar(1) - std::cos(dyaw)) / twist.omega_radps;
    body_step = {s * twist.vx_mps - c * twist.vy_mps, c * twist.vx_mps + s * twist.vy_mps};
  }
  const Vector2<Scalar> world_step = Eigen::Rotation2D<Scalar>(pose.yaw_rad) * body_step;
  BasicPose2p5<Scalar> out = pose;
  out.x_m += world_step.x();
  out.y_m += world_step.y();
  out.yaw_rad = normalize_angle(pose.yaw_rad + dyaw);
  return out;
}

/// RMS distance from `icr` to each wheel's axle line; zero iff all axles meet there.
template <typename Scalar>
Scalar icr_residual(const BasicWheelArray<Scalar>& setpoints, const BasicRoverGeometry<Scalar>& geometry,
                    const Vector2<Scalar>& icr) {
  Scalar sum = 0;
  for (std::size_t i = 0; i < kWheelCount; ++i) {
    const Scalar angle = setpoints[i].steering_angle_rad;
    const Scalar d = (icr - contact_point(geometry, i, angle)).dot(rolling_direction(angle));
    sum += d * d;
  }
  return std::sqrt(sum / Scalar(kWheelCount));
}

}  // namespace emrs
