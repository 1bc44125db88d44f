#pragma once

#include <array>
#include <stdexcept>
#include <string>

#include <Eigen/Dense>

#include "emrs/geometry.hpp"

namespace emrs::sim {

inline constexpr double kGravity = 9.81;

class TipOverError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Gravity acceleration expressed in the body frame for the given attitude.
/// Attitude follows the z-y-x convention: positive pitch tips the nose down,
/// positive roll lifts the left side.
template <typename Scalar>
Vector3<Scalar> gravity_in_body(Scalar pitch_rad, Scalar roll_rad, Scalar g = Scalar(kGravity)) {
  const Eigen::Matrix<Scalar, 3, 3> attitude =
      (Eigen::AngleAxis<Scalar>(pitch_rad, Vector3<Scalar>::UnitY()) *
       Eigen::AngleAxis<Scalar>(roll_rad, Vector3<Scalar>::UnitX()))
          .toRotationMatrix();
  return attitude.transpose() * Vector3<Scalar>(Scalar(0), Scalar(0), -g);
}

/// Normal loads on four ground contacts for a rigid body at rest on its contact plane.
///
/// Three balance equations (normal force, moments about body x and y, with the
/// in-plane gravity component acting at CoG height) are closed with the
/// minimum-norm (symmetric pseudo-inverse) solution for the four unknowns.
/// Throws TipOverError when any load comes out negative.
template <typename Scalar>
Eigen::Matrix<Scalar, 4, 1> static_wheel_loads(const std::array<Vector2<Scalar>, kWheelCount>& contacts,
                                               const Vector3<Scalar>& cog, Scalar mass,
                                               const Vector3<Scalar>& gravity_body) {
  const Vector3<Scalar> force = mass * gravity_body;
  Eigen::Matrix<Scalar, 3, 4> balance;
  for (std::size_t i = 0; i < kWheelCount; ++i) {
    balance.col(static_cast<Eigen::Index>(i)) << Scalar(1), contacts[i].y(), contacts[i].x();
  }
  const Vector3<Scalar> rhs(-force.z(), cog.z() * force.y() - cog.y() * force.z(),
                            cog.z() * force.x() - cog.x() * force.z());
  const Eigen::Matrix<Scalar, 3, 3> gram = balance * balance.transpose();
  const Eigen::Matrix<Scalar, 4, 1> loads = balance.transpose() * gram.ldlt().solve(rhs);
  for (Eigen::Index i = 0; i < 4; ++i) {
    if (loads(i) < Scalar(0)) {
      throw TipOverError("wheel " + std::string(wheel_name(static_cast<std::size_t>(i))) +
                         " unloaded: rover would tip over");
    }
  }
  return loads;
}

/// Loads on the nominal (unsteered) footprint for a given attitude.
template <typename Scalar>
Eigen::Matrix<Scalar, 4, 1> wheel_loads(const BasicRoverGeometry<Scalar>& geometry, Scalar pitch_rad, Scalar roll_rad,
                                        const Vector3<Scalar>& cog, Scalar g = Scalar(kGravity)) {
  std::array<Vector2<Scalar>, kWheelCount> contacts;
  for (std::size_t i = 0; i < kWheelCount; ++i) {
    contacts[i] = geometry.pivot(i) + Vector2<Scalar>(Scalar(0), geometry.signed_offset(i));
  }
  return static_wheel_loads(contacts, cog, geometry.total_mass_kg(), gravity_in_body(pitch_rad, roll_rad, g));
}

}  // namespace emrs::sim
