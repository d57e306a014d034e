#pragma once

#include <cmath>
#include <cstddef>
#include <numbers>
#include <string>
#include <type_traits>
#include <utility>
#include <vector>

#include <Eigen/Core>

#include "fllmp/errors.hpp"

namespace fllmp {

/// GPS L1 carrier wavelength (m).
inline constexpr double kL1Wavelength = 0.190293672;

template <typename Scalar>
using Vector3 = Eigen::Matrix<Scalar, 3, 1>;

/// Receiver kinematics and raypath bearings for one transmitter.
///
/// Index 0 of the raypath list is the LOS bearing (receiver to transmitter);
/// indices >= 1 are NLOS bearings (receiver to reflector). Bearings must be
/// unit vectors. Reflectors are stationary, so all Doppler geometry follows
/// from the receiver velocity alone plus a known transmitter contribution.
template <typename Scalar = double>
class KinematicScene {
 public:
  KinematicScene(Vector3<Scalar> receiver_velocity,
                 std::vector<Vector3<Scalar>> raypath_units,
                 Scalar wavelength = Scalar(kL1Wavelength),
                 Scalar transmitter_doppler = Scalar(0))
      : velocity_(std::move(receiver_velocity)),
        units_(std::move(raypath_units)),
        wavelength_(wavelength),
        transmitter_doppler_(transmitter_doppler) {
    if (!(wavelength_ > Scalar(0)))
      throw InvalidArgument("KinematicScene: wavelength must be positive");
    const Scalar tol = std::is_same_v<Scalar, double> ? Scalar(1e-12) : Scalar(1e-6);
    for (std::size_t i = 0; i < units_.size(); ++i) {
      if (std::abs(units_[i].norm() - Scalar(1)) > tol)
        throw InvalidArgument("KinematicScene: raypath " + std::to_string(i) +
                              " is not a unit vector");
    }
  }

  /// Planar scene: receiver moving along +x at `speed`, each raypath at angle
  /// theta (rad) from the direction of motion, in the x-y plane.
  static KinematicScene planar(Scalar speed, const std::vector<Scalar>& thetas,
                               Scalar wavelength = Scalar(kL1Wavelength),
                               Scalar transmitter_doppler = Scalar(0)) {
    std::vector<Vector3<Scalar>> units;
    units.reserve(thetas.size());
    for (Scalar th : thetas) units.emplace_back(std::cos(th), std::sin(th), Scalar(0));
    return KinematicScene(Vector3<Scalar>(speed, Scalar(0), Scalar(0)), std::move(units),
                          wavelength, transmitter_doppler);
  }

  const Vector3<Scalar>& receiver_velocity() const { return velocity_; }
  const std::vector<Vector3<Scalar>>& raypath_units() const { return units_; }
  std::size_t path_count() const { return units_.size(); }
  Scalar wavelength() const { return wavelength_; }
  Scalar transmitter_doppler() const { return transmitter_doppler_; }

 private:
  Vector3<Scalar> velocity_;
  std::vector<Vector3<Scalar>> units_;
  Scalar wavelength_;
  Scalar transmitter_doppler_;
};

/// Receiver-motion Doppler (rad/s) along raypath `path_index`:
/// -(2 pi / lambda) v . u.
template <typename Scalar>
Scalar doppler_from_velocity(const KinematicScene<Scalar>& scene, std::size_t path_index) {
  if (path_index >= scene.path_count())
    throw InvalidPath("doppler_from_velocity: path index " + std::to_string(path_index) +
                      " out of range (" + std::to_string(scene.path_count()) + " paths)");
  const Scalar k = Scalar(2) * std::numbers::pi_v<Scalar> / scene.wavelength();
  return -k * scene.receiver_velocity().dot(scene.raypath_units()[path_index]);
}

/// Angle form of doppler_from_velocity.
template <typename Scalar>
Scalar doppler_from_angle(Scalar speed, Scalar wavelength, Scalar theta) {
  return -Scalar(2) * std::numbers::pi_v<Scalar> * speed / wavelength * std::cos(theta);
}

template <typename Scalar>
constexpr Scalar combined_doppler(Scalar receiver_part, Scalar transmitter_part) {
  return receiver_part + transmitter_part;
}

/// Total Doppler (receiver plus transmitter) along one raypath.
template <typename Scalar>
Scalar path_doppler(const KinematicScene<Scalar>& scene, std::size_t path_index) {
  return combined_doppler(doppler_from_velocity(scene, path_index), scene.transmitter_doppler());
}

/// Scale factor cos(theta_nlos) / cos(theta_los) relating an NLOS Doppler
/// observable to the LOS one.
template <typename Scalar>
Scalar nlos_ratio(Scalar theta_nlos, Scalar theta_los, Scalar eps = Scalar(1e-9)) {
  const Scalar c_los = std::cos(theta_los);
  if (std::abs(c_los) <= eps)
    throw DegenerateGeometry("nlos_ratio: LOS bearing orthogonal to motion");
  return std::cos(theta_nlos) / c_los;
}

template <typename Scalar>
Scalar beat_frequency_kinematic(Scalar speed, Scalar wavelength, Scalar theta0, Scalar theta1) {
  return Scalar(2) * std::numbers::pi_v<Scalar> * speed / wavelength *
         std::abs(std::cos(theta0) - std::cos(theta1));
}

/// Speed (m/s) equivalent to a receiver Doppler magnitude.
template <typename Scalar>
Scalar projected_speed_from_doppler(Scalar omega_r, Scalar wavelength) {
  return wavelength * std::abs(omega_r) / (Scalar(2) * std::numbers::pi_v<Scalar>);
}

}  // namespace fllmp
