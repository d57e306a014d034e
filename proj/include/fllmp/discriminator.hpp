#pragma once

#include <array>
#include <cmath>
#include <complex>
#include <limits>
#include <utility>

#include "fllmp/errors.hpp"
#include "fllmp/signal.hpp"

namespace fllmp {

/// Arctangent FLL discriminator, complex form: arg(S_k conj(S_{k-1})) / dt.
/// Output range is (-pi, pi] / dt.
template <typename Scalar>
Scalar atan_discriminator(ComplexSample<Scalar> s_now, ComplexSample<Scalar> s_prev,
                          Scalar delta_t) {
  if (!(delta_t > Scalar(0))) throw InvalidArgument("atan_discriminator: delta_t must be positive");
  const ComplexSample<Scalar> prod = s_now * std::conj(s_prev);
  if (prod.real() == Scalar(0) && prod.imag() == Scalar(0))
    throw IndeterminatePhase("atan_discriminator: zero-magnitude correlator product");
  return std::arg(prod) / delta_t;
}

/// Same discriminator written on I/Q components: atan2(cross, dot) / dt.
template <typename Scalar>
Scalar atan_discriminator_iq(Scalar i_k, Scalar q_k, Scalar i_prev, Scalar q_prev,
                             Scalar delta_t) {
  if (!(delta_t > Scalar(0)))
    throw InvalidArgument("atan_discriminator_iq: delta_t must be positive");
  const Scalar dot = i_prev * i_k + q_prev * q_k;
  const Scalar cross = i_prev * q_k - i_k * q_prev;
  if (dot == Scalar(0) && cross == Scalar(0))
    throw IndeterminatePhase("atan_discriminator_iq: zero-magnitude correlator product");
  return std::atan2(cross, dot) / delta_t;
}

/// Two-ray postcorrelation input to the discriminator.
///
/// omega0/omega1 are the arriving carrier frequencies of the two paths in
/// the same frame as replica_freq, so the frequency errors are
/// omega_l - replica_freq.
template <typename Scalar = double>
struct TwoRayParams {
  Scalar b0 = Scalar(1);
  Scalar b1 = Scalar(0);
  Scalar omega0 = Scalar(0);
  Scalar omega1 = Scalar(0);
  Scalar phi0 = Scalar(0);
  Scalar phi1 = Scalar(0);
  Scalar replica_freq = Scalar(0);
  Scalar delta_t = Scalar(1e-3);

  /// B_1 / B_0; +inf when only the second path is present.
  Scalar beta() const {
    return b0 == Scalar(0) ? std::numeric_limits<Scalar>::infinity() : b1 / b0;
  }

  void validate() const {
    if (!(b0 >= Scalar(0)) || !(b1 >= Scalar(0)) || !(b0 > Scalar(0) || b1 > Scalar(0)))
      throw InvalidArgument("TwoRayParams: amplitudes must be non-negative and not both zero");
    if (!(delta_t > Scalar(0))) throw InvalidArgument("TwoRayParams: delta_t must be positive");
  }

  std::array<PostRay<Scalar>, 2> post_rays() const {
    return {PostRay<Scalar>{b0, omega0 - replica_freq, phi0},
            PostRay<Scalar>{b1, omega1 - replica_freq, phi1}};
  }
};

/// Phase-average step, half phase-difference step and the beat angle delta(t).
template <typename Scalar = double>
struct IntermediateParams {
  Scalar delta_mu;
  Scalar delta_gamma;
  Scalar beat_rate;    // omega0 - omega1
  Scalar beat_offset;  // -delta_gamma + phi0 - phi1

  Scalar delta_angle_at(Scalar t) const { return beat_rate * t + beat_offset; }
};

template <typename Scalar>
IntermediateParams<Scalar> intermediate_params(const TwoRayParams<Scalar>& p) {
  p.validate();
  const Scalar dw0 = p.omega0 - p.replica_freq;
  const Scalar dw1 = p.omega1 - p.replica_freq;
  const Scalar delta_mu = (dw0 + dw1) / Scalar(2) * p.delta_t;
  const Scalar delta_gamma = (p.omega0 - p.omega1) / Scalar(2) * p.delta_t;
  return {delta_mu, delta_gamma, p.omega0 - p.omega1, -delta_gamma + p.phi0 - p.phi1};
}

/// Numerator and denominator of the two-ray discriminator arctangent.
template <typename Scalar>
std::pair<Scalar, Scalar> two_ray_atan_terms(const TwoRayParams<Scalar>& p,
                                             const IntermediateParams<Scalar>& ip, Scalar t) {
  const Scalar b00 = p.b0 * p.b0;
  const Scalar b11 = p.b1 * p.b1;
  const Scalar num = (b00 - b11) * std::sin(ip.delta_gamma);
  const Scalar den = (b00 + b11) * std::cos(ip.delta_gamma) +
                     Scalar(2) * p.b0 * p.b1 * std::cos(ip.delta_angle_at(t));
  return {num, den};
}

/// Closed-form discriminator phase step dPhi(t) for two rays (unwrapped:
/// delta_mu plus a principal-value arctangent).
template <typename Scalar>
Scalar two_ray_discriminator(const TwoRayParams<Scalar>& p, Scalar t) {
  const auto ip = intermediate_params(p);
  const auto [num, den] = two_ray_atan_terms(p, ip, t);
  if (std::abs(num) <= Scalar(1e-300) && std::abs(den) <= Scalar(1e-300))
    throw SingularPoint("two_ray_discriminator: correlator product vanishes (beta = 1 null)");
  return ip.delta_mu + std::atan2(num, den);
}

}  // namespace fllmp
