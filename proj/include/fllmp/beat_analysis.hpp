#pragma once

#include <cstddef>

#include "fllmp/discriminator.hpp"
#include "fllmp/quadrature.hpp"

namespace fllmp {

/// Beat of two arriving frequencies. When the frequencies coincide the beat
/// period is infinite and zero_beat() is set.
struct BeatSpec {
  double omega_beat;
  double t_beat;
  double omega_avg;

  bool zero_beat() const { return omega_beat == 0.0; }
};

BeatSpec beat_spec(double omega0, double omega1);

/// Sign of the period-averaged arctangent term, normalized by delta_gamma.
enum class StepValue : int { kMinus = -1, kZero = 0, kPlus = 1 };

inline constexpr double kBetaEqualityTol = 1e-12;

StepValue classify_step(double beta, double eps = kBetaEqualityTol);

inline int to_int(StepValue s) { return static_cast<int>(s); }

struct FIntegralResult {
  double value;
  std::size_t quad_points;  // intervals of the final Simpson estimate
  double change;            // last successive-estimate difference
};

/// Normalized period integral
///
///   f(beta, dg) = 1 / (2 pi dg) * int_0^{2 pi} atan2((1 - beta^2) sin dg,
///                                   (1 + beta^2) cos dg + 2 beta cos d) dd
///
/// by composite Simpson with point doubling from `quad_points`. Requires
/// 0 < |dg| <= pi/2 and |beta - 1| >= 1e-6; beta may be 0 or +inf.
/// Throws ConvergenceFailure when successive estimates still differ by more
/// than 1e-12 at 2^22 intervals.
FIntegralResult f_integral(double beta, double delta_gamma,
                           std::size_t quad_points = std::size_t{1} << 10);

/// Period-averaged Doppler estimate: the stronger ray's Doppler, or the mean
/// of both when the amplitudes are equal.
double period_avg_doppler(double omega_d0, double omega_d1, double beta,
                          double eps = kBetaEqualityTol);

/// Instantaneous frequency estimate replica_freq + dPhi(t)/dt in the frame of
/// the params' omegas.
double instantaneous_doppler(const TwoRayParams<double>& p, double t);

/// Deviation of the discriminator output from its period average (rad).
/// Throws SingularPoint when beta is 1 within kBetaEqualityTol: the
/// deviation degenerates into a delta function there.
double deviation_waveform(const TwoRayParams<double>& p, double t);

/// Period average of the instantaneous frequency estimate over one beat
/// period starting at t0, by Simpson quadrature in time.
QuadratureResult period_average_by_quadrature(const TwoRayParams<double>& p, double t0 = 0.0);

/// Period average of dPhi(t) (rad) over one beat period, by quadrature.
QuadratureResult period_average_phase_step(const TwoRayParams<double>& p, double t0 = 0.0);

/// Area (rad) between the instantaneous frequency estimate and omega_avg
/// over one beat period. Positive when the dominant ray is above omega_avg.
double deviation_area(const TwoRayParams<double>& p, double t0 = 0.0);

}  // namespace fllmp
