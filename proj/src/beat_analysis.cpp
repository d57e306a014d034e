#include "fllmp/beat_analysis.hpp"

#include <cmath>
#include <limits>
#include <numbers>
#include <sstream>

namespace fllmp {

namespace {

constexpr double kPi = std::numbers::pi;

// Period length and start for quadrature in time; rejects a zero beat.
BeatSpec require_beat(const TwoRayParams<double>& p, const char* who) {
  p.validate();
  const BeatSpec spec = beat_spec(p.omega0, p.omega1);
  if (spec.zero_beat())
    throw ZeroBeat(std::string(who) + ": equal arriving frequencies, no beat period");
  return spec;
}

// Integrate g(t) over one beat period in the normalized variable u = t/T_beat.
template <class G>
QuadratureResult integrate_period(G&& g, const BeatSpec& spec, double t0, double abs_tol) {
  SimpsonOptions opt;
  opt.abs_tol = abs_tol;
  return simpson_doubling([&](double u) { return g(t0 + u * spec.t_beat); }, 0.0, 1.0, opt);
}

}  // namespace

BeatSpec beat_spec(double omega0, double omega1) {
  const double beat = std::abs(omega0 - omega1);
  const double period = beat > 0.0 ? 2.0 * kPi / beat : std::numeric_limits<double>::infinity();
  return {beat, period, 0.5 * (omega0 + omega1)};
}

StepValue classify_step(double beta, double eps) {
  if (!(beta >= 0.0)) throw InvalidArgument("classify_step: beta must be non-negative");
  if (std::abs(beta - 1.0) <= eps) return StepValue::kZero;
  return beta > 1.0 ? StepValue::kMinus : StepValue::kPlus;
}

FIntegralResult f_integral(double beta, double delta_gamma, std::size_t quad_points) {
  if (!(beta >= 0.0)) throw InvalidArgument("f_integral: beta must be non-negative");
  if (!(delta_gamma != 0.0 && std::abs(delta_gamma) <= kPi / 2))
    throw InvalidArgument("f_integral: need 0 < |delta_gamma| <= pi/2");
  if (std::abs(beta - 1.0) < 1e-6)
    throw InvalidArgument("f_integral: beta within 1e-6 of 1; use classify_step");
  if (quad_points < 2) throw InvalidArgument("f_integral: quad_points must be at least 2");

  // The integrand is the constant delta_gamma.
  if (beta == 0.0) return {1.0, 0, 0.0};

  const double s = std::sin(delta_gamma);
  const double c = std::cos(delta_gamma);
  // For beta > 1 divide numerator and denominator by beta^2 (same angle),
  // which also covers beta = +inf.
  double num_k, cos_k, cosd_k;
  if (beta > 1.0) {
    const double r = 1.0 / beta;
    num_k = (r * r - 1.0) * s;
    cos_k = (r * r + 1.0) * c;
    cosd_k = 2.0 * r;
  } else {
    num_k = (1.0 - beta * beta) * s;
    cos_k = (1.0 + beta * beta) * c;
    cosd_k = 2.0 * beta;
  }
  const double norm = 1.0 / (2.0 * kPi * delta_gamma);
  auto integrand = [&](double d) { return std::atan2(num_k, cos_k + cosd_k * std::cos(d)) * norm; };

  SimpsonOptions opt;
  opt.initial_intervals = quad_points;
  opt.abs_tol = 1e-12;
  const QuadratureResult q = simpson_doubling(integrand, 0.0, 2.0 * kPi, opt);
  if (!q.converged) {
    std::ostringstream msg;
    msg.precision(17);
    msg << "f_integral: no convergence for beta=" << beta << " delta_gamma=" << delta_gamma
        << " after " << q.intervals << " intervals (residual " << q.change << ")";
    throw ConvergenceFailure(msg.str(), q.change);
  }
  return {q.value, q.intervals, q.change};
}

double period_avg_doppler(double omega_d0, double omega_d1, double beta, double eps) {
  switch (classify_step(beta, eps)) {
    case StepValue::kMinus:
      return omega_d1;
    case StepValue::kZero:
      return 0.5 * (omega_d0 + omega_d1);
    case StepValue::kPlus:
      break;
  }
  return omega_d0;
}

double instantaneous_doppler(const TwoRayParams<double>& p, double t) {
  return p.replica_freq + two_ray_discriminator(p, t) / p.delta_t;
}

double deviation_waveform(const TwoRayParams<double>& p, double t) {
  const double beta = p.beta();
  const StepValue step = classify_step(beta);
  if (step == StepValue::kZero)
    throw SingularPoint("deviation_waveform: beta = 1, deviation is a delta function");
  const auto ip = intermediate_params(p);
  const auto [num, den] = two_ray_atan_terms(p, ip, t);
  return std::atan2(num, den) - ip.delta_gamma * to_int(step);
}

QuadratureResult period_average_by_quadrature(const TwoRayParams<double>& p, double t0) {
  const BeatSpec spec = require_beat(p, "period_average_by_quadrature");
  // Integrate the deviation from omega_avg, then add omega_avg back.
  auto g = [&](double t) { return instantaneous_doppler(p, t) - spec.omega_avg; };
  QuadratureResult q = integrate_period(g, spec, t0, 1e-10 * spec.omega_beat);
  q.value += spec.omega_avg;
  return q;
}

QuadratureResult period_average_phase_step(const TwoRayParams<double>& p, double t0) {
  const BeatSpec spec = require_beat(p, "period_average_phase_step");
  auto g = [&](double t) { return two_ray_discriminator(p, t); };
  return integrate_period(g, spec, t0, 1e-12);
}

double deviation_area(const TwoRayParams<double>& p, double t0) {
  const BeatSpec spec = require_beat(p, "deviation_area");
  if (classify_step(p.beta()) == StepValue::kZero)
    throw InvalidArgument("deviation_area: beta = 1 has no one-sided area");
  auto g = [&](double t) { return instantaneous_doppler(p, t) - spec.omega_avg; };
  const QuadratureResult q = integrate_period(g, spec, t0, 1e-10 * spec.omega_beat);
  if (!q.converged)
    throw ConvergenceFailure("deviation_area: quadrature did not converge", q.change);
  return q.value * spec.t_beat;
}

}  // namespace fllmp
