#include <gtest/gtest.h>

#include <cmath>
#include <limits>
#include <numbers>
#include <random>
#include <vector>

#include "fllmp/beat_analysis.hpp"
#include "fllmp/quadrature.hpp"
#include "oracles.hpp"

using namespace fllmp;

namespace {

constexpr double kPi = std::numbers::pi;

TEST(Quadrature, PolynomialsAreExact) {
  const auto r = simpson_doubling([](double x) { return x * x * x - 2 * x; }, 0.0, 2.0);
  EXPECT_TRUE(r.converged);
  EXPECT_NEAR(r.value, 0.0, 1e-13);
}

TEST(Quadrature, SmoothPeriodicIntegrand) {
  const auto r = simpson_doubling([](double x) { return std::exp(std::cos(x)); }, 0.0, 2 * kPi);
  EXPECT_TRUE(r.converged);
  EXPECT_NEAR(r.value, 2 * kPi * std::cyl_bessel_i(0.0, 1.0), 1e-12);
}

TEST(Quadrature, ReportsNonConvergence) {
  SimpsonOptions opt;
  opt.initial_intervals = 4;
  opt.max_intervals = 16;
  opt.abs_tol = 1e-15;
  const auto r = simpson_doubling([](double x) { return std::sqrt(x); }, 0.0, 1.0, opt);
  EXPECT_FALSE(r.converged);
  EXPECT_EQ(r.intervals, 16u);
  EXPECT_GT(r.change, 0.0);
}

TEST(Beat, Spec) {
  const auto z = beat_spec(100, 100);
  EXPECT_TRUE(z.zero_beat());
  EXPECT_TRUE(std::isinf(z.t_beat));
  const auto b = beat_spec(110, 90);
  EXPECT_FALSE(b.zero_beat());
  EXPECT_DOUBLE_EQ(b.omega_beat, 20.0);
  EXPECT_NEAR(b.t_beat, 0.31416, 1e-5);
  EXPECT_DOUBLE_EQ(b.omega_avg, 100.0);
}

TEST(Beat, ClassifyStep) {
  EXPECT_EQ(classify_step(2.0), StepValue::kMinus);
  EXPECT_EQ(classify_step(1.0), StepValue::kZero);
  EXPECT_EQ(classify_step(0.3), StepValue::kPlus);
  EXPECT_EQ(classify_step(0.0), StepValue::kPlus);
  EXPECT_EQ(classify_step(std::numeric_limits<double>::infinity()), StepValue::kMinus);
  EXPECT_EQ(classify_step(1.01, 0.05), StepValue::kZero);
  EXPECT_THROW(classify_step(-1.0), InvalidArgument);
}

TEST(FIntegral, Examples) {
  EXPECT_NEAR(f_integral(10, 0.01).value, -1.0, 1e-9);
  EXPECT_NEAR(f_integral(0.5, 1.0).value, 1.0, 1e-9);
  EXPECT_EQ(f_integral(0.0, 0.3).value, 1.0);
  EXPECT_NEAR(f_integral(1e4, 1e-6).value, -1.0, 1e-9);
  EXPECT_NEAR(f_integral(std::numeric_limits<double>::infinity(), 0.2).value, -1.0, 1e-12);
}

TEST(FIntegral, Errors) {
  EXPECT_THROW(f_integral(1.0, 0.1), InvalidArgument);
  EXPECT_THROW(f_integral(0.5, 0.0), InvalidArgument);
  EXPECT_THROW(f_integral(0.5, 2.0), InvalidArgument);
  EXPECT_THROW(f_integral(-0.5, 0.1), InvalidArgument);
}

TEST(FIntegral, BruteForceOracleNearOne) {
  // Plain midpoint sum with many points; agrees with the step away from 1.
  for (double beta : {0.9, 1.1, 0.99, 1.05}) {
    const double dg = 0.3;
    const int n = 400000;
    double acc = 0.0;
    for (int i = 0; i < n; ++i) {
      const double d = 2 * kPi * (i + 0.5) / n;
      acc += std::atan2((1 - beta * beta) * std::sin(dg),
                        (1 + beta * beta) * std::cos(dg) + 2 * beta * std::cos(d));
    }
    const double brute = acc / n / dg;
    EXPECT_NEAR(f_integral(beta, dg).value, brute, 1e-8) << beta;
    EXPECT_NEAR(brute, beta < 1 ? 1.0 : -1.0, 1e-8);
  }
}

TEST(FIntegral, ReciprocalAntisymmetry) {
  for (double beta : {1e-3, 0.2, 0.7, 0.999}) {
    for (double dg : {1e-6, 0.5, 1.5}) {
      EXPECT_NEAR(f_integral(beta, dg).value, -f_integral(1 / beta, dg).value, 1e-9);
    }
  }
}

TEST(PeriodAverage, Examples) {
  EXPECT_EQ(period_avg_doppler(100, 90, 0.5), 100);
  EXPECT_EQ(period_avg_doppler(100, 90, 2.0), 90);
  EXPECT_EQ(period_avg_doppler(100, 90, 1.0), 95);
}

TwoRayParams<double> params(double b1, double w0, double w1, double phi0 = 0, double phi1 = 0) {
  TwoRayParams<double> p;
  p.b0 = 1;
  p.b1 = b1;
  p.omega0 = w0;
  p.omega1 = w1;
  p.phi0 = phi0;
  p.phi1 = phi1;
  p.replica_freq = 0.5 * (w0 + w1) + 3.0;
  p.delta_t = 1e-3;
  return p;
}

TEST(PeriodAverage, QuadratureMatchesDominantRay) {
  std::mt19937_64 rng(123);
  std::uniform_real_distribution<double> u(0, 1);
  for (int i = 0; i < 20; ++i) {
    const double beta = u(rng) < 0.5 ? 0.05 + 0.9 * u(rng) : 1.1 + 10 * u(rng);
    const double w0 = 1000 * (u(rng) - 0.5);
    const double w1 = w0 + (u(rng) < 0.5 ? -1 : 1) * (20 + 1500 * u(rng));
    const auto p = params(beta, w0, w1, 6 * u(rng), 6 * u(rng));
    const double wb = std::abs(w0 - w1);
    const auto q = period_average_by_quadrature(p, u(rng));
    EXPECT_TRUE(q.converged);
    EXPECT_NEAR(q.value, period_avg_doppler(w0, w1, beta), 1e-6 * wb) << i;

    // Independent phasor-sum average.
    const double t_b = 2 * kPi / wb;
    std::vector<oracle::Path> paths{{p.b0, w0 - p.replica_freq, p.phi0},
                                    {p.b1, w1 - p.replica_freq, p.phi1}};
    const double mean_rate = 0.5 * (w0 + w1) - p.replica_freq;
    const double brute = p.replica_freq +
                         oracle::mean_phase_step(paths, p.delta_t, 0.0, t_b, mean_rate, 200000) /
                             p.delta_t;
    EXPECT_NEAR(brute, period_avg_doppler(w0, w1, beta), 1e-4 * wb) << i;
  }
}

TEST(PeriodAverage, PhaseStepAverage) {
  // Average of dPhi is delta_t times the dominant frequency error.
  const auto p = params(0.3, 130, 70);
  EXPECT_NEAR(period_average_phase_step(p).value, (130 - p.replica_freq) * p.delta_t, 1e-10);
  EXPECT_THROW(period_average_phase_step(params(0.3, 100, 100)), ZeroBeat);
}

TEST(Deviation, LosOnlyIsFlat) {
  const auto p = params(0.0, 130, 70);
  for (double t : {0.0, 0.01, 0.07}) EXPECT_NEAR(deviation_waveform(p, t), 0.0, 1e-15);
}

TEST(Deviation, StrongNlosHasZeroMean) {
  const auto p = params(10.0, 130, 70);
  const auto spec = beat_spec(130, 70);
  const auto q = simpson_doubling([&](double u) { return deviation_waveform(p, u * spec.t_beat); },
                                  0.0, 1.0);
  EXPECT_NEAR(q.value, 0.0, 1e-9);
  double worst = 0.0;
  for (int i = 0; i < 1000; ++i)
    worst = std::max(worst, std::abs(deviation_waveform(p, i * spec.t_beat / 1000)));
  EXPECT_LT(worst, 0.5 * intermediate_params(p).delta_gamma);
  EXPECT_THROW(deviation_waveform(params(1.0, 130, 70), 0.0), SingularPoint);
}

TEST(Deviation, AreaIsPi) {
  EXPECT_NEAR(deviation_area(params(0.5, 130, 70)), kPi, 1e-6);
  EXPECT_NEAR(deviation_area(params(2.0, 130, 70)), -kPi, 1e-6);
  EXPECT_NEAR(deviation_area(params(10.0, 130, 70)), deviation_area(params(1.1, 130, 70)), 1e-6);
  EXPECT_NEAR(deviation_area(params(0.5, 70, 130)), -kPi, 1e-6);
  EXPECT_THROW(deviation_area(params(0.5, 100, 100)), ZeroBeat);
  EXPECT_THROW(deviation_area(params(1.0, 130, 70)), InvalidArgument);
}

}  // namespace
