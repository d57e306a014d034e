#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <random>
#include <cstring>
#include <sstream>
#include <vector>

#include "fllmp/signal.hpp"
#include "oracles.hpp"

using namespace fllmp;

namespace {

constexpr double kPi = std::numbers::pi;
const double kTc = 1.0 / kDefaultChipRate;

TEST(Code, DeterministicPerSeed) {
  const auto a = generate_code(42, 10);
  const auto b = generate_code(42, 10);
  EXPECT_EQ(a.chips(), b.chips());
  EXPECT_NE(generate_code(43, 64).chips(), generate_code(42, 64).chips());
  const auto code = generate_code(5, 1000);
  for (auto c : code.chips()) EXPECT_TRUE(c == 1 || c == -1);
  EXPECT_THROW(generate_code(1, 0), InvalidArgument);
}

TEST(Code, ZeroLagAutocorrelationIsOne) {
  EXPECT_DOUBLE_EQ(code_autocorr(generate_code(42, 10230), 0.0), 1.0);
}

TEST(Code, AutocorrelationMatchesBruteForce) {
  const auto code = generate_code(11, 1023);
  const double bound = 2.0 / std::sqrt(1023.0);
  EXPECT_NEAR(code_autocorr(code, kTc), 0.0, bound);
  EXPECT_NEAR(code_autocorr(code, 0.5 * kTc), 0.5, bound);
  for (double lag : {0.25, 0.5, 1.0, 1.75, 3.0, -0.5, -2.25}) {
    const double brute = oracle::autocorr(code.chips(), lag, 8);
    EXPECT_NEAR(code_autocorr(code, lag * kTc), brute, 1e-12) << "lag " << lag;
  }
  EXPECT_THROW(code_autocorr(code, 2.0 * code.duration()), InvalidArgument);
}

SynthesisConfig<double> default_cfg() { return {}; }

TEST(Synthesis, SingleToneHasUnitMagnitude) {
  CodeSequence ones(std::vector<std::int8_t>(1023, 1), kTc);
  std::vector<Ray<double>> rays{Ray<double>(1.0, 0.0)};
  auto cfg = default_cfg();
  cfg.carrier_center = 2.0 * kPi * 1000.0;
  const auto s = synthesize_precorrelation<double>(rays, ones, cfg, 0.0);
  EXPECT_EQ(s.size(), 4092);
  EXPECT_LT((s.abs() - 1.0).abs().maxCoeff(), 1e-12);
}

TEST(Synthesis, LinearityAndCancellation) {
  const auto code = generate_code(3, 1023);
  auto cfg = default_cfg();
  std::vector<Ray<double>> one{Ray<double>(0.7, 120.0, 0.3, 2 * kTc)};
  std::vector<Ray<double>> two{one[0], one[0]};
  const auto a = synthesize_precorrelation<double>(one, code, cfg, 0.01);
  const auto b = synthesize_precorrelation<double>(two, code, cfg, 0.01);
  EXPECT_LT((b - 2.0 * a).abs().maxCoeff(), 1e-12);

  std::vector<Ray<double>> opp{one[0], Ray<double>(0.7, 120.0, 0.3 + kPi, 2 * kTc)};
  EXPECT_LT(synthesize_precorrelation<double>(opp, code, cfg, 0.01).abs().maxCoeff(), 1e-12);
}

TEST(Correlate, PerfectWipeoff) {
  const auto code = generate_code(9, 1023);
  auto cfg = default_cfg();
  cfg.replica_frequency = 250.0;
  cfg.replica_phase = 0.4;
  cfg.replica_code_delay = 3.5 * kTc;
  std::vector<Ray<double>> rays{Ray<double>(1.0, 250.0, 0.4, 3.5 * kTc)};
  const double t0 = 0.123;
  const auto s = synthesize_precorrelation<double>(rays, code, cfg, t0);
  const auto c = correlate_integrate(s, cfg, code, t0);
  EXPECT_NEAR(c.real(), 1.0, 1e-9);
  EXPECT_NEAR(c.imag(), 0.0, 1e-9);
}

TEST(Correlate, DelayedCodeIsSuppressed) {
  const auto code = generate_code(21, 1023);
  auto cfg = default_cfg();
  for (double d : {1.5, 2.0, 7.25, 100.0}) {
    std::vector<Ray<double>> rays{Ray<double>(1.0, 0.0, 0.0, d * kTc)};
    const auto s = synthesize_precorrelation<double>(rays, code, cfg, 0.0);
    EXPECT_LT(std::abs(correlate_integrate(s, cfg, code, 0.0)), 0.05) << d;
  }
}

TEST(Correlate, LengthMismatchThrows) {
  const auto code = generate_code(1, 1023);
  SampleArray<double> s(10);
  EXPECT_THROW(correlate_integrate(s, default_cfg(), code, 0.0), InvalidArgument);
}

TEST(Correlate, TwoRaysMatchPostcorrelationModel) {
  const auto code = generate_code(77, 1023);
  auto cfg = default_cfg();
  cfg.replica_frequency = 500.0;
  cfg.replica_phase = 0.2;
  std::vector<Ray<double>> rays{Ray<double>(1.0, 503.0, 0.1, 0.0),
                                Ray<double>(0.4, 497.0, 2.0, 0.5 * kTc)};
  const double t0 = 0.05;
  const auto s = synthesize_precorrelation<double>(rays, code, cfg, t0);
  const auto c = correlate_integrate(s, cfg, code, t0);
  // Direct evaluation of the postcorrelation sum at the interval midpoint.
  std::vector<oracle::Path> paths;
  for (const auto& r : rays)
    paths.push_back({r.amplitude * oracle::autocorr(code.chips(), r.code_delay / kTc, 8),
                     r.doppler - cfg.replica_frequency, r.phase - cfg.replica_phase});
  const auto expect = oracle::post_sum(paths, t0 + 0.5e-3);
  EXPECT_LT(std::abs(c - expect) / std::abs(expect), 0.01);
  const auto model = post_rays_for<double>(rays, code, cfg);
  EXPECT_LT(std::abs(synthesize_postcorrelation<double>(model, t0 + 0.5e-3) - expect), 1e-12);
}

TEST(Postcorrelation, Examples) {
  std::vector<PostRay<double>> one{{1.0, 0.0, 0.0}};
  for (double t : {0.0, 0.5, 3.0}) {
    const auto s = synthesize_postcorrelation<double>(one, t);
    EXPECT_DOUBLE_EQ(s.real(), 1.0);
    EXPECT_DOUBLE_EQ(s.imag(), 0.0);
  }
  std::vector<PostRay<double>> cancel{{1.0, 5.0, 0.0}, {1.0, 5.0, kPi}};
  EXPECT_LT(std::abs(synthesize_postcorrelation<double>(cancel, 0.3)), 1e-15);
  std::vector<PostRay<double>> pair{{1.0, 10.0, 0.0}, {0.5, -10.0, 0.0}};
  const auto s = synthesize_postcorrelation<double>(pair, 0.0);
  EXPECT_DOUBLE_EQ(s.real(), 1.5);
  EXPECT_DOUBLE_EQ(s.imag(), 0.0);
}

TEST(Postcorrelation, ZeroSpeedCollapse) {
  std::vector<PostRay<double>> one{{0.8, 3.0, 0.25}};
  auto c = zero_speed_collapse<double>(one);
  ASSERT_TRUE(c);
  EXPECT_DOUBLE_EQ(c->amplitude, 0.8);
  EXPECT_DOUBLE_EQ(c->phase, 0.25);

  std::vector<PostRay<double>> cancel{{1.0, 3.0, 0.0}, {1.0, 3.0, kPi}};
  EXPECT_LT(zero_speed_collapse<double>(cancel)->amplitude, 1e-15);

  std::vector<PostRay<double>> quad{{1.0, 3.0, 0.0}, {1.0, 3.0, kPi / 2}};
  c = zero_speed_collapse<double>(quad);
  EXPECT_NEAR(c->amplitude, std::sqrt(2.0), 1e-15);
  EXPECT_NEAR(c->phase, kPi / 4, 1e-15);

  std::vector<PostRay<double>> moving{{1.0, 3.0, 0.0}, {1.0, 4.0, 0.0}};
  EXPECT_FALSE(zero_speed_collapse<double>(moving));
}

TEST(Signal, RayValidation) {
  EXPECT_THROW(Ray<double>(0.0, 1.0), InvalidArgument);
  EXPECT_THROW(Ray<double>(-1.0, 1.0), InvalidArgument);
  EXPECT_NEAR(Ray<double>(1.0, 0.0, 3 * kPi).phase, -kPi, 1e-12);
  auto cfg = default_cfg();
  cfg.sample_rate = 1e4;
  EXPECT_THROW(cfg.validate(), InvalidArgument);
}

TEST(Signal, IqDumpIsInterleavedFloat64) {
  SampleArray<double> s(2);
  s << std::complex<double>(1.0, -2.0), std::complex<double>(0.5, 4.0);
  std::ostringstream os;
  write_iq_dump(os, s);
  const std::string bytes = os.str();
  ASSERT_EQ(bytes.size(), 32u);
  double v[4];
  std::memcpy(v, bytes.data(), 32);
  EXPECT_EQ(v[0], 1.0);
  EXPECT_EQ(v[1], -2.0);
  EXPECT_EQ(v[2], 0.5);
  EXPECT_EQ(v[3], 4.0);
}

TEST(Signal, FloatInstantiation) {
  const auto code = generate_code(2, 1023);
  SynthesisConfig<float> cfg;
  std::vector<Ray<float>> rays{Ray<float>(1.0f, 10.0f)};
  const auto s = synthesize_precorrelation<float>(rays, code, cfg, 0.0f);
  const auto c = correlate_integrate(s, cfg, code, 0.0f);
  EXPECT_NEAR(std::abs(c), 1.0f, 1e-3f);
}

}  // namespace
