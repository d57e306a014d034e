#pragma once

#include <cmath>
#include <complex>
#include <cstdint>
#include <cstddef>
#include <iosfwd>
#include <numbers>
#include <optional>
#include <span>
#include <vector>

#include <Eigen/Core>

#include "fllmp/errors.hpp"

namespace fllmp {

/// Complex baseband sample; real part is I, imaginary part is Q.
template <typename Scalar = double>
using ComplexSample = std::complex<Scalar>;

template <typename Scalar = double>
using SampleArray = Eigen::Array<std::complex<Scalar>, Eigen::Dynamic, 1>;

/// Wrap an angle into [-pi, pi).
template <typename Scalar>
Scalar wrap_phase(Scalar phase) {
  constexpr Scalar pi = std::numbers::pi_v<Scalar>;
  Scalar w = std::fmod(phase + pi, Scalar(2) * pi);
  if (w < Scalar(0)) w += Scalar(2) * pi;
  return w - pi;
}

/// One propagation path before correlation.
template <typename Scalar = double>
struct Ray {
  Scalar amplitude;   // A_l > 0
  Scalar doppler;     // rad/s
  Scalar phase;       // rad, [-pi, pi)
  Scalar code_delay;  // s

  Ray(Scalar amplitude_, Scalar doppler_, Scalar phase_ = Scalar(0), Scalar code_delay_ = Scalar(0))
      : amplitude(amplitude_), doppler(doppler_), phase(wrap_phase(phase_)), code_delay(code_delay_) {
    if (!(amplitude > Scalar(0))) throw InvalidArgument("Ray: amplitude must be positive");
  }
};

/// One path after correlation: amplitude B_l, frequency error, phase.
template <typename Scalar = double>
struct PostRay {
  Scalar amplitude;
  Scalar freq_error;
  Scalar phase;
};

/// Spreading code held as +/-1 chips, extended periodically in time.
class CodeSequence {
 public:
  CodeSequence(std::vector<std::int8_t> chips, double chip_period);

  const std::vector<std::int8_t>& chips() const { return chips_; }
  std::size_t size() const { return chips_.size(); }
  double chip_period() const { return chip_period_; }
  double duration() const { return chip_period_ * static_cast<double>(chips_.size()); }

  /// c(t); the sequence repeats with period duration().
  double value_at(double t) const {
    const auto k = static_cast<std::int64_t>(std::floor(t / chip_period_));
    const auto n = static_cast<std::int64_t>(chips_.size());
    std::int64_t i = k % n;
    if (i < 0) i += n;
    return chips_[static_cast<std::size_t>(i)];
  }

 private:
  std::vector<std::int8_t> chips_;
  double chip_period_;
};

inline constexpr double kDefaultChipRate = 1.023e6;
inline constexpr double kDefaultIntegrationTime = 1e-3;
inline constexpr double kDefaultSampleRate = 4.092e6;

/// Deterministic pseudorandom +/-1 code from a 64-bit Mersenne twister.
CodeSequence generate_code(std::uint64_t seed, std::size_t n_chips,
                           double chip_period = 1.0 / kDefaultChipRate);

/// Normalized periodic autocorrelation (1/P) int c(t) c(t - lag) dt.
/// Exact for a piecewise-constant chip sequence.
double code_autocorr(const CodeSequence& code, double lag);

/// Front end and replica settings for one integrate-and-dump interval.
/// The replica carrier phase is replica_frequency * t + replica_phase, with t
/// absolute time.
template <typename Scalar = double>
struct SynthesisConfig {
  Scalar carrier_center = Scalar(0);
  Scalar replica_frequency = Scalar(0);
  Scalar replica_phase = Scalar(0);
  Scalar replica_code_delay = Scalar(0);
  Scalar integration_time = Scalar(kDefaultIntegrationTime);
  Scalar sample_rate = Scalar(kDefaultSampleRate);

  Eigen::Index samples_per_interval() const {
    return static_cast<Eigen::Index>(std::llround(double(sample_rate) * double(integration_time)));
  }

  void validate() const {
    if (!(integration_time > Scalar(0)))
      throw InvalidArgument("SynthesisConfig: integration_time must be positive");
    if (!(sample_rate > Scalar(0)) || samples_per_interval() < 100)
      throw InvalidArgument("SynthesisConfig: need at least 100 samples per interval");
  }
};

namespace detail {

// Midpoint sample instants of one interval.
template <typename Scalar>
Eigen::Array<Scalar, Eigen::Dynamic, 1> sample_times(const SynthesisConfig<Scalar>& cfg,
                                                     Scalar t_start) {
  const Eigen::Index n = cfg.samples_per_interval();
  const Scalar dt = Scalar(1) / cfg.sample_rate;
  return t_start + (Eigen::Array<Scalar, Eigen::Dynamic, 1>::LinSpaced(n, Scalar(0), Scalar(n - 1)) +
                    Scalar(0.5)) * dt;
}

template <typename Scalar>
Eigen::Array<Scalar, Eigen::Dynamic, 1> code_values(
    const CodeSequence& code, const Eigen::Array<Scalar, Eigen::Dynamic, 1>& t, Scalar delay) {
  Eigen::Array<Scalar, Eigen::Dynamic, 1> c(t.size());
  for (Eigen::Index i = 0; i < t.size(); ++i)
    c(i) = Scalar(code.value_at(double(t(i)) - double(delay)));
  return c;
}

}  // namespace detail

/// Samples of sum_l A_l exp(j((w + w_d,l) t + phi_l)) c(t - tau_l) on the
/// midpoint grid t_n = t_start + (n + 1/2) / fs, n < fs * T. Noise-free.
template <typename Scalar>
SampleArray<Scalar> synthesize_precorrelation(std::span<const Ray<Scalar>> rays,
                                              const CodeSequence& code,
                                              const SynthesisConfig<Scalar>& cfg, Scalar t_start) {
  if (rays.empty()) throw InvalidArgument("synthesize_precorrelation: no rays");
  cfg.validate();
  using Array = Eigen::Array<Scalar, Eigen::Dynamic, 1>;
  const Array t = detail::sample_times(cfg, t_start);
  Array re = Array::Zero(t.size());
  Array im = Array::Zero(t.size());
  for (const auto& ray : rays) {
    const Array phase = (cfg.carrier_center + ray.doppler) * t + ray.phase;
    const Array gain = ray.amplitude * detail::code_values(code, t, ray.code_delay);
    re += gain * phase.cos();
    im += gain * phase.sin();
  }
  SampleArray<Scalar> out(t.size());
  out.real() = re;
  out.imag() = im;
  return out;
}

/// Carrier and code wipeoff followed by integrate-and-dump:
/// (1/N) sum_n s(t_n) conj(s_R(t_n)).
template <typename Scalar>
ComplexSample<Scalar> correlate_integrate(const SampleArray<Scalar>& received,
                                          const SynthesisConfig<Scalar>& cfg,
                                          const CodeSequence& code, Scalar t_start) {
  cfg.validate();
  if (received.size() != cfg.samples_per_interval())
    throw InvalidArgument("correlate_integrate: sample count does not match the interval grid");
  using Array = Eigen::Array<Scalar, Eigen::Dynamic, 1>;
  const Array t = detail::sample_times(cfg, t_start);
  const Array phase = cfg.replica_frequency * t + cfg.replica_phase;
  const Array c = detail::code_values(code, t, cfg.replica_code_delay);
  const Array cr = c * phase.cos();
  const Array ci = c * phase.sin();
  // s * conj(c e^{j theta}) = (re + j im)(cr - j ci)
  const Scalar i_sum = (received.real() * cr + received.imag() * ci).sum();
  const Scalar q_sum = (received.imag() * cr - received.real() * ci).sum();
  const Scalar n = Scalar(received.size());
  return {i_sum / n, q_sum / n};
}

/// Postcorrelation model sum_l B_l exp(j(dw_l t + phi_l)) at time t.
template <typename Scalar>
ComplexSample<Scalar> synthesize_postcorrelation(std::span<const PostRay<Scalar>> post_rays,
                                                 Scalar t) {
  if (post_rays.empty()) throw InvalidArgument("synthesize_postcorrelation: no rays");
  ComplexSample<Scalar> s{0, 0};
  for (const auto& r : post_rays) s += std::polar(r.amplitude, r.freq_error * t + r.phase);
  return s;
}

/// Postcorrelation rays predicted for a replica: B_l = A_l R(tau_l - tau),
/// dw_l = w + w_d,l - w_R, phase phi_l - phi_R.
template <typename Scalar>
std::vector<PostRay<Scalar>> post_rays_for(std::span<const Ray<Scalar>> rays,
                                           const CodeSequence& code,
                                           const SynthesisConfig<Scalar>& cfg) {
  std::vector<PostRay<Scalar>> out;
  out.reserve(rays.size());
  for (const auto& r : rays) {
    const Scalar corr = Scalar(code_autocorr(code, double(r.code_delay - cfg.replica_code_delay)));
    out.push_back({r.amplitude * corr, cfg.carrier_center + r.doppler - cfg.replica_frequency,
                   r.phase - cfg.replica_phase});
  }
  return out;
}

template <typename Scalar = double>
struct PolarSum {
  Scalar amplitude;
  Scalar phase;
};

/// Collapse rays sharing one frequency error into B_sum = sum_l B_l e^{j phi_l}.
/// Returns nullopt when the frequency errors differ by more than `tol`.
template <typename Scalar>
std::optional<PolarSum<Scalar>> zero_speed_collapse(std::span<const PostRay<Scalar>> post_rays,
                                                    Scalar tol = Scalar(1e-12)) {
  if (post_rays.empty()) return PolarSum<Scalar>{Scalar(0), Scalar(0)};
  const Scalar w = post_rays.front().freq_error;
  ComplexSample<Scalar> sum{0, 0};
  for (const auto& r : post_rays) {
    if (std::abs(r.freq_error - w) > tol) return std::nullopt;
    sum += std::polar(r.amplitude, r.phase);
  }
  return PolarSum<Scalar>{std::abs(sum), std::arg(sum)};
}

/// Raw dump: little-endian interleaved float64 I, Q.
void write_iq_dump(std::ostream& os, const SampleArray<double>& samples);

}  // namespace fllmp
