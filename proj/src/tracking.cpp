#include "fllmp/tracking.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <numeric>
#include <sstream>

#include "fllmp/discriminator.hpp"

namespace fllmp {

double loop_filter_step(double state, double input, double dt, double tau) {
  if (!(dt > 0.0) || !(tau > 0.0))
    throw InvalidArgument("loop_filter_step: dt and tau must be positive");
  return input + (state - input) * std::exp(-dt / tau);
}

double loop_filter_impulse(double state, double area, double tau) {
  if (!(tau > 0.0)) throw InvalidArgument("loop_filter_impulse: tau must be positive");
  return state + area / tau;
}

std::size_t LoopConfig::discriminator_lag() const {
  const double ratio = delta_t / coherent_time;
  const double r = std::round(ratio);
  if (r < 1.0 || std::abs(ratio - r) > 1e-9 * r)
    throw InvalidArgument("LoopConfig: delta_t must be a positive multiple of coherent_time");
  return static_cast<std::size_t>(r);
}

void LoopConfig::validate() const {
  if (!(delta_t > 0.0)) throw InvalidArgument("LoopConfig: delta_t must be positive");
  if (!(coherent_time > 0.0)) throw InvalidArgument("LoopConfig: coherent_time must be positive");
  if (!(filter_bandwidth > 0.0))
    throw InvalidArgument("LoopConfig: filter_bandwidth must be positive");
  if (navg_window < 1) throw InvalidArgument("LoopConfig: navg_window must be at least 1");
  discriminator_lag();
}

FrequencyLockedLoop::FrequencyLockedLoop(const LoopConfig& cfg) : cfg_(cfg) {
  cfg_.validate();
  lag_ = cfg_.discriminator_lag();
  state_.filter_memory = cfg_.initial_doppler;
  state_.current_replica_freq = cfg_.carrier_center + cfg_.initial_doppler;
}

SynthesisConfig<double> FrequencyLockedLoop::next_replica() const {
  SynthesisConfig<double> rep;
  rep.carrier_center = cfg_.carrier_center;
  rep.replica_frequency = cfg_.carrier_center + state_.filter_memory;
  rep.replica_phase = state_.accumulated_phase - state_.filter_memory * next_start_time();
  rep.replica_code_delay = cfg_.replica_code_delay;
  rep.integration_time = cfg_.coherent_time;
  rep.sample_rate = cfg_.sample_rate;
  return rep;
}

double FrequencyLockedLoop::next_midpoint_phase() const {
  return state_.accumulated_phase + state_.filter_memory * 0.5 * cfg_.coherent_time;
}

TrackPoint FrequencyLockedLoop::update(ComplexSample<double> s) {
  const double mid_phase = next_midpoint_phase();
  const double t_end = static_cast<double>(epoch_ + 1) * cfg_.coherent_time;
  const double freq_used = state_.filter_memory;
  double raw = last_raw_;
  bool measured = false;

  if (history_.size() == lag_) {
    bool wrapped = false;
    try {
      const double dphi = atan_discriminator(s, history_.front(), 1.0);
      wrapped = std::abs(dphi) > kWrapThreshold;
      state_.navg_buffer.push_back(dphi);
      advance_buffer_.push_back(mid_phase - mid_phase_.front());
      if (state_.navg_buffer.size() > cfg_.navg_window) {
        state_.navg_buffer.erase(state_.navg_buffer.begin());
        advance_buffer_.erase(advance_buffer_.begin());
      }
      const double n = static_cast<double>(state_.navg_buffer.size());
      const double dphi_n =
          std::accumulate(state_.navg_buffer.begin(), state_.navg_buffer.end(), 0.0) / n;
      const double adv_n = std::accumulate(advance_buffer_.begin(), advance_buffer_.end(), 0.0) / n;
      raw = (adv_n + dphi_n) / cfg_.delta_t;
      measured = true;
    } catch (const IndeterminatePhase&) {
      wrapped = true;
    }
    wrapped_run_ = wrapped ? wrapped_run_ + 1 : 0;
    if (wrapped_run_ > kMaxWrappedEpochs) {
      std::ostringstream msg;
      msg << "loss of lock: discriminator wrapped or indeterminate for " << wrapped_run_
          << " consecutive intervals ending at t=" << t_end << " s";
      throw LossOfLock(msg.str(), t_end);
    }
  }

  if (measured) {
    state_.filter_memory =
        loop_filter_step(state_.filter_memory, raw, cfg_.coherent_time, cfg_.time_constant());
    last_raw_ = raw;
  } else {
    raw = state_.filter_memory;
  }

  history_.push_back(s);
  mid_phase_.push_back(mid_phase);
  if (history_.size() > lag_) {
    history_.erase(history_.begin());
    mid_phase_.erase(mid_phase_.begin());
  }

  state_.accumulated_phase += freq_used * cfg_.coherent_time;
  state_.current_replica_freq = cfg_.carrier_center + state_.filter_memory;
  ++epoch_;
  return {t_end, state_.filter_memory, raw};
}

namespace {

std::size_t epoch_count(const LoopConfig& cfg, double duration) {
  if (!(duration >= 10.0 * cfg.delta_t))
    throw InvalidArgument("closed loop: duration must be at least 10 delta_t");
  return static_cast<std::size_t>(std::floor(duration / cfg.coherent_time + 1e-9));
}

void check_pull_in(double strongest_doppler, const LoopConfig& cfg) {
  if (!(std::abs(strongest_doppler - cfg.initial_doppler) * cfg.delta_t < std::numbers::pi))
    throw InvalidArgument("closed loop: initial Doppler outside the pull-in range");
}

}  // namespace

std::vector<TrackPoint> run_closed_loop(std::span<const Ray<double>> rays, const CodeSequence& code,
                                        const LoopConfig& cfg, double duration,
                                        const SampleSink& sink) {
  if (rays.empty()) throw InvalidArgument("run_closed_loop: no rays");
  cfg.validate();
  const auto strongest = std::max_element(
      rays.begin(), rays.end(), [](const auto& a, const auto& b) { return a.amplitude < b.amplitude; });
  check_pull_in(strongest->doppler, cfg);
  const std::size_t n = epoch_count(cfg, duration);

  FrequencyLockedLoop loop(cfg);
  std::vector<TrackPoint> out;
  out.reserve(n);
  for (std::size_t k = 0; k < n; ++k) {
    const SynthesisConfig<double> rep = loop.next_replica();
    const double t0 = loop.next_start_time();
    const SampleArray<double> samples = synthesize_precorrelation(rays, code, rep, t0);
    if (sink) sink(k, samples);
    out.push_back(loop.update(correlate_integrate(samples, rep, code, t0)));
  }
  return out;
}

std::vector<TrackPoint> run_closed_loop_postcorr(std::span<const PostRay<double>> rays,
                                                 const LoopConfig& cfg, double duration) {
  if (rays.empty()) throw InvalidArgument("run_closed_loop_postcorr: no rays");
  cfg.validate();
  const auto strongest = std::max_element(
      rays.begin(), rays.end(), [](const auto& a, const auto& b) { return a.amplitude < b.amplitude; });
  check_pull_in(strongest->freq_error, cfg);
  const std::size_t n = epoch_count(cfg, duration);

  FrequencyLockedLoop loop(cfg);
  std::vector<TrackPoint> out;
  out.reserve(n);
  for (std::size_t k = 0; k < n; ++k) {
    const double t_mid = loop.next_start_time() + 0.5 * cfg.coherent_time;
    const ComplexSample<double> s =
        synthesize_postcorrelation(rays, t_mid) * std::polar(1.0, -loop.next_midpoint_phase());
    out.push_back(loop.update(s));
  }
  return out;
}

double trailing_mean(std::span<const TrackPoint> series, double window) {
  if (series.empty()) throw InvalidArgument("trailing_mean: empty series");
  const double t_from = series.back().t - window;
  double sum = 0.0;
  std::size_t count = 0;
  for (const auto& p : series) {
    if (p.t > t_from + 1e-12) {
      sum += p.doppler;
      ++count;
    }
  }
  if (count == 0) throw InvalidArgument("trailing_mean: window shorter than one interval");
  return sum / static_cast<double>(count);
}

void SpikeChainSpec::validate() const {
  if (!(beat_period > 0.0)) throw InvalidArgument("SpikeChainSpec: beat_period must be positive");
  if (!(filter_time_constant > 0.0))
    throw InvalidArgument("SpikeChainSpec: filter_time_constant must be positive");
  if (spike_sign != 1 && spike_sign != -1)
    throw InvalidArgument("SpikeChainSpec: spike_sign must be +1 or -1");
  if (spike_magnitude != std::numbers::pi)
    throw InvalidArgument("SpikeChainSpec: spike magnitude is fixed at pi");
}

SpikeChainTrace spike_chain_response(const SpikeChainSpec& spec, double duration, double dt) {
  spec.validate();
  const double tau = spec.filter_time_constant;
  if (!(dt > 0.0) || dt > tau / 100.0)
    throw InvalidArgument("spike_chain_response: need 0 < dt <= tau / 100");
  if (!(duration >= 10.0 * spec.beat_period))
    throw InvalidArgument("spike_chain_response: duration must cover at least 10 beat periods");

  const double area = spec.spike_sign * spec.spike_magnitude;
  const auto n_grid = static_cast<std::size_t>(std::floor(duration / dt + 1e-9)) + 1;
  const auto n_spikes = static_cast<std::size_t>(std::floor(duration / spec.beat_period + 1e-9)) + 1;

  SpikeChainTrace tr;
  tr.t.reserve(n_grid + 2 * n_spikes);
  tr.value.reserve(n_grid + 2 * n_spikes);
  tr.spike_times.reserve(n_spikes);
  tr.pre_spike.reserve(n_spikes);
  tr.post_spike.reserve(n_spikes);

  double y = 0.0;
  double now = 0.0;
  std::size_t g = 0;
  std::size_t k = 0;
  while (g < n_grid || k < n_spikes) {
    const double tg = g < n_grid ? static_cast<double>(g) * dt : INFINITY;
    const double ts = k < n_spikes ? static_cast<double>(k) * spec.beat_period : INFINITY;
    if (ts <= tg) {
      y *= std::exp(-(ts - now) / tau);
      now = ts;
      tr.spike_times.push_back(ts);
      tr.pre_spike.push_back(y);
      tr.t.push_back(ts);
      tr.value.push_back(y);
      y = loop_filter_impulse(y, area, tau);
      tr.post_spike.push_back(y);
      tr.t.push_back(ts);
      tr.value.push_back(y);
      ++k;
      if (ts == tg) ++g;  // grid point already represented by the right limit
    } else {
      y *= std::exp(-(tg - now) / tau);
      now = tg;
      tr.t.push_back(tg);
      tr.value.push_back(y);
      ++g;
    }
  }
  return tr;
}

PerturbationBounds perturbation_bounds(double t_b, double tau, double wavelength) {
  if (!(t_b > 0.0) || !(tau > 0.0) || !(wavelength > 0.0))
    throw InvalidArgument("perturbation_bounds: t_b, tau and wavelength must be positive");
  SpikeChainSpec spec;
  spec.beat_period = t_b;
  spec.filter_time_constant = tau;
  // Long enough for the transient to fall below double precision.
  const double duration = std::max(10.0 * t_b, 60.0 * tau);
  const SpikeChainTrace tr = spike_chain_response(spec, duration, tau / 100.0);

  const double peak = tr.post_spike.back();
  const double trough = tr.pre_spike.back();
  // Exponential decay from peak to trough over one period.
  const double mean = tau * (peak - trough) / t_b;

  const double to_mps = wavelength / (2.0 * std::numbers::pi);
  const double norm = wavelength / t_b;  // LOS/NLOS speed difference at w_beat = 2 pi / T_b
  PerturbationBounds b;
  b.min_mps = (mean - peak) * to_mps;
  b.max_mps = (mean - trough) * to_mps;
  b.min_norm = b.min_mps / norm;
  b.max_norm = b.max_mps / norm;
  return b;
}

}  // namespace fllmp
