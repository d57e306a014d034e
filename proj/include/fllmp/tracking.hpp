#pragma once

#include <cstddef>
#include <functional>
#include <numbers>
#include <span>
#include <vector>

#include "fllmp/signal.hpp"

namespace fllmp {

/// First-order low-pass update over a step dt with exact exponential
/// discretization: out = input + (state - input) e^{-dt/tau}.
double loop_filter_step(double state, double input, double dt, double tau);

/// Response jump of the same filter to an impulse of the given area.
double loop_filter_impulse(double state, double area, double tau);

/// FLL design parameters. The loop runs one discriminator update per
/// coherent interval; delta_t must be a whole number of intervals.
struct LoopConfig {
  double delta_t = kDefaultIntegrationTime;
  double coherent_time = kDefaultIntegrationTime;
  double filter_bandwidth = 1.0;  // Hz
  std::size_t navg_window = 1;
  double initial_doppler = 0.0;   // rad/s
  double carrier_center = 0.0;    // rad/s
  double sample_rate = kDefaultSampleRate;
  double replica_code_delay = 0.0;

  double time_constant() const { return 1.0 / (2.0 * std::numbers::pi * filter_bandwidth); }
  std::size_t discriminator_lag() const;
  void validate() const;
};

/// Evolving tracking state. accumulated_phase is the NCO phase beyond the
/// carrier center at the start of the next interval.
struct LoopState {
  double accumulated_phase = 0.0;
  double filter_memory = 0.0;  // filtered Doppler estimate, rad/s
  std::vector<double> navg_buffer;
  double current_replica_freq = 0.0;
};

struct TrackPoint {
  double t;               // end of the interval, s
  double doppler;         // loop filter output, rad/s
  double raw_doppler;     // unfiltered estimate for the interval, rad/s
};

/// Loop bookkeeping shared by the sample-level and postcorrelation runners:
/// NCO phase accumulation, discriminator, noncoherent average, loop filter.
class FrequencyLockedLoop {
 public:
  explicit FrequencyLockedLoop(const LoopConfig& cfg);

  /// Replica for the next interval: absolute frequency and the phase at t = 0
  /// that makes the replica continuous with the previous interval.
  SynthesisConfig<double> next_replica() const;

  /// NCO Doppler phase at the midpoint of the next interval.
  double next_midpoint_phase() const;

  double next_start_time() const { return static_cast<double>(epoch_) * cfg_.coherent_time; }

  /// Consume the correlator output of the next interval and advance.
  TrackPoint update(ComplexSample<double> s);

  const LoopState& state() const { return state_; }
  const LoopConfig& config() const { return cfg_; }

 private:
  LoopConfig cfg_;
  LoopState state_;
  std::size_t lag_;
  std::size_t epoch_ = 0;
  std::vector<ComplexSample<double>> history_;  // last lag_ correlator outputs
  std::vector<double> mid_phase_;               // matching midpoint NCO phases
  std::vector<double> advance_buffer_;          // replica advances matching navg_buffer
  double last_raw_ = 0.0;
  int wrapped_run_ = 0;
};

/// Consecutive near-pi (or indeterminate) discriminator outputs tolerated
/// before a loss of lock is declared.
inline constexpr int kMaxWrappedEpochs = 10;
inline constexpr double kWrapThreshold = 0.999 * std::numbers::pi;

using SampleSink = std::function<void(std::size_t epoch, const SampleArray<double>&)>;

/// Full FLL on synthesized precorrelation samples.
std::vector<TrackPoint> run_closed_loop(std::span<const Ray<double>> rays, const CodeSequence& code,
                                        const LoopConfig& cfg, double duration,
                                        const SampleSink& sink = {});

/// Same loop fed directly by the postcorrelation model. Each ray's
/// freq_error is its Doppler against a replica at the bare carrier; the NCO
/// phase is wiped off per interval.
std::vector<TrackPoint> run_closed_loop_postcorr(std::span<const PostRay<double>> rays,
                                                 const LoopConfig& cfg, double duration);

/// Mean filter output over the trailing `window` seconds of a run.
double trailing_mean(std::span<const TrackPoint> series, double window);

/// Periodic impulse train pi * sign * sum_k delta(t - k T_b) driving the
/// first-order loop filter.
struct SpikeChainSpec {
  double beat_period;
  double spike_magnitude = std::numbers::pi;
  int spike_sign = 1;
  double filter_time_constant = 1.0 / (2.0 * std::numbers::pi);

  void validate() const;
};

/// Filter output on the grid t = n dt, plus left/right limits at each spike.
struct SpikeChainTrace {
  std::vector<double> t;
  std::vector<double> value;
  std::vector<double> spike_times;
  std::vector<double> pre_spike;   // left limit (trough)
  std::vector<double> post_spike;  // right limit (peak)
};

SpikeChainTrace spike_chain_response(const SpikeChainSpec& spec, double duration, double dt);

/// Steady-state perturbation band of the spike-chain response, referenced to
/// the period-averaged level; positive means toward the mean of the two
/// arriving frequencies.
struct PerturbationBounds {
  double min_mps;
  double max_mps;
  double min_norm;
  double max_norm;
};

PerturbationBounds perturbation_bounds(double t_b, double tau, double wavelength);

}  // namespace fllmp
