#include "cli.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <exception>
#include <fstream>
#include <istream>
#include <limits>
#include <memory>
#include <mutex>
#include <numbers>
#include <ostream>
#include <sstream>
#include <thread>

#include <CLI11.hpp>

#include "fllmp/beat_analysis.hpp"
#include "fllmp/geometry.hpp"
#include "fllmp/signal.hpp"
#include "fllmp/tracking.hpp"

namespace fllmp::cli {

namespace {

constexpr double kPi = std::numbers::pi;
constexpr double kStepTolerance = 1e-9;
constexpr double kBoundsTolerance = 1e-6;

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

// Runs f(i) for i < n on up to `threads` workers; results must be written by
// index so the output order never depends on scheduling.
template <class F>
void parallel_for(std::size_t n, unsigned threads, F&& f) {
  const unsigned workers = std::max(1u, std::min<unsigned>(threads, static_cast<unsigned>(n)));
  if (workers <= 1) {
    for (std::size_t i = 0; i < n; ++i) f(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_mutex;
  std::vector<std::thread> pool;
  for (unsigned w = 0; w < workers; ++w) {
    pool.emplace_back([&] {
      for (std::size_t i = next++; i < n; i = next++) {
        try {
          f(i);
        } catch (...) {
          std::lock_guard lock(failure_mutex);
          if (!failure) failure = std::current_exception();
        }
      }
    });
  }
  for (auto& t : pool) t.join();
  if (failure) std::rethrow_exception(failure);
}

std::vector<double> log_grid(double lo, double hi, unsigned count) {
  if (!(lo > 0.0) || !(hi > lo) || count < 2)
    throw ConfigError("log grid needs 0 < min < max and count >= 2");
  std::vector<double> g(count);
  const double a = std::log10(lo);
  const double step = (std::log10(hi) - a) / static_cast<double>(count - 1);
  for (unsigned i = 0; i < count; ++i) g[i] = std::pow(10.0, a + step * static_cast<double>(i));
  return g;
}

void write_header(std::ostream& out, const std::string& command, const CommonOptions& common,
                  const KeyValues& settings) {
  KeyValues canonical{{"command", command}, {"seed", std::to_string(common.seed)}};
  canonical.insert(canonical.end(), settings.begin(), settings.end());
  char hash[32];
  std::snprintf(hash, sizeof hash, "%016llx",
                static_cast<unsigned long long>(config_hash(canonical)));
  out << "# fllmp " << kToolVersion << "\n";
  out << "# command: " << command << "\n";
  out << "# seed: " << common.seed << "\n";
  out << "# config_hash: " << hash << "\n";
  for (const auto& [k, v] : settings) out << "# " << k << " = " << v << "\n";
}

std::string join(const std::vector<double>& v) {
  std::string s;
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (i) s += ',';
    s += format_double(v[i]);
  }
  return s;
}

}  // namespace

KeyValues parse_config_text(std::istream& in) {
  KeyValues kv;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw ConfigError("config line " + std::to_string(lineno) + ": expected key = value");
    std::string key = trim(line.substr(0, eq));
    std::string value = trim(line.substr(eq + 1));
    if (key.empty())
      throw ConfigError("config line " + std::to_string(lineno) + ": empty key");
    kv.emplace_back(std::move(key), std::move(value));
  }
  return kv;
}

std::vector<double> parse_double_list(const std::string& text) {
  std::vector<double> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    item = trim(item);
    if (item.empty()) throw ConfigError("empty entry in list '" + text + "'");
    if (item == "inf" || item == "+inf") {
      out.push_back(std::numeric_limits<double>::infinity());
      continue;
    }
    std::size_t used = 0;
    double v = 0.0;
    try {
      v = std::stod(item, &used);
    } catch (const std::exception&) {
      throw ConfigError("not a number: '" + item + "'");
    }
    if (used != item.size()) throw ConfigError("not a number: '" + item + "'");
    out.push_back(v);
  }
  if (out.empty()) throw ConfigError("empty list");
  return out;
}

std::string format_double(double v) {
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::uint64_t config_hash(const KeyValues& canonical) {
  std::uint64_t h = 0xcbf29ce484222325ull;
  auto mix = [&](const std::string& s) {
    for (unsigned char c : s) {
      h ^= c;
      h *= 0x100000001b3ull;
    }
  };
  for (const auto& [k, v] : canonical) mix(k + "=" + v + "\n");
  return h;
}

// ---------------------------------------------------------------------------

int run_step_function(const CommonOptions& common, const StepFunctionOptions& opt,
                      std::ostream& out, std::ostream& err) {
  std::vector<double> betas = opt.beta_list.empty()
                                  ? log_grid(opt.beta_min, opt.beta_max, opt.beta_count)
                                  : parse_double_list(opt.beta_list);
  // f is only defined away from the beta = 1 singularity.
  std::erase_if(betas, [](double b) { return std::abs(b - 1.0) < 1e-6; });
  if (betas.empty()) throw ConfigError("step-function: beta grid is empty after excluding 1");
  for (double b : betas)
    if (!(b >= 0.0)) throw ConfigError("step-function: beta must be non-negative");
  const std::vector<double> gammas = parse_double_list(opt.delta_gamma_list);
  for (double g : gammas)
    if (!(g > 0.0 && g < kPi / 2 + 1e-15))
      throw ConfigError("step-function: delta_gamma must lie in (0, pi/2]");

  struct Cell {
    double f = 0.0;
    double residual = 0.0;
    std::size_t points = 0;
    std::string failure;
  };
  const std::size_t n = betas.size() * gammas.size();
  std::vector<Cell> cells(n);
  parallel_for(n, common.threads, [&](std::size_t i) {
    const double b = betas[i / gammas.size()];
    const double g = gammas[i % gammas.size()];
    try {
      const FIntegralResult r = f_integral(b, g, opt.quad_points);
      cells[i].f = r.value;
      cells[i].points = r.quad_points;
      cells[i].residual = std::abs(r.value - to_int(classify_step(b)));
    } catch (const ConvergenceFailure& e) {
      cells[i].failure = e.what();
    }
  });

  write_header(out, "step-function", common,
               {{"beta", join(betas)},
                {"delta-gamma", join(gammas)},
                {"quad-points", std::to_string(opt.quad_points)}});
  out << "beta,delta_gamma,f,abs_residual,quad_points\n";
  double worst = 0.0;
  int failures = 0;
  for (std::size_t i = 0; i < n; ++i) {
    const auto& c = cells[i];
    const double b = betas[i / gammas.size()];
    const double g = gammas[i % gammas.size()];
    if (!c.failure.empty()) {
      err << "step-function: cell beta=" << format_double(b) << " delta_gamma=" << format_double(g)
          << " failed: " << c.failure << "\n";
      ++failures;
      continue;
    }
    worst = std::max(worst, c.residual);
    out << format_double(b) << ',' << format_double(g) << ',' << format_double(c.f) << ','
        << format_double(c.residual) << ',' << c.points << '\n';
  }
  const bool ok = failures == 0 && worst < kStepTolerance;
  out << "# summary: cells=" << n << " max_abs_residual=" << format_double(worst)
      << " tolerance=" << format_double(kStepTolerance) << " status=" << (ok ? "PASS" : "FAIL")
      << "\n";
  if (!ok) {
    err << "step-function: " << failures << " non-converged cells, max residual "
        << format_double(worst) << "\n";
    return kInvariantViolation;
  }
  return kOk;
}

// ---------------------------------------------------------------------------

int run_waveform(const CommonOptions& common, const WaveformOptions& opt, std::ostream& out,
                 std::ostream& err) {
  (void)err;
  if (!(opt.omega_av != 0.0)) throw ConfigError("waveform: omega-av must be nonzero");
  if (!(opt.beat_ratio > 0.0)) throw ConfigError("waveform: beat-ratio must be positive");
  if (!(opt.delta_t > 0.0)) throw ConfigError("waveform: delta-t must be positive");
  if (!(opt.epsilon > 0.0 && opt.epsilon < 1.0))
    throw ConfigError("waveform: epsilon must lie in (0, 1)");
  if (opt.samples < 2) throw ConfigError("waveform: need at least 2 samples per period");
  if (!(opt.refine_width >= 0.0 && opt.refine_width < 1.0))
    throw ConfigError("waveform: refine-width must lie in [0, 1)");

  // "1+" and "1-" are the mirror pair 1 + eps and 1 / (1 + eps).
  std::vector<double> betas;
  {
    std::stringstream ss(opt.betas);
    std::string item;
    while (std::getline(ss, item, ',')) {
      item = trim(item);
      if (item == "1+")
        betas.push_back(1.0 + opt.epsilon);
      else if (item == "1-")
        betas.push_back(1.0 / (1.0 + opt.epsilon));
      else
        betas.push_back(parse_double_list(item).front());
    }
  }
  if (betas.empty()) throw ConfigError("waveform: empty beta list");
  for (double b : betas) {
    if (!(b >= 0.0)) throw ConfigError("waveform: beta must be non-negative");
    if (classify_step(b) == StepValue::kZero)
      throw ConfigError("waveform: beta = 1 is a delta function; use 1+ or 1-");
  }

  const double omega_beat = opt.beat_ratio * std::abs(opt.omega_av);
  const double w0 = opt.omega_av + 0.5 * omega_beat;  // LOS above the average
  const double w1 = opt.omega_av - 0.5 * omega_beat;
  const double dg = 0.5 * (w0 - w1) * opt.delta_t;
  if (dg > kPi / 2) throw ConfigError("waveform: beat too fast for delta-t (delta_gamma > pi/2)");
  const double t_beat = 2.0 * kPi / omega_beat;

  // Uniform grid over one period plus a dense patch around the null of the
  // arctangent denominator, which sits at delta = pi.
  std::vector<double> u;
  for (unsigned i = 0; i < opt.samples; ++i) u.push_back(double(i) / opt.samples);
  double centre = (kPi + dg - opt.phi0 + opt.phi1) / (2.0 * kPi);
  centre -= std::floor(centre);
  for (unsigned i = 0; i < opt.refine_samples; ++i) {
    const double x =
        centre + opt.refine_width * (double(i) / std::max(1u, opt.refine_samples - 1) - 0.5);
    if (x >= 0.0 && x < 1.0) u.push_back(x);
  }
  std::sort(u.begin(), u.end());
  u.erase(std::unique(u.begin(), u.end()), u.end());

  auto params_for = [&](double beta) {
    TwoRayParams<double> p;
    if (std::isinf(beta)) {
      p.b0 = 0.0;
      p.b1 = 1.0;
    } else {
      p.b0 = 1.0;
      p.b1 = beta;
    }
    p.omega0 = w0;
    p.omega1 = w1;
    p.phi0 = opt.phi0;
    p.phi1 = opt.phi1;
    p.replica_freq = opt.omega_av;
    p.delta_t = opt.delta_t;
    return p;
  };

  std::vector<std::vector<double>> curves(betas.size());
  std::vector<double> averages(betas.size());
  parallel_for(betas.size(), common.threads, [&](std::size_t j) {
    const auto p = params_for(betas[j]);
    auto& c = curves[j];
    c.reserve(u.size());
    for (double x : u) c.push_back(instantaneous_doppler(p, x * t_beat) / opt.omega_av);
    averages[j] = period_average_by_quadrature(p).value / opt.omega_av;
  });

  write_header(out, "waveform", common,
               {{"omega-av", format_double(opt.omega_av)},
                {"beat-ratio", format_double(opt.beat_ratio)},
                {"delta-t", format_double(opt.delta_t)},
                {"betas", join(betas)},
                {"samples", std::to_string(opt.samples)},
                {"refine-samples", std::to_string(opt.refine_samples)},
                {"refine-width", format_double(opt.refine_width)},
                {"phi0", format_double(opt.phi0)},
                {"phi1", format_double(opt.phi1)}});
  out << "t_over_Tbeat,beta,doppler_norm\n";
  for (std::size_t j = 0; j < betas.size(); ++j)
    for (std::size_t i = 0; i < u.size(); ++i)
      out << format_double(u[i]) << ',' << format_double(betas[j]) << ','
          << format_double(curves[j][i]) << '\n';
  for (std::size_t j = 0; j < betas.size(); ++j)
    out << "# summary: beta=" << format_double(betas[j])
        << " period_average_norm=" << format_double(averages[j])
        << " expected_norm=" << format_double(period_avg_doppler(w0, w1, betas[j]) / opt.omega_av)
        << "\n";
  return kOk;
}

// ---------------------------------------------------------------------------

int run_spike(const CommonOptions& common, const SpikeOptions& opt, std::ostream& out,
              std::ostream& err) {
  (void)err;
  SpikeChainSpec spec;
  spec.beat_period = opt.t_beat;
  spec.filter_time_constant = opt.tau;
  spec.spike_sign = opt.sign;
  try {
    spec.validate();
  } catch (const InvalidArgument& e) {
    throw ConfigError(e.what());
  }
  const double duration = opt.duration > 0.0 ? opt.duration : std::max(10.0 * opt.t_beat, 10.0 * opt.tau);
  const double dt = opt.dt > 0.0 ? opt.dt : opt.tau / 100.0;
  const SpikeChainTrace tr = spike_chain_response(spec, duration, dt);

  write_header(out, "spike", common,
               {{"t-beat", format_double(opt.t_beat)},
                {"tau", format_double(opt.tau)},
                {"duration", format_double(duration)},
                {"dt", format_double(dt)},
                {"sign", std::to_string(opt.sign)},
                {"wavelength", format_double(opt.wavelength)}});
  const double to_mps = opt.wavelength / (2.0 * kPi);
  out << "t_s,response_rad_s,response_mps\n";
  for (std::size_t i = 0; i < tr.t.size(); ++i)
    out << format_double(tr.t[i]) << ',' << format_double(tr.value[i]) << ','
        << format_double(tr.value[i] * to_mps) << '\n';
  const double jump = tr.post_spike.front() - tr.pre_spike.front();
  const double p2t = tr.post_spike.back() - tr.pre_spike.back();
  out << "# summary: first_jump_rad_s=" << format_double(jump)
      << " first_jump_mps=" << format_double(std::abs(jump) * to_mps)
      << " final_peak_to_trough_rad_s=" << format_double(std::abs(p2t))
      << " expected_rad_s=" << format_double(kPi / opt.tau) << "\n";
  return kOk;
}

// ---------------------------------------------------------------------------

int run_bounds(const CommonOptions& common, const BoundsOptions& opt, std::ostream& out,
               std::ostream& err) {
  if (!(opt.tau > 0.0) || !(opt.wavelength > 0.0))
    throw ConfigError("bounds: tau and wavelength must be positive");
  const std::vector<double> grid = log_grid(opt.t_b_min, opt.t_b_max, opt.t_b_count);
  std::vector<PerturbationBounds> rows(grid.size());
  parallel_for(grid.size(), common.threads,
               [&](std::size_t i) { rows[i] = perturbation_bounds(grid[i], opt.tau, opt.wavelength); });

  write_header(out, "bounds", common,
               {{"t-b", join(grid)},
                {"tau", format_double(opt.tau)},
                {"wavelength", format_double(opt.wavelength)}});
  out << "t_b_s,min_mps,max_mps,min_norm,max_norm\n";
  const double expected = opt.wavelength / (2.0 * opt.tau);  // (pi / tau) * lambda / (2 pi)
  double worst = 0.0;
  for (std::size_t i = 0; i < grid.size(); ++i) {
    const auto& b = rows[i];
    worst = std::max(worst, std::abs((b.max_mps - b.min_mps) - expected) / expected);
    out << format_double(grid[i]) << ',' << format_double(b.min_mps) << ','
        << format_double(b.max_mps) << ',' << format_double(b.min_norm) << ','
        << format_double(b.max_norm) << '\n';
  }
  const bool ok = worst < kBoundsTolerance;
  out << "# summary: band_width_mps=" << format_double(expected)
      << " max_relative_deviation=" << format_double(worst) << " status=" << (ok ? "PASS" : "FAIL")
      << "\n";
  if (!ok) {
    err << "bounds: band width not constant (relative deviation " << format_double(worst) << ")\n";
    return kInvariantViolation;
  }
  return kOk;
}

// ---------------------------------------------------------------------------

int run_closed_loop_cmd(const CommonOptions& common, const ClosedLoopOptions& opt,
                        std::ostream& out, std::ostream& err) {
  const std::vector<double> thetas = parse_double_list(opt.theta);
  const std::vector<double> amps = parse_double_list(opt.amplitudes);
  const std::vector<double> phases = parse_double_list(opt.phases);
  const std::vector<double> delays = parse_double_list(opt.code_delay_chips);
  const std::size_t n = thetas.size();
  if (amps.size() != n || phases.size() != n || delays.size() != n)
    throw ConfigError("closed-loop: theta, amplitudes, phases, code-delay-chips need equal lengths");
  if (opt.chips == 0) throw ConfigError("closed-loop: chips must be positive");

  std::vector<Ray<double>> rays;
  std::vector<PostRay<double>> post;
  double chip_period = 0.0;
  std::unique_ptr<CodeSequence> code;
  try {
    const auto scene =
        KinematicScene<double>::planar(opt.speed, thetas, opt.wavelength, opt.transmitter_doppler);
    chip_period = opt.coherent_time / opt.chips;
    code = std::make_unique<CodeSequence>(generate_code(common.seed, opt.chips, chip_period));
    for (std::size_t l = 0; l < n; ++l)
      rays.emplace_back(amps[l], path_doppler(scene, l), phases[l], delays[l] * chip_period);
    for (const auto& r : rays)
      post.push_back({r.amplitude * code_autocorr(*code, r.code_delay), r.doppler, r.phase});
  } catch (const InvalidArgument& e) {
    throw ConfigError(std::string("closed-loop: ") + e.what());
  }

  LoopConfig cfg;
  cfg.delta_t = opt.delta_t;
  cfg.coherent_time = opt.coherent_time;
  cfg.filter_bandwidth = opt.bandwidth;
  cfg.navg_window = opt.navg;
  cfg.sample_rate = opt.sample_rate;
  const auto strongest = std::max_element(rays.begin(), rays.end(), [](const auto& a, const auto& b) {
    return a.amplitude < b.amplitude;
  });
  cfg.initial_doppler =
      opt.initial_doppler_set ? opt.initial_doppler : strongest->doppler + opt.initial_error;
  try {
    cfg.validate();
  } catch (const InvalidArgument& e) {
    throw ConfigError(std::string("closed-loop: ") + e.what());
  }

  std::vector<TrackPoint> series;
  try {
    if (opt.postcorr) {
      series = run_closed_loop_postcorr(post, cfg, opt.duration);
    } else {
      std::ofstream dump;
      if (!opt.dump_iq.empty()) {
        dump.open(opt.dump_iq, std::ios::binary);
        if (!dump) throw ConfigError("closed-loop: cannot open " + opt.dump_iq);
      }
      SampleSink sink;
      if (dump.is_open())
        sink = [&](std::size_t epoch, const SampleArray<double>& s) {
          if (epoch < opt.dump_epochs) write_iq_dump(dump, s);
        };
      series = run_closed_loop(rays, *code, cfg, opt.duration, sink);
    }
  } catch (const LossOfLock& e) {
    err << "closed-loop: " << e.what() << "\n";
    return kInvariantViolation;
  } catch (const InvalidArgument& e) {
    throw ConfigError(std::string("closed-loop: ") + e.what());
  }

  // Average over whole beat periods inside the trailing half of the run.
  double window = 0.5 * opt.duration;
  double predicted = std::numeric_limits<double>::quiet_NaN();
  if (n == 1) {
    predicted = rays[0].doppler;
  } else if (n == 2) {
    const double beta = post[0].amplitude > 0.0 ? post[1].amplitude / post[0].amplitude
                                                : std::numeric_limits<double>::infinity();
    predicted = period_avg_doppler(rays[0].doppler, rays[1].doppler, beta);
    const BeatSpec beat = beat_spec(rays[0].doppler, rays[1].doppler);
    if (!beat.zero_beat() && beat.t_beat <= window) window = std::floor(window / beat.t_beat) * beat.t_beat;
  }
  const double avg = trailing_mean(series, window);

  write_header(out, "closed-loop", common,
               {{"speed", format_double(opt.speed)},
                {"theta", join(thetas)},
                {"amplitudes", join(amps)},
                {"phases", join(phases)},
                {"code-delay-chips", join(delays)},
                {"transmitter-doppler", format_double(opt.transmitter_doppler)},
                {"wavelength", format_double(opt.wavelength)},
                {"initial-doppler", format_double(cfg.initial_doppler)},
                {"bandwidth", format_double(opt.bandwidth)},
                {"navg", std::to_string(opt.navg)},
                {"delta-t", format_double(opt.delta_t)},
                {"coherent-time", format_double(opt.coherent_time)},
                {"sample-rate", format_double(opt.sample_rate)},
                {"chips", std::to_string(opt.chips)},
                {"duration", format_double(opt.duration)},
                {"postcorr", opt.postcorr ? "true" : "false"}});
  out << "t_s,doppler_rad_s,doppler_mps\n";
  for (const auto& p : series)
    out << format_double(p.t) << ',' << format_double(p.doppler) << ','
        << format_double(projected_speed_from_doppler(p.doppler - opt.transmitter_doppler,
                                                      opt.wavelength))
        << '\n';
  out << "# summary: final_rad_s=" << format_double(series.back().doppler)
      << " time_average_rad_s=" << format_double(avg) << " average_window_s=" << format_double(window)
      << " predicted_rad_s=" << format_double(predicted)
      << " difference_rad_s=" << format_double(avg - predicted) << "\n";
  return kOk;
}

// ---------------------------------------------------------------------------

int run_geometry(const CommonOptions& common, const GeometryOptions& opt, std::ostream& out,
                 std::ostream& err) {
  (void)err;
  const std::vector<double> thetas = parse_double_list(opt.theta);
  std::unique_ptr<KinematicScene<double>> scene;
  try {
    scene = std::make_unique<KinematicScene<double>>(
        KinematicScene<double>::planar(opt.speed, thetas, opt.wavelength, opt.transmitter_doppler));
  } catch (const InvalidArgument& e) {
    throw ConfigError(std::string("geometry: ") + e.what());
  }
  write_header(out, "geometry", common,
               {{"speed", format_double(opt.speed)},
                {"theta", join(thetas)},
                {"wavelength", format_double(opt.wavelength)},
                {"transmitter-doppler", format_double(opt.transmitter_doppler)}});
  out << "path,theta_rad,receiver_doppler_rad_s,total_doppler_rad_s,projected_speed_mps,ratio_to_los\n";
  for (std::size_t l = 0; l < thetas.size(); ++l) {
    const double wr = doppler_from_velocity(*scene, l);
    std::string ratio = "nan";
    try {
      ratio = format_double(nlos_ratio(thetas[l], thetas[0]));
    } catch (const DegenerateGeometry&) {
    }
    out << l << ',' << format_double(thetas[l]) << ',' << format_double(wr) << ','
        << format_double(path_doppler(*scene, l)) << ','
        << format_double(projected_speed_from_doppler(wr, opt.wavelength)) << ',' << ratio << '\n';
  }
  if (thetas.size() >= 2)
    out << "# summary: beat_frequency_rad_s="
        << format_double(beat_frequency_kinematic(opt.speed, opt.wavelength, thetas[0], thetas[1]))
        << "\n";
  return kOk;
}

// ---------------------------------------------------------------------------

int main_entry(const std::vector<std::string>& args_in, std::ostream& out, std::ostream& err) {
  static const std::vector<std::string> kCommands = {"step-function", "waveform", "spike",
                                                     "bounds",        "closed-loop", "geometry"};
  std::vector<std::string> args = args_in;
  if (args.empty()) args.emplace_back("fllmp");

  // Config file values go in front of the command-line options so that
  // explicit flags (parsed later, last one wins) override them.
  try {
    std::string config_path;
    for (std::size_t i = 1; i < args.size(); ++i) {
      if (args[i] == "--config" && i + 1 < args.size()) config_path = args[i + 1];
      else if (args[i].rfind("--config=", 0) == 0) config_path = args[i].substr(9);
    }
    if (!config_path.empty()) {
      std::ifstream in(config_path);
      if (!in) throw ConfigError("cannot open config file " + config_path);
      const KeyValues kv = parse_config_text(in);
      const auto cmd = std::find_if(args.begin() + 1, args.end(), [](const std::string& a) {
        return std::find(kCommands.begin(), kCommands.end(), a) != kCommands.end();
      });
      if (cmd == args.end()) throw ConfigError("no subcommand given");
      std::vector<std::string> injected;
      for (const auto& [k, v] : kv) {
        if (k == "config") throw ConfigError("config files cannot include other config files");
        injected.push_back("--" + k + "=" + v);
      }
      args.insert(cmd + 1, injected.begin(), injected.end());
    }
  } catch (const ConfigError& e) {
    err << "error: " << e.what() << "\n";
    return kConfigError;
  }

  CLI::App app{"Two-ray multipath effects on FLL Doppler observables", "fllmp"};
  app.option_defaults()->multi_option_policy(CLI::MultiOptionPolicy::TakeLast);
  app.require_subcommand(1);
  app.set_version_flag("--version", kToolVersion);

  CommonOptions common;
  auto add_common = [&](CLI::App* sub) {
    sub->add_option("--config", common.config_path, "Flat key = value config file");
    sub->add_option("--out", common.out_path, "Output CSV path, - for stdout");
    sub->add_option("--seed", common.seed, "Random seed");
    sub->add_option("--threads", common.threads, "Worker threads")->check(CLI::PositiveNumber);
  };

  StepFunctionOptions step;
  auto* c_step = app.add_subcommand("step-function", "Normalized integral f(beta, delta_gamma) sweep");
  add_common(c_step);
  c_step->add_option("--beta", step.beta_list, "Comma-separated beta values (overrides the log grid)");
  c_step->add_option("--beta-min", step.beta_min);
  c_step->add_option("--beta-max", step.beta_max);
  c_step->add_option("--beta-count", step.beta_count);
  c_step->add_option("--delta-gamma", step.delta_gamma_list, "Comma-separated delta_gamma values");
  c_step->add_option("--quad-points", step.quad_points, "Initial Simpson interval count");

  WaveformOptions wave;
  auto* c_wave = app.add_subcommand("waveform", "Instantaneous Doppler over one beat period");
  add_common(c_wave);
  c_wave->add_option("--omega-av", wave.omega_av);
  c_wave->add_option("--beat-ratio", wave.beat_ratio);
  c_wave->add_option("--delta-t", wave.delta_t);
  c_wave->add_option("--betas", wave.betas, "Comma list; 1+ / 1- select 1+eps and 1/(1+eps), inf allowed");
  c_wave->add_option("--epsilon", wave.epsilon);
  c_wave->add_option("--samples", wave.samples);
  c_wave->add_option("--refine-samples", wave.refine_samples);
  c_wave->add_option("--refine-width", wave.refine_width);
  c_wave->add_option("--phi0", wave.phi0);
  c_wave->add_option("--phi1", wave.phi1);

  SpikeOptions spike;
  auto* c_spike = app.add_subcommand("spike", "Loop filter response to a spike chain");
  add_common(c_spike);
  c_spike->add_option("--t-beat", spike.t_beat);
  c_spike->add_option("--tau", spike.tau);
  c_spike->add_option("--duration", spike.duration);
  c_spike->add_option("--dt", spike.dt);
  c_spike->add_option("--sign", spike.sign);
  c_spike->add_option("--wavelength", spike.wavelength);

  BoundsOptions bounds;
  auto* c_bounds = app.add_subcommand("bounds", "Steady-state perturbation bounds versus beat period");
  add_common(c_bounds);
  c_bounds->add_option("--t-b-min", bounds.t_b_min);
  c_bounds->add_option("--t-b-max", bounds.t_b_max);
  c_bounds->add_option("--t-b-count", bounds.t_b_count);
  c_bounds->add_option("--tau", bounds.tau);
  c_bounds->add_option("--wavelength", bounds.wavelength);

  ClosedLoopOptions loop;
  auto* c_loop = app.add_subcommand("closed-loop", "Closed-loop FLL simulation of a multipath scene");
  add_common(c_loop);
  c_loop->add_option("--speed", loop.speed);
  c_loop->add_option("--theta", loop.theta, "Raypath angles from the direction of motion (rad)");
  c_loop->add_option("--amplitudes", loop.amplitudes);
  c_loop->add_option("--phases", loop.phases);
  c_loop->add_option("--code-delay-chips", loop.code_delay_chips);
  c_loop->add_option("--transmitter-doppler", loop.transmitter_doppler);
  c_loop->add_option("--wavelength", loop.wavelength);
  auto* init_opt = c_loop->add_option("--initial-doppler", loop.initial_doppler);
  c_loop->add_option("--initial-error", loop.initial_error,
                     "Initial offset from the strongest ray when --initial-doppler is absent");
  c_loop->add_option("--bandwidth", loop.bandwidth, "Loop filter bandwidth (Hz)");
  c_loop->add_option("--navg", loop.navg);
  c_loop->add_option("--delta-t", loop.delta_t);
  c_loop->add_option("--coherent-time", loop.coherent_time);
  c_loop->add_option("--sample-rate", loop.sample_rate);
  c_loop->add_option("--chips", loop.chips);
  c_loop->add_option("--duration", loop.duration);
  c_loop->add_flag("--postcorr", loop.postcorr, "Feed the loop from the postcorrelation model");
  c_loop->add_option("--dump-iq", loop.dump_iq, "Write raw float64 I/Q samples here");
  c_loop->add_option("--dump-epochs", loop.dump_epochs);

  GeometryOptions geo;
  auto* c_geo = app.add_subcommand("geometry", "Per-path Doppler and NLOS ratios for a scene");
  add_common(c_geo);
  c_geo->add_option("--speed", geo.speed);
  c_geo->add_option("--theta", geo.theta);
  c_geo->add_option("--wavelength", geo.wavelength);
  c_geo->add_option("--transmitter-doppler", geo.transmitter_doppler);

  std::vector<const char*> argv;
  for (const auto& a : args) argv.push_back(a.c_str());
  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kOk : kConfigError;
  }
  loop.initial_doppler_set = init_opt->count() > 0;

  std::ofstream file;
  std::ostream* sink = &out;
  if (common.out_path != "-") {
    file.open(common.out_path, std::ios::binary);
    if (!file) {
      err << "error: cannot open output " << common.out_path << "\n";
      return kConfigError;
    }
    sink = &file;
  }

  try {
    if (c_step->parsed()) return run_step_function(common, step, *sink, err);
    if (c_wave->parsed()) return run_waveform(common, wave, *sink, err);
    if (c_spike->parsed()) return run_spike(common, spike, *sink, err);
    if (c_bounds->parsed()) return run_bounds(common, bounds, *sink, err);
    if (c_loop->parsed()) return run_closed_loop_cmd(common, loop, *sink, err);
    if (c_geo->parsed()) return run_geometry(common, geo, *sink, err);
  } catch (const ConfigError& e) {
    err << "error: " << e.what() << "\n";
    return kConfigError;
  } catch (const InvalidArgument& e) {
    err << "error: " << e.what() << "\n";
    return kConfigError;
  } catch (const Error& e) {
    err << "error: " << e.what() << "\n";
    return kInvariantViolation;
  }
  return kConfigError;
}

}  // namespace fllmp::cli
