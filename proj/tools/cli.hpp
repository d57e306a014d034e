#pragma once

#include <cstdint>
#include <iosfwd>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace fllmp::cli {

inline constexpr const char* kToolVersion = "1.0.0";

enum ExitCode : int { kOk = 0, kInvariantViolation = 1, kConfigError = 2 };

class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

using KeyValues = std::vector<std::pair<std::string, std::string>>;

/// Flat `key = value` file; `#` starts a comment. Later keys override
/// earlier ones at parse time by position.
KeyValues parse_config_text(std::istream& in);

/// Comma-separated list of doubles. Accepts `inf`.
std::vector<double> parse_double_list(const std::string& text);

/// Shortest round-trip-safe decimal for a double (17 significant digits).
std::string format_double(double v);

/// 64-bit FNV-1a over the canonical `key=value\n` listing.
std::uint64_t config_hash(const KeyValues& canonical);

struct CommonOptions {
  std::string config_path;
  std::string out_path = "-";
  std::uint64_t seed = 1;
  unsigned threads = 1;
};

struct StepFunctionOptions {
  std::string beta_list;  // overrides the generated grid when set
  double beta_min = 1e-4;
  double beta_max = 1e4;
  unsigned beta_count = 81;
  std::string delta_gamma_list = "1e-6,1e-3,0.1,1,1.5707953267948966";
  unsigned quad_points = 1024;
};

struct WaveformOptions {
  double omega_av = 1000.0;
  double beat_ratio = 0.016;
  double delta_t = 1e-3;
  std::string betas = "10,1.2,1+,1-,0.8,0.1";
  double epsilon = 1e-3;
  unsigned samples = 10000;
  unsigned refine_samples = 2000;
  double refine_width = 0.01;
  double phi0 = 0.0;
  double phi1 = 0.0;
};

struct SpikeOptions {
  double t_beat = 0.05;
  double tau = 0.15915494309189535;
  double duration = 0.0;  // 0: max(10 T_b, 10 tau)
  double dt = 0.0;        // 0: tau / 100
  int sign = 1;
  double wavelength = 0.190293672;
};

struct BoundsOptions {
  double t_b_min = 1e-3;
  double t_b_max = 10.0;
  unsigned t_b_count = 41;
  double tau = 0.15915494309189535;
  double wavelength = 0.190293672;
};

struct ClosedLoopOptions {
  double speed = 10.0;
  std::string theta = "0.3,1.2";
  std::string amplitudes = "1,0.1";
  std::string phases = "0,0";
  std::string code_delay_chips = "0,0";
  double transmitter_doppler = 0.0;
  double wavelength = 0.190293672;
  double initial_doppler = 0.0;
  bool initial_doppler_set = false;
  double initial_error = 20.0;
  double bandwidth = 1.0;
  unsigned navg = 1;
  double delta_t = 1e-3;
  double coherent_time = 1e-3;
  double sample_rate = 4.092e6;
  unsigned chips = 1023;
  double duration = 2.0;
  bool postcorr = false;
  std::string dump_iq;
  unsigned dump_epochs = 1;
};

struct GeometryOptions {
  double speed = 10.0;
  std::string theta = "0.3,1.2";
  double wavelength = 0.190293672;
  double transmitter_doppler = 0.0;
};

// Each runner writes its CSV to `out`, diagnostics to `err`, and returns an
// ExitCode. Invalid option values raise ConfigError.
int run_step_function(const CommonOptions& common, const StepFunctionOptions& opt,
                      std::ostream& out, std::ostream& err);
int run_waveform(const CommonOptions& common, const WaveformOptions& opt, std::ostream& out,
                 std::ostream& err);
int run_spike(const CommonOptions& common, const SpikeOptions& opt, std::ostream& out,
              std::ostream& err);
int run_bounds(const CommonOptions& common, const BoundsOptions& opt, std::ostream& out,
               std::ostream& err);
int run_closed_loop_cmd(const CommonOptions& common, const ClosedLoopOptions& opt,
                        std::ostream& out, std::ostream& err);
int run_geometry(const CommonOptions& common, const GeometryOptions& opt, std::ostream& out,
                 std::ostream& err);

/// Full command line entry point. `--out -` (the default) writes to `out`.
int main_entry(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace fllmp::cli
