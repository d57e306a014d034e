#include "fllmp/signal.hpp"

#include <bit>
#include <cstring>
#include <ostream>
#include <random>
#include <string>

namespace fllmp {

CodeSequence::CodeSequence(std::vector<std::int8_t> chips, double chip_period)
    : chips_(std::move(chips)), chip_period_(chip_period) {
  if (chips_.empty()) throw InvalidArgument("CodeSequence: empty chip list");
  if (!(chip_period_ > 0.0)) throw InvalidArgument("CodeSequence: chip period must be positive");
  for (auto c : chips_)
    if (c != 1 && c != -1) throw InvalidArgument("CodeSequence: chips must be +1 or -1");
}

CodeSequence generate_code(std::uint64_t seed, std::size_t n_chips, double chip_period) {
  if (n_chips == 0) throw InvalidArgument("generate_code: n_chips must be at least 1");
  std::mt19937_64 gen(seed);
  std::vector<std::int8_t> chips(n_chips);
  for (auto& c : chips) c = (gen() >> 63) ? std::int8_t{1} : std::int8_t{-1};
  return CodeSequence(std::move(chips), chip_period);
}

double code_autocorr(const CodeSequence& code, double lag) {
  if (!(std::abs(lag) <= code.duration()))
    throw InvalidArgument("code_autocorr: |lag| exceeds the code duration");
  const auto& chips = code.chips();
  const auto n = static_cast<std::int64_t>(chips.size());

  // Discrete circular autocorrelation at an integer chip shift.
  auto discrete = [&](std::int64_t m) {
    m %= n;
    if (m < 0) m += n;
    std::int64_t acc = 0;
    for (std::int64_t i = 0; i < n; ++i)
      acc += chips[static_cast<std::size_t>(i)] * chips[static_cast<std::size_t>((i + m) % n)];
    return static_cast<double>(acc) / static_cast<double>(n);
  };

  const double x = lag / code.chip_period();
  const double m = std::floor(x);
  const double frac = x - m;
  const auto mi = static_cast<std::int64_t>(m);
  if (frac == 0.0) return discrete(mi);
  return (1.0 - frac) * discrete(mi) + frac * discrete(mi + 1);
}

void write_iq_dump(std::ostream& os, const SampleArray<double>& samples) {
  static_assert(sizeof(double) == 8);
  auto put = [&](double v) {
    std::uint64_t bits = std::bit_cast<std::uint64_t>(v);
    unsigned char bytes[8];
    for (int i = 0; i < 8; ++i) bytes[i] = static_cast<unsigned char>((bits >> (8 * i)) & 0xffu);
    os.write(reinterpret_cast<const char*>(bytes), 8);
  };
  for (Eigen::Index i = 0; i < samples.size(); ++i) {
    put(samples(i).real());
    put(samples(i).imag());
  }
}

}  // namespace fllmp
