#pragma once

#include <cmath>
#include <cstddef>

namespace fllmp {

struct SimpsonOptions {
  std::size_t initial_intervals = std::size_t{1} << 10;
  std::size_t max_intervals = std::size_t{1} << 22;
  double abs_tol = 1e-12;
};

struct QuadratureResult {
  double value = 0.0;
  std::size_t intervals = 0;
  double change = 0.0;  // |S_n - S_{n/2}| at exit
  bool converged = false;
};

namespace detail {

// Neumaier compensated sum.
struct CompensatedSum {
  double sum = 0.0;
  double comp = 0.0;

  void add(double x) {
    const double t = sum + x;
    if (std::abs(sum) >= std::abs(x))
      comp += (sum - t) + x;
    else
      comp += (x - t) + sum;
    sum = t;
  }
  double value() const { return sum + comp; }
};

}  // namespace detail

/// Composite Simpson rule on [a, b], doubling the interval count until two
/// successive estimates differ by less than abs_tol or max_intervals is hit.
/// Every previous abscissa is reused after a doubling.
template <class F>
QuadratureResult simpson_doubling(F&& f, double a, double b, const SimpsonOptions& opt = {}) {
  std::size_t n = opt.initial_intervals < 2 ? 2 : opt.initial_intervals;
  if (n % 2) ++n;

  const double ends = f(a) + f(b);
  detail::CompensatedSum even;  // interior points with even index
  detail::CompensatedSum odd;
  double h = (b - a) / static_cast<double>(n);
  for (std::size_t i = 1; i < n; ++i) {
    const double y = f(a + static_cast<double>(i) * h);
    (i % 2 ? odd : even).add(y);
  }
  auto estimate = [&] { return h / 3.0 * (ends + 4.0 * odd.value() + 2.0 * even.value()); };

  QuadratureResult r;
  r.value = estimate();
  r.intervals = n;
  r.change = INFINITY;
  while (n < opt.max_intervals) {
    // All old points become even-indexed; new midpoints are the odd ones.
    even.add(odd.value());
    odd = {};
    n *= 2;
    h = (b - a) / static_cast<double>(n);
    for (std::size_t i = 1; i < n; i += 2) odd.add(f(a + static_cast<double>(i) * h));
    const double next = estimate();
    r.change = std::abs(next - r.value);
    r.value = next;
    r.intervals = n;
    if (r.change < opt.abs_tol) {
      r.converged = true;
      break;
    }
  }
  return r;
}

}  // namespace fllmp
