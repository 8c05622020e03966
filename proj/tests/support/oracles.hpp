#pragma once

// Independent reference computations for the test suites. Nothing here calls
// into the library under test.

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <numbers>
#include <random>
#include <vector>

namespace oracle {

/// E[f(Z)], Z ~ N(0,1), by the trapezoid rule on [-12, 12]; spectrally
/// accurate for smooth integrands of moderate growth.
inline double normal_expectation(const std::function<double(double)>& f, int points = 24001) {
  const double lo = -12.0, hi = 12.0, h = (hi - lo) / (points - 1);
  double sum = 0.0;
  for (int k = 0; k < points; ++k) {
    const double z = lo + k * h;
    const double w = (k == 0 || k == points - 1) ? 0.5 : 1.0;
    sum += w * f(z) * std::exp(-0.5 * z * z);
  }
  return sum * h / std::sqrt(2.0 * std::numbers::pi);
}

/// log E[exp(tanh(x + sqrt(tau) Z))]: the exponential transform of tanh.
inline double entropic_tanh(double x, double tau) {
  return std::log(normal_expectation([&](double z) { return std::exp(std::tanh(x + std::sqrt(tau) * z)); }));
}

/// Plain Monte Carlo of E[exp(tanh(W_1))] with a standard-library generator.
struct McEstimate {
  double value;
  double se;
};
inline McEstimate entropic_tanh_mc(std::size_t n, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal;
  double s = 0.0, s2 = 0.0;
  for (std::size_t k = 0; k < n; ++k) {
    const double v = std::exp(std::tanh(normal(rng)));
    s += v;
    s2 += v * v;
  }
  const double mean = s / n, var = (s2 / n - mean * mean) * n / (n - 1);
  // Delta method for the logarithm.
  return {std::log(mean), std::sqrt(var / n) / mean};
}

inline double huber(double z, double n) { return std::abs(z) <= n ? 0.5 * z * z : n * std::abs(z) - 0.5 * n * n; }

/// max over sample points x_k of p x_k - f_k.
inline double brute_conjugate(const std::vector<double>& xs, const std::vector<double>& fs, double p) {
  double best = -std::numeric_limits<double>::infinity();
  for (std::size_t k = 0; k < xs.size(); ++k)
    if (std::isfinite(fs[k])) best = std::max(best, p * xs[k] - fs[k]);
  return best;
}

/// Lower convex hull of finite points at x_i: min over chords straddling it.
inline double brute_hull(const std::vector<double>& xs, const std::vector<double>& fs, std::size_t i) {
  double best = fs[i];
  for (std::size_t a = 0; a <= i; ++a) {
    if (!std::isfinite(fs[a])) continue;
    for (std::size_t b = i; b < xs.size(); ++b) {
      if (!std::isfinite(fs[b]) || a == b) continue;
      const double w = (xs[i] - xs[a]) / (xs[b] - xs[a]);
      best = std::min(best, (1.0 - w) * fs[a] + w * fs[b]);
    }
  }
  return best;
}

inline double sup_abs_diff(const std::vector<double>& a, const std::vector<double>& b) {
  double m = 0.0;
  for (std::size_t k = 0; k < a.size(); ++k) m = std::max(m, std::abs(a[k] - b[k]));
  return m;
}

}  // namespace oracle
