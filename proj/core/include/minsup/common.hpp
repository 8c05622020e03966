#pragma once

#include <cmath>
#include <cstddef>
#include <functional>
#include <limits>
#include <span>
#include <stdexcept>
#include <string>

namespace minsup {

/// +∞ sentinel for extended-real values.
inline constexpr double kInf = std::numeric_limits<double>::infinity();

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

inline bool is_finite(double v) { return std::isfinite(v); }

/// Pairwise (cascade) summation in fixed order; reproducible across runs.
double pairwise_sum(std::span<const double> xs);

struct SampleMoments {
  std::size_t count = 0;
  double mean = 0.0;
  double variance = 0.0;  // unbiased
  double standard_error() const {
    return count > 1 ? std::sqrt(variance / static_cast<double>(count)) : 0.0;
  }
};

SampleMoments sample_moments(std::span<const double> xs);

/// Shortest round-trip decimal representation ("inf"/"-inf" for infinities).
std::string format_double(double v);
double parse_double(std::string_view text);

/// Runs task(k) for k in [0, n_tasks) on up to `threads` workers (0 = hardware
/// concurrency). Tasks must write to disjoint outputs; the first exception is
/// rethrown after all workers finish.
void parallel_for(std::size_t n_tasks, const std::function<void(std::size_t)>& task, unsigned threads = 0);

}  // namespace minsup
