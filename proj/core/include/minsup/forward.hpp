#pragma once

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "minsup/common.hpp"

/// Forward diffusion X_t = X_0 + ∫ mu_u(X_u) du + ∫ sigma_u(X_u) dW_u with
/// diagonal noise, its time shifts, path concatenation and step-function
/// approximation.
namespace minsup::forward {

/// Coefficient of component `c` at time t and state x.
using Coefficient = std::function<double(double t, std::span<const double> x, std::size_t c)>;

struct DiffusionSpec {
  std::string name;
  std::map<std::string, double> params;
  std::size_t dim = 1;
  Coefficient drift;
  Coefficient vol;
  double lipschitz = 0.0;  // declared L
  double growth = 0.0;     // declared K
  double time_offset = 0.0;
  double horizon = kInf;  // coefficients defined on [0, horizon]

  double mu(double t, double x) const;
  double sigma(double t, double x) const;
  double mu(double t, std::span<const double> x, std::size_t c) const { return drift(t + time_offset, x, c); }
  double sigma(double t, std::span<const double> x, std::size_t c) const { return vol(t + time_offset, x, c); }
};

std::vector<std::string> diffusion_registry();
/// Registry: brownian{mu, sigma}, gbm{mu, sigma} (mu x, sigma x),
/// ou{kappa, theta, sigma}, time-drift{c} (mu_t = c t, sigma = 1),
/// brownian-2d{mu, sigma}.
DiffusionSpec make_diffusion(std::string_view name, const std::map<std::string, double>& params = {});

/// Returns false and the first offending pair when the declared Lipschitz
/// constant fails on the probes.
bool check_lipschitz(const DiffusionSpec& d, std::span<const double> times, std::span<const double> states,
                     double tol = 1e-12);

/// u -> (mu_{t+u}, sigma_{t+u}) on [0, horizon - t].
DiffusionSpec shifted_diffusion(const DiffusionSpec& d, double t);

/// Uniform time grid t_i = t0 + i (T - t0) / steps.
struct TimeGrid {
  double t0 = 0.0;
  double T = 1.0;
  std::size_t steps = 1;

  double dt() const { return (T - t0) / static_cast<double>(steps); }
  double time(std::size_t i) const { return t0 + static_cast<double>(i) * dt(); }
  /// Index of a grid time; throws if t is not a node.
  std::size_t index_of(double t) const;
  bool operator==(const TimeGrid&) const = default;
};

/// Ensemble of discretized paths over global steps [first_step, last_step].
class PathBundle {
 public:
  PathBundle(TimeGrid grid, std::size_t first_step, std::size_t last_step, std::size_t n_paths, std::size_t dim,
             std::uint64_t seed, std::uint64_t stream);

  const TimeGrid& grid() const { return grid_; }
  std::size_t first_step() const { return first_; }
  std::size_t last_step() const { return last_; }
  std::size_t n_steps() const { return last_ - first_; }
  std::size_t n_paths() const { return n_paths_; }
  std::size_t dim() const { return dim_; }
  std::uint64_t seed() const { return seed_; }
  std::uint64_t stream() const { return stream_; }
  double time(std::size_t local) const { return grid_.time(first_ + local); }

  /// State of `path` at local time index `local`, component c.
  double state(std::size_t path, std::size_t local, std::size_t c = 0) const {
    return states_[(path * (n_steps() + 1) + local) * dim_ + c];
  }
  double& state(std::size_t path, std::size_t local, std::size_t c = 0) {
    return states_[(path * (n_steps() + 1) + local) * dim_ + c];
  }
  /// Brownian increment over [local, local+1].
  double increment(std::size_t path, std::size_t local, std::size_t c = 0) const {
    return increments_[(path * n_steps() + local) * dim_ + c];
  }
  double& increment(std::size_t path, std::size_t local, std::size_t c = 0) {
    return increments_[(path * n_steps() + local) * dim_ + c];
  }
  std::span<const double> states() const { return states_; }
  std::span<const double> increments() const { return increments_; }
  /// Column of states at local index (component c) across paths.
  std::vector<double> column(std::size_t local, std::size_t c = 0) const;

  bool operator==(const PathBundle&) const = default;

 private:
  TimeGrid grid_;
  std::size_t first_, last_, n_paths_, dim_;
  std::uint64_t seed_, stream_;
  std::vector<double> states_;
  std::vector<double> increments_;
};

/// Euler–Maruyama on the whole grid from a common initial state.
PathBundle simulate(const DiffusionSpec& d, std::span<const double> x0, const TimeGrid& grid, std::size_t n_paths,
                    std::uint64_t seed, std::uint64_t stream = 0);
PathBundle simulate(const DiffusionSpec& d, double x0, const TimeGrid& grid, std::size_t n_paths,
                    std::uint64_t seed, std::uint64_t stream = 0);

/// Euler–Maruyama over global steps [first_step, last_step] from per-path
/// initial states (n_paths x dim). Increments are addressed by global step,
/// so continuing a bundle reproduces the single-run paths exactly.
PathBundle simulate_from(const DiffusionSpec& d, std::span<const double> initial, const TimeGrid& grid,
                         std::size_t first_step, std::size_t last_step, std::size_t n_paths, std::uint64_t seed,
                         std::uint64_t stream = 0);

/// Masked paths keep `a`; the others follow `a` before t and a_t + (b_u - b_t) from t on.
PathBundle concatenate(const PathBundle& a, const PathBundle& b, double t, const std::vector<std::uint8_t>& mask);

/// Step function xi = sum_k 1_{A_k} x_k over paths.
struct Partition {
  struct Cell {
    double level;
    std::vector<std::size_t> members;  // path indices
  };
  std::vector<Cell> cells;  // sorted by level
  std::vector<std::size_t> cell_of_path;

  double level_of(std::size_t path) const { return cells[cell_of_path[path]].level; }
  std::vector<std::uint8_t> mask(std::size_t cell) const;
};

enum class StepDirection { below, nearest };

Partition step_approximation(std::span<const double> values, double spacing, StepDirection direction);

/// CSV `path_id,t,x` (or `path_id,t,x0,x1`).
void write_bundle_csv(const PathBundle& b, std::ostream& out);
/// Manifest JSON with seed, stream, grid and terminal moments.
std::string bundle_manifest_json(const PathBundle& b);

}  // namespace minsup::forward
