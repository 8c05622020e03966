#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "minsup/forward.hpp"
#include "minsup/ladder.hpp"

/// Level value functions u_n by an explicit monotone finite-difference scheme,
/// the ladder limit u = sup_n u_n, and a regression Monte-Carlo BSDE solver
/// used as an independent cross-check.
namespace minsup::backward {

inline constexpr const char* kBoundaryPolicy = "linear-continuation";

struct PdeGridConfig {
  double x_lo = -5.0;
  double x_hi = 5.0;
  double dx = 0.02;
  double T = 1.0;
  /// Fraction of the largest admissible step actually used.
  double cfl_target = 0.9;
  /// Explicit number of time steps; overrides cfl_target when set.
  std::optional<std::size_t> time_steps;
  /// Lipschitz level entering the step restriction; 0 means the level's own n.
  /// solve_ladder pins it to n_max so that every level shares one time grid.
  int cfl_level = 0;
  /// Reporting window shrinks by window_sigmas * sigma_max * sqrt(T - t) from each edge.
  double window_sigmas = 3.0;
  /// Optional clamp applied to generator evaluations (default: none).
  std::optional<double> generator_floor;
};

/// Step restriction of the explicit scheme for one level.
struct CflInfo {
  double sigma_max = 0.0;
  double mu_max = 0.0;
  double max_dt = 0.0;  // largest admissible step
  double dt = 0.0;      // step used
  std::size_t steps = 0;
  double ratio = 0.0;   // dt / max_dt
};

CflInfo cfl_for(const forward::DiffusionSpec& d, const PdeGridConfig& cfg, int n);

class ValueSurface {
 public:
  ValueSurface() = default;
  ValueSurface(std::vector<double> times, Axis space, double window_width_scale, std::optional<int> level,
               double cfl_ratio);

  const std::vector<double>& times() const { return times_; }
  const Axis& space() const { return space_; }
  std::size_t n_times() const { return times_.size(); }
  std::size_t n_space() const { return space_.count; }
  double T() const { return times_.back(); }
  const std::string& boundary_policy() const { return boundary_policy_; }
  /// Ladder index n, or nullopt for the limit surface.
  std::optional<int> level() const { return level_; }
  void set_level(std::optional<int> n) { level_ = n; }
  double cfl_ratio() const { return cfl_ratio_; }
  const std::optional<TerminalSpec>& terminal() const { return terminal_; }
  void set_terminal(TerminalSpec phi) { terminal_ = std::move(phi); }

  double at(std::size_t j, std::size_t i) const { return values_[j * n_space() + i]; }
  double& at(std::size_t j, std::size_t i) { return values_[j * n_space() + i]; }
  std::span<const double> row(std::size_t j) const { return {values_.data() + j * n_space(), n_space()}; }
  std::span<double> row(std::size_t j) { return {values_.data() + j * n_space(), n_space()}; }
  const std::vector<double>& values() const { return values_; }

  /// Index of the time level equal to t; throws if t is not a level.
  std::size_t time_index(double t) const;
  /// Reporting window [lo, hi] at time t.
  std::pair<double, double> window(double t) const;
  bool in_window(double t, double x) const;
  /// Node indices [first, last] inside the window at level j.
  std::pair<std::size_t, std::size_t> window_nodes(std::size_t j) const;

  /// Bilinear interpolation inside the reporting window; at t = T returns the
  /// attached terminal function when present.
  double evaluate(double t, double x) const;

  bool operator==(const ValueSurface& o) const {
    return times_ == o.times_ && space_ == o.space_ && values_ == o.values_ && level_ == o.level_;
  }

 private:
  std::vector<double> times_;
  Axis space_;
  double window_scale_ = 0.0;  // window_sigmas * sigma_max
  std::optional<int> level_;
  double cfl_ratio_ = 0.0;
  std::string boundary_policy_ = kBoundaryPolicy;
  std::vector<double> values_;
  std::optional<TerminalSpec> terminal_;
};

/// Explicit backward stepping from v(T, .) = phi^n for
/// -v_t - [mu v_x + sigma^2/2 v_xx + g^n(x, v, sigma v_x)] = 0.
/// The level must carry a terminal function (LadderLevel::with_terminal).
ValueSurface solve_pde_level(const ladder::LadderLevel& level, const forward::DiffusionSpec& d,
                             const PdeGridConfig& cfg);

/// |u(t, x) at dx - u(t, x) at 2 dx|, a first-order truncation indicator.
double pde_truncation_estimate(const ladder::LadderLevel& level, const forward::DiffusionSpec& d,
                               const PdeGridConfig& cfg, double t, double x);

struct LadderSolveOptions {
  int n_max = 32;
  double tol = 1e-3;
  ladder::LadderOptions ladder;
  /// First level tried (levels run n_first, n_first+1, ...).
  int n_first = 1;
};

struct LadderSolve {
  ValueSurface surface;  // u_{n*}
  int levels_used = 0;   // n*
  bool converged = false;
  std::vector<double> gaps;                // ||u_{n+1} - u_n|| on the window, per consecutive pair
  std::vector<double> decrease_all;        // max (u_n - u_{n+1})^+ over every node
  std::vector<double> decrease_window;     // same on the reporting window
  std::vector<std::string> warnings;
  CflInfo cfl;
};

/// Drives n = n_first, n_first+1, ... until the window gap drops below tol.
LadderSolve solve_ladder(const GeneratorSpec& g, const TerminalSpec& phi, const forward::DiffusionSpec& d,
                         const PdeGridConfig& cfg, const LadderSolveOptions& opts = {});

/// Regression Monte-Carlo BSDE solver configuration.
struct RegressionConfig {
  int degree = 3;  // polynomial basis on the standardized state
  double ridge = 1e-8;
  int max_fixed_point = 50;
  double fixed_point_tol = 1e-13;
  unsigned threads = 0;
  /// Optional per-path labels; when set, regressions at local steps >=
  /// labels_from_step are fitted separately on each label value.
  std::vector<std::uint32_t> labels;
  std::size_t labels_from_step = 0;
};

struct RegressionFit {
  std::vector<double> mean;  // per state component
  std::vector<double> scale;
  std::vector<double> y_coef;  // conditional mean of Y_{i+1}
  std::vector<double> z_coef;  // per component: conditional mean of Y_{i+1} dW / dt
  bool constant_only = false;
};

struct BSDEPathSolution {
  forward::TimeGrid grid;
  std::size_t first_step = 0;
  std::size_t n_paths = 0;
  std::size_t dim = 1;
  int degree = 3;
  std::vector<double> Y;         // (n_steps + 1) x n_paths, time-major
  std::vector<double> Z;         // n_steps x n_paths x dim
  std::vector<double> pathwise;  // phi(X_N) + sum_{k >= i} dt g(X_k, Y_k, Z_k), same layout as Y
  /// fits[i][cell]; cell 0 when unlabeled.
  std::vector<std::vector<RegressionFit>> fits;
  std::vector<std::uint32_t> labels;
  std::size_t labels_from_step = 0;
  ladder::LadderLevel level;
  double y0 = 0.0;
  double y0_se = 0.0;
  std::size_t max_fixed_point_iterations = 0;

  std::size_t n_steps() const { return fits.size(); }
  double y(std::size_t i, std::size_t p) const { return Y[i * n_paths + p]; }
  double z(std::size_t i, std::size_t p, std::size_t c = 0) const { return Z[(i * n_paths + p) * dim + c]; }
  double pathwise_y(std::size_t i, std::size_t p) const { return pathwise[i * n_paths + p]; }
  std::vector<double> y_column(std::size_t i) const;
  std::vector<double> pathwise_column(std::size_t i) const;
  /// Regression representation of Y at local step i (< n_steps) and state x.
  double evaluate_y(std::size_t i, std::span<const double> x, std::uint32_t label = 0) const;
};

/// The level must carry a terminal function (LadderLevel::with_terminal).
BSDEPathSolution solve_bsde_mc(const ladder::LadderLevel& level, const forward::PathBundle& bundle,
                               const RegressionConfig& cfg = {});

/// CSV `t,x,u` over the reporting window (all nodes when `full_grid`).
void write_surface_csv(const ValueSurface& s, std::ostream& out, bool full_grid = false);
/// Solver manifest {generator, levels_used, cfl_ratio, boundary_policy, tolerances, wall_time}.
std::string solver_manifest_json(const std::string& generator, const LadderSolve& solve, double tol,
                                 std::optional<double> wall_time);

}  // namespace minsup::backward
