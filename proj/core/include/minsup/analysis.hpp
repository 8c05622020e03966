#pragma once

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "minsup/backward.hpp"
#include "minsup/convexlab.hpp"

/// Numerical checks of the stability, locality, Markov, shift, lsc,
/// viscosity-supersolution and monotone-limit properties.
namespace minsup::analysis {

enum class Verdict { pass, fail, inconclusive };
std::string to_string(Verdict v);

struct CheckReport {
  std::string name;
  std::string scenario;
  Verdict verdict = Verdict::inconclusive;
  std::vector<std::pair<std::string, double>> measured;
  std::vector<std::pair<std::string, double>> tolerances;
  std::vector<std::pair<std::string, std::string>> fingerprint;
  std::vector<std::string> notes;
  double max_gap = 0.0;    // headline gap for the summary table
  double tolerance = 0.0;  // headline tolerance for the summary table

  std::optional<double> get(std::string_view key) const;
  void add(std::string key, double value) { measured.emplace_back(std::move(key), value); }
  void add_tolerance(std::string key, double value) { tolerances.emplace_back(std::move(key), value); }
  void add_fingerprint(std::string key, std::string value) { fingerprint.emplace_back(std::move(key), std::move(value)); }
};

std::string report_json(const CheckReport& r);
/// Aggregate CSV `check,scenario,verdict,max_gap,tolerance`.
void write_summary_csv(const std::vector<CheckReport>& reports, std::ostream& out);
/// Worst verdict: fail > inconclusive > pass.
Verdict combine(const std::vector<CheckReport>& reports);

/// Discrete semi-jet at an interior node: a forward time difference, p and M
/// central space differences.
struct DiscreteJet {
  std::size_t j = 0, i = 0;
  double t = 0.0, x = 0.0;
  double a = 0.0, p = 0.0, M = 0.0;
};

/// Throws when (j, i) is not at least one node inside every window edge.
DiscreteJet discrete_jet(const backward::ValueSurface& s, std::size_t j, std::size_t i);

using GeneratorFn = std::function<double(double x, double y, double z)>;

struct ViscosityOptions {
  /// Tolerance at dx = 0.02; scaled with dx^2.
  double tol_visc = 1e-3;
  /// Slope jump |u_{i+1} - 2u_i + u_{i-1}| / dx above which a node is flagged as kink-adjacent.
  double kink_threshold = 0.1;
};

/// R = -a - [mu p + sigma^2/2 M + g(x, u, sigma p)] at every interior node;
/// pass iff min R >= -tol.
CheckReport viscosity_residual(const backward::ValueSurface& s, const GeneratorFn& g, const forward::DiffusionSpec& d,
                               const ViscosityOptions& opts = {});

/// Largest discrete residual magnitude |R| over interior nodes (for closed-form surfaces).
double max_abs_residual(const backward::ValueSurface& s, const GeneratorFn& g, const forward::DiffusionSpec& d);

/// Node-wise lower semicontinuity at time level t: a node fails when it sits
/// above the linear continuations from both neighbouring sides by more than
/// the local modulus of the cells around it (excluding its own cells).
CheckReport check_lsc(const backward::ValueSurface& s, double t);

/// h_*(z) = max_N min_{n >= N, |z' - z|_inf <= 1/n} h^n(z').
GridFunction lower_limit(const convexlab::EpiSequence& seq);
/// Throws when the sequence decreases anywhere by more than 1e-12.
CheckReport monotone_limit_check(const convexlab::EpiSequence& seq);

struct StabilityConfig {
  backward::PdeGridConfig grid;
  backward::LadderSolveOptions ladder;
  double tol = 5e-3;
  /// First 1-based index of the tail; 0 means the second half of the sequence.
  std::size_t tail_start = 0;
  /// g increasing in x, phi increasing and x_k increasing to x: equality is required too.
  bool monotone = false;
  /// False when the recession hypothesis is not established; the verdict is then inconclusive.
  bool rec_established = true;
  std::string scenario;
};

CheckReport check_stability(const GeneratorSpec& g, const TerminalSpec& phi, const forward::DiffusionSpec& d,
                            double x, const std::vector<double>& x_sequence, const StabilityConfig& cfg);

/// Event A evaluated on the X^1 bundle at local step k_t.
using EventRule = std::function<bool(const forward::PathBundle& b, std::size_t path, std::size_t step)>;
EventRule event_above(double level);
EventRule event_always();

struct LocalityConfig {
  forward::TimeGrid grid{0.0, 1.0, 50};
  std::size_t n_paths = 100000;
  double x0 = 0.0;
  std::uint64_t seed = 1;
  int level = 8;
  backward::RegressionConfig regression;
  std::string scenario;
};

CheckReport check_locality(const GeneratorSpec& g, const TerminalSpec& phi, const forward::DiffusionSpec& d1,
                           const forward::DiffusionSpec& d2, double t, const EventRule& event,
                           const LocalityConfig& cfg);

struct MarkovConfig {
  backward::PdeGridConfig grid;
  backward::LadderSolveOptions ladder;
  forward::TimeGrid mc_grid{0.0, 1.0, 50};
  std::size_t n_paths = 100000;
  double x0 = 0.0;
  std::uint64_t seed = 1;
  std::size_t buckets = 20;
  /// Ladder level of the MC solver; 0 uses the level at which the PDE ladder stopped.
  int mc_level = 0;
  /// u(t, .) continuous, or monotone with a uniform lower bound on X.
  bool equality_expected = true;
  backward::RegressionConfig regression;
  std::string scenario;
};

CheckReport check_markov_identity(const GeneratorSpec& g, const TerminalSpec& phi, const forward::DiffusionSpec& d,
                                  double t, const MarkovConfig& cfg);

struct ShiftConfig {
  backward::PdeGridConfig grid;
  backward::LadderSolveOptions ladder;
  std::string scenario;
};

CheckReport check_shift_identity(const GeneratorSpec& g, const TerminalSpec& phi, const forward::DiffusionSpec& d,
                                 double t, double x, const ShiftConfig& cfg);

}  // namespace minsup::analysis
