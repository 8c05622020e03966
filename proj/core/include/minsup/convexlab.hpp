#pragma once

#include <optional>
#include <string>
#include <vector>

#include "minsup/generator.hpp"
#include "minsup/grid_function.hpp"

/// Discrete convex analysis on regular grids: envelopes, conjugates,
/// epigraphical limits, horizon functions and recession checks.
namespace minsup::convexlab {

/// Greatest lsc minorant representable on the grid. An isolated +inf node
/// (all existing axis neighbours finite) is a removable singularity and is
/// replaced by the smallest one-sided linear continuation of its neighbours;
/// adjacent +inf nodes delimit the domain and are kept.
GridFunction lsc_envelope(const GridFunction& f);

/// f*(p) = max over finite nodes x of <p,x> - f(x), on the dual grid.
/// Nodes whose maximizer lies only on the primal box edge are flagged
/// saturated.
GridFunction legendre_conjugate(const GridFunction& f, const std::vector<Axis>& dual_axes);

/// Greatest convex lsc minorant (lower convex hull of the finite epigraph
/// points), evaluated at every node.
GridFunction convexify(const GridFunction& f);

/// Per-y-slice 1D lower convex envelope of a (y, z) grid function.
GridFunction convexify_z(const GridFunction& f);

/// Lower hull value of f at node `flat` (used by convexify; exposed for tests).
double lower_hull_at(const GridFunction& f, std::size_t flat);

enum class EpiMode { PK, CC, CCz };

/// Finite stand-in for a sequence of functions on one grid. Tails n with at
/// least `tail_length` members are the admissible tails; 0 means the full
/// list (only the whole sequence counts as a tail).
struct EpiSequence {
  std::vector<GridFunction> members;
  std::size_t tail_length = 0;

  std::size_t effective_tail_length() const {
    return tail_length == 0 ? members.size() : std::min(tail_length, members.size());
  }
};

/// Inner envelopes E(inf_{k >= n} f_k) for each admissible tail start n, in
/// increasing n.
std::vector<GridFunction> tail_envelopes(const EpiSequence& seq, EpiMode mode);

/// sup over admissible tails n of E(inf_{k >= n} f_k).
GridFunction epi_liminf(const EpiSequence& seq, EpiMode mode);

/// Pointwise infimum of the members (no envelope).
GridFunction pointwise_inf(std::span<const GridFunction> fs);

/// Horizon function from the anchor node closest to the box centre:
/// (h(x0 + a y) - h(x0)) / a at the largest a keeping x0 + a y in the box.
/// Directions whose quotients have not stabilized between a/2 and a are
/// flagged saturated.
GridFunction horizon_function(const GridFunction& h, const std::vector<Axis>& direction_axes);

/// Relative change of the difference quotient between a/2 and a above which
/// a direction counts as saturated.
inline constexpr double kHorizonStabilization = 0.05;

enum class RecCase { i, ii, iii, iv, automatic };
enum class RecVerdict { pass, inconclusive };

std::string to_string(RecCase c);
std::string to_string(RecVerdict v);

struct RecReport {
  RecVerdict verdict = RecVerdict::inconclusive;
  std::optional<RecCase> case_used;
  double max_gap = 0.0;                 // largest tested discrepancy
  std::vector<double> level_set_radii;  // per probed level gamma
  std::vector<std::string> notes;
};

struct RecProbe {
  std::vector<double> x_sequence;
  std::optional<double> x_limit;  // defaults to the last element
  Axis y{-4.0, 4.0, 41};
  Axis z{-4.0, 4.0, 41};
  std::vector<double> levels{0.5, 1.0, 2.0};
  double margin = 0.1;  // fraction of the box half-width kept free
  double tol = 1e-9;
};

/// Checks a sufficient condition for the recession property. Never claims
/// the property fails: the verdict is pass or inconclusive.
RecReport rec_check(const GeneratorSpec& g, const RecProbe& probe, RecCase requested);

}  // namespace minsup::convexlab
