#pragma once

#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "minsup/generator.hpp"

/// Lipschitz approximation ladder g^n built from the convex conjugate of g
/// restricted to the dual box |alpha| v |beta| v |gamma| <= n.
namespace minsup::ladder {

/// Conjugate g*(alpha, beta, gamma) tabulated on the dual box [-n, n]^3.
struct ConjugateTable {
  double radius = 0.0;
  Axis alpha, beta, gamma;
  std::vector<double> values;
  std::vector<std::uint8_t> saturated;  // maximizer only on the primal box edge
  bool closed_form = false;
  ProbeBox primal;

  std::size_t index(std::size_t i, std::size_t j, std::size_t k) const {
    return (i * beta.count + j) * gamma.count + k;
  }
  double at(std::size_t i, std::size_t j, std::size_t k) const { return values[index(i, j, k)]; }
  bool is_saturated(std::size_t i, std::size_t j, std::size_t k) const { return saturated[index(i, j, k)] != 0; }
  /// Locates (a, b, c) on the dual grid; throws if it is not a node.
  std::size_t node_index(double a, double b, double c) const;
};

/// Brute-force sup over the primal probe nodes, or the closed form when the
/// generator carries one and `use_closed_form` is set.
ConjugateTable conjugate_full(const GeneratorSpec& g, const ProbeBox& primal, double radius, double dual_spacing,
                              bool use_closed_form = false);

struct LadderOptions {
  double dual_spacing = 0.25;
  ProbeBox probe{Axis{-4.0, 4.0, 9}, Axis{-4.0, 4.0, 9}, Axis{-20.0, 20.0, 81}};
  /// Use the tabulated conjugate even when a closed form exists.
  bool force_table = false;
};

/// Level n of the ladder. Immutable once built; safe to share across threads.
class LadderLevel {
 public:
  int n() const { return n_; }
  double lipschitz_bound() const { return static_cast<double>(n_); }
  const GeneratorSpec& generator() const { return generator_; }
  const ProbeBox& probe() const { return probe_; }
  bool closed_form() const { return closed_form_; }
  /// True when every dual cell was boundary-saturated and the saturated
  /// values had to be used.
  bool used_saturated_cells() const { return used_saturated_; }
  /// Lower bound -g*(0,0,0) of g^n.
  double floor() const { return floor_; }
  double dual_spacing() const { return dual_spacing_; }
  const ConjugateTable* table() const { return table_.get(); }
  const std::optional<TerminalSpec>& terminal() const { return terminal_; }

  double operator()(double x, double y, double z) const { return eval_(x, y, z); }
  /// Same level with phi^n = phi ∧ n attached.
  LadderLevel with_terminal(const TerminalSpec& phi) const;

 private:
  friend LadderLevel build_gn(const GeneratorSpec&, int, const LadderOptions&);
  int n_ = 1;
  GeneratorSpec generator_;
  ProbeBox probe_;
  double dual_spacing_ = 0.0;
  bool closed_form_ = false;
  bool used_saturated_ = false;
  double floor_ = 0.0;
  std::shared_ptr<const ConjugateTable> table_;
  std::function<double(double, double, double)> eval_;
  std::optional<TerminalSpec> terminal_;
};

/// g^n(p) = sup_{|a|v|b|v|c| <= n} {a x + b y + c z - g*(a,b,c)}.
LadderLevel build_gn(const GeneratorSpec& g, int n, const LadderOptions& opts = {});

/// phi^n = phi ∧ n.
TerminalSpec truncate_terminal(const TerminalSpec& phi, int n);

struct LadderCheck {
  double max_step_violation = 0.0;   // max (g^n - g^{n+1})^+
  double max_limit_violation = 0.0;  // max (g^n - g)^+
  double tolerance = 0.0;
  bool pass = false;
};

LadderCheck verify_monotone_ladder(const std::vector<LadderLevel>& levels, const ProbeBox& probe,
                                   double tolerance = 1e-12);

/// JSON manifest {generator, n_levels, dual_spacing, lipschitz_bounds[], max_monotonicity_violation}.
std::string ladder_manifest_json(const std::vector<LadderLevel>& levels, const LadderCheck& check);

}  // namespace minsup::ladder
