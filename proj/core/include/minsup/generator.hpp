#pragma once

#include <functional>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "minsup/common.hpp"
#include "minsup/grid_function.hpp"

namespace minsup {

/// One-dimensional closed convex building block with a closed-form
/// conjugate. Sums of these give the registry generators.
struct ConvexTerm {
  enum class Kind { zero, abs, quadratic, linear };
  Kind kind = Kind::zero;
  double coef = 0.0;  // abs: c|t|, quadratic: c t^2 (c > 0), linear: c t

  double value(double t) const;
  /// Convex conjugate s -> sup_t {s t - value(t)} (+inf off the domain).
  double conjugate(double s) const;
  /// sup_{|s| <= n} {s t - conjugate(s)}; -inf if the dual box misses the domain.
  double lipschitz_approx(double n, double t) const;
  /// Least n for which lipschitz_approx(n, .) equals value(.) on |t| <= r.
  double exact_radius(double r) const;
};

/// g(x,y,z) = fx(x) + fy(y) + fz(z) with closed-form conjugate.
struct SeparableForm {
  ConvexTerm x, y, z;
};

/// Declared split g = g1(x) + g2(y,z).
struct SeparableSplit {
  std::function<double(double)> g1;
  std::function<double(double, double)> g2;
};

struct GeneratorFlags {
  bool positive = false;
  bool convex_in_z = false;
  bool monotone_in_y = false;
  int monotone_direction = 0;  // +1 increasing, -1 decreasing, 0 constant in y
  bool jointly_convex = false;  // (y,z) jointly convex for each x
  bool convex_xyz = false;      // convex in (x,y,z); needed by the ladder
};

/// Generator g(x, y, z) with declared structure.
struct GeneratorSpec {
  std::string name;
  std::map<std::string, double> params;
  std::function<double(double, double, double)> eval;
  GeneratorFlags flags;
  std::optional<SeparableForm> closed_form;
  std::optional<SeparableSplit> split;

  double operator()(double x, double y, double z) const { return eval(x, y, z); }
  bool depends_on_y() const;
};

/// Tabulated generator on a regular (x, y, z) grid, trilinear in between.
struct TabulatedGenerator {
  Axis x, y, z;
  std::vector<double> values;  // index ((ix * ny) + iy) * nz + iz
  double operator()(double xv, double yv, double zv) const;
};

GeneratorSpec make_tabulated_generator(std::string name, TabulatedGenerator table, GeneratorFlags flags);

std::vector<std::string> generator_registry();
/// Registry entries: zero, abs-z{c}, quadratic-z{c}, entropic, separable,
/// linear-y{c}, weighted-abs-z.
GeneratorSpec make_generator(std::string_view name, const std::map<std::string, double>& params = {});

/// Probe box for flag verification and brute-force conjugation.
struct ProbeBox {
  Axis x, y, z;
  bool operator==(const ProbeBox&) const = default;
};

/// Returns human-readable descriptions of declared flags that fail on the probes.
std::vector<std::string> verify_generator_flags(const GeneratorSpec& g, const ProbeBox& probes, double tol);

/// Terminal function phi with declared lower bound.
struct TerminalSpec {
  std::string name;
  std::map<std::string, double> params;
  std::function<double(double)> eval;
  double lower_bound = -kInf;  // declared C; -inf when unbounded below
  std::optional<double> cap;   // set by truncation

  double operator()(double x) const { return eval(x); }
};

std::vector<std::string> terminal_registry();
/// Registry entries: zero, linear, square, tanh, positive-part, constant{c}.
TerminalSpec make_terminal(std::string_view name, const std::map<std::string, double>& params = {});
TerminalSpec terminal_from_grid(std::string name, GridFunction f);

}  // namespace minsup
