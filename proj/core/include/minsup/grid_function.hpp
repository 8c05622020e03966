#pragma once

#include <array>
#include <cstdint>
#include <functional>
#include <iosfwd>
#include <span>
#include <vector>

#include "minsup/common.hpp"

namespace minsup {

/// Uniform axis: `count` nodes from `lo` to `hi` inclusive.
struct Axis {
  double lo = 0.0;
  double hi = 1.0;
  std::size_t count = 3;

  double spacing() const { return (hi - lo) / static_cast<double>(count - 1); }
  double node(std::size_t i) const;
  bool operator==(const Axis&) const = default;
};

/// Axis with nodes at multiples of `spacing` covering [lo, hi]; 0 is a node
/// whenever lo <= 0 <= hi and lo is a multiple of spacing.
Axis make_axis(double lo, double hi, double spacing);

/// Extended-real function sampled on a regular 1D or 2D grid.
///
/// Values are stored row-major (axis 0 slowest). +∞ marks points outside the
/// effective domain. Piecewise-linear (1D) or bilinear (2D) interpolation is
/// used between finite nodes; a cell touching a +∞ node is +∞ off its finite
/// face.
class GridFunction {
 public:
  GridFunction(std::vector<Axis> axes, std::vector<double> values);

  static GridFunction sample(const Axis& axis, const std::function<double(double)>& f);
  static GridFunction sample(const Axis& a0, const Axis& a1,
                             const std::function<double(double, double)>& f);
  static GridFunction constant(std::vector<Axis> axes, double value);

  std::size_t dims() const { return axes_.size(); }
  const Axis& axis(std::size_t k) const { return axes_.at(k); }
  const std::vector<Axis>& axes() const { return axes_; }
  std::size_t size() const { return values_.size(); }

  std::span<const double> values() const { return values_; }
  std::span<double> values() { return values_; }
  double operator[](std::size_t flat) const { return values_[flat]; }
  double& operator[](std::size_t flat) { return values_[flat]; }
  double at(std::size_t i) const { return values_.at(i); }
  double at(std::size_t i0, std::size_t i1) const;

  std::size_t flat_index(std::size_t i0, std::size_t i1) const { return i0 * axes_[1].count + i1; }
  std::array<std::size_t, 2> multi_index(std::size_t flat) const;
  /// Coordinates of a node; unused trailing coordinate is 0.
  std::array<double, 2> point(std::size_t flat) const;
  /// True for nodes on the outer boundary of the box.
  bool on_box_edge(std::size_t flat) const;

  bool is_proper() const;
  bool all_infinite() const;
  bool same_grid(const GridFunction& other) const { return axes_ == other.axes_; }

  /// Interpolated value; throws outside the box.
  double evaluate(std::span<const double> p) const;
  double evaluate(double x) const { return evaluate(std::span<const double>(&x, 1)); }

  /// (max |slope|) · spacing over finite adjacent pairs, maximized over axes.
  double grid_modulus() const;

  bool is_convex_flag() const { return is_convex_; }
  bool is_lsc_flag() const { return is_lsc_; }
  void set_convex_flag(bool v) { is_convex_ = v; }
  void set_lsc_flag(bool v) { is_lsc_ = v; }

  /// Per-node boundary-saturation marks (empty when none were computed).
  const std::vector<std::uint8_t>& saturated() const { return saturated_; }
  bool is_saturated(std::size_t flat) const { return !saturated_.empty() && saturated_[flat] != 0; }
  void set_saturated(std::vector<std::uint8_t> marks);
  bool any_saturated() const;

 private:
  std::vector<Axis> axes_;
  std::vector<double> values_;
  std::vector<std::uint8_t> saturated_;
  bool is_convex_ = false;
  bool is_lsc_ = false;
};

/// Discrete convexity: 1D second differences >= -tol at interior finite
/// nodes; 2D via comparison with the lower convex hull.
bool is_discretely_convex(const GridFunction& f, double tol);

/// CSV with header `axis0[,axis1],value`; +∞ written as `inf`.
void write_csv(const GridFunction& f, std::ostream& out);
GridFunction read_csv(std::istream& in);

}  // namespace minsup
