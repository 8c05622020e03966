#include "minsup/grid_function.hpp"

#include <algorithm>
#include <istream>
#include <ostream>
#include <sstream>
#include <string>

#include "minsup/convexlab.hpp"

namespace minsup {

double Axis::node(std::size_t i) const {
  const double n = static_cast<double>(count - 1);
  const double k = static_cast<double>(i);
  // Exact endpoints, and exact mirror symmetry for symmetric boxes.
  return (lo * (n - k) + hi * k) / n;
}

Axis make_axis(double lo, double hi, double spacing) {
  if (!(spacing > 0.0) || !(hi > lo)) throw Error("make_axis: need hi > lo and spacing > 0");
  const auto cells = static_cast<std::size_t>(std::llround((hi - lo) / spacing));
  return Axis{lo, lo + static_cast<double>(cells) * spacing, std::max<std::size_t>(cells, 2) + 1};
}

GridFunction::GridFunction(std::vector<Axis> axes, std::vector<double> values)
    : axes_(std::move(axes)), values_(std::move(values)) {
  if (axes_.empty() || axes_.size() > 2) throw Error("GridFunction: 1 or 2 axes supported");
  std::size_t expected = 1;
  for (const Axis& a : axes_) {
    if (a.count < 3) throw Error("GridFunction: each axis needs at least 3 nodes");
    if (!(a.hi > a.lo) || !std::isfinite(a.lo) || !std::isfinite(a.hi))
      throw Error("GridFunction: axis bounds must be finite with hi > lo");
    expected *= a.count;
  }
  if (values_.size() != expected) throw Error("GridFunction: value count does not match grid");
  for (double v : values_) {
    if (std::isnan(v) || v == -kInf) throw Error("GridFunction: values must be finite or +inf");
  }
}

GridFunction GridFunction::sample(const Axis& axis, const std::function<double(double)>& f) {
  std::vector<double> v(axis.count);
  for (std::size_t i = 0; i < axis.count; ++i) v[i] = f(axis.node(i));
  return GridFunction({axis}, std::move(v));
}

GridFunction GridFunction::sample(const Axis& a0, const Axis& a1,
                                  const std::function<double(double, double)>& f) {
  std::vector<double> v(a0.count * a1.count);
  for (std::size_t i = 0; i < a0.count; ++i)
    for (std::size_t j = 0; j < a1.count; ++j) v[i * a1.count + j] = f(a0.node(i), a1.node(j));
  return GridFunction({a0, a1}, std::move(v));
}

GridFunction GridFunction::constant(std::vector<Axis> axes, double value) {
  std::size_t n = 1;
  for (const Axis& a : axes) n *= a.count;
  return GridFunction(std::move(axes), std::vector<double>(n, value));
}

double GridFunction::at(std::size_t i0, std::size_t i1) const {
  if (dims() != 2) throw Error("GridFunction::at(i0,i1) on a 1D grid");
  return values_.at(flat_index(i0, i1));
}

std::array<std::size_t, 2> GridFunction::multi_index(std::size_t flat) const {
  if (dims() == 1) return {flat, 0};
  return {flat / axes_[1].count, flat % axes_[1].count};
}

std::array<double, 2> GridFunction::point(std::size_t flat) const {
  const auto [i0, i1] = multi_index(flat);
  if (dims() == 1) return {axes_[0].node(i0), 0.0};
  return {axes_[0].node(i0), axes_[1].node(i1)};
}

bool GridFunction::on_box_edge(std::size_t flat) const {
  const auto idx = multi_index(flat);
  for (std::size_t k = 0; k < dims(); ++k) {
    if (idx[k] == 0 || idx[k] + 1 == axes_[k].count) return true;
  }
  return false;
}

bool GridFunction::is_proper() const {
  return std::any_of(values_.begin(), values_.end(), [](double v) { return std::isfinite(v); });
}

bool GridFunction::all_infinite() const { return !is_proper(); }

namespace {

// Cell index and local weight of coordinate x on `a`.
std::pair<std::size_t, double> locate(const Axis& a, double x) {
  const double span = a.hi - a.lo;
  const double tol = 1e-12 * span;
  if (!(x >= a.lo - tol && x <= a.hi + tol)) throw Error("GridFunction::evaluate: point outside box");
  const double s = std::clamp((x - a.lo) / a.spacing(), 0.0, static_cast<double>(a.count - 1));
  auto i = static_cast<std::size_t>(std::floor(s));
  if (i >= a.count - 1) i = a.count - 2;
  double w = s - static_cast<double>(i);
  if (std::abs(w) < 1e-12) w = 0.0;
  if (std::abs(1.0 - w) < 1e-12) w = 1.0;
  return {i, w};
}

}  // namespace

double GridFunction::evaluate(std::span<const double> p) const {
  if (p.size() != dims()) throw Error("GridFunction::evaluate: dimension mismatch");
  if (dims() == 1) {
    const auto [i, w] = locate(axes_[0], p[0]);
    const double a = values_[i], b = values_[i + 1];
    if (w == 0.0) return a;
    if (w == 1.0) return b;
    if (!std::isfinite(a) || !std::isfinite(b)) return kInf;
    return (1.0 - w) * a + w * b;
  }
  const auto [i, wi] = locate(axes_[0], p[0]);
  const auto [j, wj] = locate(axes_[1], p[1]);
  double acc = 0.0;
  const double wx[2] = {1.0 - wi, wi};
  const double wy[2] = {1.0 - wj, wj};
  for (int a = 0; a < 2; ++a) {
    for (int b = 0; b < 2; ++b) {
      const double w = wx[a] * wy[b];
      if (w == 0.0) continue;
      const double v = values_[flat_index(i + a, j + b)];
      if (!std::isfinite(v)) return kInf;
      acc += w * v;
    }
  }
  return acc;
}

double GridFunction::grid_modulus() const {
  double eps = 0.0;
  if (dims() == 1) {
    for (std::size_t i = 0; i + 1 < values_.size(); ++i) {
      if (std::isfinite(values_[i]) && std::isfinite(values_[i + 1]))
        eps = std::max(eps, std::abs(values_[i + 1] - values_[i]));
    }
    return eps;
  }
  const std::size_t n0 = axes_[0].count, n1 = axes_[1].count;
  for (std::size_t i = 0; i < n0; ++i) {
    for (std::size_t j = 0; j < n1; ++j) {
      const double v = values_[flat_index(i, j)];
      if (!std::isfinite(v)) continue;
      if (i + 1 < n0 && std::isfinite(values_[flat_index(i + 1, j)]))
        eps = std::max(eps, std::abs(values_[flat_index(i + 1, j)] - v));
      if (j + 1 < n1 && std::isfinite(values_[flat_index(i, j + 1)]))
        eps = std::max(eps, std::abs(values_[flat_index(i, j + 1)] - v));
    }
  }
  return eps;
}

void GridFunction::set_saturated(std::vector<std::uint8_t> marks) {
  if (!marks.empty() && marks.size() != values_.size())
    throw Error("GridFunction: saturation mask size mismatch");
  saturated_ = std::move(marks);
}

bool GridFunction::any_saturated() const {
  return std::any_of(saturated_.begin(), saturated_.end(), [](std::uint8_t m) { return m != 0; });
}

bool is_discretely_convex(const GridFunction& f, double tol) {
  if (f.dims() == 1) {
    const auto v = f.values();
    // Effective domain must be a contiguous run of nodes.
    std::size_t first = v.size(), last = 0;
    for (std::size_t i = 0; i < v.size(); ++i) {
      if (std::isfinite(v[i])) {
        first = std::min(first, i);
        last = i;
      }
    }
    if (first == v.size()) return true;
    for (std::size_t i = first; i <= last; ++i)
      if (!std::isfinite(v[i])) return false;
    for (std::size_t i = first + 1; i < last; ++i) {
      if (v[i - 1] - 2.0 * v[i] + v[i + 1] < -tol) return false;
    }
    return true;
  }
  const GridFunction hull = convexlab::convexify(f);
  for (std::size_t k = 0; k < f.size(); ++k) {
    const double a = f[k], b = hull[k];
    if (std::isfinite(b) && !std::isfinite(a)) return false;
    if (std::isfinite(a) && a - b > tol) return false;
  }
  return true;
}

void write_csv(const GridFunction& f, std::ostream& out) {
  out << (f.dims() == 1 ? "axis0,value\n" : "axis0,axis1,value\n");
  for (std::size_t k = 0; k < f.size(); ++k) {
    const auto p = f.point(k);
    out << format_double(p[0]) << ',';
    if (f.dims() == 2) out << format_double(p[1]) << ',';
    out << format_double(f[k]) << '\n';
  }
}

GridFunction read_csv(std::istream& in) {
  std::string line;
  if (!std::getline(in, line)) throw Error("read_csv: empty input");
  if (!line.empty() && line.back() == '\r') line.pop_back();
  std::size_t dims = 0;
  if (line == "axis0,value") dims = 1;
  else if (line == "axis0,axis1,value") dims = 2;
  else throw Error("read_csv: unexpected header '" + line + "'");

  std::vector<std::array<double, 3>> rows;
  while (std::getline(in, line)) {
    if (line.empty() || line == "\r") continue;
    std::array<double, 3> row{};
    std::size_t pos = 0;
    for (std::size_t c = 0; c <= dims; ++c) {
      const std::size_t comma = line.find(',', pos);
      const bool last = c == dims;
      if (last != (comma == std::string::npos)) throw Error("read_csv: wrong column count");
      row[c] = parse_double(std::string_view(line).substr(pos, last ? std::string::npos : comma - pos));
      pos = comma + 1;
    }
    rows.push_back(row);
  }
  if (rows.empty()) throw Error("read_csv: no data rows");

  std::vector<Axis> axes;
  for (std::size_t c = 0; c < dims; ++c) {
    std::vector<double> coords;
    for (const auto& r : rows) coords.push_back(r[c]);
    std::sort(coords.begin(), coords.end());
    coords.erase(std::unique(coords.begin(), coords.end()), coords.end());
    if (coords.size() < 3) throw Error("read_csv: each axis needs at least 3 nodes");
    axes.push_back(Axis{coords.front(), coords.back(), coords.size()});
  }
  std::size_t total = 1;
  for (const Axis& a : axes) total *= a.count;
  if (total != rows.size()) throw Error("read_csv: rows do not form a full grid");

  std::vector<double> values(total, kInf);
  std::vector<std::uint8_t> seen(total, 0);
  for (const auto& r : rows) {
    std::size_t flat = 0;
    for (std::size_t c = 0; c < dims; ++c) {
      const Axis& a = axes[c];
      const double s = (r[c] - a.lo) / a.spacing();
      const auto idx = static_cast<std::size_t>(std::llround(s));
      if (std::abs(s - static_cast<double>(idx)) > 1e-6) throw Error("read_csv: non-uniform axis");
      flat = flat * a.count + idx;
    }
    if (seen[flat]) throw Error("read_csv: duplicate node");
    seen[flat] = 1;
    values[flat] = r[dims];
  }
  return GridFunction(std::move(axes), std::move(values));
}

}  // namespace minsup
