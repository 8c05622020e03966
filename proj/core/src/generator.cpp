#include "minsup/generator.hpp"

#include <algorithm>
#include <sstream>

namespace minsup {

double ConvexTerm::value(double t) const {
  switch (kind) {
    case Kind::zero: return 0.0;
    case Kind::abs: return coef * std::abs(t);
    case Kind::quadratic: return coef * t * t;
    case Kind::linear: return coef * t;
  }
  return 0.0;
}

double ConvexTerm::conjugate(double s) const {
  switch (kind) {
    case Kind::zero: return s == 0.0 ? 0.0 : kInf;
    case Kind::abs: return std::abs(s) <= coef ? 0.0 : kInf;
    case Kind::quadratic: return s * s / (4.0 * coef);
    case Kind::linear: return s == coef ? 0.0 : kInf;
  }
  return kInf;
}

double ConvexTerm::lipschitz_approx(double n, double t) const {
  switch (kind) {
    case Kind::zero: return 0.0;
    case Kind::abs: return std::min(n, coef) * std::abs(t);
    case Kind::quadratic: {
      const double s = 2.0 * coef * t;
      if (std::abs(s) <= n) return coef * t * t;
      return n * std::abs(t) - n * n / (4.0 * coef);
    }
    case Kind::linear: return std::abs(coef) <= n ? coef * t : -kInf;
  }
  return 0.0;
}

double ConvexTerm::exact_radius(double r) const {
  switch (kind) {
    case Kind::zero: return 0.0;
    case Kind::abs: return coef;
    case Kind::quadratic: return 2.0 * coef * r;
    case Kind::linear: return std::abs(coef);
  }
  return 0.0;
}

bool GeneratorSpec::depends_on_y() const {
  if (closed_form) return closed_form->y.kind != ConvexTerm::Kind::zero;
  return !(flags.monotone_in_y && flags.monotone_direction == 0);
}

double TabulatedGenerator::operator()(double xv, double yv, double zv) const {
  const Axis* axes[3] = {&x, &y, &z};
  const double p[3] = {xv, yv, zv};
  std::size_t idx[3];
  double w[3];
  for (int k = 0; k < 3; ++k) {
    const Axis& a = *axes[k];
    const double tol = 1e-12 * (a.hi - a.lo);
    if (!(p[k] >= a.lo - tol && p[k] <= a.hi + tol)) return kInf;
    const double s = std::clamp((p[k] - a.lo) / a.spacing(), 0.0, static_cast<double>(a.count - 1));
    idx[k] = std::min(static_cast<std::size_t>(std::floor(s)), a.count - 2);
    w[k] = s - static_cast<double>(idx[k]);
  }
  double acc = 0.0;
  for (int a = 0; a < 2; ++a)
    for (int b = 0; b < 2; ++b)
      for (int c = 0; c < 2; ++c) {
        const double wt = (a ? w[0] : 1 - w[0]) * (b ? w[1] : 1 - w[1]) * (c ? w[2] : 1 - w[2]);
        if (wt == 0.0) continue;
        const double v = values[((idx[0] + a) * y.count + idx[1] + b) * z.count + idx[2] + c];
        if (!std::isfinite(v)) return kInf;
        acc += wt * v;
      }
  return acc;
}

GeneratorSpec make_tabulated_generator(std::string name, TabulatedGenerator table, GeneratorFlags flags) {
  if (table.values.size() != table.x.count * table.y.count * table.z.count)
    throw Error("tabulated generator: value count does not match grid");
  GeneratorSpec g;
  g.name = std::move(name);
  g.flags = flags;
  g.eval = [t = std::move(table)](double x, double y, double z) { return t(x, y, z); };
  return g;
}

namespace {

double param(const std::map<std::string, double>& p, const std::string& key, double fallback) {
  auto it = p.find(key);
  return it == p.end() ? fallback : it->second;
}

void reject_unknown(const std::map<std::string, double>& p, std::initializer_list<const char*> allowed,
                    std::string_view what) {
  for (const auto& [k, v] : p) {
    if (std::none_of(allowed.begin(), allowed.end(), [&](const char* a) { return k == a; }))
      throw Error(std::string(what) + ": unknown parameter '" + k + "'");
  }
}

GeneratorSpec from_separable(std::string name, std::map<std::string, double> params, SeparableForm form,
                             GeneratorFlags flags) {
  GeneratorSpec g;
  g.name = std::move(name);
  g.params = std::move(params);
  g.flags = flags;
  g.closed_form = form;
  g.eval = [form](double x, double y, double z) {
    return form.x.value(x) + form.y.value(y) + form.z.value(z);
  };
  return g;
}

std::string join(const std::vector<std::string>& names) {
  std::ostringstream os;
  for (std::size_t i = 0; i < names.size(); ++i) os << (i ? ", " : "") << names[i];
  return os.str();
}

}  // namespace

std::vector<std::string> generator_registry() {
  return {"zero", "abs-z", "quadratic-z", "entropic", "separable", "linear-y", "weighted-abs-z"};
}

GeneratorSpec make_generator(std::string_view name, const std::map<std::string, double>& params) {
  using K = ConvexTerm::Kind;
  GeneratorFlags convex_all{true, true, true, 0, true, true};
  if (name == "zero") {
    reject_unknown(params, {}, "zero");
    return from_separable("zero", params, {}, convex_all);
  }
  if (name == "abs-z") {
    reject_unknown(params, {"c"}, "abs-z");
    const double c = param(params, "c", 1.0);
    if (!(c >= 0.0)) throw Error("abs-z: c must be >= 0");
    return from_separable("abs-z", params, {{}, {}, {K::abs, c}}, convex_all);
  }
  if (name == "quadratic-z") {
    reject_unknown(params, {"c"}, "quadratic-z");
    const double c = param(params, "c", 1.0);
    if (!(c > 0.0)) throw Error("quadratic-z: c must be > 0");
    return from_separable("quadratic-z", params, {{}, {}, {K::quadratic, c}}, convex_all);
  }
  if (name == "entropic") {
    reject_unknown(params, {}, "entropic");
    return from_separable("entropic", params, {{}, {}, {K::quadratic, 0.5}}, convex_all);
  }
  if (name == "separable") {
    reject_unknown(params, {}, "separable");
    GeneratorSpec g = from_separable("separable", params, {{K::quadratic, 1.0}, {}, {K::quadratic, 0.5}},
                                     convex_all);
    g.split = SeparableSplit{[](double x) { return x * x; }, [](double, double z) { return 0.5 * z * z; }};
    return g;
  }
  if (name == "linear-y") {
    reject_unknown(params, {"c"}, "linear-y");
    const double c = param(params, "c", 1.0);
    GeneratorFlags f = convex_all;
    f.positive = false;
    f.monotone_direction = c > 0 ? 1 : (c < 0 ? -1 : 0);
    return from_separable("linear-y", params, {{}, {K::linear, c}, {}}, f);
  }
  if (name == "weighted-abs-z") {
    reject_unknown(params, {}, "weighted-abs-z");
    GeneratorSpec g;
    g.name = "weighted-abs-z";
    g.params = params;
    g.flags = GeneratorFlags{true, true, true, 0, true, false};
    g.eval = [](double x, double, double z) { return (1.0 + x * x) * std::abs(z); };
    return g;
  }
  throw Error("unknown generator '" + std::string(name) + "'; valid names: " + join(generator_registry()));
}

std::vector<std::string> verify_generator_flags(const GeneratorSpec& g, const ProbeBox& pb, double tol) {
  std::vector<std::string> issues;
  const std::size_t nx = pb.x.count, ny = pb.y.count, nz = pb.z.count;
  std::vector<double> v(nx * ny * nz);
  auto at = [&](std::size_t i, std::size_t j, std::size_t k) -> double& { return v[(i * ny + j) * nz + k]; };
  for (std::size_t i = 0; i < nx; ++i)
    for (std::size_t j = 0; j < ny; ++j)
      for (std::size_t k = 0; k < nz; ++k) at(i, j, k) = g(pb.x.node(i), pb.y.node(j), pb.z.node(k));

  if (g.flags.positive && std::any_of(v.begin(), v.end(), [&](double a) { return a < -tol; }))
    issues.emplace_back("positive: negative sample");

  if (g.flags.convex_in_z) {
    bool ok = true;
    for (std::size_t i = 0; i < nx && ok; ++i)
      for (std::size_t j = 0; j < ny && ok; ++j)
        for (std::size_t k = 1; k + 1 < nz && ok; ++k) {
          const double d2 = at(i, j, k - 1) - 2 * at(i, j, k) + at(i, j, k + 1);
          if (std::isfinite(d2) && d2 < -tol) ok = false;
        }
    if (!ok) issues.emplace_back("convex_in_z: negative second difference in z");
  }

  if (g.flags.monotone_in_y) {
    bool ok = true;
    const int dir = g.flags.monotone_direction;
    for (std::size_t i = 0; i < nx && ok; ++i)
      for (std::size_t k = 0; k < nz && ok; ++k)
        for (std::size_t j = 0; j + 1 < ny && ok; ++j) {
          const double d = at(i, j + 1, k) - at(i, j, k);
          if (dir > 0 && d < -tol) ok = false;
          if (dir < 0 && d > tol) ok = false;
          if (dir == 0 && std::abs(d) > tol) ok = false;
        }
    if (!ok) issues.emplace_back("monotone_in_y: declared direction violated");
  }

  if (g.flags.jointly_convex) {
    bool ok = true;
    for (std::size_t i = 0; i < nx && ok; ++i) {
      std::vector<double> slice(ny * nz);
      for (std::size_t j = 0; j < ny; ++j)
        for (std::size_t k = 0; k < nz; ++k) slice[j * nz + k] = at(i, j, k);
      ok = is_discretely_convex(GridFunction({pb.y, pb.z}, std::move(slice)), tol);
    }
    if (!ok) issues.emplace_back("jointly_convex: (y,z) slice not convex");
  }

  if (g.flags.convex_xyz) {
    bool ok = true;
    for (std::size_t i = 1; i + 1 < nx && ok; ++i)
      for (std::size_t j = 1; j + 1 < ny && ok; ++j)
        for (std::size_t k = 1; k + 1 < nz && ok; ++k)
          for (int di = -1; di <= 1 && ok; ++di)
            for (int dj = -1; dj <= 1 && ok; ++dj)
              for (int dk = -1; dk <= 1 && ok; ++dk) {
                if (di == 0 && dj == 0 && dk == 0) continue;
                const double a = at(i + di, j + dj, k + dk), b = at(i - di, j - dj, k - dk);
                if (std::isfinite(a) && std::isfinite(b) && at(i, j, k) > 0.5 * (a + b) + tol) ok = false;
              }
    if (!ok) issues.emplace_back("convex_xyz: midpoint convexity violated");
  }
  return issues;
}

std::vector<std::string> terminal_registry() {
  return {"zero", "linear", "square", "tanh", "positive-part", "constant"};
}

TerminalSpec make_terminal(std::string_view name, const std::map<std::string, double>& params) {
  TerminalSpec t;
  t.name = std::string(name);
  t.params = params;
  if (name == "constant") {
    reject_unknown(params, {"c"}, "constant");
    const double c = param(params, "c", 0.0);
    t.eval = [c](double) { return c; };
    t.lower_bound = c;
    return t;
  }
  reject_unknown(params, {}, name);
  if (name == "zero") {
    t.eval = [](double) { return 0.0; };
    t.lower_bound = 0.0;
  } else if (name == "linear") {
    t.eval = [](double x) { return x; };
  } else if (name == "square") {
    t.eval = [](double x) { return x * x; };
    t.lower_bound = 0.0;
  } else if (name == "tanh") {
    t.eval = [](double x) { return std::tanh(x); };
    t.lower_bound = -1.0;
  } else if (name == "positive-part") {
    t.eval = [](double x) { return std::max(x, 0.0); };
    t.lower_bound = 0.0;
  } else {
    throw Error("unknown terminal '" + std::string(name) + "'; valid names: " + join(terminal_registry()));
  }
  return t;
}

TerminalSpec terminal_from_grid(std::string name, GridFunction f) {
  if (f.dims() != 1) throw Error("terminal_from_grid: 1D grid required");
  if (!f.is_proper()) throw Error("terminal_from_grid: improper function");
  TerminalSpec t;
  t.name = std::move(name);
  double lo = kInf;
  for (double v : f.values()) lo = std::min(lo, v);
  t.lower_bound = lo;
  t.eval = [g = std::move(f)](double x) { return g.evaluate(x); };
  return t;
}

}  // namespace minsup
