#include "minsup/forward.hpp"

#include <algorithm>
#include <json.hpp>
#include <ostream>

#include "minsup/rng.hpp"

namespace minsup::forward {

double DiffusionSpec::mu(double t, double x) const {
  if (dim != 1) throw Error("scalar drift requested from a multi-dimensional diffusion");
  return drift(t + time_offset, std::span<const double>(&x, 1), 0);
}

double DiffusionSpec::sigma(double t, double x) const {
  if (dim != 1) throw Error("scalar volatility requested from a multi-dimensional diffusion");
  return vol(t + time_offset, std::span<const double>(&x, 1), 0);
}

namespace {

double param(const std::map<std::string, double>& p, const char* key, double fallback) {
  auto it = p.find(key);
  return it == p.end() ? fallback : it->second;
}

void reject_unknown(const std::map<std::string, double>& p, std::initializer_list<const char*> allowed,
                    std::string_view what) {
  for (const auto& [k, v] : p)
    if (std::none_of(allowed.begin(), allowed.end(), [&](const char* a) { return k == a; }))
      throw Error(std::string(what) + ": unknown parameter '" + k + "'");
}

}  // namespace

std::vector<std::string> diffusion_registry() { return {"brownian", "gbm", "ou", "time-drift", "brownian-2d"}; }

DiffusionSpec make_diffusion(std::string_view name, const std::map<std::string, double>& params) {
  DiffusionSpec d;
  d.name = std::string(name);
  d.params = params;
  if (name == "brownian" || name == "brownian-2d") {
    reject_unknown(params, {"mu", "sigma"}, name);
    const double m = param(params, "mu", 0.0), s = param(params, "sigma", 1.0);
    if (s < 0.0) throw Error("brownian: sigma must be >= 0");
    d.dim = name == "brownian" ? 1 : 2;
    d.drift = [m](double, std::span<const double>, std::size_t) { return m; };
    d.vol = [s](double, std::span<const double>, std::size_t) { return s; };
    d.lipschitz = 0.0;
    d.growth = std::max(std::abs(m), s);
  } else if (name == "gbm") {
    reject_unknown(params, {"mu", "sigma"}, name);
    const double m = param(params, "mu", 0.05), s = param(params, "sigma", 0.2);
    if (s < 0.0) throw Error("gbm: sigma must be >= 0");
    d.drift = [m](double, std::span<const double> x, std::size_t c) { return m * x[c]; };
    d.vol = [s](double, std::span<const double> x, std::size_t c) { return s * x[c]; };
    d.lipschitz = d.growth = std::max(std::abs(m), s);
  } else if (name == "ou") {
    reject_unknown(params, {"kappa", "theta", "sigma"}, name);
    const double k = param(params, "kappa", 1.0), th = param(params, "theta", 0.0), s = param(params, "sigma", 1.0);
    if (s < 0.0) throw Error("ou: sigma must be >= 0");
    d.drift = [k, th](double, std::span<const double> x, std::size_t c) { return k * (th - x[c]); };
    d.vol = [s](double, std::span<const double>, std::size_t) { return s; };
    d.lipschitz = std::abs(k);
    d.growth = std::max(std::abs(k) * (1.0 + std::abs(th)), s);
  } else if (name == "time-drift") {
    reject_unknown(params, {"c", "sigma"}, name);
    const double c = param(params, "c", 1.0), s = param(params, "sigma", 1.0);
    d.drift = [c](double t, std::span<const double>, std::size_t) { return c * t; };
    d.vol = [s](double, std::span<const double>, std::size_t) { return s; };
    d.lipschitz = 0.0;
    d.growth = std::max(std::abs(c), s);
  } else {
    std::string names;
    for (const auto& n : diffusion_registry()) names += (names.empty() ? "" : ", ") + n;
    throw Error("unknown diffusion '" + std::string(name) + "'; valid names: " + names);
  }
  return d;
}

bool check_lipschitz(const DiffusionSpec& d, std::span<const double> times, std::span<const double> states,
                     double tol) {
  if (d.dim != 1) throw Error("check_lipschitz: scalar diffusions only");
  for (double t : times)
    for (std::size_t i = 0; i < states.size(); ++i)
      for (std::size_t j = i + 1; j < states.size(); ++j) {
        const double dx = std::abs(states[i] - states[j]);
        const double bound = d.lipschitz * dx + tol * (1.0 + dx);
        if (std::abs(d.mu(t, states[i]) - d.mu(t, states[j])) > bound) return false;
        if (std::abs(d.sigma(t, states[i]) - d.sigma(t, states[j])) > bound) return false;
      }
  return true;
}

DiffusionSpec shifted_diffusion(const DiffusionSpec& d, double t) {
  if (!(t >= 0.0)) throw Error("shifted_diffusion: t must be >= 0");
  if (t > d.horizon) throw Error("shifted_diffusion: shift beyond the horizon");
  DiffusionSpec out = d;
  out.time_offset = d.time_offset + t;
  out.horizon = d.horizon - t;
  return out;
}

std::size_t TimeGrid::index_of(double t) const {
  const double s = (t - t0) / dt();
  const auto i = static_cast<long long>(std::llround(s));
  if (i < 0 || static_cast<std::size_t>(i) > steps || std::abs(s - static_cast<double>(i)) > 1e-9)
    throw Error("time " + format_double(t) + " is not a grid node");
  return static_cast<std::size_t>(i);
}

PathBundle::PathBundle(TimeGrid grid, std::size_t first_step, std::size_t last_step, std::size_t n_paths,
                       std::size_t dim, std::uint64_t seed, std::uint64_t stream)
    : grid_(grid), first_(first_step), last_(last_step), n_paths_(n_paths), dim_(dim), seed_(seed), stream_(stream) {
  if (!(grid.T > grid.t0)) throw Error("time grid: need T > t0");
  if (grid.steps < 1) throw Error("time grid: need at least one step");
  if (last_step <= first_step || last_step > grid.steps) throw Error("bundle: invalid step range");
  if (n_paths < 1) throw Error("bundle: need at least one path");
  if (dim < 1 || dim > 2) throw Error("bundle: state dimension must be 1 or 2");
  states_.assign(n_paths * (n_steps() + 1) * dim, 0.0);
  increments_.assign(n_paths * n_steps() * dim, 0.0);
}

std::vector<double> PathBundle::column(std::size_t local, std::size_t c) const {
  std::vector<double> out(n_paths_);
  for (std::size_t p = 0; p < n_paths_; ++p) out[p] = state(p, local, c);
  return out;
}

PathBundle simulate_from(const DiffusionSpec& d, std::span<const double> initial, const TimeGrid& grid,
                         std::size_t first_step, std::size_t last_step, std::size_t n_paths, std::uint64_t seed,
                         std::uint64_t stream) {
  if (!(grid.T > grid.t0)) throw Error("simulate: need T > t0");
  if (grid.steps < 1) throw Error("simulate: need N >= 1");
  if (n_paths < 1) throw Error("simulate: need n_paths >= 1");
  if (initial.size() != n_paths * d.dim) throw Error("simulate: initial states must be n_paths x dim");
  PathBundle b(grid, first_step, last_step, n_paths, d.dim, seed, stream);
  const NormalStream normals(seed, stream);
  const double dt = grid.dt();
  const double sqdt = std::sqrt(dt);
  const std::size_t dim = d.dim;
  std::vector<double> x(dim), next(dim), z;
  for (std::size_t p = 0; p < n_paths; ++p) {
    // Normals for global indices [first*dim, last*dim).
    const std::uint64_t lo = first_step * dim, hi = last_step * dim;
    z.assign(hi - lo, 0.0);
    for (std::uint64_t blk = lo / 2; 2 * blk < hi; ++blk) {
      const auto pr = normals.pair(p, blk);
      for (int r = 0; r < 2; ++r) {
        const std::uint64_t idx = 2 * blk + r;
        if (idx >= lo && idx < hi) z[idx - lo] = pr[r];
      }
    }
    for (std::size_t c = 0; c < dim; ++c) {
      x[c] = initial[p * dim + c];
      b.state(p, 0, c) = x[c];
    }
    for (std::size_t s = 0; s < b.n_steps(); ++s) {
      const double t = grid.time(first_step + s);
      for (std::size_t c = 0; c < dim; ++c) {
        const double dw = sqdt * z[s * dim + c];
        b.increment(p, s, c) = dw;
        next[c] = x[c] + d.mu(t, x, c) * dt + d.sigma(t, x, c) * dw;
      }
      for (std::size_t c = 0; c < dim; ++c) {
        if (!std::isfinite(next[c]))
          throw Error("simulate: non-finite state at step " + std::to_string(first_step + s + 1) + " (path " +
                      std::to_string(p) + "); check growth conditions or reduce the step size");
        x[c] = next[c];
        b.state(p, s + 1, c) = x[c];
      }
    }
  }
  return b;
}

PathBundle simulate(const DiffusionSpec& d, std::span<const double> x0, const TimeGrid& grid, std::size_t n_paths,
                    std::uint64_t seed, std::uint64_t stream) {
  if (x0.size() != d.dim) throw Error("simulate: initial state dimension mismatch");
  if (n_paths < 1) throw Error("simulate: need n_paths >= 1");
  std::vector<double> init(n_paths * d.dim);
  for (std::size_t p = 0; p < n_paths; ++p)
    for (std::size_t c = 0; c < d.dim; ++c) init[p * d.dim + c] = x0[c];
  return simulate_from(d, init, grid, 0, grid.steps, n_paths, seed, stream);
}

PathBundle simulate(const DiffusionSpec& d, double x0, const TimeGrid& grid, std::size_t n_paths,
                    std::uint64_t seed, std::uint64_t stream) {
  std::vector<double> init(d.dim, x0);
  return simulate(d, init, grid, n_paths, seed, stream);
}

PathBundle concatenate(const PathBundle& a, const PathBundle& b, double t, const std::vector<std::uint8_t>& mask) {
  if (!(a.grid() == b.grid()) || a.first_step() != b.first_step() || a.last_step() != b.last_step())
    throw Error("concatenate: bundles must share a time grid");
  if (a.n_paths() != b.n_paths() || a.dim() != b.dim()) throw Error("concatenate: bundle shapes differ");
  if (mask.size() != a.n_paths()) throw Error("concatenate: mask length must equal n_paths");
  const std::size_t global = a.grid().index_of(t);
  if (global < a.first_step() || global > a.last_step()) throw Error("concatenate: t outside the bundle range");
  const std::size_t k = global - a.first_step();

  PathBundle out(a.grid(), a.first_step(), a.last_step(), a.n_paths(), a.dim(), a.seed(), a.stream());
  for (std::size_t p = 0; p < a.n_paths(); ++p) {
    const bool keep = mask[p] != 0;
    for (std::size_t c = 0; c < a.dim(); ++c) {
      for (std::size_t j = 0; j <= a.n_steps(); ++j) {
        double v = a.state(p, j, c);
        if (!keep && j > k) v = a.state(p, k, c) + (b.state(p, j, c) - b.state(p, k, c));
        out.state(p, j, c) = v;
      }
      for (std::size_t j = 0; j < a.n_steps(); ++j)
        out.increment(p, j, c) = (keep || j < k) ? a.increment(p, j, c) : b.increment(p, j, c);
    }
  }
  return out;
}

std::vector<std::uint8_t> Partition::mask(std::size_t cell) const {
  std::vector<std::uint8_t> m(cell_of_path.size(), 0);
  for (std::size_t p : cells.at(cell).members) m[p] = 1;
  return m;
}

Partition step_approximation(std::span<const double> values, double spacing, StepDirection direction) {
  if (values.empty()) throw Error("step_approximation: empty input");
  if (!(spacing > 0.0)) throw Error("step_approximation: spacing must be > 0");
  std::map<double, std::vector<std::size_t>> groups;
  for (std::size_t p = 0; p < values.size(); ++p) {
    const double v = values[p];
    if (!std::isfinite(v)) throw Error("step_approximation: non-finite value");
    double level;
    if (direction == StepDirection::below) {
      double k = std::floor(v / spacing);
      while ((k + 1.0) * spacing <= v) k += 1.0;
      while (k * spacing > v) k -= 1.0;
      level = k * spacing;
    } else {
      level = std::round(v / spacing) * spacing;
    }
    groups[level].push_back(p);
  }
  Partition out;
  out.cell_of_path.assign(values.size(), 0);
  for (auto& [level, members] : groups) {
    for (std::size_t p : members) out.cell_of_path[p] = out.cells.size();
    out.cells.push_back({level, std::move(members)});
  }
  return out;
}

void write_bundle_csv(const PathBundle& b, std::ostream& out) {
  out << (b.dim() == 1 ? "path_id,t,x\n" : "path_id,t,x0,x1\n");
  for (std::size_t p = 0; p < b.n_paths(); ++p)
    for (std::size_t j = 0; j <= b.n_steps(); ++j) {
      out << p << ',' << format_double(b.time(j));
      for (std::size_t c = 0; c < b.dim(); ++c) out << ',' << format_double(b.state(p, j, c));
      out << '\n';
    }
}

std::string bundle_manifest_json(const PathBundle& b) {
  nlohmann::ordered_json j;
  j["seed"] = b.seed();
  j["stream"] = b.stream();
  j["grid"] = {{"t0", b.grid().t0},
               {"T", b.grid().T},
               {"steps", b.grid().steps},
               {"first_step", b.first_step()},
               {"last_step", b.last_step()}};
  j["n_paths"] = b.n_paths();
  j["dim"] = b.dim();
  auto moments = nlohmann::ordered_json::array();
  for (std::size_t c = 0; c < b.dim(); ++c) {
    const auto m = sample_moments(b.column(b.n_steps(), c));
    moments.push_back({{"component", c}, {"mean", m.mean}, {"variance", m.variance}, {"standard_error", m.standard_error()}});
  }
  j["terminal_moments"] = moments;
  return j.dump(2);
}

}  // namespace minsup::forward
