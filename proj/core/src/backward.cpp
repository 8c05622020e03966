#include "minsup/backward.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <json.hpp>
#include <ostream>

namespace minsup::backward {

namespace {

/// Solves y = a + dt * f(y) by fixed-point iteration, halving the step once
/// the update stops contracting.
template <class F>
double implicit_step(const F& f, double a, double dt, double y, int max_iter, double tol, std::size_t& iters) {
  double damping = 1.0;
  double prev_delta = kInf;
  for (int k = 0; k < max_iter; ++k) {
    const double target = a + dt * f(y);
    const double delta = std::abs(target - y);
    iters = std::max<std::size_t>(iters, static_cast<std::size_t>(k + 1));
    if (delta > prev_delta) damping = 0.5;
    y += damping * (target - y);
    if (delta <= tol * (1.0 + std::abs(y))) break;
    prev_delta = delta;
  }
  return y;
}

void validate(const PdeGridConfig& cfg) {
  if (!(cfg.dx > 0.0)) throw Error("pde grid: dx must be > 0");
  if (!(cfg.x_hi > cfg.x_lo)) throw Error("pde grid: need x_hi > x_lo");
  if (!(cfg.T > 0.0)) throw Error("pde grid: T must be > 0");
  if (!(cfg.cfl_target > 0.0 && cfg.cfl_target <= 1.0)) throw Error("pde grid: cfl_target must lie in (0, 1]");
  if (cfg.time_steps && *cfg.time_steps == 0) throw Error("pde grid: time_steps must be >= 1");
  if (!(cfg.window_sigmas >= 0.0)) throw Error("pde grid: window_sigmas must be >= 0");
}

}  // namespace

CflInfo cfl_for(const forward::DiffusionSpec& d, const PdeGridConfig& cfg, int n) {
  validate(cfg);
  if (d.dim != 1) throw Error("pde solver: state dimension 1 only");
  const Axis axis = make_axis(cfg.x_lo, cfg.x_hi, cfg.dx);
  const double h = axis.spacing();
  CflInfo info;
  constexpr int kTimeProbes = 64;
  for (int k = 0; k <= kTimeProbes; ++k) {
    const double t = cfg.T * k / kTimeProbes;
    for (std::size_t i = 0; i < axis.count; ++i) {
      const double x = axis.node(i);
      info.sigma_max = std::max(info.sigma_max, std::abs(d.sigma(t, x)));
      info.mu_max = std::max(info.mu_max, std::abs(d.mu(t, x)));
    }
  }
  const double nn = static_cast<double>(std::max(n, cfg.cfl_level));
  const double rate = info.sigma_max * info.sigma_max / (h * h) + info.mu_max / h +
                      nn * (1.0 + info.sigma_max) / std::min(h, 1.0);
  info.max_dt = rate > 0.0 ? 1.0 / rate : cfg.T;
  if (cfg.time_steps) {
    info.steps = *cfg.time_steps;
    info.dt = cfg.T / static_cast<double>(info.steps);
    if (info.dt > info.max_dt * (1.0 + 1e-12))
      throw Error("CFL condition violated: dt = " + format_double(info.dt) +
                  " exceeds the max admissible dt = " + format_double(info.max_dt));
  } else {
    info.steps = static_cast<std::size_t>(std::ceil(cfg.T / (cfg.cfl_target * info.max_dt) - 1e-12));
    info.steps = std::max<std::size_t>(info.steps, 1);
    info.dt = cfg.T / static_cast<double>(info.steps);
  }
  info.ratio = info.dt / info.max_dt;
  return info;
}

ValueSurface::ValueSurface(std::vector<double> times, Axis space, double window_width_scale, std::optional<int> level,
                           double cfl_ratio)
    : times_(std::move(times)), space_(space), window_scale_(window_width_scale), level_(level), cfl_ratio_(cfl_ratio) {
  if (times_.size() < 2) throw Error("ValueSurface: need at least two time levels");
  values_.assign(times_.size() * space_.count, 0.0);
}

std::size_t ValueSurface::time_index(double t) const {
  const double steps = static_cast<double>(times_.size() - 1);
  const double s = t / T() * steps;
  const double j = std::round(s);
  if (j < 0.0 || j > steps || std::abs(s - j) > 1e-9)
    throw Error("time " + format_double(t) + " is not a level of the surface grid");
  return static_cast<std::size_t>(j);
}

std::pair<double, double> ValueSurface::window(double t) const {
  const double shrink = window_scale_ * std::sqrt(std::max(0.0, T() - t));
  return {space_.lo + shrink, space_.hi - shrink};
}

bool ValueSurface::in_window(double t, double x) const {
  if (!(t >= 0.0 && t <= T())) return false;
  const auto [lo, hi] = window(t);
  const double slack = 1e-12 * (space_.hi - space_.lo);
  return x >= lo - slack && x <= hi + slack;
}

std::pair<std::size_t, std::size_t> ValueSurface::window_nodes(std::size_t j) const {
  const auto [lo, hi] = window(times_.at(j));
  const double h = space_.spacing();
  const double slack = 1e-9 * h;
  const auto first = static_cast<std::size_t>(std::max(0.0, std::ceil((lo - space_.lo - slack) / h)));
  auto last = static_cast<std::size_t>(std::max(0.0, std::floor((hi - space_.lo + slack) / h)));
  last = std::min(last, space_.count - 1);
  if (first > last) throw Error("reporting window is empty at t = " + format_double(times_[j]) + "; enlarge the box");
  return {first, last};
}

double ValueSurface::evaluate(double t, double x) const {
  if (!in_window(t, x))
    throw Error("point (" + format_double(t) + ", " + format_double(x) + ") lies outside the reporting window");
  if (t == T() && terminal_) return (*terminal_)(x);
  const std::size_t m = times_.size() - 1;
  const double s = t / T() * static_cast<double>(m);
  std::size_t j = std::min(static_cast<std::size_t>(std::floor(s)), m - 1);
  double wt = s - static_cast<double>(j);
  if (std::abs(wt) < 1e-12) wt = 0.0;
  if (std::abs(wt - 1.0) < 1e-12) wt = 1.0;

  const double h = space_.spacing();
  std::size_t i = static_cast<std::size_t>(std::clamp(std::floor((x - space_.lo) / h), 0.0,
                                                      static_cast<double>(space_.count - 2)));
  if (x < space_.node(i) && i > 0) --i;
  if (i + 2 < space_.count && x >= space_.node(i + 1)) ++i;
  double wx = (x - space_.node(i)) / h;
  wx = std::clamp(wx, 0.0, 1.0);

  auto at_level = [&](std::size_t jj) {
    const double a = at(jj, i), b = at(jj, i + 1);
    if (wx == 0.0) return a;
    if (wx == 1.0) return b;
    return (1.0 - wx) * a + wx * b;
  };
  if (wt == 0.0) return at_level(j);
  if (wt == 1.0) return at_level(j + 1);
  return (1.0 - wt) * at_level(j) + wt * at_level(j + 1);
}

ValueSurface solve_pde_level(const ladder::LadderLevel& level, const forward::DiffusionSpec& d,
                             const PdeGridConfig& cfg) {
  if (!level.terminal()) throw Error("solve_pde_level: the ladder level carries no terminal function");
  const CflInfo cfl = cfl_for(d, cfg, level.n());
  const Axis axis = make_axis(cfg.x_lo, cfg.x_hi, cfg.dx);
  const std::size_t m = cfl.steps;
  std::vector<double> times(m + 1);
  for (std::size_t j = 0; j <= m; ++j) times[j] = cfg.T * static_cast<double>(j) / static_cast<double>(m);
  times[m] = cfg.T;

  ValueSurface s(std::move(times), axis, cfg.window_sigmas * cfl.sigma_max, level.n(), cfl.ratio);
  s.set_terminal(*level.terminal());
  s.window_nodes(0);

  const TerminalSpec& phi = *level.terminal();
  const std::size_t nx = axis.count;
  {
    auto last = s.row(m);
    for (std::size_t i = 0; i < nx; ++i) {
      last[i] = phi(axis.node(i));
      if (!std::isfinite(last[i]))
        throw Error("solve_pde_level: non-finite terminal value at node " + std::to_string(i));
    }
  }

  const double h = axis.spacing();
  const double dt = cfl.dt;
  const bool y_dependent = level.generator().depends_on_y();
  const std::optional<double> floor = cfg.generator_floor;
  auto gen = [&](double x, double y, double z) {
    const double v = level(x, y, z);
    return floor ? std::max(v, *floor) : v;
  };

  std::size_t iters = 0;
  for (std::size_t jj = m; jj-- > 0;) {
    const auto next = s.row(jj + 1);
    auto cur = s.row(jj);
    const double t = s.times()[jj];
    for (std::size_t i = 1; i + 1 < nx; ++i) {
      const double x = axis.node(i);
      const double mu = d.mu(t, x);
      const double sigma = d.sigma(t, x);
      const double vm = next[i - 1], v0 = next[i], vp = next[i + 1];
      const double central = (vp - vm) / (2.0 * h);
      const double second = (vp - 2.0 * v0 + vm) / (h * h);
      double drift_grad = central;
      if (std::abs(mu) * h > sigma * sigma) drift_grad = mu > 0.0 ? (vp - v0) / h : (v0 - vm) / h;
      const double a = v0 + dt * (mu * drift_grad + 0.5 * sigma * sigma * second);
      const double z = sigma * central;
      double y;
      if (y_dependent) {
        y = implicit_step([&](double yy) { return gen(x, yy, z); }, a, dt, a + dt * gen(x, v0, z), 50, 1e-15, iters);
      } else {
        y = a + dt * gen(x, v0, z);
      }
      if (!std::isfinite(y))
        throw Error("solve_pde_level: non-finite value at (j, i) = (" + std::to_string(jj) + ", " +
                    std::to_string(i) + ")");
      cur[i] = y;
    }
    cur[0] = 2.0 * cur[1] - cur[2];
    cur[nx - 1] = 2.0 * cur[nx - 2] - cur[nx - 3];
    if (!std::isfinite(cur[0]) || !std::isfinite(cur[nx - 1]))
      throw Error("solve_pde_level: non-finite boundary value at j = " + std::to_string(jj));
  }
  return s;
}

double pde_truncation_estimate(const ladder::LadderLevel& level, const forward::DiffusionSpec& d,
                               const PdeGridConfig& cfg, double t, double x) {
  PdeGridConfig coarse = cfg;
  coarse.dx = 2.0 * cfg.dx;
  const ValueSurface fine_s = solve_pde_level(level, d, cfg);
  const ValueSurface coarse_s = solve_pde_level(level, d, coarse);
  return std::abs(fine_s.evaluate(t, x) - coarse_s.evaluate(t, x));
}

namespace {

bool identically_zero(const GeneratorSpec& g) {
  if (!g.closed_form) return false;
  using K = ConvexTerm::Kind;
  const auto zero = [](const ConvexTerm& c) { return c.kind == K::zero || c.coef == 0.0; };
  return zero(g.closed_form->x) && zero(g.closed_form->y) && zero(g.closed_form->z);
}

}  // namespace

LadderSolve solve_ladder(const GeneratorSpec& g, const TerminalSpec& phi, const forward::DiffusionSpec& d,
                         const PdeGridConfig& cfg, const LadderSolveOptions& opts) {
  if (opts.n_first < 1 || opts.n_max < opts.n_first) throw Error("solve_ladder: need 1 <= n_first <= n_max");
  if (!(opts.tol > 0.0)) throw Error("solve_ladder: tol must be > 0");
  if (!g.flags.convex_xyz) throw Error("ladder requires jointly convex generator");
  if (!(phi.lower_bound > -kInf) && !identically_zero(g))
    throw Error("solve_ladder: terminal function must be bounded below");

  PdeGridConfig shared = cfg;
  shared.cfl_level = std::max(cfg.cfl_level, opts.n_max);

  LadderSolve out;
  out.cfl = cfl_for(d, shared, opts.n_max);
  std::optional<ValueSurface> prev;
  for (int n = opts.n_first; n <= opts.n_max; ++n) {
    const ladder::LadderLevel level = ladder::build_gn(g, n, opts.ladder).with_terminal(phi);
    ValueSurface cur = solve_pde_level(level, d, shared);
    if (prev) {
      double gap = 0.0, dec_all = 0.0, dec_win = 0.0;
      for (std::size_t j = 0; j < cur.n_times(); ++j) {
        const auto [first, last] = cur.window_nodes(j);
        for (std::size_t i = 0; i < cur.n_space(); ++i) {
          const double diff = cur.at(j, i) - prev->at(j, i);
          dec_all = std::max(dec_all, -diff);
          if (i >= first && i <= last) {
            dec_win = std::max(dec_win, -diff);
            gap = std::max(gap, std::abs(diff));
          }
        }
      }
      out.gaps.push_back(gap);
      out.decrease_all.push_back(dec_all);
      out.decrease_window.push_back(dec_win);
      if (dec_win > 1e-9)
        throw Error("solve_ladder: u_" + std::to_string(n) + " falls below u_" + std::to_string(n - 1) + " by " +
                    format_double(dec_win) + " on the reporting window");
      if (gap <= opts.tol) {
        out.converged = true;
        out.levels_used = n - 1;
        out.surface = std::move(*prev);
        return out;
      }
    }
    prev = std::move(cur);
  }
  out.levels_used = opts.n_max;
  if (opts.n_first == opts.n_max) {
    // A single requested level is a fixed-level solve, not a ladder run.
    out.converged = true;
    out.surface = std::move(*prev);
    return out;
  }
  out.surface = std::move(*prev);
  out.warnings.push_back("ladder did not converge to tol " + format_double(opts.tol) + " by n_max = " +
                         std::to_string(opts.n_max));
  return out;
}

namespace {

std::size_t basis_size(int degree) { return static_cast<std::size_t>(degree) + 1; }

void fill_basis(const RegressionFit& fit, double x, int degree, double* out) {
  const double s = (x - fit.mean[0]) / fit.scale[0];
  double p = 1.0;
  for (int k = 0; k <= degree; ++k) {
    out[k] = p;
    p *= s;
  }
}

double dot(const std::vector<double>& c, const double* b) {
  double acc = 0.0;
  for (std::size_t k = 0; k < c.size(); ++k) acc += c[k] * b[k];
  return acc;
}

constexpr std::size_t kChunk = 4096;

/// Least-squares fit of targets on the polynomial basis of xs over `members`.
RegressionFit fit_regression(const std::vector<double>& xs, const std::vector<double>& y_target,
                             const std::vector<double>& z_target, const std::vector<std::size_t>& members,
                             const RegressionConfig& cfg, double dt, std::size_t step) {
  RegressionFit fit;
  const std::size_t n = members.size();
  if (n == 0) throw Error("regression at step " + std::to_string(step) + " has no paths");
  std::vector<double> xv(n);
  for (std::size_t k = 0; k < n; ++k) xv[k] = xs[members[k]];
  const SampleMoments mx = sample_moments(xv);
  fit.mean = {mx.mean};
  const double sd = std::sqrt(std::max(mx.variance, 0.0));
  fit.scale = {sd > 0.0 ? sd : 1.0};

  const std::size_t kb = basis_size(cfg.degree);
  if (!(sd > 1e-12 * (1.0 + std::abs(mx.mean)))) {
    // Degenerate state: the conditional expectation is the plain mean.
    fit.constant_only = true;
    std::vector<double> yv(n), zv(n);
    for (std::size_t k = 0; k < n; ++k) {
      yv[k] = y_target[members[k]];
      zv[k] = z_target[members[k]];
    }
    fit.y_coef = {pairwise_sum(yv) / static_cast<double>(n)};
    fit.z_coef = {pairwise_sum(zv) / static_cast<double>(n) / dt};
    return fit;
  }
  if (n < kb)
    throw Error("singular regression design at step " + std::to_string(step) + " (" + std::to_string(n) +
                " paths for " + std::to_string(kb) + " basis functions); increase n_paths");

  const std::size_t chunks = (n + kChunk - 1) / kChunk;
  std::vector<Eigen::MatrixXd> partial_a(chunks, Eigen::MatrixXd::Zero(kb, kb));
  std::vector<Eigen::MatrixXd> partial_b(chunks, Eigen::MatrixXd::Zero(kb, 2));
  parallel_for(
      chunks,
      [&](std::size_t c) {
        std::vector<double> phi(kb);
        auto& a = partial_a[c];
        auto& b = partial_b[c];
        const std::size_t end = std::min(n, (c + 1) * kChunk);
        for (std::size_t k = c * kChunk; k < end; ++k) {
          const std::size_t p = members[k];
          fill_basis(fit, xs[p], cfg.degree, phi.data());
          for (std::size_t r = 0; r < kb; ++r) {
            for (std::size_t q = 0; q < kb; ++q) a(r, q) += phi[r] * phi[q];
            b(r, 0) += phi[r] * y_target[p];
            b(r, 1) += phi[r] * z_target[p];
          }
        }
      },
      cfg.threads);
  Eigen::MatrixXd a = Eigen::MatrixXd::Zero(kb, kb);
  Eigen::MatrixXd b = Eigen::MatrixXd::Zero(kb, 2);
  for (std::size_t c = 0; c < chunks; ++c) {
    a += partial_a[c];
    b += partial_b[c];
  }
  a /= static_cast<double>(n);
  b /= static_cast<double>(n);
  a += cfg.ridge * Eigen::MatrixXd::Identity(kb, kb);
  const Eigen::LDLT<Eigen::MatrixXd> ldlt(a);
  if (ldlt.info() != Eigen::Success || ldlt.rcond() < 1e-14)
    throw Error("singular regression design at step " + std::to_string(step) + "; increase n_paths");
  const Eigen::MatrixXd coef = ldlt.solve(b);
  fit.y_coef.resize(kb);
  fit.z_coef.resize(kb);
  for (std::size_t r = 0; r < kb; ++r) {
    fit.y_coef[r] = coef(r, 0);
    fit.z_coef[r] = coef(r, 1) / dt;
  }
  return fit;
}

}  // namespace

std::vector<double> BSDEPathSolution::y_column(std::size_t i) const {
  return {Y.begin() + static_cast<std::ptrdiff_t>(i * n_paths),
          Y.begin() + static_cast<std::ptrdiff_t>((i + 1) * n_paths)};
}

std::vector<double> BSDEPathSolution::pathwise_column(std::size_t i) const {
  return {pathwise.begin() + static_cast<std::ptrdiff_t>(i * n_paths),
          pathwise.begin() + static_cast<std::ptrdiff_t>((i + 1) * n_paths)};
}

double BSDEPathSolution::evaluate_y(std::size_t i, std::span<const double> x, std::uint32_t label) const {
  if (i >= n_steps()) throw Error("evaluate_y: step index out of range");
  if (x.size() != dim) throw Error("evaluate_y: state dimension mismatch");
  std::size_t cell = 0;
  if (!labels.empty() && i >= labels_from_step) cell = label;
  if (cell >= fits[i].size() || fits[i][cell].y_coef.empty()) throw Error("evaluate_y: no regression for this label");
  const RegressionFit& fit = fits[i][cell];
  std::vector<double> phi(basis_size(degree));
  fill_basis(fit, x[0], degree, phi.data());
  const double e = fit.constant_only ? fit.y_coef[0] : dot(fit.y_coef, phi.data());
  const double z = fit.constant_only ? fit.z_coef[0] : dot(fit.z_coef, phi.data());
  const double dt = grid.dt();
  std::size_t iters = 0;
  return implicit_step([&](double yy) { return level(x[0], yy, z); }, e, dt, e + dt * level(x[0], e, z), 50, 1e-13,
                       iters);
}

BSDEPathSolution solve_bsde_mc(const ladder::LadderLevel& level, const forward::PathBundle& bundle,
                               const RegressionConfig& cfg) {
  if (!level.terminal()) throw Error("solve_bsde_mc: the ladder level carries no terminal function");
  if (bundle.dim() != 1) throw Error("solve_bsde_mc: state dimension 1 only");
  if (bundle.last_step() != bundle.grid().steps) throw Error("solve_bsde_mc: bundle must reach the terminal time");
  if (cfg.degree < 1) throw Error("solve_bsde_mc: basis size must be >= 2 (degree >= 1)");
  if (cfg.max_fixed_point < 1 || cfg.max_fixed_point > 50) throw Error("solve_bsde_mc: max_fixed_point must lie in [1, 50]");
  const double dt = bundle.grid().dt();
  if (level.lipschitz_bound() * dt >= 1.0) throw Error("implicit step not contractive (n * dt >= 1)");
  if (!cfg.labels.empty() && cfg.labels.size() != bundle.n_paths())
    throw Error("solve_bsde_mc: labels must have one entry per path");

  const std::size_t np = bundle.n_paths();
  const std::size_t ns = bundle.n_steps();
  BSDEPathSolution sol;
  sol.grid = bundle.grid();
  sol.first_step = bundle.first_step();
  sol.n_paths = np;
  sol.dim = 1;
  sol.degree = cfg.degree;
  sol.labels = cfg.labels;
  sol.labels_from_step = cfg.labels_from_step;
  sol.level = level;
  sol.Y.assign((ns + 1) * np, 0.0);
  sol.Z.assign(ns * np, 0.0);
  sol.pathwise.assign((ns + 1) * np, 0.0);
  sol.fits.assign(ns, {});

  const TerminalSpec& phi = *level.terminal();
  for (std::size_t p = 0; p < np; ++p) {
    const double v = phi(bundle.state(p, ns));
    if (!std::isfinite(v)) throw Error("solve_bsde_mc: non-finite terminal value on path " + std::to_string(p));
    sol.Y[ns * np + p] = v;
    sol.pathwise[ns * np + p] = v;
  }

  std::uint32_t n_labels = 0;
  for (std::uint32_t l : cfg.labels) n_labels = std::max(n_labels, l + 1);
  std::vector<std::vector<std::size_t>> label_members(n_labels);
  for (std::size_t p = 0; p < cfg.labels.size(); ++p) label_members[cfg.labels[p]].push_back(p);
  std::vector<std::size_t> all(np);
  for (std::size_t p = 0; p < np; ++p) all[p] = p;

  std::vector<double> xs(np), y_target(np), z_target(np);
  std::vector<std::size_t> iter_counts((np + kChunk - 1) / kChunk, 0);
  for (std::size_t i = ns; i-- > 0;) {
    for (std::size_t p = 0; p < np; ++p) {
      xs[p] = bundle.state(p, i);
      y_target[p] = sol.Y[(i + 1) * np + p];
      z_target[p] = y_target[p] * bundle.increment(p, i);
    }
    const bool labeled = !cfg.labels.empty() && i >= cfg.labels_from_step;
    std::vector<std::uint32_t> cell_of(np, 0);
    const auto fit_cells = [&] {
      if (labeled) {
        sol.fits[i].assign(n_labels, {});
        for (std::uint32_t l = 0; l < n_labels; ++l)
          if (!label_members[l].empty())
            sol.fits[i][l] = fit_regression(xs, y_target, z_target, label_members[l], cfg, dt, i);
      } else {
        sol.fits[i] = {fit_regression(xs, y_target, z_target, all, cfg, dt, i)};
      }
    };
    if (labeled) cell_of = cfg.labels;
    fit_cells();
    // Second pass: centring Y_{i+1} on its fitted conditional mean leaves
    // E[Y_{i+1} dW | X_i] unchanged but removes the O(Y^2 / dt) variance that
    // the convex generator would turn into an upward bias.
    parallel_for(
        iter_counts.size(),
        [&](std::size_t c) {
          std::vector<double> basis(basis_size(cfg.degree));
          const std::size_t end = std::min(np, (c + 1) * kChunk);
          for (std::size_t p = c * kChunk; p < end; ++p) {
            const RegressionFit& fit = sol.fits[i][cell_of[p]];
            fill_basis(fit, xs[p], cfg.degree, basis.data());
            const double e = fit.constant_only ? fit.y_coef[0] : dot(fit.y_coef, basis.data());
            z_target[p] = (y_target[p] - e) * bundle.increment(p, i);
          }
        },
        cfg.threads);
    fit_cells();

    parallel_for(
        iter_counts.size(),
        [&](std::size_t c) {
          std::vector<double> basis(basis_size(cfg.degree));
          const std::size_t end = std::min(np, (c + 1) * kChunk);
          for (std::size_t p = c * kChunk; p < end; ++p) {
            const RegressionFit& fit = sol.fits[i][cell_of[p]];
            const double x = xs[p];
            fill_basis(fit, x, cfg.degree, basis.data());
            const double e = fit.constant_only ? fit.y_coef[0] : dot(fit.y_coef, basis.data());
            const double z = fit.constant_only ? fit.z_coef[0] : dot(fit.z_coef, basis.data());
            const double y = implicit_step([&](double yy) { return level(x, yy, z); }, e, dt, e + dt * level(x, e, z),
                                           cfg.max_fixed_point, cfg.fixed_point_tol, iter_counts[c]);
            if (!std::isfinite(y))
              throw Error("solve_bsde_mc: non-finite Y at step " + std::to_string(i) + ", path " + std::to_string(p));
            sol.Y[i * np + p] = y;
            sol.Z[i * np + p] = z;
            sol.pathwise[i * np + p] = sol.pathwise[(i + 1) * np + p] + dt * level(x, y, z);
          }
        },
        cfg.threads);
  }
  for (std::size_t c : iter_counts) sol.max_fixed_point_iterations = std::max(sol.max_fixed_point_iterations, c);
  const SampleMoments m = sample_moments(sol.pathwise_column(0));
  sol.y0 = m.mean;
  sol.y0_se = m.standard_error();
  return sol;
}

void write_surface_csv(const ValueSurface& s, std::ostream& out, bool full_grid) {
  out << "t,x,u\n";
  // At most ~100 time levels are exported; the solver keeps the full grid.
  const std::size_t m = s.n_times() - 1;
  const std::size_t stride = std::max<std::size_t>(1, (m + 99) / 100);
  for (std::size_t j = 0; j <= m; ++j) {
    if (j % stride != 0 && j != m) continue;
    std::size_t first = 0, last = s.n_space() - 1;
    if (!full_grid) std::tie(first, last) = s.window_nodes(j);
    for (std::size_t i = first; i <= last; ++i)
      out << format_double(s.times()[j]) << ',' << format_double(s.space().node(i)) << ','
          << format_double(s.at(j, i)) << '\n';
  }
}

std::string solver_manifest_json(const std::string& generator, const LadderSolve& solve, double tol,
                                 std::optional<double> wall_time) {
  nlohmann::ordered_json j;
  j["generator"] = generator;
  j["levels_used"] = solve.levels_used;
  j["converged"] = solve.converged;
  j["cfl_ratio"] = solve.cfl.ratio;
  j["time_steps"] = solve.cfl.steps;
  j["boundary_policy"] = kBoundaryPolicy;
  j["tolerances"] = {{"ladder_tol", tol}, {"monotonicity", 1e-9}};
  j["gaps"] = solve.gaps;
  j["max_decrease_window"] =
      solve.decrease_window.empty() ? 0.0 : *std::max_element(solve.decrease_window.begin(), solve.decrease_window.end());
  j["warnings"] = solve.warnings;
  if (wall_time)
    j["wall_time"] = *wall_time;
  else
    j["wall_time"] = nullptr;
  return j.dump(2);
}

}  // namespace minsup::backward
