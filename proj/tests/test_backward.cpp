#include <doctest.h>

#include <cmath>
#include <sstream>

#include "minsup/backward.hpp"
#include "support/oracles.hpp"

using namespace minsup;
using namespace minsup::backward;

namespace {

PdeGridConfig coarse_grid() {
  PdeGridConfig cfg;
  cfg.x_lo = -4.0;
  cfg.x_hi = 4.0;
  cfg.dx = 0.05;
  return cfg;
}

ladder::LadderLevel level_of(const std::string& g, int n, const std::string& phi,
                             const std::map<std::string, double>& gp = {}) {
  return ladder::build_gn(make_generator(g, gp), n).with_terminal(make_terminal(phi));
}

/// Largest |u - exact| over the reporting window at every time level.
template <class F>
double window_error(const ValueSurface& s, F exact) {
  double worst = 0.0;
  for (std::size_t j = 0; j < s.n_times(); ++j) {
    const auto [first, last] = s.window_nodes(j);
    for (std::size_t i = first; i <= last; ++i)
      worst = std::max(worst, std::abs(s.at(j, i) - exact(s.times()[j], s.space().node(i))));
  }
  return worst;
}

}  // namespace

TEST_CASE("heat equation closed forms") {
  const forward::DiffusionSpec bm = forward::make_diffusion("brownian");
  const ValueSurface lin = solve_pde_level(level_of("zero", 8, "linear"), bm, coarse_grid());
  CHECK(window_error(lin, [](double, double x) { return x; }) <= 1e-8);
  const ValueSurface sq = solve_pde_level(level_of("zero", 16, "square"), bm, coarse_grid());
  CHECK(window_error(sq, [](double t, double x) { return x * x + (1.0 - t); }) <= 2e-3);
}

TEST_CASE("entropic level against the exponential transform") {
  PdeGridConfig cfg;
  const ValueSurface s =
      solve_pde_level(level_of("entropic", 8, "tanh"), forward::make_diffusion("brownian"), cfg);
  const double exact = oracle::entropic_tanh(0.0, 1.0);
  CHECK(exact == doctest::Approx(0.188926).epsilon(1e-5));
  CHECK(std::abs(s.evaluate(0.0, 0.0) - exact) <= 0.02);
  CHECK(std::abs(s.evaluate(0.5, 0.7) - oracle::entropic_tanh(0.7, 0.5)) <= 0.02);
}

TEST_CASE("solve_ladder convergence") {
  const forward::DiffusionSpec bm = forward::make_diffusion("brownian");
  LadderSolveOptions opts;
  opts.n_max = 16;
  const LadderSolve zero = solve_ladder(make_generator("zero"), make_terminal("tanh"), bm, coarse_grid(), opts);
  CHECK(zero.converged);
  CHECK(zero.levels_used == 1);
  const LadderSolve absz = solve_ladder(make_generator("abs-z"), make_terminal("tanh"), bm, coarse_grid(), opts);
  CHECK(absz.converged);
  CHECK(absz.levels_used == 1);
  const LadderSolve ent = solve_ladder(make_generator("entropic"), make_terminal("tanh"), bm, coarse_grid(), opts);
  CHECK(ent.converged);
  CHECK(ent.levels_used <= 16);
  for (double d : ent.decrease_all) CHECK(d <= 1e-12);
}

TEST_CASE("regression solver: martingale and ODE") {
  const forward::TimeGrid grid{0.0, 1.0, 20};
  const forward::PathBundle b = forward::simulate(forward::make_diffusion("brownian"), 0.3, grid, 20000, 12);
  const BSDEPathSolution mart = solve_bsde_mc(level_of("zero", 8, "linear"), b);
  CHECK(std::abs(mart.y0 - 0.3) <= 4.0 * mart.y0_se + 1e-12);
  for (std::size_t i = 1; i < mart.n_steps(); ++i)
    for (double x : {-0.5, 0.3, 1.0}) {
      const double xv[] = {x};
      CHECK(std::abs(mart.evaluate_y(i, xv) - x) <= 0.02);
    }

  // Y' = -Y backwards from tanh(x0): Y0 = tanh(x0) e^T.
  const forward::TimeGrid fine{0.0, 1.0, 1000};
  const forward::PathBundle still =
      forward::simulate(forward::make_diffusion("brownian", {{"sigma", 0.0}}), 0.5, fine, 1000, 3);
  const BSDEPathSolution ode = solve_bsde_mc(level_of("linear-y", 1, "tanh"), still);
  const double exact = std::tanh(0.5) * std::exp(1.0);
  CHECK(std::abs(ode.y0 - exact) <= 1e-3 * exact);
}

TEST_CASE("regression solver agrees with the FD surface") {
  const forward::DiffusionSpec bm = forward::make_diffusion("brownian");
  const ladder::LadderLevel lvl = level_of("entropic", 8, "tanh");
  PdeGridConfig cfg;
  const ValueSurface s = solve_pde_level(lvl, bm, cfg);
  const double trunc = pde_truncation_estimate(lvl, bm, cfg, 0.0, 0.0);
  const forward::PathBundle b = forward::simulate(bm, 0.0, forward::TimeGrid{0.0, 1.0, 50}, 50000, 21);
  RegressionConfig rc;
  rc.degree = 5;
  const BSDEPathSolution mc = solve_bsde_mc(lvl, b, rc);
  // Time discretization of the regression scheme adds O(dt) = 0.02 x |g| ~ 1e-3.
  CHECK(std::abs(mc.y0 - s.evaluate(0.0, 0.0)) <= 3.0 * (mc.y0_se + trunc) + 2e-3);
}

TEST_CASE("surface evaluation") {
  const ValueSurface s =
      solve_pde_level(level_of("zero", 1, "square"), forward::make_diffusion("brownian"), coarse_grid());
  const std::size_t j = s.n_times() / 2, i = s.n_space() / 2;
  CHECK(s.evaluate(s.times()[j], s.space().node(i)) == doctest::Approx(s.at(j, i)).epsilon(1e-14));
  // At T the attached terminal phi ∧ n is returned.
  CHECK(s.evaluate(1.0, 1.5) == 1.0);
  CHECK(s.evaluate(1.0, 0.5) == 0.25);
  CHECK_THROWS(s.evaluate(0.0, 3.9));
  CHECK_THROWS(s.time_index(0.123456789));

  std::ostringstream csv;
  write_surface_csv(s, csv);
  CHECK(csv.str().rfind("t,x,u\n", 0) == 0);
}

TEST_CASE("invalid configurations are rejected") {
  const forward::DiffusionSpec bm = forward::make_diffusion("brownian");
  PdeGridConfig cfg = coarse_grid();
  cfg.time_steps = 10;
  CHECK_THROWS_WITH_AS(solve_pde_level(level_of("entropic", 4, "tanh"), bm, cfg), doctest::Contains("CFL"), Error);
  CHECK_THROWS_AS(solve_pde_level(ladder::build_gn(make_generator("zero"), 1), bm, coarse_grid()), Error);
  CHECK_THROWS_AS(solve_ladder(make_generator("weighted-abs-z"), make_terminal("tanh"), bm, coarse_grid()), Error);
  CHECK_THROWS_AS(solve_ladder(make_generator("entropic"), make_terminal("linear"), bm, coarse_grid()), Error);
  PdeGridConfig bad = coarse_grid();
  bad.dx = 0.0;
  CHECK_THROWS_AS(cfl_for(bm, bad, 1), Error);
}

// Properties.

TEST_CASE("property: comparison in terminal and generator") {
  const forward::DiffusionSpec bm = forward::make_diffusion("brownian");
  for (int n : {1, 4}) {
    const ValueSurface lo = solve_pde_level(level_of("entropic", n, "tanh"), bm, coarse_grid());
    const ValueSurface hi_phi = solve_pde_level(level_of("entropic", n, "positive-part"), bm, coarse_grid());
    const ValueSurface hi_g = solve_pde_level(level_of("quadratic-z", n, "tanh"), bm, coarse_grid());
    // Linear continuation at the box edge is not a monotone boundary rule, so
    // the comparison is asserted on the reporting window.
    for (std::size_t j = 0; j < lo.n_times(); ++j) {
      const auto [first, last] = lo.window_nodes(j);
      for (std::size_t i = first; i <= last; ++i) {
        CHECK(lo.at(j, i) <= hi_phi.at(j, i) + 1e-12);
        CHECK(lo.at(j, i) <= hi_g.at(j, i) + 1e-12);
      }
    }
  }
}

TEST_CASE("property: levels increase, terminal rows are exact, lower bound holds") {
  const forward::DiffusionSpec bm = forward::make_diffusion("brownian", {{"mu", 0.2}});
  PdeGridConfig cfg = coarse_grid();
  cfg.cfl_level = 6;
  std::vector<ValueSurface> levels;
  for (int n = 1; n <= 6; ++n) levels.push_back(solve_pde_level(level_of("entropic", n, "tanh"), bm, cfg));
  for (std::size_t n = 0; n < levels.size(); ++n) {
    const ValueSurface& s = levels[n];
    const std::size_t last = s.n_times() - 1;
    for (std::size_t i = 0; i < s.n_space(); ++i) CHECK(s.at(last, i) == std::tanh(s.space().node(i)));
    for (double v : s.values()) CHECK(v >= -1.0 - 1e-12);
    if (n + 1 < levels.size())
      for (std::size_t k = 0; k < s.values().size(); ++k) CHECK(s.values()[k] <= levels[n + 1].values()[k] + 1e-12);
  }
}

TEST_CASE("property: zero data is a fixed point") {
  for (const std::string& d : {"brownian", "ou", "time-drift"}) {
    for (const std::string& g : {"zero", "abs-z", "entropic"}) {
      const ValueSurface s = solve_pde_level(level_of(g, 3, "zero"), forward::make_diffusion(d), coarse_grid());
      for (double v : s.values()) CHECK(v == 0.0);
    }
  }
}
