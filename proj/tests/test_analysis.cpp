#include <doctest.h>

#include <cmath>
#include <random>
#include <sstream>

#include "minsup/analysis.hpp"

using namespace minsup;
using namespace minsup::analysis;

namespace {

/// Surface sampled from a closed form on [0, 1] x [-2, 2] with a full-box window.
template <class F>
backward::ValueSurface sampled_surface(F u, std::size_t n_times = 41, std::size_t n_space = 81) {
  std::vector<double> times(n_times);
  for (std::size_t j = 0; j < n_times; ++j) times[j] = static_cast<double>(j) / static_cast<double>(n_times - 1);
  backward::ValueSurface s(times, Axis{-2.0, 2.0, n_space}, 0.0, std::nullopt, 1.0);
  for (std::size_t j = 0; j < n_times; ++j)
    for (std::size_t i = 0; i < n_space; ++i) s.at(j, i) = u(times[j], s.space().node(i));
  return s;
}

backward::PdeGridConfig coarse_grid() {
  backward::PdeGridConfig cfg;
  cfg.x_lo = -4.0;
  cfg.x_hi = 4.0;
  cfg.dx = 0.05;
  return cfg;
}

GeneratorFn as_fn(const GeneratorSpec& g) {
  return [g](double x, double y, double z) { return g(x, y, z); };
}

}  // namespace

TEST_CASE("viscosity residual on closed-form surfaces") {
  const forward::DiffusionSpec bm = forward::make_diffusion("brownian");
  const auto heat = sampled_surface([](double t, double x) { return x * x + (1.0 - t); });
  CHECK(max_abs_residual(heat, as_fn(make_generator("zero")), bm) <= 1e-9);
  CHECK(viscosity_residual(heat, as_fn(make_generator("zero")), bm).verdict == Verdict::pass);

  // g = z^2/2, phi = x: u = x + (T - t)/2.
  const auto ent = sampled_surface([](double t, double x) { return x + 0.5 * (1.0 - t); });
  CHECK(max_abs_residual(ent, as_fn(make_generator("entropic")), bm) <= 1e-9);

  // Too slow a time decay leaves R = -1/2 everywhere.
  const auto slow = sampled_surface([](double t, double x) { return x * x + 0.5 * (1.0 - t); });
  const CheckReport bad = viscosity_residual(slow, as_fn(make_generator("zero")), bm);
  CHECK(bad.verdict == Verdict::fail);
  CHECK(*bad.get("min_residual") == doctest::Approx(-0.5).epsilon(1e-9));
}

TEST_CASE("lower semicontinuity flags raised nodes only") {
  const auto smooth = sampled_surface([](double, double x) { return std::sin(x); });
  CHECK(check_lsc(smooth, 0.0).verdict == Verdict::pass);
  CHECK(check_lsc(smooth, 0.5).verdict == Verdict::pass);

  auto raised = smooth;
  raised.at(20, 40) += 1.0;
  const CheckReport r = check_lsc(raised, 0.5);
  CHECK(r.verdict == Verdict::fail);
  CHECK(*r.get("first_violation_x") == doctest::Approx(0.0));
  CHECK(check_lsc(raised, 0.0).verdict == Verdict::pass);

  auto lowered = smooth;
  lowered.at(20, 40) -= 1.0;
  CHECK(check_lsc(lowered, 0.5).verdict == Verdict::pass);
}

TEST_CASE("monotone limit examples") {
  const Axis z{-1.0, 1.0, 201};
  convexlab::EpiSequence constant;
  for (int n = 1; n <= 200; ++n) constant.members.push_back(GridFunction::sample(z, [](double v) { return v * v; }));
  const CheckReport c = monotone_limit_check(constant);
  CHECK(c.verdict == Verdict::pass);
  CHECK(*c.get("sup_gap") == 0.0);

  convexlab::EpiSequence rising;
  for (int n = 1; n <= 200; ++n)
    rising.members.push_back(GridFunction::sample(z, [n](double v) { return (1.0 - 1.0 / n) * v * v; }));
  CHECK(monotone_limit_check(rising).verdict == Verdict::pass);

  convexlab::EpiSequence falling;
  for (int n = 1; n <= 5; ++n)
    falling.members.push_back(GridFunction::sample(z, [n](double v) { return v * v / n; }));
  CHECK_THROWS_AS(monotone_limit_check(falling), Error);
}

TEST_CASE("stability with a constant sequence") {
  StabilityConfig cfg;
  cfg.grid = coarse_grid();
  cfg.ladder.n_max = 4;
  const std::vector<double> xs(16, 0.3);
  const forward::DiffusionSpec bm = forward::make_diffusion("brownian");
  const CheckReport r = check_stability(make_generator("abs-z"), make_terminal("tanh"), bm, 0.3, xs, cfg);
  CHECK(r.verdict == Verdict::pass);
  CHECK(std::abs(*r.get("min_tail_gap")) <= 1e-12);

  cfg.rec_established = false;
  CHECK(check_stability(make_generator("abs-z"), make_terminal("tanh"), bm, 0.3, xs, cfg).verdict ==
        Verdict::inconclusive);
}

TEST_CASE("locality with identical dynamics and the full event") {
  LocalityConfig cfg;
  cfg.grid = forward::TimeGrid{0.0, 1.0, 20};
  cfg.n_paths = 20000;
  cfg.seed = 4;
  const forward::DiffusionSpec bm = forward::make_diffusion("brownian");
  const CheckReport r = check_locality(make_generator("entropic"), make_terminal("tanh"), bm, bm, 0.5,
                                       event_always(), cfg);
  CHECK(r.verdict == Verdict::pass);
  CHECK(*r.get("mask_fraction") == 1.0);
}

TEST_CASE("Markov identity at the terminal time and for the heat equation") {
  MarkovConfig cfg;
  cfg.grid = coarse_grid();
  cfg.ladder.n_max = 8;
  cfg.n_paths = 20000;
  cfg.mc_grid = forward::TimeGrid{0.0, 1.0, 20};
  cfg.seed = 5;
  const forward::DiffusionSpec bm = forward::make_diffusion("brownian");
  const CheckReport at_t = check_markov_identity(make_generator("entropic"), make_terminal("tanh"), bm, 1.0, cfg);
  CHECK(at_t.verdict == Verdict::pass);
  CHECK(std::abs(*at_t.get("mean_difference")) <= 1e-12);

  cfg.ladder.n_first = cfg.ladder.n_max = 16;
  const CheckReport heat = check_markov_identity(make_generator("zero"), make_terminal("square"), bm, 0.5, cfg);
  CHECK(heat.verdict == Verdict::pass);
}

TEST_CASE("shift identity at t = 0") {
  ShiftConfig cfg;
  cfg.grid = coarse_grid();
  cfg.ladder.n_max = 8;
  const CheckReport r = check_shift_identity(make_generator("entropic"), make_terminal("tanh"),
                                             forward::make_diffusion("time-drift"), 0.0, 0.2, cfg);
  CHECK(r.verdict == Verdict::pass);
  CHECK(*r.get("gap") <= 1e-12);
}

TEST_CASE("reports serialize and combine") {
  CheckReport a;
  a.name = "x";
  a.verdict = Verdict::pass;
  a.add("gap", 0.5);
  CheckReport b = a;
  b.verdict = Verdict::inconclusive;
  CheckReport c = a;
  c.verdict = Verdict::fail;
  CHECK(combine({a, a}) == Verdict::pass);
  CHECK(combine({a, b}) == Verdict::inconclusive);
  CHECK(combine({b, c, a}) == Verdict::fail);
  CHECK(report_json(a).find("\"gap\"") != std::string::npos);
  std::ostringstream csv;
  write_summary_csv({a}, csv);
  CHECK(csv.str().rfind("check,scenario,verdict,max_gap,tolerance\n", 0) == 0);
  CHECK(to_string(Verdict::inconclusive) == "inconclusive");
}

// Properties.

TEST_CASE("property: the discrete jet is exact on quadratics") {
  std::mt19937_64 rng(17);
  std::uniform_real_distribution<double> u(-2.0, 2.0);
  for (int trial = 0; trial < 20; ++trial) {
    const double a = u(rng), b = u(rng), c = u(rng), d = u(rng);
    const auto s = sampled_surface([=](double t, double x) { return a * t + b * x * x + c * x + d; });
    for (std::size_t j = 1; j + 1 < s.n_times(); j += 7)
      for (std::size_t i = 2; i + 2 < s.n_space(); i += 9) {
        const DiscreteJet jet = discrete_jet(s, j, i);
        CHECK(jet.a == doctest::Approx(a).epsilon(1e-9));
        CHECK(jet.p == doctest::Approx(2.0 * b * jet.x + c).epsilon(1e-9));
        CHECK(jet.M == doctest::Approx(2.0 * b).epsilon(1e-9));
      }
  }
  const auto s = sampled_surface([](double, double x) { return x; });
  CHECK_THROWS_AS(discrete_jet(s, 0, 10), Error);
  CHECK_THROWS_AS(discrete_jet(s, 10, 0), Error);
}

TEST_CASE("property: residuals ignore constant shifts when g does not see y") {
  std::mt19937_64 rng(23);
  std::uniform_real_distribution<double> u(-3.0, 3.0);
  const forward::DiffusionSpec ou = forward::make_diffusion("ou");
  for (const std::string& name : {"zero", "abs-z", "entropic"}) {
    const GeneratorFn g = as_fn(make_generator(name));
    for (int trial = 0; trial < 5; ++trial) {
      const double shift = u(rng);
      const auto base = sampled_surface([](double t, double x) { return std::sin(x) * (2.0 - t); });
      const auto moved = sampled_surface([=](double t, double x) { return std::sin(x) * (2.0 - t) + shift; });
      const double r0 = *viscosity_residual(base, g, ou).get("min_residual");
      const double r1 = *viscosity_residual(moved, g, ou).get("min_residual");
      CHECK(r1 == doctest::Approx(r0).epsilon(1e-9));
    }
  }
}
