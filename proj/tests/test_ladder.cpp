#include <doctest.h>

#include <cmath>
#include <random>

#include "minsup/ladder.hpp"
#include "support/oracles.hpp"

using namespace minsup;
using namespace minsup::ladder;

namespace {

const ProbeBox kPrimal{Axis{-4.0, 4.0, 9}, Axis{-4.0, 4.0, 9}, Axis{-20.0, 20.0, 81}};

/// Brute-force sup over the primal nodes of (a x + b y + c z - g(x, y, z)).
double brute_conjugate(const GeneratorSpec& g, const ProbeBox& box, double a, double b, double c) {
  double best = -kInf;
  for (std::size_t i = 0; i < box.x.count; ++i)
    for (std::size_t j = 0; j < box.y.count; ++j)
      for (std::size_t k = 0; k < box.z.count; ++k) {
        const double x = box.x.node(i), y = box.y.node(j), z = box.z.node(k);
        best = std::max(best, a * x + b * y + c * z - g(x, y, z));
      }
  return best;
}

}  // namespace

TEST_CASE("tabulated conjugate of z^2/2") {
  const GeneratorSpec g = make_generator("entropic");
  const ConjugateTable t = conjugate_full(g, kPrimal, 2.0, 0.25, false);
  for (std::size_t i = 0; i < t.alpha.count; ++i)
    for (std::size_t j = 0; j < t.beta.count; ++j)
      for (std::size_t k = 0; k < t.gamma.count; ++k) {
        const double a = t.alpha.node(i), b = t.beta.node(j), c = t.gamma.node(k);
        CHECK(t.at(i, j, k) == doctest::Approx(brute_conjugate(g, kPrimal, a, b, c)).epsilon(1e-13));
        if (a == 0.0 && b == 0.0) {
          // Primal spacing 0.5 bounds the sampling loss by 0.5^2 / 8.
          CHECK(std::abs(t.at(i, j, k) - 0.5 * c * c) <= 0.5 * 0.5 / 8 + 1e-14);
          CHECK_FALSE(t.is_saturated(i, j, k));
        } else {
          CHECK(t.is_saturated(i, j, k));
        }
      }
}

TEST_CASE("tabulated conjugates of zero and |z|") {
  const ConjugateTable zero = conjugate_full(make_generator("zero"), kPrimal, 2.0, 0.5, false);
  const ConjugateTable absz = conjugate_full(make_generator("abs-z"), kPrimal, 2.0, 0.5, false);
  for (std::size_t i = 0; i < zero.alpha.count; ++i)
    for (std::size_t j = 0; j < zero.beta.count; ++j)
      for (std::size_t k = 0; k < zero.gamma.count; ++k) {
        const double a = zero.alpha.node(i), b = zero.beta.node(j), c = zero.gamma.node(k);
        const bool origin = a == 0.0 && b == 0.0 && c == 0.0;
        CHECK(zero.is_saturated(i, j, k) == !origin);
        if (origin) CHECK(zero.at(i, j, k) == 0.0);
        const bool inside = a == 0.0 && b == 0.0 && std::abs(c) <= 1.0;
        CHECK(absz.is_saturated(i, j, k) == !inside);
        if (inside) CHECK(absz.at(i, j, k) == 0.0);
      }
}

TEST_CASE("build_gn of z^2/2 at n = 1 is the Huber function") {
  const GeneratorSpec g = make_generator("entropic");
  const LadderLevel closed = build_gn(g, 1);
  CHECK(closed.closed_form());
  double worst = 0.0;
  for (int k = -8000; k <= 8000; ++k) {
    const double z = k * 1e-3;
    worst = std::max(worst, std::abs(closed(0.0, 0.0, z) - oracle::huber(z, 1.0)));
  }
  CHECK(worst <= 1e-6);

  // The tabulated route samples g* on the primal z grid (spacing 0.5, error
  // up to 0.5^2/8 upward in g^n) and the sup on the dual grid (spacing 0.25,
  // error up to 0.25^2/8 downward).
  LadderOptions opts;
  opts.force_table = true;
  const LadderLevel table = build_gn(g, 1, opts);
  CHECK_FALSE(table.closed_form());
  for (int k = -40; k <= 40; ++k) {
    const double z = k * 0.1;
    CHECK(std::abs(table(0.0, 0.0, z) - oracle::huber(z, 1.0)) <= 0.5 * 0.5 / 8 + 1e-12);
  }
}

TEST_CASE("build_gn of |z| and of zero") {
  for (int n : {1, 2, 5}) {
    const LadderLevel a = build_gn(make_generator("abs-z"), n);
    const LadderLevel z = build_gn(make_generator("zero"), n);
    for (int k = -50; k <= 50; ++k) {
      const double v = k * 0.37;
      CHECK(a(0.3, -0.2, v) == doctest::Approx(std::abs(v)).epsilon(1e-12));
      CHECK(z(0.3, -0.2, v) == 0.0);
    }
  }
}

TEST_CASE("truncate_terminal") {
  const TerminalSpec lin = truncate_terminal(make_terminal("linear"), 1);
  const TerminalSpec sq = truncate_terminal(make_terminal("square"), 4);
  const TerminalSpec th = truncate_terminal(make_terminal("tanh"), 1);
  for (int k = -60; k <= 60; ++k) {
    const double x = k * 0.1;
    CHECK(lin(x) == std::min(x, 1.0));
    CHECK(sq(x) == std::min(x * x, 4.0));
    CHECK(th(x) == std::tanh(x));
  }
}

TEST_CASE("verify_monotone_ladder examples") {
  std::vector<LadderLevel> huber;
  for (int n = 1; n <= 5; ++n) huber.push_back(build_gn(make_generator("entropic"), n));
  const LadderCheck c = verify_monotone_ladder(huber, kPrimal);
  CHECK(c.pass);
  CHECK(c.max_step_violation <= 1e-12);
  CHECK(c.max_limit_violation <= 1e-12);

  CHECK(verify_monotone_ladder({huber[0]}, kPrimal).pass);

  std::vector<LadderLevel> zero;
  for (int n = 1; n <= 3; ++n) zero.push_back(build_gn(make_generator("zero"), n));
  const LadderCheck cz = verify_monotone_ladder(zero, kPrimal);
  CHECK(cz.pass);
  CHECK(cz.max_step_violation == 0.0);
}

TEST_CASE("property: ladders increase to g once n exceeds the subgradient norm") {
  const ProbeBox probe{Axis{-2.0, 2.0, 9}, Axis{-2.0, 2.0, 9}, Axis{-4.0, 4.0, 17}};
  for (const std::string& name : generator_registry()) {
    const GeneratorSpec g = make_generator(name);
    if (!g.flags.convex_xyz) continue;
    CAPTURE(name);
    std::vector<LadderLevel> levels;
    for (int n : {1, 2, 4, 8, 16}) levels.push_back(build_gn(g, n));
    for (std::size_t i = 0; i < probe.x.count; ++i)
      for (std::size_t j = 0; j < probe.y.count; ++j)
        for (std::size_t k = 0; k < probe.z.count; ++k) {
          const double x = probe.x.node(i), y = probe.y.node(j), z = probe.z.node(k);
          for (std::size_t l = 0; l + 1 < levels.size(); ++l) CHECK(levels[l](x, y, z) <= levels[l + 1](x, y, z) + 1e-12);
          // Registry subgradients are bounded by 2|x| + |y| + |z| <= 10 on this box.
          CHECK(levels.back()(x, y, z) == doctest::Approx(g(x, y, z)).epsilon(1e-9));
        }
  }
}

TEST_CASE("property: g^n is n-Lipschitz in the l1 norm") {
  std::mt19937_64 rng(21);
  std::uniform_real_distribution<double> u(-3.0, 3.0);
  for (const std::string& name : {"entropic", "separable", "abs-z", "quadratic-z"}) {
    const GeneratorSpec g = make_generator(name);
    for (int n : {1, 3, 6}) {
      const LadderLevel gn = build_gn(g, n);
      for (int trial = 0; trial < 500; ++trial) {
        const double x1 = u(rng), y1 = u(rng), z1 = u(rng), x2 = u(rng), y2 = u(rng), z2 = u(rng);
        const double l1 = std::abs(x1 - x2) + std::abs(y1 - y2) + std::abs(z1 - z2);
        CHECK(std::abs(gn(x1, y1, z1) - gn(x2, y2, z2)) <= n * l1 + 1e-12);
      }
    }
  }
}

TEST_CASE("property: the ladder preserves order") {
  const std::vector<std::pair<std::string, std::string>> pairs = {
      {"zero", "abs-z"}, {"entropic", "quadratic-z"}, {"entropic", "separable"}};
  for (const auto& [lo, hi] : pairs) {
    CAPTURE(lo);
    for (int n : {1, 2, 4}) {
      const LadderLevel a = build_gn(make_generator(lo), n);
      const LadderLevel b = build_gn(make_generator(hi), n);
      for (int i = -10; i <= 10; ++i)
        for (int k = -20; k <= 20; ++k) CHECK(a(0.3 * i, 0.0, 0.25 * k) <= b(0.3 * i, 0.0, 0.25 * k) + 1e-12);
    }
  }
}

TEST_CASE("property: truncated terminals are sandwiched") {
  for (const std::string& name : {"tanh", "positive-part", "square", "zero"}) {
    const TerminalSpec phi = make_terminal(name);
    for (int n : {1, 2, 7}) {
      const TerminalSpec pn = truncate_terminal(phi, n);
      for (int k = -100; k <= 100; ++k) {
        const double x = k * 0.05;
        CHECK(pn(x) >= phi.lower_bound);
        CHECK(pn(x) <= std::min(phi(x), static_cast<double>(n)));
        CHECK(pn(x) == std::min(phi(x), static_cast<double>(n)));
      }
    }
  }
}
