#include <doctest.h>

#include <cmath>
#include <random>

#include "minsup/convexlab.hpp"
#include "support/oracles.hpp"

using namespace minsup;
using namespace minsup::convexlab;

namespace {

std::vector<double> nodes(const Axis& a) {
  std::vector<double> xs(a.count);
  for (std::size_t i = 0; i < a.count; ++i) xs[i] = a.node(i);
  return xs;
}

std::vector<double> vals(const GridFunction& f) { return {f.values().begin(), f.values().end()}; }

GridFunction random_pl(std::mt19937_64& rng, const Axis& a, double noise) {
  std::normal_distribution<double> n01;
  std::vector<double> v(a.count);
  for (std::size_t i = 0; i < a.count; ++i) v[i] = 0.5 * a.node(i) * a.node(i) + noise * n01(rng);
  return GridFunction({a}, v);
}

}  // namespace

TEST_CASE("lsc_envelope leaves continuous PL data unchanged") {
  const Axis a{-1.0, 1.0, 21};
  const GridFunction f = GridFunction::sample(a, [](double z) { return std::abs(z - 0.3) + 0.2 * z; });
  CHECK(vals(lsc_envelope(f)) == vals(f));
  const GridFunction g =
      GridFunction::sample(a, [](double z) { return std::min((z + 1) * (z + 1), (z - 1) * (z - 1)); });
  CHECK(vals(lsc_envelope(g)) == vals(g));
}

TEST_CASE("lsc_envelope restores an isolated infinite node") {
  const Axis a{-1.0, 1.0, 41};
  GridFunction f = GridFunction::sample(a, [](double z) { return z * z; });
  const double eps = f.grid_modulus();
  f[a.count - 1] = kInf;
  const GridFunction e = lsc_envelope(f);
  CHECK(std::isfinite(e[a.count - 1]));
  CHECK(std::abs(e[a.count - 1] - 1.0) <= eps);
  for (std::size_t i = 0; i + 1 < a.count; ++i) CHECK(e[i] == f[i]);
}

TEST_CASE("legendre_conjugate of z^2/2 is the dual parabola") {
  const Axis a{-4.0, 4.0, 801};
  const GridFunction f = GridFunction::sample(a, [](double z) { return 0.5 * z * z; });
  const Axis dual{-2.0, 2.0, 81};
  const GridFunction fs = legendre_conjugate(f, {dual});
  const auto xs = nodes(a);
  const auto fv = vals(f);
  const double h = a.spacing();
  for (std::size_t k = 0; k < dual.count; ++k) {
    const double p = dual.node(k);
    CHECK(fs[k] == doctest::Approx(oracle::brute_conjugate(xs, fv, p)).epsilon(1e-14));
    CHECK(std::abs(fs[k] - 0.5 * p * p) <= h * h / 8 + 1e-14);
    CHECK_FALSE(fs.is_saturated(k));
  }
}

TEST_CASE("legendre_conjugate of zero and of |z| flag saturation") {
  const Axis a{-2.0, 2.0, 41};
  const Axis dual{-3.0, 3.0, 61};
  const GridFunction zero = legendre_conjugate(GridFunction::constant({a}, 0.0), {dual});
  for (std::size_t k = 0; k < dual.count; ++k) {
    const double p = dual.node(k);
    if (p == 0.0) {
      CHECK(zero[k] == 0.0);
      CHECK_FALSE(zero.is_saturated(k));
    } else {
      CHECK(zero[k] == doctest::Approx(2.0 * std::abs(p)));
      CHECK(zero.is_saturated(k));
    }
  }
  const GridFunction absf = legendre_conjugate(GridFunction::sample(a, [](double z) { return std::abs(z); }), {dual});
  for (std::size_t k = 0; k < dual.count; ++k) {
    const double p = dual.node(k);
    if (std::abs(p) <= 1.0 + 1e-12) {
      CHECK(std::abs(absf[k]) <= 1e-12);
      CHECK_FALSE(absf.is_saturated(k));
    } else {
      CHECK(absf.is_saturated(k));
    }
  }
}

TEST_CASE("convexify matches the brute-force lower hull") {
  const Axis a{-2.0, 2.0, 81};
  const auto xs = nodes(a);
  SUBCASE("double well") {
    const GridFunction f =
        GridFunction::sample(a, [](double z) { return std::min((z + 1) * (z + 1), (z - 1) * (z - 1)); });
    const GridFunction c = convexify(f);
    for (std::size_t i = 0; i < a.count; ++i) {
      const double z = xs[i];
      const double expected = std::abs(z) <= 1.0 ? 0.0 : (std::abs(z) - 1) * (std::abs(z) - 1);
      CHECK(c[i] == doctest::Approx(oracle::brute_hull(xs, vals(f), i)).epsilon(1e-12));
      CHECK(c[i] == doctest::Approx(expected).epsilon(1e-12));
    }
  }
  SUBCASE("step function") {
    const GridFunction f = GridFunction::sample(a, [](double z) { return z < 0 ? 0.0 : 1.0; });
    const GridFunction c = convexify(f);
    // On a bounded box the hull rises along the chord to (2, 1); it is
    // identically 0 only on the whole line.
    for (std::size_t i = 0; i < a.count; ++i) {
      CHECK(c[i] == doctest::Approx(oracle::brute_hull(xs, vals(f), i)).epsilon(1e-12));
      if (xs[i] < 0) CHECK(c[i] == 0.0);
    }
  }
  SUBCASE("convex input is a fixed point") {
    const GridFunction f = GridFunction::sample(a, [](double z) { return std::exp(z) + std::abs(z); });
    CHECK(oracle::sup_abs_diff(vals(convexify(f)), vals(f)) <= 1e-12);
  }
}

TEST_CASE("convexify_z works slice by slice") {
  const Axis y{-1.0, 1.0, 11};
  const Axis z{-2.0, 2.0, 41};
  const GridFunction f = GridFunction::sample(
      y, z, [](double yy, double zz) { return yy * yy + std::min((zz + 1) * (zz + 1), (zz - 1) * (zz - 1)); });
  const GridFunction c = convexify_z(f);
  for (std::size_t k = 0; k < c.size(); ++k) {
    const auto [yy, zz] = c.point(k);
    const double env = std::abs(zz) <= 1.0 ? 0.0 : (std::abs(zz) - 1) * (std::abs(zz) - 1);
    CHECK(c[k] == doctest::Approx(yy * yy + env).epsilon(1e-12));
  }
  const GridFunction g =
      GridFunction::sample(y, z, [](double, double zz) { return std::min(std::abs(zz - 1), std::abs(zz + 1)); });
  const GridFunction cg = convexify_z(g);
  for (std::size_t k = 0; k < cg.size(); ++k) {
    const double zz = cg.point(k)[1];
    CHECK(cg[k] == doctest::Approx(std::max(std::abs(zz) - 1.0, 0.0)).epsilon(1e-12));
  }
  const GridFunction convex = GridFunction::sample(y, z, [](double yy, double zz) { return yy * yy + zz * zz + yy * zz; });
  CHECK(oracle::sup_abs_diff(vals(convexify_z(convex)), vals(convex)) <= 1e-12);
}

TEST_CASE("epi_liminf closed forms") {
  SUBCASE("constant sequence of a convex function") {
    const Axis a{-2.0, 2.0, 41};
    EpiSequence seq;
    const GridFunction f = GridFunction::sample(a, [](double z) { return z * z + z; });
    for (int n = 0; n < 8; ++n) seq.members.push_back(f);
    for (EpiMode m : {EpiMode::PK, EpiMode::CC}) CHECK(oracle::sup_abs_diff(vals(epi_liminf(seq, m)), vals(f)) <= 1e-12);
  }
  SUBCASE("oscillating family") {
    const Axis a{-2.0, 2.0, 401};
    EpiSequence seq;
    seq.tail_length = 4;
    for (int n = 1; n <= 64; ++n) {
      const double s = n % 2 == 0 ? 1.0 : -1.0;
      seq.members.push_back(GridFunction::sample(a, [s](double z) { return std::abs(z - s); }));
    }
    const GridFunction pk = epi_liminf(seq, EpiMode::PK);
    const GridFunction cc = epi_liminf(seq, EpiMode::CC);
    for (std::size_t i = 0; i < a.count; ++i) {
      const double z = a.node(i);
      CHECK(pk[i] == doctest::Approx(std::min(std::abs(z - 1), std::abs(z + 1))).epsilon(1e-12));
      CHECK(cc[i] == doctest::Approx(std::max(std::abs(z) - 1, 0.0)).epsilon(1e-12));
    }
  }
  SUBCASE("shifted parabola") {
    const Axis a{-1.0, 1.0, 41};
    EpiSequence seq;
    seq.tail_length = 4;
    for (int n = 1; n <= 32; ++n) {
      const double s = 1.0 / n;
      seq.members.push_back(GridFunction::sample(a, [s](double z) { return (z - s) * (z - s); }));
    }
    const GridFunction target = GridFunction::sample(a, [](double z) { return z * z; });
    for (EpiMode m : {EpiMode::PK, EpiMode::CC})
      CHECK(oracle::sup_abs_diff(vals(epi_liminf(seq, m)), vals(target)) <= target.grid_modulus());
  }
}

TEST_CASE("horizon_function examples") {
  const Axis box{-100.0, 100.0, 2001};
  const Axis dirs{-1.0, 1.0, 21};
  SUBCASE("|z| is its own horizon") {
    const GridFunction h = horizon_function(GridFunction::sample(box, [](double z) { return std::abs(z); }), {dirs});
    for (std::size_t k = 0; k < dirs.count; ++k) CHECK(h[k] == doctest::Approx(std::abs(dirs.node(k))).epsilon(1e-12));
    CHECK_FALSE(h.any_saturated());
  }
  SUBCASE("z^2/2 diverges off the origin") {
    const GridFunction h = horizon_function(GridFunction::sample(box, [](double z) { return 0.5 * z * z; }), {dirs});
    for (std::size_t k = 0; k < dirs.count; ++k) {
      if (dirs.node(k) == 0.0) {
        CHECK(h[k] == 0.0);
      } else {
        CHECK(h.is_saturated(k));
      }
    }
  }
  SUBCASE("sqrt(1+z^2) has horizon |z|") {
    const GridFunction h =
        horizon_function(GridFunction::sample(box, [](double z) { return std::sqrt(1 + z * z); }), {dirs});
    for (std::size_t k = 0; k < dirs.count; ++k) {
      const double y = dirs.node(k);
      // Quotient at the largest step a = 100/|y|: |y| (sqrt(1 + 100^2) - 1) / 100.
      CHECK(std::abs(h[k] - std::abs(y)) <= 0.011 * std::abs(y) + 1e-12);
      CHECK_FALSE(h.is_saturated(k));
    }
  }
}

TEST_CASE("rec_check examples") {
  RecProbe probe;
  for (int k = 1; k <= 32; ++k) probe.x_sequence.push_back(1.0 / k);
  probe.x_limit = 0.0;
  const RecReport sep = rec_check(make_generator("separable"), probe, RecCase::automatic);
  CHECK(sep.verdict == RecVerdict::pass);
  REQUIRE(sep.case_used);
  CHECK(*sep.case_used == RecCase::i);

  const RecReport weighted = rec_check(make_generator("weighted-abs-z"), probe, RecCase::automatic);
  CHECK(weighted.verdict == RecVerdict::pass);
  REQUIRE(weighted.case_used);
  CHECK(*weighted.case_used == RecCase::iv);

  CHECK(rec_check(make_generator("zero"), probe, RecCase::automatic).verdict == RecVerdict::inconclusive);
}

// Properties over random instances.

TEST_CASE("property: conjugation reverses order") {
  std::mt19937_64 rng(11);
  const Axis a{-2.0, 2.0, 41};
  const Axis dual{-4.0, 4.0, 81};
  std::uniform_real_distribution<double> bump(0.0, 0.5);
  for (int trial = 0; trial < 50; ++trial) {
    const GridFunction f = random_pl(rng, a, 0.3);
    std::vector<double> gv = vals(f);
    for (double& v : gv) v += bump(rng);
    const GridFunction g({a}, gv);
    const GridFunction fs = legendre_conjugate(f, {dual});
    const GridFunction gs = legendre_conjugate(g, {dual});
    for (std::size_t k = 0; k < dual.count; ++k) CHECK(gs[k] <= fs[k]);
  }
}

TEST_CASE("property: biconjugate equals the convex envelope within 2 eps_grid") {
  std::mt19937_64 rng(12);
  const Axis a{-2.0, 2.0, 81};
  for (int trial = 0; trial < 100; ++trial) {
    const GridFunction f = random_pl(rng, a, 0.3);
    const double eps = f.grid_modulus();
    double slope = 0.0;
    for (std::size_t i = 0; i + 1 < f.size(); ++i) slope = std::max(slope, std::abs(f[i + 1] - f[i]) / a.spacing());
    const double dh = eps / 4.0;
    const double reach = std::ceil(slope / dh) * dh;
    const GridFunction fss = legendre_conjugate(legendre_conjugate(f, {make_axis(-reach, reach, dh)}), {a});
    CHECK(oracle::sup_abs_diff(vals(fss), vals(convexify(f))) <= 2.0 * eps);
  }
}

TEST_CASE("property: envelopes are idempotent") {
  std::mt19937_64 rng(13);
  const Axis a{-2.0, 2.0, 61};
  for (int trial = 0; trial < 30; ++trial) {
    GridFunction f = random_pl(rng, a, 0.5);
    const GridFunction c = convexify(f);
    CHECK(vals(convexify(c)) == vals(c));
    if (trial % 3 == 0) f[30] = kInf;
    const GridFunction l = lsc_envelope(f);
    CHECK(vals(lsc_envelope(l)) == vals(l));
  }
  const Axis y{-1.0, 1.0, 9};
  std::normal_distribution<double> n01;
  for (int trial = 0; trial < 5; ++trial) {
    std::vector<double> v(y.count * y.count);
    for (double& x : v) x = n01(rng);
    const GridFunction c = convexify(GridFunction({y, y}, v));
    CHECK(vals(convexify(c)) == vals(c));
  }
}

TEST_CASE("property: CC <= CCz <= PK on 2D sequences") {
  std::mt19937_64 rng(14);
  std::normal_distribution<double> n01;
  const Axis y{-1.0, 1.0, 7};
  const Axis z{-1.0, 1.0, 9};
  for (int trial = 0; trial < 10; ++trial) {
    EpiSequence seq;
    for (int n = 0; n < 6; ++n) {
      std::vector<double> v(y.count * z.count);
      for (std::size_t k = 0; k < v.size(); ++k) v[k] = n01(rng);
      seq.members.emplace_back(std::vector<Axis>{y, z}, v);
    }
    seq.tail_length = 2;
    const GridFunction cc = epi_liminf(seq, EpiMode::CC);
    const GridFunction ccz = epi_liminf(seq, EpiMode::CCz);
    const GridFunction pk = epi_liminf(seq, EpiMode::PK);
    for (std::size_t k = 0; k < pk.size(); ++k) {
      CHECK(cc[k] <= ccz[k] + 1e-12);
      CHECK(ccz[k] <= pk[k] + 1e-12);
    }
  }
}

TEST_CASE("property: horizon functions are positively homogeneous") {
  const Axis box{-50.0, 50.0, 1001};
  const Axis dirs{-4.0, 4.0, 33};
  const GridFunction h = horizon_function(
      GridFunction::sample(box, [](double z) { return std::abs(z - 1.0) + 0.5 * std::max(z, 0.0); }), {dirs});
  for (std::size_t k = 0; k < dirs.count; ++k) {
    const double y = dirs.node(k);
    for (double lambda : {2.0, 4.0}) {
      const double ly = lambda * y;
      if (std::abs(ly) > 4.0 || h.is_saturated(k)) continue;
      const std::size_t kk = static_cast<std::size_t>(std::lround((ly - dirs.lo) / dirs.spacing()));
      if (h.is_saturated(kk)) continue;
      CHECK(h[kk] == doctest::Approx(lambda * h[k]).epsilon(1e-9));
    }
  }
}

TEST_CASE("property: tail envelopes increase with the tail start") {
  std::mt19937_64 rng(15);
  const Axis a{-1.0, 1.0, 41};
  for (int trial = 0; trial < 20; ++trial) {
    EpiSequence seq;
    for (int n = 0; n < 10; ++n) seq.members.push_back(random_pl(rng, a, 0.4));
    seq.tail_length = 1;
    for (EpiMode m : {EpiMode::PK, EpiMode::CC}) {
      const auto tails = tail_envelopes(seq, m);
      // Returned in increasing tail start.
      for (std::size_t n = 0; n + 1 < tails.size(); ++n)
        for (std::size_t i = 0; i < a.count; ++i) CHECK(tails[n][i] <= tails[n + 1][i] + 1e-12);
    }
  }
}
