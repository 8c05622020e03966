#include <benchmark/benchmark.h>

#include <cmath>

#include "minsup/backward.hpp"
#include "minsup/convexlab.hpp"
#include "minsup/forward.hpp"
#include "minsup/ladder.hpp"
#include "minsup/rng.hpp"

using namespace minsup;

static void BM_PhiloxNormals(benchmark::State& state) {
  const NormalStream normals(7, stream_id("bench"));
  std::uint64_t block = 0;
  for (auto _ : state) benchmark::DoNotOptimize(normals.pair(0, block++));
  state.SetItemsProcessed(2 * state.iterations());
}
BENCHMARK(BM_PhiloxNormals);

static void BM_Convexify1D(benchmark::State& state) {
  const Axis axis{-2.0, 2.0, static_cast<std::size_t>(state.range(0))};
  const GridFunction f = GridFunction::sample(axis, [](double z) { return std::sin(4.0 * z) + 0.5 * z * z; });
  for (auto _ : state) benchmark::DoNotOptimize(convexlab::convexify(f));
}
BENCHMARK(BM_Convexify1D)->Arg(401)->Arg(4001);

static void BM_LegendreConjugate1D(benchmark::State& state) {
  const Axis axis{-2.0, 2.0, 401};
  const GridFunction f = GridFunction::sample(axis, [](double z) { return std::abs(z) + 0.5 * z * z; });
  const Axis dual{-3.0, 3.0, 601};
  for (auto _ : state) benchmark::DoNotOptimize(convexlab::legendre_conjugate(f, {dual}));
}
BENCHMARK(BM_LegendreConjugate1D);

static void BM_SimulateBrownian(benchmark::State& state) {
  const auto d = forward::make_diffusion("brownian");
  const forward::TimeGrid grid{0.0, 1.0, 50};
  for (auto _ : state)
    benchmark::DoNotOptimize(forward::simulate(d, 0.0, grid, static_cast<std::size_t>(state.range(0)), 7));
  state.SetItemsProcessed(state.iterations() * state.range(0) * 50);
}
BENCHMARK(BM_SimulateBrownian)->Arg(10000)->Unit(benchmark::kMillisecond);

static void BM_PdeEntropicLevel(benchmark::State& state) {
  const auto level = ladder::build_gn(make_generator("entropic"), 1).with_terminal(make_terminal("tanh"));
  const auto d = forward::make_diffusion("brownian");
  backward::PdeGridConfig cfg;
  cfg.dx = 0.04;
  for (auto _ : state) benchmark::DoNotOptimize(backward::solve_pde_level(level, d, cfg));
}
BENCHMARK(BM_PdeEntropicLevel)->Unit(benchmark::kMillisecond);

static void BM_BsdeRegression(benchmark::State& state) {
  const auto level = ladder::build_gn(make_generator("entropic"), 1).with_terminal(make_terminal("tanh"));
  const auto bundle =
      forward::simulate(forward::make_diffusion("brownian"), 0.0, forward::TimeGrid{0.0, 1.0, 50}, 20000, 7);
  for (auto _ : state) benchmark::DoNotOptimize(backward::solve_bsde_mc(level, bundle, {}));
}
BENCHMARK(BM_BsdeRegression)->Unit(benchmark::kMillisecond);
BENCHMARK_MAIN();
