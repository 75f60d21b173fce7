#include <benchmark/benchmark.h>

#include <cmath>

#include "porodyn/grid.hpp"
#include "porodyn/regularity.hpp"

using namespace porodyn;

namespace {

Field wave_field(const Grid& g) {
  Field w(g);
  const double h = g.h();
  for (std::int64_t i = 0; i < g.cells(); ++i) {
    const double x = -g.L + (static_cast<double>(i) + 0.5) * h;
    w[i] = std::sin(3.0 * x) + 0.25 * std::cos(11.0 * x);
  }
  return w;
}

}  // namespace

// Quadratic-exponent fractional seminorm (separation-kernel fast path).
static void BM_seminorm_p2(benchmark::State& state) {
  Grid g{1, static_cast<int>(state.range(0)), 3.14159, BC::Periodic};
  const Field w = wave_field(g);
  for (auto _ : state) {
    double v = slobodetskii_seminorm(w, 0.5, 2.0);
    benchmark::DoNotOptimize(v);
  }
}
BENCHMARK(BM_seminorm_p2)->Arg(512)->Arg(2048)->Arg(8192);

// General exponent falls back to per-pair powers.
static void BM_seminorm_p3(benchmark::State& state) {
  Grid g{1, static_cast<int>(state.range(0)), 3.14159, BC::Periodic};
  const Field w = wave_field(g);
  for (auto _ : state) {
    double v = slobodetskii_seminorm(w, 0.5, 3.0);
    benchmark::DoNotOptimize(v);
  }
}
BENCHMARK(BM_seminorm_p3)->Arg(512)->Arg(2048);

// Two-dimensional pair loop with the precomputed distance kernel.
static void BM_seminorm_2d(benchmark::State& state) {
  Grid g{2, static_cast<int>(state.range(0)), 1.0, BC::Periodic};
  Field w(g);
  for (std::int64_t i = 0; i < g.cells(); ++i) w[i] = std::sin(0.05 * static_cast<double>(i));
  for (auto _ : state) {
    double v = slobodetskii_seminorm(w, 0.7, 2.0);
    benchmark::DoNotOptimize(v);
  }
}
BENCHMARK(BM_seminorm_2d)->Arg(32)->Arg(64);

// Frequency-block decomposition via the cached transforms.
static void BM_besov_blocks(benchmark::State& state) {
  Grid g{1, static_cast<int>(state.range(0)), 3.14159, BC::Periodic};
  const Field w = wave_field(g);
  for (auto _ : state) {
    auto blocks = besov_block_norms(w, 0.5, 2.0);
    benchmark::DoNotOptimize(blocks.data());
  }
}
BENCHMARK(BM_besov_blocks)->Arg(1024)->Arg(4096);

int main(int argc, char** argv) {
  benchmark::Initialize(&argc, argv);
  if (benchmark::ReportUnrecognizedArguments(argc, argv)) return 1;
  benchmark::RunSpecifiedBenchmarks();
  return 0;
}
