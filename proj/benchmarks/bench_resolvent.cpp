#include <benchmark/benchmark.h>

#include <cmath>

#include "porodyn/evolution.hpp"
#include "porodyn/grid.hpp"
#include "porodyn/phi_model.hpp"

using namespace porodyn;

namespace {

Field bump_field(const Grid& g, double amp) {
  Field w(g);
  const double h = g.h();
  for (std::int64_t i = 0; i < g.cells(); ++i) {
    const double x = -g.L + (static_cast<double>(i) + 0.5) * h;
    w[i] = amp * std::exp(-4.0 * x * x) - 0.5 * amp * std::exp(-6.0 * (x - 0.4) * (x - 0.4));
  }
  return w;
}

}  // namespace

// One implicit Euler step of the singular-degenerate flux at tau = h/8.
static void BM_implicit_step_biofilm(benchmark::State& state) {
  const auto model = PhiModel::biofilm(1.0, 1.0);
  Grid g{1, static_cast<int>(state.range(0)), 1.0, BC::Periodic};
  const Field u = bump_field(g, 0.7);
  const Field f = Field::zeros(g);
  const double tau = g.h() / 8.0;
  for (auto _ : state) {
    Field next = step_implicit(model, u, tau, f);
    benchmark::DoNotOptimize(next.v.data());
  }
}
BENCHMARK(BM_implicit_step_biofilm)->Arg(128)->Arg(512)->Arg(2048);

// Same step on the quadratic slow-diffusion flux.
static void BM_implicit_step_pme(benchmark::State& state) {
  const auto model = PhiModel::pme(2.0);
  Grid g{1, static_cast<int>(state.range(0)), 1.0, BC::Periodic};
  const Field u = bump_field(g, 1.0);
  const Field f = Field::zeros(g);
  const double tau = g.h() / 8.0;
  for (auto _ : state) {
    Field next = step_implicit(model, u, tau, f);
    benchmark::DoNotOptimize(next.v.data());
  }
}
BENCHMARK(BM_implicit_step_pme)->Arg(128)->Arg(512)->Arg(2048);

// A short full evolution (16 steps), the unit of work the property batches
// repeat per trial.
static void BM_solve_short_biofilm(benchmark::State& state) {
  const auto model = PhiModel::biofilm(1.0, 1.0);
  Grid g{1, static_cast<int>(state.range(0)), 1.0, BC::Periodic};
  const Field u0 = bump_field(g, 0.7);
  for (auto _ : state) {
    Trajectory tr = solve_cauchy(model, u0, SourceSpec::none(), 0.125, 1.0 / 128.0);
    benchmark::DoNotOptimize(tr.states.back().v.data());
  }
}
BENCHMARK(BM_solve_short_biofilm)->Arg(128)->Arg(256);

int main(int argc, char** argv) {
  benchmark::Initialize(&argc, argv);
  if (benchmark::ReportUnrecognizedArguments(argc, argv)) return 1;
  benchmark::RunSpecifiedBenchmarks();
  return 0;
}
