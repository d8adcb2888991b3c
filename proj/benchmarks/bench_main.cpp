#include <benchmark/benchmark.h>

#include <vector>

#include "fractalp/besov.hpp"
#include "fractalp/extend.hpp"
#include "fractalp/forms.hpp"
#include "fractalp/metricgeom.hpp"
#include "fractalp/rng.hpp"
#include "fractalp/structure.hpp"

using namespace fractalp;

namespace {

EnergyModel sg_model(double p) {
  const double rho = p == 2.0 ? 5.0 / 3.0 : 2.0;
  return EnergyModel::uniform(PcfStructure::sierpinski_gasket(), p, rho);
}

void bm_vertex_table(benchmark::State& state) {
  const PcfStructure st = PcfStructure::sierpinski_gasket();
  const int level = static_cast<int>(state.range(0));
  for (auto _ : state) {
    VertexTable vt = VertexTable::build(st, level);
    benchmark::DoNotOptimize(vt.vertex_count());
  }
}
BENCHMARK(bm_vertex_table)->Arg(5)->Arg(7);

void bm_dirichlet_solve(benchmark::State& state) {
  const double p = static_cast<double>(state.range(0)) / 10.0;
  const EnergyModel model = sg_model(p);
  for (auto _ : state) {
    SolveResult r = model.dirichlet_solve(5, {0, 1, 2}, {1.0, 0.0, 0.0});
    benchmark::DoNotOptimize(r.energy);
  }
}
BENCHMARK(bm_dirichlet_solve)->Arg(15)->Arg(20)->Arg(30);

void bm_interpolator_refine(benchmark::State& state) {
  const EnergyModel model = sg_model(2.0);
  const DiscreteFunction base = model.boundary_harmonic(1, {1.0, 0.0, 0.0});
  const int depth = static_cast<int>(state.range(0));
  CounterRng rng(11, "bench-refine");
  std::vector<Letter> addr(depth);
  for (auto _ : state) {
    // a fresh interpolator each round so the cache is actually exercised
    state.PauseTiming();
    HarmonicInterpolator hi(model, base);
    state.ResumeTiming();
    double acc = 0.0;
    for (int t = 0; t < 64; ++t) {
      for (int i = 0; i < depth; ++i)
        addr[i] = static_cast<Letter>(rng.uniform_below(3));
      acc += hi.value_at(addr.data(), depth);
    }
    benchmark::DoNotOptimize(acc);
  }
}
BENCHMARK(bm_interpolator_refine)->Arg(10);

void bm_eval_j(benchmark::State& state) {
  const EnergyModel model = sg_model(2.0);
  const BesovContext ctx(model.structure(), SelfSimilarMeasure::uniform(3), 12,
                         7);
  const ExtendedFunction f(model, model.boundary_harmonic(1, {1.0, 0.0, 0.0}));
  KernelSpec k;
  k.s = 1.16;
  for (auto _ : state) {
    FunctionalEstimate est = eval_J(ctx, k, 2.0, f, 0.25, 10000);
    benchmark::DoNotOptimize(est.value);
  }
}
BENCHMARK(bm_eval_j);

void bm_resistance_table(benchmark::State& state) {
  const EnergyModel model = sg_model(2.0);
  for (auto _ : state) {
    ResistanceTable rt(model, 5);
    benchmark::DoNotOptimize(rt.resistance(0, 1));
  }
}
BENCHMARK(bm_resistance_table);

}  // namespace

BENCHMARK_MAIN();
