#include "arbor/exact.hpp"
#include "arbor/forest_sampler.hpp"
#include "arbor/graph.hpp"
#include "arbor/horospherical.hpp"

#include <benchmark/benchmark.h>
#include <omp.h>

using namespace arbor;

namespace {

WeightedGraph enumeration_graph() {
  // 3x3 torus: 18 edges, ~1.2e5 forests.
  return build_torus<double>(3, 2, 1.0);
}

void BM_EnumerateSerial(benchmark::State& state) {
  auto g = enumeration_graph();
  ForestEnumerator<double> en(g);
  for (auto _ : state) {
    double z = 0;
    en.for_each([&](const ForestState<double>& s) { z += s.weight(); });
    benchmark::DoNotOptimize(z);
  }
}
BENCHMARK(BM_EnumerateSerial)->Unit(benchmark::kMillisecond);

void BM_EnumerateParallel(benchmark::State& state) {
  auto g = enumeration_graph();
  omp_set_num_threads(static_cast<int>(state.range(0)));
  for (auto _ : state) benchmark::DoNotOptimize(partition_function(g));
}
BENCHMARK(BM_EnumerateParallel)->Arg(1)->Arg(2)->Arg(4)->Unit(benchmark::kMillisecond);

template <class C>
void BM_HeatBathSweep(benchmark::State& state) {
  const auto g = build_torus<double>(static_cast<int>(state.range(0)), 2, 1.0);
  const auto p = occupation_probabilities(g);
  DynamicForest<C> forest(g);
  Rng rng = chain_rng(1, 0);
  for (int k = 0; k < 20; ++k) heat_bath_sweep(forest, p, rng);
  for (auto _ : state) {
    heat_bath_sweep(forest, p, rng);
    benchmark::DoNotOptimize(forest.n_occupied());
  }
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(g.n_edges()));
}
// Link-cut trees against the rebuild-on-cut union-find reference.
BENCHMARK(BM_HeatBathSweep<LinkCutTree>)->Arg(16)->Arg(64)->Unit(benchmark::kMicrosecond);
BENCHMARK(BM_HeatBathSweep<RebuildUnionFind>)->Arg(16)->Arg(64)->Unit(benchmark::kMicrosecond);

void BM_ChainsParallel(benchmark::State& state) {
  const auto g = build_torus<double>(16, 2, 1.0);
  ChainParams p;
  p.sweeps = 400;
  p.burn_in = 100;
  p.chains = 4;
  omp_set_num_threads(static_cast<int>(state.range(0)));
  for (auto _ : state) benchmark::DoNotOptimize(run_chain(g, {"density_avg"}, p));
}
BENCHMARK(BM_ChainsParallel)->Arg(1)->Arg(2)->Arg(4)->Unit(benchmark::kMillisecond);

void BM_HoroEvaluate(benchmark::State& state) {
  const auto g = build_torus<double>(static_cast<int>(state.range(0)), 2, 1.0);
  const HoroDensity density(g, 0);
  const Eigen::VectorXd x = Eigen::VectorXd::Constant(static_cast<Eigen::Index>(density.dim()), 0.1);
  for (auto _ : state) benchmark::DoNotOptimize(density.evaluate(x, true));
}
BENCHMARK(BM_HoroEvaluate)->Arg(3)->Arg(8)->Unit(benchmark::kMicrosecond);

}  // namespace

BENCHMARK_MAIN();
