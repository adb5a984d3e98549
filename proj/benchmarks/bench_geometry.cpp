#include <benchmark/benchmark.h>

#include "regrom/synthetic.hpp"

using namespace regrom;

namespace {

void BM_GordonHallForward(benchmark::State& state) {
  Partition part = make_fig_partition();
  const ElementMap& em = part.element(1);
  Vector2d X(0.37, 0.61);
  for (auto _ : state) benchmark::DoNotOptimize(em.forward(X));
}
BENCHMARK(BM_GordonHallForward);

void BM_GordonHallInverse(benchmark::State& state) {
  Partition part = make_fig_partition();
  const ElementMap& em = part.element(3);
  Vector2d p = em.forward({0.37, 0.61});
  for (auto _ : state) benchmark::DoNotOptimize(em.inverse(p));
}
BENCHMARK(BM_GordonHallInverse);

void BM_PolarRoundTrip(benchmark::State& state) {
  PolarChart chart(0.2, 1.0);
  Vector2d x(0.4, 0.2);
  for (auto _ : state) benchmark::DoNotOptimize(chart.inverse(chart.forward(x)));
}
BENCHMARK(BM_PolarRoundTrip);

void BM_PartitionMeshBuild(benchmark::State& state) {
  Partition part = make_fig_partition();
  for (auto _ : state)
    benchmark::DoNotOptimize(
        make_partition_mesh(part, static_cast<int>(state.range(0)), 2));
}
BENCHMARK(BM_PartitionMeshBuild)->Arg(4)->Arg(8);

}  // namespace
