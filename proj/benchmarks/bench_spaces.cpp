#include <benchmark/benchmark.h>

#include "regrom/spaces.hpp"
#include "regrom/synthetic.hpp"

using namespace regrom;

namespace {

void BM_BuildDDSpace(benchmark::State& state) {
  Partition part = make_fig_partition();
  for (auto _ : state)
    benchmark::DoNotOptimize(
        build_dd_space(part, static_cast<int>(state.range(0))));
}
BENCHMARK(BM_BuildDDSpace)->Arg(6)->Arg(10);

void BM_BuildPolarSpace(benchmark::State& state) {
  for (auto _ : state) benchmark::DoNotOptimize(build_polar_space(12, 8));
}
BENCHMARK(BM_BuildPolarSpace);

void BM_DisplacementEval(benchmark::State& state) {
  Partition part = make_fig_partition();
  DisplacementSpace sp = build_dd_space(part, 8);
  VectorXd a = VectorXd::Constant(sp.dim(), 0.01);
  VectorXd raw = sp.to_raw(a);
  Vector2d X(0.3, 0.8);
  for (auto _ : state) benchmark::DoNotOptimize(sp.eval_raw(raw, 2, X));
}
BENCHMARK(BM_DisplacementEval);

void BM_DisplacementGradient(benchmark::State& state) {
  Partition part = make_fig_partition();
  DisplacementSpace sp = build_dd_space(part, 8);
  VectorXd raw = sp.to_raw(VectorXd::Constant(sp.dim(), 0.01));
  Vector2d X(0.3, 0.8);
  for (auto _ : state) benchmark::DoNotOptimize(sp.eval_raw_gradient(raw, 2, X));
}
BENCHMARK(BM_DisplacementGradient);

}  // namespace
