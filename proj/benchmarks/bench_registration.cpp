#include <benchmark/benchmark.h>

#include "regrom/registration.hpp"
#include "regrom/synthetic.hpp"

using namespace regrom;

namespace {

struct Fixture {
  Partition part = make_fig_partition();
  ReferenceMesh mesh = make_partition_mesh(part, 5, 2);
  DisplacementSpace space = build_dd_space(part, 6);
  RegistrationConfig cfg;
  RegistrationProblem problem{mesh, part, space, cfg};
  std::shared_ptr<SensorGrid> grid = std::make_shared<SensorGrid>(3, 10, false);
  SensorField sensor;
  TemplateSpace templates;
  VectorXd a;

  Fixture() {
    VectorXd mu(2), mubar(2);
    mu << 0.35, 0.6;
    mubar << 0.5, 0.5;
    auto field = [&](const VectorXd& m) {
      MatrixXd vals(grid->n_nodes(), part.size());
      for (int q = 0; q < part.size(); ++q)
        for (int g = 0; g < grid->n_nodes(); ++g)
          vals(g, q) = partitioned_front_value(
              m, part.element(q).forward(grid->node_coord(g)));
      return SensorField(grid, vals);
    };
    sensor = field(mu);
    templates.try_append(field(mubar));
    a = VectorXd::Constant(space.dim(), 1e-3);
  }
};

Fixture& fixture() {
  static Fixture f;
  return f;
}

void BM_Proximity(benchmark::State& state) {
  Fixture& f = fixture();
  for (auto _ : state)
    benchmark::DoNotOptimize(
        f.problem.proximity(f.a, f.sensor, f.templates, nullptr));
}
BENCHMARK(BM_Proximity);

void BM_ObjectiveWithGradient(benchmark::State& state) {
  Fixture& f = fixture();
  VectorXd g;
  for (auto _ : state)
    benchmark::DoNotOptimize(
        f.problem.objective(f.a, f.sensor, f.templates, 1.0, &g));
}
BENCHMARK(BM_ObjectiveWithGradient);

void BM_MeshPenalty(benchmark::State& state) {
  Fixture& f = fixture();
  for (auto _ : state)
    benchmark::DoNotOptimize(f.problem.mesh_penalty(f.a, nullptr));
}
BENCHMARK(BM_MeshPenalty);

void BM_DeformMesh(benchmark::State& state) {
  Fixture& f = fixture();
  for (auto _ : state) benchmark::DoNotOptimize(f.problem.deform_mesh(f.a));
}
BENCHMARK(BM_DeformMesh);

}  // namespace
