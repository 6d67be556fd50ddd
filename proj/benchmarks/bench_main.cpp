#include <benchmark/benchmark.h>

#include "consflux/config.hpp"
#include "consflux/flux.hpp"
#include "consflux/harness.hpp"
#include "consflux/postprocess.hpp"
#include "consflux/transport.hpp"

using namespace consflux;

namespace {

// barrier setup at n x n; left-to-right pressure drop
struct Setup {
  CaseSpec spec;
  Mesh mesh;
  FlowProblem flow;

  explicit Setup(int n) : spec(default_case(ScenarioId::Barrier)), mesh(build_cartesian(1, 1)) {
    spec.cells = n;
    mesh = scenario_mesh(spec);
    flow.permeability = PermeabilityField::from_scalar(scenario_permeability(spec, mesh));
    flow.dirichlet = [](double, Point x) { return 1.0 - x.x; };
  }
};

void BM_FlowSolve(benchmark::State& state) {
  const Setup s(static_cast<int>(state.range(0)));
  for (auto _ : state) benchmark::DoNotOptimize(solve_stationary(s.mesh, s.flow, DirichletMode::Strong));
}

void BM_CorrectionAssembly(benchmark::State& state) {
  const Setup s(static_cast<int>(state.range(0)));
  for (auto _ : state)
    benchmark::DoNotOptimize(assemble_pp_matrix(s.mesh, WeightScheme::InversePermeability, s.flow.permeability));
}

void BM_CorrectionSolve(benchmark::State& state) {
  const Setup s(static_cast<int>(state.range(0)));
  const auto p = solve_stationary(s.mesh, s.flow, DirichletMode::Strong);
  const auto u = extract_flux(s.mesh, p, s.flow, DirichletMode::Strong, Averaging::Harmonic);
  const auto src = SourceSpec::stationary(s.mesh, s.flow.source, 0.0);
  const auto weights = state.range(1) ? WeightScheme::InversePermeability : WeightScheme::Uniform;
  const Postprocessor pp(s.mesh, weights, s.flow.permeability, {1e-12, 20000, Preconditioner::SSOR});
  for (auto _ : state) benchmark::DoNotOptimize(pp.apply(u, src));
}

void BM_TransportStep(benchmark::State& state) {
  const Setup s(static_cast<int>(state.range(0)));
  const auto p = solve_stationary(s.mesh, s.flow, DirichletMode::Strong);
  const auto u = extract_flux(s.mesh, p, s.flow, DirichletMode::Strong, Averaging::Harmonic);
  const auto src = SourceSpec::stationary(s.mesh, s.flow.source, 0.0);
  const Postprocessor pp(s.mesh, WeightScheme::InversePermeability, s.flow.permeability);
  const auto v = pp.apply(u, src).flux;
  TransportProblem tp;
  tp.porosity = CellField(s.mesh.num_elements(), 1.0);
  tp.inflow = [](double, Point) { return 1.0; };
  const auto c0 = initial_state(s.mesh, tp);
  for (auto _ : state) benchmark::DoNotOptimize(advance_transport(c0, v, s.mesh, tp, 0.01));
}

}  // namespace

BENCHMARK(BM_FlowSolve)->Arg(16)->Arg(32)->Arg(64)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_CorrectionAssembly)->Arg(32)->Arg(64)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_CorrectionSolve)->ArgsProduct({{32, 64}, {0, 1}})->Unit(benchmark::kMillisecond);
BENCHMARK(BM_TransportStep)->Arg(32)->Arg(64)->Unit(benchmark::kMillisecond);

BENCHMARK_MAIN();
