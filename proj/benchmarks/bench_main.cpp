#include "shapeopt/adjoint.hpp"
#include "shapeopt/constraints.hpp"
#include "shapeopt/descent.hpp"
#include "shapeopt/mesh_generators.hpp"
#include "shapeopt/shape_gradient.hpp"

#include <benchmark/benchmark.h>

using namespace shapeopt;

namespace {

const Mesh& coarse() {
  static const Mesh m = cylinder_channel_mesh(CylinderChannelParams::level(0));
  return m;
}

struct Solved {
  PrimalState primal;
  AdjointState adjoint;
};

const Solved& solved() {
  static const Solved s = [] {
    Solved out;
    out.primal = solve_primal(coarse(), FluidProps{}, FlowConfig{});
    out.adjoint = solve_adjoint(out.primal, build_extension_eta(coarse()), FluidProps{}, coarse(), FlowConfig{});
    return out;
  }();
  return s;
}

void BM_MeshGeneration(benchmark::State& state) {
  const auto params = CylinderChannelParams::level(static_cast<int>(state.range(0)));
  for (auto _ : state) benchmark::DoNotOptimize(cylinder_channel_mesh(params));
}
BENCHMARK(BM_MeshGeneration)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);

void BM_DeformAndCheck(benchmark::State& state) {
  const VertexField V(coarse().num_vertices(), Vec2(1e-3, 0.0));
  for (auto _ : state) benchmark::DoNotOptimize(quality_check(apply_deformation(coarse(), V, 1.0)));
}
BENCHMARK(BM_DeformAndCheck)->Unit(benchmark::kMicrosecond);

void BM_PrimalSolve(benchmark::State& state) {
  for (auto _ : state) benchmark::DoNotOptimize(solve_primal(coarse(), FluidProps{}, FlowConfig{}));
}
BENCHMARK(BM_PrimalSolve)->Unit(benchmark::kMillisecond)->Iterations(3);

void BM_AdjointSolve(benchmark::State& state) {
  const auto eta = build_extension_eta(coarse());
  for (auto _ : state)
    benchmark::DoNotOptimize(solve_adjoint(solved().primal, eta, FluidProps{}, coarse(), FlowConfig{}));
}
BENCHMARK(BM_AdjointSolve)->Unit(benchmark::kMillisecond)->Iterations(3);

void BM_Constraints(benchmark::State& state) {
  FlowConfig cfg;
  cfg.waterline = 0.0;
  cfg.delta_c = 0.05;
  const PhaseField phase = cfg.phase();
  for (auto _ : state) benchmark::DoNotOptimize(constraint_loads(coarse(), phase));
}
BENCHMARK(BM_Constraints)->Unit(benchmark::kMicrosecond);

void BM_Descent(benchmark::State& state) {
  const SensitivityForm form = assemble_sensitivity(solved().primal, solved().adjoint, coarse(), FluidProps{},
                                                    FlowConfig{}, ConstraintVector::Zero(), 10.0,
                                                    ConstraintVector::Zero());
  DescentConfig cfg;
  cfg.omega = 0.1;
  for (auto _ : state) benchmark::DoNotOptimize(solve_descent(form, coarse(), cfg));
}
BENCHMARK(BM_Descent)->Unit(benchmark::kMillisecond)->Iterations(3);

}  // namespace

BENCHMARK_MAIN();
