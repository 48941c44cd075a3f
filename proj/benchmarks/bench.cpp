#include <benchmark/benchmark.h>

#include <random>

#include "vtrace/halfspace.hpp"
#include "vtrace/luxemburg.hpp"
#include "vtrace/solver.hpp"

namespace {

using namespace vtrace;

void BM_LuxemburgNorm(benchmark::State& state) {
  const auto n = static_cast<int>(state.range(0));
  std::mt19937_64 rng(1);
  std::uniform_real_distribution<double> U(0.0, 1.0);
  WeightedSamples s;
  s.dimension = 2;
  for (int i = 0; i < n; ++i) {
    s.points.insert(s.points.end(), {U(rng), U(rng)});
    s.weights.push_back(1.0 / n);
    s.values.push_back(U(rng) * 3.0);
  }
  const auto p = ExponentField::parse("1.5 + x1*x2", 2);
  const auto atoms = make_atoms(s, p, ModularKind::Lebesgue);
  for (auto _ : state) benchmark::DoNotOptimize(atom_norm(atoms.view()).norm);
  state.SetItemsProcessed(state.iterations() * n);
}
BENCHMARK(BM_LuxemburgNorm)->Arg(1 << 10)->Arg(1 << 14)->Arg(1 << 18);

void BM_MeshDisk(benchmark::State& state) {
  const double h = 1.0 / static_cast<double>(state.range(0));
  const auto disk = Boundary::disk({0, 0}, 1);
  for (auto _ : state) benchmark::DoNotOptimize(generate_mesh(disk, h).triangles.size());
}
BENCHMARK(BM_MeshDisk)->Arg(10)->Arg(20)->Arg(40)->Unit(benchmark::kMillisecond);

void BM_QuotientGradient(benchmark::State& state) {
  const double h = 1.0 / static_cast<double>(state.range(0));
  const DiscreteTraceProblem pb(PlanarDomain::mesh_domain(Boundary::disk({0, 0}, 1), h),
                                ExponentField::parse("1.4 + 0.1*x1", 2), ExponentField::constant(1.6, 2));
  const auto u = initial_guess(pb, {InitKind::Random, 3});
  for (auto _ : state) benchmark::DoNotOptimize(quotient_gradient(u, pb).quotient);
  state.counters["nodes"] = static_cast<double>(pb.size());
}
BENCHMARK(BM_QuotientGradient)->Arg(10)->Arg(20)->Arg(40)->Unit(benchmark::kMillisecond);

void BM_SharpConstant(benchmark::State& state) {
  for (auto _ : state) benchmark::DoNotOptimize(sharp_constant_quadrature(3, 2.0).K_inv);
}
BENCHMARK(BM_SharpConstant)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
