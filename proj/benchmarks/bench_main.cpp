#include <benchmark/benchmark.h>

#include <random>

#include "cohset/coherent.hpp"
#include "cohset/generator.hpp"
#include "cohset/sde.hpp"
#include "cohset/spectral_solver.hpp"

using namespace cohset;

namespace {

const Point2 kAlpha{0.2, 0.2 * 1.4142135623730951};
constexpr double kEps = 0.03;

void BM_AssembleTranslatedGyres(benchmark::State& state) {
  const auto field = builtin_translated_gyres();
  const auto modes = ModeSet::class_union(2, static_cast<double>(state.range(0)));
  for (auto _ : state) benchmark::DoNotOptimize(assemble(field, modes, kEps, kAlpha));
  state.counters["dim"] = static_cast<double>(modes.size());
}
BENCHMARK(BM_AssembleTranslatedGyres)->Arg(6)->Arg(11)->Unit(benchmark::kMillisecond);

void BM_AssembleOscillatingGyres(benchmark::State& state) {
  const auto field = builtin_oscillating_gyres(0.15);
  const auto modes = ModeSet::product_ball(static_cast<int>(state.range(0)), 8);
  for (auto _ : state) benchmark::DoNotOptimize(assemble(field, modes, kEps, kAlpha));
  state.counters["dim"] = static_cast<double>(modes.size());
}
BENCHMARK(BM_AssembleOscillatingGyres)->Arg(2)->Arg(6)->Unit(benchmark::kMillisecond);

void BM_Apply(benchmark::State& state) {
  const auto gen = assemble(builtin_oscillating_gyres(0.15), ModeSet::product_ball(6, 8), kEps, kAlpha);
  std::mt19937_64 rng(1);
  std::normal_distribution<double> normal;
  CoefficientVector f(static_cast<Eigen::Index>(gen.dim()));
  for (Eigen::Index i = 0; i < f.size(); ++i) f(i) = Complex(normal(rng), normal(rng));
  for (auto _ : state) benchmark::DoNotOptimize(cohset::apply(gen, f));
  state.counters["nnz"] = static_cast<double>(gen.nnz());
}
BENCHMARK(BM_Apply)->Unit(benchmark::kMicrosecond);

void BM_ShiftInvertTranslatedGyres(benchmark::State& state) {
  const auto gen = assemble(builtin_translated_gyres(), ModeSet::class_union(2, 6), kEps, kAlpha);
  SolverConfig cfg;
  cfg.k = static_cast<int>(state.range(0));
  for (auto _ : state) benchmark::DoNotOptimize(solve_shift_invert(gen, cfg));
}
BENCHMARK(BM_ShiftInvertTranslatedGyres)->Arg(20)->Unit(benchmark::kMillisecond);

CoherentFamilySpec random_family(int grid) {
  CoherentFamilySpec spec;
  spec.modeset = ModeSet::class_union(2, 11);
  std::mt19937_64 rng(3);
  std::normal_distribution<double> normal;
  spec.pair.z = Complex(-0.09, -1.04);
  spec.pair.vector.resize(static_cast<Eigen::Index>(spec.modeset.size()));
  for (Eigen::Index i = 0; i < spec.pair.vector.size(); ++i) spec.pair.vector(i) = Complex(normal(rng), normal(rng));
  spec.method = Method::cs3;
  spec.grid_size = grid;
  return spec;
}

void BM_EvalFibre(benchmark::State& state) {
  const auto spec = random_family(static_cast<int>(state.range(0)));
  double t = 0.0;
  for (auto _ : state) {
    benchmark::DoNotOptimize(eval_fibre(spec, driving_state({0, 0}, kAlpha, t)));
    t += 0.01;
  }
}
BENCHMARK(BM_EvalFibre)->Arg(128)->Arg(256)->Unit(benchmark::kMicrosecond);

void BM_StepEnsemble(benchmark::State& state) {
  const auto field = builtin_oscillating_gyres(0.15);
  const ParticleStreams streams(42);
  auto positions = particle_grid(150);
  const auto integrator = state.range(0) == 0 ? Integrator::euler_maruyama : Integrator::heun;
  std::uint64_t step = 0;
  for (auto _ : state) {
    step_ensemble(positions, field, {0, 0}, kAlpha, 0.01 * static_cast<double>(step), 0.01, kEps, streams, step,
                  integrator);
    ++step;
  }
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(positions.size()));
  state.SetLabel(to_string(integrator));
}
BENCHMARK(BM_StepEnsemble)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);

void BM_NormalPair(benchmark::State& state) {
  const ParticleStreams streams(42);
  std::uint64_t i = 0;
  for (auto _ : state) benchmark::DoNotOptimize(streams.normal_pair(i++, 7));
}
BENCHMARK(BM_NormalPair);

}  // namespace
BENCHMARK_MAIN();
