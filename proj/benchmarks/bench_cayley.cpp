// Per-step cost of the structured Cayley solve against the dense one.
//   ./qsm_bench --benchmark_filter=Woodbury

#include <benchmark/benchmark.h>

#include <cmath>

#include "qsm/qsm.hpp"

namespace {

struct Setup {
  qsm::InteractionFactors f;
  qsm::WaveState psi;

  Setup(Eigen::Index n, Eigen::Index r) {
    qsm::Rng rng(static_cast<std::uint64_t>(n * 31 + r));
    f.phi = qsm::sample_ginibre(n, r, rng) / std::sqrt(static_cast<double>(n));
    f.delta.resize(n);
    for (Eigen::Index j = 0; j < n; ++j) f.delta(j) = rng.normal();
    psi = qsm::WaveState::unchecked(qsm::sample_unit_vector(n, rng));
  }
};

void BM_Woodbury(benchmark::State& state) {
  Setup s(state.range(0), state.range(1));
  qsm::WoodburyWorkspace ws;
  qsm::CVector c = s.psi.amplitudes();
  for (auto _ : state) {
    qsm::cayley_step_woodbury_inplace(s.f, c, 1.0, ws);
    benchmark::DoNotOptimize(c.data());
  }
  state.SetComplexityN(state.range(0));
}

// Includes forming H, which a dense integrator pays every step.
void BM_Dense(benchmark::State& state) {
  Setup s(state.range(0), state.range(1));
  for (auto _ : state) {
    s.psi = qsm::cayley_step_dense(s.f.materialize(), s.psi, 1.0);
    benchmark::DoNotOptimize(s.psi);
  }
  state.SetComplexityN(state.range(0));
}

void BM_Midpoint(benchmark::State& state) {
  Setup s(state.range(0), 4);
  const qsm::CMatrix h = s.f.materialize();
  const qsm::WaveState next = qsm::cayley_step_dense(h, s.psi, 1.0);
  for (auto _ : state) benchmark::DoNotOptimize(qsm::midpoint_current(h, s.psi, next));
}

}  // namespace

BENCHMARK(BM_Woodbury)->ArgsProduct({{64, 128, 256, 512, 1024}, {1, 4, 16}})->Complexity(benchmark::oN);
BENCHMARK(BM_Dense)->ArgsProduct({{64, 128, 256, 512}, {4}})->Complexity(benchmark::oNCubed);
BENCHMARK(BM_Midpoint)->Arg(64)->Arg(256);

BENCHMARK_MAIN();
