// Serial references against the OpenMP kernels. Set OMP_NUM_THREADS to compare thread counts.
#include <benchmark/benchmark.h>

#include "dno/bim.hpp"
#include "dno/cs.hpp"
#include "dno/profiles.hpp"
#include "dno/tfe.hpp"

using namespace dno;

namespace {

ExactPair pole_pair(int bits, bool finite) {
  PrecisionCtx ctx(bits);
  Depth d = finite ? Depth::finite(MpReal(ctx, 1.5)) : Depth::infinite();
  return polepair_exact(MpReal(ctx, 0.5), MpReal(ctx, -0.3), d);
}

void BM_bim_assembly(benchmark::State& state, bool parallel) {
  ExactPair p = pole_pair(106, true);
  const int M = static_cast<int>(state.range(0));
  for (auto _ : state) {
    BimKernels k = parallel ? assemble_kernels(p.profile, M) : assemble_kernels_serial(p.profile, M);
    benchmark::DoNotOptimize(k.A(0, 0));
  }
}

void BM_cs_columns(benchmark::State& state, bool parallel) {
  PrecisionCtx ctx(200);
  WaveProfile f = example_profile(ExampleKind::bandlimited, ctx);
  const int M = static_cast<int>(state.range(0));
  for (auto _ : state) {
    CsTerms t = parallel ? gn_recursion(f, 12, M, 16, false) : gn_recursion_serial(f, 12, M, 16, false);
    benchmark::DoNotOptimize(t.g.back().column(1)[1]);
  }
}

void BM_tfe(benchmark::State& state, bool parallel) {
  ExactPair p = pole_pair(106, true);
  const int M = static_cast<int>(state.range(0));
  Grid g(M, p.profile.L().ctx());
  SurfaceField D = p.dirichlet_on(g);
  for (auto _ : state) {
    TfeSolver t(p.profile, D, 16, parallel);
    t.run_to(6);
    benchmark::DoNotOptimize(t.gn(6).value(0));
  }
}

}  // namespace

BENCHMARK_CAPTURE(BM_bim_assembly, serial, false)->Arg(64)->Arg(128)->Unit(benchmark::kMillisecond);
BENCHMARK_CAPTURE(BM_bim_assembly, parallel, true)->Arg(64)->Arg(128)->Unit(benchmark::kMillisecond);
BENCHMARK_CAPTURE(BM_cs_columns, serial, false)->Arg(64)->Arg(128)->Unit(benchmark::kMillisecond);
BENCHMARK_CAPTURE(BM_cs_columns, parallel, true)->Arg(64)->Arg(128)->Unit(benchmark::kMillisecond);
BENCHMARK_CAPTURE(BM_tfe, serial, false)->Arg(32)->Arg(64)->Unit(benchmark::kMillisecond);
BENCHMARK_CAPTURE(BM_tfe, parallel, true)->Arg(32)->Arg(64)->Unit(benchmark::kMillisecond);

BENCHMARK_MAIN();
