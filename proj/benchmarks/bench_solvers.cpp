// Microbenchmarks for the per-sweep cost of the two inner solvers and the
// operator applications they are built from. The headline effect to look for:
// the JOR sweep scales like the Hessian action while the ESOM route pays a
// dense factorization whenever the Hessian moves.

#include <benchmark/benchmark.h>

#include "indo/inner_solvers.hpp"
#include "indo/network.hpp"
#include "indo/objectives.hpp"
#include "indo/pmm.hpp"

using namespace indo;

namespace {

constexpr int kNodes = 10;

struct Fixture {
  ProblemInstance inst;
  Network net;
  Vec x, d, g;

  explicit Fixture(int n)
      : inst(quadratic_generate(n, kNodes, 1)), net(generate_rgg(kNodes, 2)) {
    Rng rng(3);
    const Eigen::Index dim = static_cast<Eigen::Index>(n) * kNodes;
    x.resize(dim);
    d.resize(dim);
    g.resize(dim);
    for (Eigen::Index i = 0; i < dim; ++i) {
      x[i] = rng.normal();
      d[i] = rng.normal();
      g[i] = rng.normal();
    }
  }
};

}  // namespace

static void BM_JorSweep(benchmark::State& state) {
  Fixture f(static_cast<int>(state.range(0)));
  JorSplitting split = jor_build(f.inst, f.net, f.x, f.inst.M, f.inst.M, 0.9);
  for (auto _ : state) benchmark::DoNotOptimize(jor_step(split, f.d, f.g));
}
BENCHMARK(BM_JorSweep)->Arg(50)->Arg(100)->Arg(200)->Arg(400);

static void BM_EsomSweep(benchmark::State& state) {
  Fixture f(static_cast<int>(state.range(0)));
  EsomSplitting split = esom_build(f.inst, f.net, f.x, f.inst.M, f.inst.M);
  for (auto _ : state) benchmark::DoNotOptimize(esom_step(split, f.d, f.g));
}
BENCHMARK(BM_EsomSweep)->Arg(50)->Arg(100)->Arg(200)->Arg(400);

static void BM_EsomFactorization(benchmark::State& state) {
  Fixture f(static_cast<int>(state.range(0)));
  for (auto _ : state)
    benchmark::DoNotOptimize(
        esom_build(f.inst, f.net, f.x, f.inst.M, f.inst.M));
}
BENCHMARK(BM_EsomFactorization)->Arg(50)->Arg(100)->Arg(200)->Arg(400);

static void BM_HessianApply(benchmark::State& state) {
  Fixture f(static_cast<int>(state.range(0)));
  JorSplitting split = jor_build(f.inst, f.net, f.x, f.inst.M, f.inst.M, 0.9);
  for (auto _ : state) benchmark::DoNotOptimize(split.apply_H(f.d));
}
BENCHMARK(BM_HessianApply)->Arg(50)->Arg(100)->Arg(200)->Arg(400);

BENCHMARK_MAIN();
