#include <benchmark/benchmark.h>

#include "cfprop/dataset.hpp"
#include "cfprop/graph.hpp"
#include "cfprop/objective.hpp"
#include "cfprop/trainer.hpp"

using namespace cfprop;

namespace {

Matrix random_matrix(Rng& rng, std::size_t r, std::size_t c) {
  Matrix m(r, c);
  for (auto& v : m.data()) v = rng.uniform(-1.0, 1.0);
  return m;
}

void BM_Matmul(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  Rng rng(1);
  const Matrix a = random_matrix(rng, n, n);
  const Matrix b = random_matrix(rng, n, n);
  for (auto _ : state) {
    benchmark::DoNotOptimize(matmul(a, b));
  }
}
BENCHMARK(BM_Matmul)->Arg(16)->Arg(64)->Arg(128);

void BM_KernelWeight(benchmark::State& state) {
  Rng rng(2);
  const SimilarityGraph g(random_matrix(rng, 1000, 8), 10.0);
  std::size_t i = 0;
  for (auto _ : state) {
    benchmark::DoNotOptimize(g.kernel_weight(i % 1000, (i * 7 + 3) % 1000));
    ++i;
  }
}
BENCHMARK(BM_KernelWeight);

void BM_ForwardBackward(benchmark::State& state) {
  const auto batch = static_cast<std::size_t>(state.range(0));
  Rng rng(3);
  const TarnetParams params = init_params(8, ArchSpec{}, rng);
  const Matrix x = random_matrix(rng, batch, 8);
  const std::vector<double> dpred(batch, 1.0);
  TarnetGrads grads = zeros_like(params);
  for (auto _ : state) {
    grads.set_zero();
    const ForwardResult fwd = forward_both(params, x);
    backward_both(params, fwd.cache, dpred, dpred, grads);
    benchmark::DoNotOptimize(grads);
  }
}
BENCHMARK(BM_ForwardBackward)->Arg(16)->Arg(64);

void BM_TrainEpochs(benchmark::State& state) {
  const Dataset ds = gen_synthetic(500, 8, 1.0, 4);
  const SplitIndices idx = split(ds, {0.1, 0.1, 0.8, 5});
  TrainConfig cfg;
  cfg.max_epochs = 10;
  cfg.warmup_epochs = 2;
  cfg.patience = 10;
  cfg.pca_dims = 8;
  cfg.sigma2 = 10.0;
  for (auto _ : state) {
    benchmark::DoNotOptimize(train(ds, idx, cfg));
  }
}
BENCHMARK(BM_TrainEpochs)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
