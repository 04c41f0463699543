#include <benchmark/benchmark.h>

#include "pdml/embedding.hpp"
#include "pdml/trainer.hpp"

namespace {

using namespace pdml;

Dataset bench_dataset(std::size_t classes, std::size_t per_class, std::size_t dim) {
  SynthConfig cfg;
  cfg.num_classes = classes;
  cfg.per_class = per_class;
  cfg.dim = dim;
  cfg.center_scale = 10.0;
  cfg.stddev = 0.5;
  cfg.seed = 11;
  return generate_synthetic(cfg);
}

void BM_EmbedAll(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  const Dataset ds = bench_dataset(8, n / 8, 32);
  const auto model = init_model(
      32, {{32, Activation::rectifier}, {16, Activation::identity}}, 1);
  for (auto _ : state) {
    benchmark::DoNotOptimize(embed_all(model, ds.points).data.data());
  }
  state.SetItemsProcessed(state.iterations() * n);
}
BENCHMARK(BM_EmbedAll)->Arg(256)->Arg(1024);

void BM_TrainSteps(benchmark::State& state) {
  const auto steps = static_cast<std::size_t>(state.range(0));
  const Dataset ds = bench_dataset(8, 20, 16);

  ModelConfig model_cfg;
  model_cfg.embed_dim = 8;
  TrainConfig cfg;
  cfg.steps = steps;
  cfg.batch_size = 32;
  cfg.eval_every = steps;
  EvalConfig eval_cfg;
  eval_cfg.ks = {1};

  for (auto _ : state) {
    benchmark::DoNotOptimize(train(model_cfg, cfg, ds, ds, eval_cfg).stats.steps_run);
  }
  state.SetItemsProcessed(state.iterations() * steps);
}
BENCHMARK(BM_TrainSteps)->Arg(10)->Arg(50);

}  // namespace

BENCHMARK_MAIN();
