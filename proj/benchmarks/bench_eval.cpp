#include <benchmark/benchmark.h>

#include <vector>

#include "pdml/eval.hpp"
#include "pdml/rng.hpp"

namespace {

using namespace pdml;

Matrix random_matrix(std::size_t rows, std::size_t cols, std::uint64_t seed) {
  Rng rng(seed);
  std::uniform_real_distribution<double> dist(-1.0, 1.0);
  Matrix m(rows, cols);
  for (double& v : m.data) v = dist(rng);
  return m;
}

std::vector<int> cyclic_labels(std::size_t n, int classes) {
  std::vector<int> labels(n);
  for (std::size_t i = 0; i < n; ++i) labels[i] = static_cast<int>(i) % classes;
  return labels;
}

void BM_RecallAtK(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  const Matrix embeddings = random_matrix(n, 16, 5);
  const std::vector<int> labels = cyclic_labels(n, 16);
  const std::vector<std::size_t> ks = {1, 2, 4, 8};
  for (auto _ : state) {
    benchmark::DoNotOptimize(recall_at_k(embeddings, labels, ks).num_queries);
  }
  state.SetItemsProcessed(state.iterations() * n);
}
BENCHMARK(BM_RecallAtK)->Arg(128)->Arg(512)->Arg(1024);

void BM_Kmeans(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  const Matrix points = random_matrix(n, 16, 6);
  for (auto _ : state) {
    benchmark::DoNotOptimize(kmeans(points, 16, 0).inertia);
  }
  state.SetItemsProcessed(state.iterations() * n);
}
BENCHMARK(BM_Kmeans)->Arg(256)->Arg(1024);

void BM_Nmi(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  Rng rng(7);
  std::uniform_int_distribution<int> pick(0, 15);
  std::vector<int> a(n), b(n);
  for (int& v : a) v = pick(rng);
  for (int& v : b) v = pick(rng);
  for (auto _ : state) {
    benchmark::DoNotOptimize(nmi(a, b));
  }
  state.SetItemsProcessed(state.iterations() * n);
}
BENCHMARK(BM_Nmi)->Arg(1024)->Arg(4096);

}  // namespace
