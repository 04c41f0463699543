#include <benchmark/benchmark.h>

#include <vector>

#include "pdml/losses.hpp"
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

void BM_NcaLoss(benchmark::State& state) {
  const auto dim = static_cast<std::size_t>(state.range(0));
  const auto negs = static_cast<std::size_t>(state.range(1));
  const Matrix negatives = random_matrix(negs, dim, 1);
  const Matrix endpoints = random_matrix(2, dim, 2);
  for (auto _ : state) {
    benchmark::DoNotOptimize(
        nca_loss(endpoints.row(0), endpoints.row(1), negatives).value);
  }
  state.SetItemsProcessed(state.iterations());
}
BENCHMARK(BM_NcaLoss)->Args({16, 8})->Args({16, 32})->Args({64, 32})->Args({64, 128});

void BM_TripletHingeLoss(benchmark::State& state) {
  const auto dim = static_cast<std::size_t>(state.range(0));
  const Matrix pts = random_matrix(3, dim, 3);
  for (auto _ : state) {
    benchmark::DoNotOptimize(
        triplet_hinge_loss(pts.row(0), pts.row(1), pts.row(2), 1.0).value);
  }
  state.SetItemsProcessed(state.iterations());
}
BENCHMARK(BM_TripletHingeLoss)->Arg(16)->Arg(64);

void BM_SemihardBatch(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  const Matrix batch = random_matrix(n, 16, 4);
  std::vector<int> labels(n);
  for (std::size_t i = 0; i < n; ++i) labels[i] = static_cast<int>(i % 8);
  for (auto _ : state) {
    benchmark::DoNotOptimize(semihard_triplet_batch_loss(batch, labels, 1.0).value);
  }
  state.SetItemsProcessed(state.iterations());
}
BENCHMARK(BM_SemihardBatch)->Arg(32)->Arg(64)->Arg(128);

}  // namespace
