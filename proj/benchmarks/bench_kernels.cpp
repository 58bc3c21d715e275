#include <benchmark/benchmark.h>

#include "vwp/kernels.hpp"
#include "vwp/rng.hpp"

namespace {

vwp::Tensor random_matrix(std::size_t rows, std::size_t cols, std::uint64_t seed) {
  vwp::Rng rng(seed);
  vwp::Tensor t = vwp::Tensor::matrix(rows, cols);
  for (double& x : t.data()) x = rng.normal();
  return t;
}

void BM_Matmul(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  const auto a = random_matrix(n, n, 1), b = random_matrix(n, n, 2);
  for (auto _ : state) benchmark::DoNotOptimize(vwp::kernels::matmul(a, b));
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(n * n * n));
}
BENCHMARK(BM_Matmul)->RangeMultiplier(2)->Range(16, 256);

void BM_Softmax(benchmark::State& state) {
  const auto cols = static_cast<std::size_t>(state.range(0));
  const auto logits = random_matrix(64, cols, 3);
  for (auto _ : state) benchmark::DoNotOptimize(vwp::kernels::softmax(logits));
}
BENCHMARK(BM_Softmax)->Arg(128)->Arg(1024)->Arg(8192);

void BM_CausalSoftmax(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  const auto scores = random_matrix(n, n, 4);
  for (auto _ : state) benchmark::DoNotOptimize(vwp::kernels::causal_softmax(scores));
}
BENCHMARK(BM_CausalSoftmax)->Arg(64)->Arg(256);

}  // namespace
