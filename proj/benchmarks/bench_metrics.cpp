#include <benchmark/benchmark.h>

#include "vwp/metrics.hpp"
#include "vwp/rng.hpp"

namespace {

std::vector<vwp::EvalPair> corpus(std::size_t pairs, std::size_t length) {
  static const std::vector<std::string> words = {"the", "man", "woman", "walks", "home", "dog", "park",
                                                 "they", "eat", "dinner", "happy", "runs", "talks", "city"};
  vwp::Rng rng(42);
  auto sentence = [&] {
    vwp::Tokens t;
    for (std::size_t i = 0; i < length; ++i) t.push_back(words[rng.below(words.size())]);
    return t;
  };
  std::vector<vwp::EvalPair> out;
  for (std::size_t i = 0; i < pairs; ++i) out.push_back({sentence(), {sentence(), sentence()}});
  return out;
}

void BM_Bleu(benchmark::State& state) {
  const auto pairs = corpus(static_cast<std::size_t>(state.range(0)), 40);
  for (auto _ : state) benchmark::DoNotOptimize(vwp::bleu_corpus(pairs, 4));
}
BENCHMARK(BM_Bleu)->Arg(100)->Arg(1000);

void BM_Meteor(benchmark::State& state) {
  const auto pairs = corpus(100, static_cast<std::size_t>(state.range(0)));
  for (auto _ : state) benchmark::DoNotOptimize(vwp::meteor(pairs));
}
BENCHMARK(BM_Meteor)->Arg(10)->Arg(40)->Unit(benchmark::kMillisecond);

void BM_RougeL(benchmark::State& state) {
  const auto pairs = corpus(static_cast<std::size_t>(state.range(0)), 40);
  for (auto _ : state) benchmark::DoNotOptimize(vwp::rouge_l(pairs));
}
BENCHMARK(BM_RougeL)->Arg(100)->Arg(1000);

void BM_Cider(benchmark::State& state) {
  const auto pairs = corpus(static_cast<std::size_t>(state.range(0)), 40);
  for (auto _ : state) benchmark::DoNotOptimize(vwp::cider(pairs));
}
BENCHMARK(BM_Cider)->Arg(100)->Arg(1000)->Unit(benchmark::kMillisecond);

}  // namespace
