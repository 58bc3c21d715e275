#include <benchmark/benchmark.h>

#include "vwp/chargrid.hpp"
#include "vwp/model.hpp"
#include "vwp/synthetic.hpp"

namespace {

vwp::ModelConfig bench_config(std::size_t d_model, std::size_t layers) {
  vwp::ModelConfig c;
  c.d_model = d_model;
  c.n_layers = layers;
  c.n_heads = 4;
  c.d_ff = 4 * d_model;
  c.vocab_size = 64;
  c.max_text = 40;
  c.feature_dim = 8;
  c.n_max = 5;
  c.m_max = 3;
  c.obj_max = 1;
  c.features = {true, true, false};
  c.grid_mode = vwp::GridMode::kChar;
  c.dropout = 0.0;
  return c;
}

vwp::InputLayout bench_layout(const vwp::ModelConfig& c) {
  vwp::LearnabilityConfig lc;
  lc.sequences = 1;
  const auto rec = vwp::make_learnability_corpus(lc).front();
  std::vector<vwp::TokenId> story;
  for (std::size_t i = 0; i + 1 < c.max_text; ++i) story.push_back(static_cast<vwp::TokenId>(8 + i % 40));
  return vwp::assemble_input(c, vwp::make_conditioning(c, rec), story);
}

void BM_ForwardLogits(benchmark::State& state) {
  const auto c = bench_config(static_cast<std::size_t>(state.range(0)), static_cast<std::size_t>(state.range(1)));
  const auto model = vwp::build_model(c);
  const auto layout = bench_layout(c);
  for (auto _ : state) benchmark::DoNotOptimize(vwp::forward_logits(model, layout));
}
BENCHMARK(BM_ForwardLogits)->Args({32, 2})->Args({64, 2})->Args({128, 4})->Unit(benchmark::kMicrosecond);

void BM_LossBackward(benchmark::State& state) {
  const auto c = bench_config(static_cast<std::size_t>(state.range(0)), 2);
  auto model = vwp::build_model(c);
  const auto layout = bench_layout(c);
  for (auto _ : state) benchmark::DoNotOptimize(vwp::story_loss_backward(model, layout));
}
BENCHMARK(BM_LossBackward)->Arg(32)->Arg(64)->Unit(benchmark::kMicrosecond);

void BM_ComputeGrid(benchmark::State& state) {
  vwp::FixtureConfig fc;
  fc.sequences = 1;
  fc.feature_dim = static_cast<std::size_t>(state.range(0));
  const auto rec = vwp::make_fixture_dataset(fc).front();
  for (auto _ : state) benchmark::DoNotOptimize(vwp::compute_grid(rec));
}
BENCHMARK(BM_ComputeGrid)->Arg(16)->Arg(512)->Arg(2048);

}  // namespace
