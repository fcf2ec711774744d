#include <benchmark/benchmark.h>

#include <random>

#include "nli/autograd/ops.hpp"
#include "nli/model/transformer.hpp"
#include "nli/train/loss.hpp"
#include "nli/train/optimizer.hpp"

namespace {

using namespace nli;

Tensor<float> random_matrix(std::size_t rows, std::size_t cols, std::mt19937_64& rng) {
  std::normal_distribution<float> dist(0.0f, 1.0f);
  std::vector<float> v(rows * cols);
  for (auto& x : v) x = dist(rng);
  return Tensor<float>({rows, cols}, std::move(v));
}

std::vector<EncodedPair> random_batch(std::size_t batch, std::size_t length, std::size_t vocab, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<std::int64_t> tok(3, static_cast<std::int64_t>(vocab) - 1);
  std::vector<EncodedPair> out(batch);
  for (std::size_t b = 0; b < batch; ++b) {
    for (std::size_t t = 0; t + 1 < length; ++t) out[b].token_ids.push_back(tok(rng));
    out[b].token_ids.push_back(2);
    for (std::size_t t = 0; t < length; ++t) out[b].position_ids.push_back(static_cast<std::int64_t>(t + 1));
    out[b].label = kAllLabels[b % kNumClasses];
  }
  return out;
}

ModelConfig bench_config(std::size_t blocks) {
  ModelConfig c;  // full-width layers, small vocabulary
  c.n_blocks = blocks;
  c.vocab_words = 2000;
  return c;
}

void BM_Matmul(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  std::mt19937_64 rng(1);
  const auto a = random_matrix(n, 240, rng);
  const auto b = random_matrix(240, n, rng);
  for (auto _ : state) benchmark::DoNotOptimize(matmul(a, b).data().data());
  state.SetItemsProcessed(static_cast<std::int64_t>(state.iterations() * n * n * 240));
}
BENCHMARK(BM_Matmul)->Arg(64)->Arg(256)->Arg(960);

void BM_Forward(benchmark::State& state) {
  const auto len = static_cast<std::size_t>(state.range(0));
  const TransformerClassifier<float> model(bench_config(12), 1);
  const auto pairs = random_batch(16, len, 2000, 2);
  const TokenBatch batch = TokenBatch::from_pairs(std::span<const EncodedPair>(pairs));
  NoGradScope<float> off;
  for (auto _ : state) benchmark::DoNotOptimize(model.probabilities(batch).data().data());
  state.SetItemsProcessed(static_cast<std::int64_t>(state.iterations() * 16));
}
BENCHMARK(BM_Forward)->Arg(16)->Arg(32)->Unit(benchmark::kMillisecond);

void BM_TrainStep(benchmark::State& state) {
  TransformerClassifier<float> model(bench_config(static_cast<std::size_t>(state.range(0))), 3);
  const auto pairs = random_batch(16, 24, 2000, 4);
  const TokenBatch batch = TokenBatch::from_pairs(std::span<const EncodedPair>(pairs));
  std::vector<Tensor<float>> params = model.parameters().tensors();
  Adam<float> adam(params, AdamHyper{});
  for (auto _ : state) {
    GradTape<float> tape;
    {
      TapeScope<float> scope(tape);
      tape.backward(nll_loss(model.probabilities(batch), std::span<const NliLabel>(batch.labels)));
    }
    clip_gradients(std::span<Tensor<float>>(params), 1.0f);
    adam.step(params, 6.25e-5);
    zero_gradients(std::span<Tensor<float>>(params));
  }
  state.SetItemsProcessed(static_cast<std::int64_t>(state.iterations() * 16));
}
BENCHMARK(BM_TrainStep)->Arg(1)->Arg(12)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
