/* Copyright 2026 The MSwin Authors. All Rights Reserved.

Licensed under the Apache License, Version 2.0 (the "License");
you may not use this file except in compliance with the License.
You may obtain a copy of the License at

    http://www.apache.org/licenses/LICENSE-2.0

Unless required by applicable law or agreed to in writing, software
distributed under the License is distributed on an "AS IS" BASIS,
WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
See the License for the specific language governing permissions and
limitations under the License.
==============================================================================*/

#include <benchmark/benchmark.h>

#include <random>

#include "mswin/attention.hpp"
#include "mswin/model.hpp"
#include "mswin/ops.hpp"

namespace mswin {
namespace {

Tensor<float> noise(Shape shape, Rng& rng) {
  std::normal_distribution<float> dist(0.0f, 1.0f);
  Tensor<float> t(std::move(shape));
  for (auto& v : t.values()) v = dist(rng);
  return t;
}

void BM_Linear(benchmark::State& state) {
  const auto rows = state.range(0), d = state.range(1);
  Rng rng(0);
  const auto x = noise({rows, d}, rng), w = noise({d, d}, rng), b = noise({d}, rng);
  for (auto _ : state) benchmark::DoNotOptimize(linear(x, w, b));
  state.counters["flops"] = benchmark::Counter(2.0 * rows * d * d, benchmark::Counter::kIsIterationInvariantRate);
}
BENCHMARK(BM_Linear)->Args({1024, 64})->Args({4096, 128})->Args({1024, 512});

// Shifted-window attention on a square map; args: side, window, shift.
void BM_WindowAttention(benchmark::State& state) {
  const auto side = state.range(0), m = state.range(1), n = state.range(2);
  Rng rng(1);
  const auto params = AttentionParams<float>::init(64, 4, m, n, rng);
  const auto x = noise({side, side, 64}, rng);
  for (auto _ : state) benchmark::DoNotOptimize(windowed_self_attention(x, params));
}
BENCHMARK(BM_WindowAttention)
    ->Args({16, 5, 0})->Args({16, 5, 2})->Args({32, 7, 3})->Args({32, 12, 6});

ModelConfig bench_model(DecoderKind kind) {
  ModelConfig c;
  c.decoder.kind = kind;
  c.decoder.channels = 32;
  c.decoder.heads = 2;
  c.aux_hidden = 32;
  return c;
}

void BM_ForwardEval(benchmark::State& state) {
  const auto kind = static_cast<DecoderKind>(state.range(0));
  SegmentationModel<float> model(bench_model(kind));
  Rng rng(2);
  const auto image = noise({1, 64, 64, 3}, rng);
  for (auto _ : state) benchmark::DoNotOptimize(model.forward(image, Mode::kEval).logits);
  state.SetLabel(decoder_name(kind));
}
BENCHMARK(BM_ForwardEval)->DenseRange(0, 3)->Unit(benchmark::kMillisecond);

void BM_TrainStep(benchmark::State& state) {
  const auto kind = static_cast<DecoderKind>(state.range(0));
  SegmentationModel<float> model(bench_model(kind));
  Rng rng(3);
  const auto image = noise({4, 64, 64, 3}, rng);
  std::vector<std::uint8_t> labels(4 * 64 * 64);
  for (auto& l : labels) l = static_cast<std::uint8_t>(rng() % 4);
  for (auto _ : state) {
    Tape<float> tape;
    TapeGuard guard(tape);
    const auto out = model.forward(image, Mode::kTrain, true);
    const auto loss = add(cross_entropy(out.logits, labels),
                          scale(cross_entropy(out.aux_logits, labels), static_cast<float>(kAuxLossWeight)));
    tape.backward(loss);
    for (const auto& p : model.parameters()) p.tensor.clear_grad();
  }
  state.SetLabel(decoder_name(kind));
}
BENCHMARK(BM_TrainStep)->DenseRange(0, 3)->Unit(benchmark::kMillisecond);

}  // namespace
}  // namespace mswin

BENCHMARK_MAIN();
