// Copyright 2026 The tfcodec Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

// Micro-benchmarks: range coder throughput, CDF construction and entropy
// decoding in serial vs two-pass mode on an untrained toy model.

#include <benchmark/benchmark.h>

#include <vector>

#include "tfc/coder.hpp"
#include "tfc/corpus.hpp"
#include "tfc/pipeline.hpp"

namespace {

using namespace tfc;

struct Symbols {
  std::vector<int32_t> values;
  std::vector<QuantizedCdf> cdfs;
};

Symbols make_symbols(int64_t n) {
  Rng rng(1);
  Symbols s;
  for (int64_t i = 0; i < n; ++i) {
    const double sigma = rng.uniform(0.2, 4.0);
    s.cdfs.push_back(build_cdf(0.0, sigma, -12, 12));
    s.values.push_back(static_cast<int32_t>(std::lround(rng.normal() * sigma * 0.5)));
  }
  return s;
}

void BM_RangeEncode(benchmark::State& state) {
  const Symbols s = make_symbols(state.range(0));
  for (auto _ : state) benchmark::DoNotOptimize(range_encode(s.values, s.cdfs));
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_RangeEncode)->Arg(1 << 16);

void BM_RangeDecode(benchmark::State& state) {
  const Symbols s = make_symbols(state.range(0));
  const auto bytes = range_encode(s.values, s.cdfs);
  for (auto _ : state) benchmark::DoNotOptimize(range_decode(bytes, s.cdfs));
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_RangeDecode)->Arg(1 << 16);

void BM_BuildCdf(benchmark::State& state) {
  Rng rng(2);
  for (auto _ : state) {
    const double sigma = rng.uniform(0.2, 8.0);
    benchmark::DoNotOptimize(build_cdf(rng.uniform(-3, 3), sigma, -40, 40));
  }
}
BENCHMARK(BM_BuildCdf);

const CompressionModel& toy_model() {
  static const CompressionModel model = [] {
    ModelConfig mc;
    mc.ae_channels = 16;
    mc.entropy.d_model = 32;
    mc.entropy.heads = 4;
    return CompressionModel(mc, 1);
  }();
  return model;
}

// Entropy decoding of a grid x grid latent tensor.
void entropy_decode(benchmark::State& state, CodecMode mode) {
  const CompressionModel& m = toy_model();
  const int64_t grid = state.range(0);
  Rng rng(3);
  const Tensor x = synthetic_image(16 * grid, 16 * grid, rng);
  CodecOptions opt;
  opt.mode = mode;
  const Bitstream s = parse_bitstream(encode(m, x, opt).bytes);
  int64_t passes = 0;
  for (auto _ : state) passes = decode_latents(m, s).predict_calls;
  state.counters["passes"] = static_cast<double>(passes);
}

void BM_DecodeSerial(benchmark::State& state) { entropy_decode(state, CodecMode::serial); }
void BM_DecodeParallel(benchmark::State& state) { entropy_decode(state, CodecMode::parallel); }
BENCHMARK(BM_DecodeSerial)->Arg(4)->Arg(8)->Arg(16)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_DecodeParallel)->Arg(4)->Arg(8)->Arg(16)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
