// benchmarks/bench_main.cc

// Copyright 2026 The phonepool Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//  http://www.apache.org/licenses/LICENSE-2.0
//
// THIS CODE IS PROVIDED *AS IS* BASIS, WITHOUT WARRANTIES OR CONDITIONS OF ANY
// KIND, EITHER EXPRESS OR IMPLIED, INCLUDING WITHOUT LIMITATION ANY IMPLIED
// WARRANTIES OR CONDITIONS OF TITLE, FITNESS FOR A PARTICULAR PURPOSE,
// MERCHANTABLITY OR NON-INFRINGEMENT.
// See the Apache 2 License for the specific language governing permissions and
// limitations under the License.

#include <random>

#include <benchmark/benchmark.h>

#include "phonepool/features.h"
#include "phonepool/nnet/model.h"
#include "phonepool/pooling.h"
#include "phonepool/textproc.h"

namespace phonepool {
namespace {

Matrix Gaussian(int rows, int cols, std::mt19937_64& rng) {
  std::normal_distribution<double> g;
  Matrix m(rows, cols);
  for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = g(rng);
  return m;
}

void BM_PoolRuns(benchmark::State& state) {
  const int frames = static_cast<int>(state.range(0));
  std::mt19937_64 rng(1);
  FeatureMatrix f{"u", "", Gaussian(frames, 40, rng)};
  FrameAlignment ali{"u", {}};
  std::uniform_int_distribution<int> run(3, 12), lab(0, 39);
  while (static_cast<int>(ali.labels.size()) < frames) {
    int l = lab(rng);
    for (int k = run(rng); k > 0 && static_cast<int>(ali.labels.size()) < frames; --k) ali.labels.push_back(l);
  }
  for (auto _ : state) benchmark::DoNotOptimize(PoolRuns(f, ali));
  state.SetItemsProcessed(state.iterations() * frames);
}
BENCHMARK(BM_PoolRuns)->Arg(200)->Arg(1000)->Arg(5000);

void BM_LogMel(benchmark::State& state) {
  std::mt19937_64 rng(2);
  std::uniform_real_distribution<double> u(-0.5, 0.5);
  Waveform w;
  w.samples.resize(static_cast<std::size_t>(state.range(0)));
  for (auto& s : w.samples) s = u(rng);
  LogMelFrontend frontend(FrontendConfig(), 16000);
  for (auto _ : state) benchmark::DoNotOptimize(frontend.Compute(w));
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_LogMel)->Arg(16000)->Arg(160000);

void BM_EncoderForward(benchmark::State& state) {
  const int frames = static_cast<int>(state.range(0));
  nnet::EncoderConfig ec;
  ec.hidden = 128;
  nnet::DecoderConfig dc;
  dc.vocab_size = 100;
  nnet::Seq2SeqModel model(ec, dc, 3);
  std::mt19937_64 rng(3);
  Matrix src = Gaussian(frames, 40, rng);
  std::vector<const Matrix*> srcs{&src};
  for (auto _ : state) {
    nnet::Tape tape(false);
    benchmark::DoNotOptimize(model.Encode(tape, srcs, nnet::ForwardOptions{}).steps);
  }
  state.SetItemsProcessed(state.iterations() * frames);
}
BENCHMARK(BM_EncoderForward)->Arg(100)->Arg(400);

void BM_BpeApply(benchmark::State& state) {
  std::vector<std::string> corpus{"lower newest widest lowest", "newer wider slower"};
  MergeTable merges = BpeLearn(corpus, 30);
  for (auto _ : state) benchmark::DoNotOptimize(BpeApply("unwidestlowerness", merges));
}
BENCHMARK(BM_BpeApply);

}  // namespace
}  // namespace phonepool

BENCHMARK_MAIN();
