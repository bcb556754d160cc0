// Copyright 2026 The Localmark Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     https://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include <benchmark/benchmark.h>

#include "localmark/audio.hpp"
#include "localmark/dataset.hpp"
#include "localmark/losses.hpp"

using namespace localmark;

namespace {

AudioClip speech_second() {
  Rng rng(3);
  return synth_speech(rng, 1.0);
}

void BlockLoudness(benchmark::State& state) {
  const AudioClip clip = speech_second();
  const LoudnessConfig cfg = LoudnessConfig::for_rate(16000);
  for (auto _ : state) {
    benchmark::DoNotOptimize(loudness(clip.samples, cfg));
  }
}
BENCHMARK(BlockLoudness)->Unit(benchmark::kMicrosecond);

void TfLoudnessLoss(benchmark::State& state) {
  const AudioClip clip = speech_second();
  std::vector<float> delta(clip.samples.size());
  Rng rng(4);
  for (auto& v : delta) v = static_cast<float>(rng.normal(0.0, 1e-3));
  const LoudnessConfig cfg = LoudnessConfig::for_rate(16000);
  const TfGridParams grid;
  for (auto _ : state) {
    benchmark::DoNotOptimize(tf_loudness_loss(tf_loudness_diff(clip, delta, grid, cfg)));
  }
}
BENCHMARK(TfLoudnessLoss)->Unit(benchmark::kMillisecond);

void MsSpecLoss(benchmark::State& state) {
  const AudioClip clip = speech_second();
  AudioClip other = clip;
  Rng rng(5);
  for (auto& v : other.samples) v += static_cast<float>(rng.normal(0.0, 1e-3));
  for (auto _ : state) {
    benchmark::DoNotOptimize(msspec_loss(clip, other));
  }
}
BENCHMARK(MsSpecLoss)->Unit(benchmark::kMillisecond);

void Resample16kTo32k(benchmark::State& state) {
  const AudioClip clip = speech_second();
  for (auto _ : state) {
    benchmark::DoNotOptimize(resample(clip, 32000).samples.data());
  }
}
BENCHMARK(Resample16kTo32k)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
