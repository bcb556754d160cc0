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

// Single-pass vs sliding-window detection cost on 1-10 s clips.

#include <benchmark/benchmark.h>

#include "localmark/dataset.hpp"
#include "localmark/inference.hpp"
#include "localmark/models.hpp"

using namespace localmark;

namespace {

const ParameterStore& detector() {
  static ParameterStore det = init_detector(ModelConfig::small(), 7);
  return det;
}

AudioClip clip_of_seconds(double seconds) {
  Rng rng(42);
  return synth_speech(rng, seconds);
}

void SinglePassDetect(benchmark::State& state) {
  const AudioClip clip = clip_of_seconds(static_cast<double>(state.range(0)));
  for (auto _ : state) {
    auto out = detector_forward(detector(), clip);
    benchmark::DoNotOptimize(out.presence.data());
  }
  state.SetLabel(std::to_string(state.range(0)) + "s clip, 1 pass");
}
BENCHMARK(SinglePassDetect)->Arg(1)->Arg(5)->Arg(10)->Unit(benchmark::kMillisecond);

void SlidingWindowDetect(benchmark::State& state) {
  const AudioClip clip = clip_of_seconds(static_cast<double>(state.range(0)));
  int64_t passes = 0;
  for (auto _ : state) {
    auto res = sliding_window_detect(detector(), clip, 1.0, 0.05);
    passes = res.passes;
    benchmark::DoNotOptimize(res.detection.score);
  }
  state.SetLabel(std::to_string(state.range(0)) + "s clip, " + std::to_string(passes) +
                 " passes");
}
BENCHMARK(SlidingWindowDetect)->Arg(5)->Arg(10)->Unit(benchmark::kMillisecond);

void GeneratorEmbed(benchmark::State& state) {
  static ParameterStore gen = init_generator(ModelConfig::small(), 7);
  const AudioClip clip = clip_of_seconds(static_cast<double>(state.range(0)));
  for (auto _ : state) {
    auto delta = generator_forward(gen, clip, std::nullopt);
    benchmark::DoNotOptimize(delta.data());
  }
}
BENCHMARK(GeneratorEmbed)->Arg(1)->Arg(10)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
