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

#pragma once

#include <string>
#include <vector>

#include "localmark/audio.hpp"
#include "localmark/rng.hpp"

namespace localmark {

// Loads every .wav under `dir` (non-recursive), resampled to `sample_rate`
// and kept in memory. Paths are sorted for reproducibility.
struct WavFolder {
  std::vector<std::string> paths;
  std::vector<std::vector<float>> clips;
  int sample_rate = 16000;

  static WavFolder load(const std::string& dir, int sample_rate = 16000,
                        int64_t min_length = 0);
};

// Formant-style synthetic speech: voiced stretches with drifting pitch and
// formants, fricative noise bursts and pauses. Good enough to exercise
// speech-band training without shipping a corpus.
AudioClip synth_speech(Rng& rng, double seconds, int sample_rate = 16000);

// Writes `count` synthetic clips (clip_%05d.wav, float32) into dir.
void write_synth_dataset(const std::string& dir, int count, double seconds, uint64_t seed,
                         int sample_rate = 16000);

}  // namespace localmark
