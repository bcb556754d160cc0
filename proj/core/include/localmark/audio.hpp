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

#include <cstdint>
#include <string>
#include <vector>

namespace localmark {

// Mono waveform. All internal processing runs at 16 kHz; the sample rate is
// carried so files at other rates can be resampled on load.
struct AudioClip {
  std::vector<float> samples;
  int sample_rate = 16000;

  int64_t length() const { return static_cast<int64_t>(samples.size()); }
  double duration_seconds() const {
    return static_cast<double>(samples.size()) / sample_rate;
  }

  // Throws ValidationError on empty, non-positive rate or non-finite samples.
  void validate() const;
};

enum class WavEncoding { kPcm16, kFloat32 };

// Reads a RIFF/WAV file (PCM-16 or IEEE float32, any channel count) and
// returns the channel average scaled to [-1, 1].
AudioClip load_wav(const std::string& path);

void save_wav(const AudioClip& clip, const std::string& path,
              WavEncoding encoding = WavEncoding::kFloat32);

// Band-limited (windowed-sinc) resampling. Output length is
// round(T * target_rate / sample_rate).
AudioClip resample(const AudioClip& clip, int target_rate);

// One signal split into B complementary frequency bands, each band cut into
// fixed-size windows. segment(b, w) has exactly window_size samples; the last
// window is zero-padded.
struct TimeFrequencyGrid {
  int band_count = 0;
  int window_size = 0;
  double overlap_ratio = 0.0;
  int64_t hop = 0;
  int64_t windows_per_band = 0;
  // band_signals[b] has the original length T.
  std::vector<std::vector<float>> band_signals;

  std::vector<float> segment(int band, int64_t window) const;
};

// Octave-spaced band edges in Hz for `bands` bands at the given rate: the
// lowest band is [0, nyquist/2^(bands-1)) and every later band doubles.
std::vector<double> octave_band_edges(int bands, int sample_rate);

// Splits `clip` into `bands` complementary frequency bands (FFT projection,
// zero transition error) and frames each band with window W and overlap r.
TimeFrequencyGrid split_time_frequency(const AudioClip& clip, int bands, int window_size,
                                       double overlap_ratio);

// Band-splits a raw buffer; row b of the result is band b, each of length n.
std::vector<std::vector<float>> band_split(const float* x, int64_t n, int bands,
                                           int sample_rate);

}  // namespace localmark
