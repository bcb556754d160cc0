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

#include "localmark/dataset.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdio>
#include <filesystem>

#include "localmark/biquad.hpp"
#include "localmark/errors.hpp"

namespace localmark {

WavFolder WavFolder::load(const std::string& dir, int sample_rate, int64_t min_length) {
  namespace fs = std::filesystem;
  if (!fs::is_directory(dir)) throw IoError(dir + " is not a directory");
  WavFolder out;
  out.sample_rate = sample_rate;
  for (const auto& entry : fs::directory_iterator(dir)) {
    if (!entry.is_regular_file()) continue;
    if (entry.path().extension() != ".wav") continue;
    out.paths.push_back(entry.path().string());
  }
  std::sort(out.paths.begin(), out.paths.end());
  for (const std::string& p : out.paths) {
    AudioClip clip = load_wav(p);
    if (clip.sample_rate != sample_rate) clip = resample(clip, sample_rate);
    if (clip.length() < min_length) continue;
    out.clips.push_back(std::move(clip.samples));
  }
  return out;
}

namespace {

// Second-order resonator at (freq, bandwidth); unity gain at the peak.
Biquad resonator(double freq, double bandwidth, double sample_rate) {
  const double r = std::exp(-M_PI * bandwidth / sample_rate);
  const double theta = 2.0 * M_PI * freq / sample_rate;
  Biquad q;
  q.a1 = -2.0 * r * std::cos(theta);
  q.a2 = r * r;
  q.b0 = 1.0 - r;
  q.b1 = 0.0;
  q.b2 = 0.0;
  return q;
}

}  // namespace

AudioClip synth_speech(Rng& rng, double seconds, int sample_rate) {
  const int64_t n = std::max<int64_t>(1, std::llround(seconds * sample_rate));
  std::vector<double> source(n, 0.0);

  // Segment plan: voiced / fricative / pause stretches.
  int64_t pos = 0;
  double f0 = rng.uniform(90.0, 220.0);
  while (pos < n) {
    const double u = rng.uniform();
    const int64_t seg_len = static_cast<int64_t>(rng.uniform(0.08, 0.35) * sample_rate);
    const int64_t end = std::min(n, pos + seg_len);
    if (u < 0.62) {
      // Voiced: impulse-train glottal source with jitter and a syllabic
      // amplitude envelope.
      double phase = rng.uniform();
      const double vibrato_rate = rng.uniform(3.0, 7.0);
      const double vibrato_depth = rng.uniform(0.0, 0.03);
      const double env_rate = rng.uniform(2.0, 5.0);
      const double env_phase = rng.uniform(0.0, 2.0 * M_PI);
      f0 = std::clamp(f0 + rng.normal(0.0, 15.0), 80.0, 260.0);
      for (int64_t i = pos; i < end; ++i) {
        const double tsec = static_cast<double>(i) / sample_rate;
        const double inst_f0 =
            f0 * (1.0 + vibrato_depth * std::sin(2.0 * M_PI * vibrato_rate * tsec));
        phase += inst_f0 / sample_rate;
        if (phase >= 1.0) {
          phase -= 1.0;
          source[i] += 1.0;
        }
        const double env = 0.55 + 0.45 * std::sin(2.0 * M_PI * env_rate * tsec + env_phase);
        source[i] *= env;
        source[i] += rng.normal(0.0, 0.004);  // aspiration noise
      }
    } else if (u < 0.85) {
      // Fricative: shaped noise burst.
      const double amp = rng.uniform(0.05, 0.25);
      for (int64_t i = pos; i < end; ++i) source[i] = amp * rng.normal();
    }
    // else: pause (leave zeros)
    pos = end;
  }

  // Formant filtering with slowly drifting resonators, re-designed per block.
  std::vector<double> shaped(n, 0.0);
  double f1 = rng.uniform(300.0, 850.0);
  double f2 = rng.uniform(900.0, 2100.0);
  double f3 = rng.uniform(2200.0, 3200.0);
  const int64_t block = sample_rate / 20;  // 50 ms
  std::array<double, 12> state{};
  for (int64_t start = 0; start < n; start += block) {
    const int64_t end = std::min(n, start + block);
    f1 = std::clamp(f1 + rng.normal(0.0, 40.0), 250.0, 900.0);
    f2 = std::clamp(f2 + rng.normal(0.0, 80.0), 850.0, 2300.0);
    f3 = std::clamp(f3 + rng.normal(0.0, 60.0), 2100.0, 3400.0);
    const Biquad r1 = resonator(f1, 80.0, sample_rate);
    const Biquad r2 = resonator(f2, 120.0, sample_rate);
    const Biquad r3 = resonator(f3, 180.0, sample_rate);
    const Biquad* rs[3] = {&r1, &r2, &r3};
    for (int64_t i = start; i < end; ++i) {
      double x = source[i];
      double acc = 0.0;
      for (int f = 0; f < 3; ++f) {
        const Biquad& q = *rs[f];
        double* st = &state[f * 4];
        const double y = q.b0 * x + q.b1 * st[0] + q.b2 * st[1] - q.a1 * st[2] - q.a2 * st[3];
        st[1] = st[0];
        st[0] = x;
        st[3] = st[2];
        st[2] = y;
        acc += y * (f == 0 ? 1.0 : (f == 1 ? 0.6 : 0.35));
      }
      shaped[i] = acc;
    }
  }

  // Normalize to a speech-like peak, over a recording noise floor so pauses
  // never produce exactly-silent stretches.
  double peak = 1e-9;
  for (double v : shaped) peak = std::max(peak, std::abs(v));
  const double gain = 0.5 / peak;
  AudioClip clip;
  clip.sample_rate = sample_rate;
  clip.samples.resize(n);
  for (int64_t i = 0; i < n; ++i) {
    clip.samples[i] = static_cast<float>(shaped[i] * gain + rng.normal(0.0, 2e-4));
  }
  return clip;
}

void write_synth_dataset(const std::string& dir, int count, double seconds, uint64_t seed,
                         int sample_rate) {
  std::filesystem::create_directories(dir);
  for (int i = 0; i < count; ++i) {
    Rng rng(Rng::mix(seed, static_cast<uint64_t>(i)));
    AudioClip clip = synth_speech(rng, seconds, sample_rate);
    char name[64];
    std::snprintf(name, sizeof(name), "/clip_%05d.wav", i);
    save_wav(clip, dir + name, WavEncoding::kFloat32);
  }
}

}  // namespace localmark
