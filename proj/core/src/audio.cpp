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

#include "localmark/audio.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstring>
#include <fstream>

#include "localmark/errors.hpp"
#include "localmark/fft.hpp"
#include "localmark/resample_kernel.hpp"

namespace localmark {

namespace {

constexpr uint16_t kFormatPcm = 1;
constexpr uint16_t kFormatFloat = 3;
constexpr uint16_t kFormatExtensible = 0xFFFE;

uint32_t read_u32(const uint8_t* p) {
  return static_cast<uint32_t>(p[0]) | (static_cast<uint32_t>(p[1]) << 8) |
         (static_cast<uint32_t>(p[2]) << 16) | (static_cast<uint32_t>(p[3]) << 24);
}

uint16_t read_u16(const uint8_t* p) {
  return static_cast<uint16_t>(p[0] | (p[1] << 8));
}

void write_u32(std::ofstream& out, uint32_t v) {
  uint8_t b[4] = {static_cast<uint8_t>(v), static_cast<uint8_t>(v >> 8),
                  static_cast<uint8_t>(v >> 16), static_cast<uint8_t>(v >> 24)};
  out.write(reinterpret_cast<const char*>(b), 4);
}

void write_u16(std::ofstream& out, uint16_t v) {
  uint8_t b[2] = {static_cast<uint8_t>(v), static_cast<uint8_t>(v >> 8)};
  out.write(reinterpret_cast<const char*>(b), 2);
}

}  // namespace

void AudioClip::validate() const {
  if (samples.empty()) throw ValidationError("audio clip is empty");
  if (sample_rate <= 0) throw ValidationError("sample rate must be positive");
  for (float s : samples) {
    if (!std::isfinite(s)) throw ValidationError("audio clip contains non-finite samples");
  }
}

AudioClip load_wav(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path);
  std::vector<uint8_t> raw((std::istreambuf_iterator<char>(in)),
                           std::istreambuf_iterator<char>());
  if (raw.size() < 12 || std::memcmp(raw.data(), "RIFF", 4) != 0 ||
      std::memcmp(raw.data() + 8, "WAVE", 4) != 0) {
    throw FormatError(path + ": not a RIFF/WAVE file");
  }

  uint16_t format = 0, channels = 0, bits = 0;
  uint32_t rate = 0;
  const uint8_t* data = nullptr;
  size_t data_len = 0;

  size_t pos = 12;
  while (pos + 8 <= raw.size()) {
    const char* id = reinterpret_cast<const char*>(raw.data() + pos);
    const uint32_t chunk_len = read_u32(raw.data() + pos + 4);
    const size_t body = pos + 8;
    if (body + chunk_len > raw.size()) throw IoError(path + ": truncated chunk");
    if (std::memcmp(id, "fmt ", 4) == 0) {
      if (chunk_len < 16) throw FormatError(path + ": short fmt chunk");
      format = read_u16(raw.data() + body);
      channels = read_u16(raw.data() + body + 2);
      rate = read_u32(raw.data() + body + 4);
      bits = read_u16(raw.data() + body + 14);
      if (format == kFormatExtensible && chunk_len >= 40) {
        format = read_u16(raw.data() + body + 24);  // first two bytes of SubFormat GUID
      }
    } else if (std::memcmp(id, "data", 4) == 0) {
      data = raw.data() + body;
      data_len = chunk_len;
    }
    pos = body + chunk_len + (chunk_len & 1);
  }

  if (rate == 0 || channels == 0) throw FormatError(path + ": missing fmt chunk");
  if (data == nullptr) throw FormatError(path + ": missing data chunk");

  const bool pcm16 = format == kFormatPcm && bits == 16;
  const bool f32 = format == kFormatFloat && bits == 32;
  if (!pcm16 && !f32) {
    throw FormatError(path + ": unsupported encoding (want PCM-16 or float32)");
  }

  const size_t bytes_per_sample = bits / 8;
  const size_t frame_bytes = bytes_per_sample * channels;
  if (frame_bytes == 0 || data_len % frame_bytes != 0) {
    throw IoError(path + ": data chunk is not a whole number of frames");
  }
  const size_t frames = data_len / frame_bytes;
  if (frames == 0) throw FormatError(path + ": empty data chunk");

  AudioClip clip;
  clip.sample_rate = static_cast<int>(rate);
  clip.samples.resize(frames);
  const double inv_channels = 1.0 / channels;
  for (size_t f = 0; f < frames; ++f) {
    double acc = 0.0;
    for (uint16_t c = 0; c < channels; ++c) {
      const uint8_t* p = data + f * frame_bytes + c * bytes_per_sample;
      if (pcm16) {
        int16_t v;
        std::memcpy(&v, p, 2);
        acc += static_cast<double>(v) / 32768.0;
      } else {
        float v;
        std::memcpy(&v, p, 4);
        acc += v;
      }
    }
    clip.samples[f] = static_cast<float>(acc * inv_channels);
  }
  return clip;
}

void save_wav(const AudioClip& clip, const std::string& path, WavEncoding encoding) {
  clip.validate();
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write " + path);

  const bool f32 = encoding == WavEncoding::kFloat32;
  const uint32_t bytes_per_sample = f32 ? 4 : 2;
  const uint32_t data_len = static_cast<uint32_t>(clip.samples.size() * bytes_per_sample);

  out.write("RIFF", 4);
  write_u32(out, 36 + data_len);
  out.write("WAVE", 4);
  out.write("fmt ", 4);
  write_u32(out, 16);
  write_u16(out, f32 ? kFormatFloat : kFormatPcm);
  write_u16(out, 1);  // mono
  write_u32(out, static_cast<uint32_t>(clip.sample_rate));
  write_u32(out, static_cast<uint32_t>(clip.sample_rate) * bytes_per_sample);
  write_u16(out, static_cast<uint16_t>(bytes_per_sample));
  write_u16(out, static_cast<uint16_t>(bytes_per_sample * 8));
  out.write("data", 4);
  write_u32(out, data_len);

  if (f32) {
    out.write(reinterpret_cast<const char*>(clip.samples.data()), data_len);
  } else {
    for (float s : clip.samples) {
      const double scaled = std::round(static_cast<double>(s) * 32768.0);
      const int16_t v = static_cast<int16_t>(std::clamp(scaled, -32768.0, 32767.0));
      char b[2];
      std::memcpy(b, &v, 2);
      out.write(b, 2);
    }
  }
  if (!out) throw IoError("write failed for " + path);
}

AudioClip resample(const AudioClip& clip, int target_rate) {
  clip.validate();
  if (target_rate <= 0) throw ValidationError("target rate must be positive");
  if (target_rate == clip.sample_rate) return clip;

  const double ratio = static_cast<double>(target_rate) / clip.sample_rate;
  AudioClip out;
  out.sample_rate = target_rate;
  out.samples = SincPlan(clip.length(), ratio).apply(clip.samples.data());
  return out;
}

std::vector<double> octave_band_edges(int bands, int sample_rate) {
  if (bands < 1) throw ValidationError("band count must be >= 1");
  const double nyquist = sample_rate / 2.0;
  std::vector<double> edges;
  for (int b = 1; b < bands; ++b) {
    edges.push_back(nyquist / std::pow(2.0, bands - b));
  }
  return edges;  // interior edges only; bands = edges.size() + 1
}

std::vector<std::vector<float>> band_split(const float* x, int64_t n, int bands,
                                           int sample_rate) {
  if (bands < 1) throw ValidationError("band count must be >= 1");
  std::vector<std::vector<float>> out(bands);
  if (bands == 1) {
    out[0].assign(x, x + n);
    return out;
  }
  const size_t padded = fft::next_pow2(static_cast<size_t>(n));
  auto spec = fft::real_forward(x, static_cast<size_t>(n), padded);
  const auto edges = octave_band_edges(bands, sample_rate);
  const double bin_hz = static_cast<double>(sample_rate) / static_cast<double>(padded);

  // Brickwall projections: bin k belongs to the band whose range contains
  // k*bin_hz, so the bands sum back to the input exactly.
  for (int b = 0; b < bands; ++b) {
    const double lo = b == 0 ? 0.0 : edges[b - 1];
    const double hi = b == bands - 1 ? 1e30 : edges[b];
    std::vector<std::complex<float>> masked(spec.size(), {0.0f, 0.0f});
    for (size_t k = 0; k < spec.size(); ++k) {
      const double f = k * bin_hz;
      if (f >= lo && f < hi) masked[k] = spec[k];
    }
    auto full = fft::real_inverse(masked, padded);
    out[b].assign(full.begin(), full.begin() + n);
  }
  return out;
}

TimeFrequencyGrid split_time_frequency(const AudioClip& clip, int bands, int window_size,
                                       double overlap_ratio) {
  clip.validate();
  if (bands < 1) throw ValidationError("band count must be >= 1");
  if (window_size < 2) throw ValidationError("window size must be >= 2");
  if (overlap_ratio < 0.0 || overlap_ratio >= 1.0) {
    throw ValidationError("overlap ratio must be in [0, 1)");
  }

  TimeFrequencyGrid grid;
  grid.band_count = bands;
  grid.window_size = window_size;
  grid.overlap_ratio = overlap_ratio;
  grid.hop = std::max<int64_t>(1, std::llround(window_size * (1.0 - overlap_ratio)));
  grid.windows_per_band =
      (clip.length() + grid.hop - 1) / grid.hop;  // ceil(T / hop)
  if (grid.windows_per_band < 1) grid.windows_per_band = 1;
  grid.band_signals = band_split(clip.samples.data(), clip.length(), bands, clip.sample_rate);
  return grid;
}

std::vector<float> TimeFrequencyGrid::segment(int band, int64_t window) const {
  const auto& sig = band_signals.at(band);
  std::vector<float> seg(window_size, 0.0f);
  const int64_t start = window * hop;
  for (int w = 0; w < window_size; ++w) {
    const int64_t t = start + w;
    if (t >= 0 && t < static_cast<int64_t>(sig.size())) seg[w] = sig[t];
  }
  return seg;
}

}  // namespace localmark
