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

#include <cmath>
#include <complex>
#include <filesystem>
#include <functional>
#include <string>
#include <vector>

#include "localmark/audio.hpp"
#include "localmark/rng.hpp"

namespace localmark::test {

// Naive O(n^2) DFT, the independent oracle for anything FFT-shaped.
inline std::vector<std::complex<double>> naive_dft(const std::vector<double>& x) {
  const size_t n = x.size();
  std::vector<std::complex<double>> out(n);
  for (size_t k = 0; k < n; ++k) {
    std::complex<double> acc(0.0, 0.0);
    for (size_t t = 0; t < n; ++t) {
      const double angle = -2.0 * M_PI * static_cast<double>(k) * static_cast<double>(t) /
                           static_cast<double>(n);
      acc += x[t] * std::complex<double>(std::cos(angle), std::sin(angle));
    }
    out[k] = acc;
  }
  return out;
}

// Energy of the DFT bins whose frequency falls in [lo_hz, hi_hz).
inline double band_energy_dft(const std::vector<double>& x, double sample_rate, double lo_hz,
                              double hi_hz) {
  const auto spec = naive_dft(x);
  const size_t n = x.size();
  double acc = 0.0;
  for (size_t k = 0; k < n; ++k) {
    double f = static_cast<double>(k) * sample_rate / static_cast<double>(n);
    if (f > sample_rate / 2.0) f = sample_rate - f;  // fold negative frequencies
    if (f >= lo_hz && f < hi_hz) acc += std::norm(spec[k]);
  }
  return acc / static_cast<double>(n);  // Parseval scaling
}

inline AudioClip sine_clip(double freq, double amplitude, double seconds, int sample_rate) {
  AudioClip clip;
  clip.sample_rate = sample_rate;
  const int64_t n = std::llround(seconds * sample_rate);
  clip.samples.resize(n);
  for (int64_t i = 0; i < n; ++i) {
    clip.samples[i] =
        static_cast<float>(amplitude * std::sin(2.0 * M_PI * freq * i / sample_rate));
  }
  return clip;
}

inline AudioClip noise_clip(double stddev, int64_t n, int sample_rate, uint64_t seed) {
  Rng rng(seed);
  AudioClip clip;
  clip.sample_rate = sample_rate;
  clip.samples.resize(n);
  for (auto& s : clip.samples) s = static_cast<float>(rng.normal(0.0, stddev));
  return clip;
}

// Central finite difference of f at x along each coordinate.
inline std::vector<double> finite_difference(const std::function<double(const std::vector<double>&)>& f,
                                             std::vector<double> x, double h) {
  std::vector<double> g(x.size());
  for (size_t i = 0; i < x.size(); ++i) {
    const double keep = x[i];
    x[i] = keep + h;
    const double fp = f(x);
    x[i] = keep - h;
    const double fm = f(x);
    x[i] = keep;
    g[i] = (fp - fm) / (2.0 * h);
  }
  return g;
}

// Max relative error between two gradients, with an absolute floor to avoid
// blowing up near-zero components.
inline double max_rel_error(const std::vector<double>& a, const std::vector<double>& b,
                            double floor = 1e-6) {
  double worst = 0.0;
  for (size_t i = 0; i < a.size(); ++i) {
    const double denom = std::max({std::abs(a[i]), std::abs(b[i]), floor});
    worst = std::max(worst, std::abs(a[i] - b[i]) / denom);
  }
  return worst;
}

// Scratch directory under the system temp path, removed on destruction.
class TempDir {
 public:
  explicit TempDir(const std::string& tag) {
    path_ = (std::filesystem::temp_directory_path() /
             ("localmark_" + tag + "_" + std::to_string(::getpid())))
                .string();
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  const std::string& path() const { return path_; }

 private:
  std::string path_;
};

}  // namespace localmark::test
