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

#include "localmark/mel.hpp"

#include <cmath>

#include "localmark/errors.hpp"

namespace localmark {

double hz_to_mel(double hz) { return 2595.0 * std::log10(1.0 + hz / 700.0); }

double mel_to_hz(double mel) { return 700.0 * (std::pow(10.0, mel / 2595.0) - 1.0); }

std::vector<double> mel_filterbank(int mel_bins, int n_fft, double sample_rate) {
  if (mel_bins < 1 || n_fft < 2) throw ConfigError("bad mel filterbank shape");
  const int fft_bins = n_fft / 2 + 1;
  const double nyquist = sample_rate / 2.0;
  const double mel_max = hz_to_mel(nyquist);

  std::vector<double> centers(mel_bins + 2);
  for (int i = 0; i < mel_bins + 2; ++i) {
    centers[i] = mel_to_hz(mel_max * i / (mel_bins + 1));
  }

  std::vector<double> bank(static_cast<size_t>(mel_bins) * fft_bins, 0.0);
  const double bin_hz = sample_rate / n_fft;
  for (int m = 0; m < mel_bins; ++m) {
    const double lo = centers[m], mid = centers[m + 1], hi = centers[m + 2];
    for (int k = 0; k < fft_bins; ++k) {
      const double f = k * bin_hz;
      double w = 0.0;
      if (f > lo && f < mid && mid > lo) {
        w = (f - lo) / (mid - lo);
      } else if (f >= mid && f < hi && hi > mid) {
        w = (hi - f) / (hi - mid);
      }
      bank[static_cast<size_t>(m) * fft_bins + k] = w;
    }
  }
  return bank;
}

}  // namespace localmark
