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

#include <vector>

namespace localmark {

// Triangular mel filterbank, row-major (mel_bins x fft_bins) where
// fft_bins = n_fft/2 + 1. Filters span 0 Hz to Nyquist on the HTK mel scale.
std::vector<double> mel_filterbank(int mel_bins, int n_fft, double sample_rate);

double hz_to_mel(double hz);
double mel_to_hz(double mel);

}  // namespace localmark
