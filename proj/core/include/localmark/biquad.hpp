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

#include <array>
#include <vector>

namespace localmark {

// Direct-form biquad, a0 normalized to 1:
//   y[n] = b0 x[n] + b1 x[n-1] + b2 x[n-2] - a1 y[n-1] - a2 y[n-2]
struct Biquad {
  double b0 = 1.0, b1 = 0.0, b2 = 0.0;
  double a1 = 0.0, a2 = 0.0;

  bool stable() const;
};

using BiquadCascade = std::vector<Biquad>;

// Runs the cascade over x with zero initial state (templated over scalar so
// the autodiff tape can reuse the exact same arithmetic).
template <typename S>
void run_cascade(const BiquadCascade& cascade, const S* x, S* y, int64_t n) {
  for (int64_t i = 0; i < n; ++i) y[i] = x[i];
  for (const Biquad& q : cascade) {
    double x1 = 0.0, x2 = 0.0, y1 = 0.0, y2 = 0.0;
    for (int64_t i = 0; i < n; ++i) {
      const double xi = static_cast<double>(y[i]);
      const double yi = q.b0 * xi + q.b1 * x1 + q.b2 * x2 - q.a1 * y1 - q.a2 * y2;
      x2 = x1;
      x1 = xi;
      y2 = y1;
      y1 = yi;
      y[i] = static_cast<S>(yi);
    }
  }
}

// Adjoint of run_cascade with zero initial state: filters the time-reversed
// signal and reverses back. Exact because the cascade is a lower-triangular
// Toeplitz operator.
template <typename S>
void run_cascade_adjoint(const BiquadCascade& cascade, const S* g, S* out, int64_t n) {
  std::vector<S> rev(n);
  for (int64_t i = 0; i < n; ++i) rev[i] = g[n - 1 - i];
  std::vector<S> tmp(n);
  run_cascade(cascade, rev.data(), tmp.data(), n);
  for (int64_t i = 0; i < n; ++i) out[i] = tmp[n - 1 - i];
}

// Butterworth designs of even order (order/2 cascaded biquads).
BiquadCascade butterworth_lowpass(int order, double cutoff_hz, double sample_rate);
BiquadCascade butterworth_highpass(int order, double cutoff_hz, double sample_rate);

// Two-stage K-weighting pre-filter (high-shelf then highpass) designed for an
// arbitrary sample rate by bilinear transform of the analog prototype.
BiquadCascade k_weighting_filter(double sample_rate);

// |H(f)| of a cascade at one frequency.
double cascade_magnitude(const BiquadCascade& cascade, double freq_hz, double sample_rate);

}  // namespace localmark
