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

#include "localmark/biquad.hpp"

#include <cmath>
#include <complex>

#include "localmark/errors.hpp"

namespace localmark {

namespace {

// Analog K-weighting prototype (s-plane poles/zeros of the BS.1770 shelving
// stage, plus a double real pole at -240 rad/s for the highpass stage).
constexpr double kShelfGain = 1.585;
constexpr double kHighpassPole = -240.0;
const std::complex<double> kShelfPole{-7471.63, 7534.19};
const std::complex<double> kShelfZero{-5943.129, 5976.74};

double clamp_cutoff(double cutoff_hz, double sample_rate) {
  const double nyquist = sample_rate / 2.0;
  return std::min(std::max(cutoff_hz, 1.0), 0.499 * 2.0 * nyquist * 0.999);
}

}  // namespace

bool Biquad::stable() const {
  // Poles of z^2 + a1 z + a2 inside the unit circle (Jury criterion).
  return std::abs(a2) < 1.0 && std::abs(a1) < 1.0 + a2;
}

BiquadCascade butterworth_lowpass(int order, double cutoff_hz, double sample_rate) {
  if (order < 2 || order % 2 != 0) throw ConfigError("butterworth order must be even >= 2");
  cutoff_hz = clamp_cutoff(cutoff_hz, sample_rate);
  const double warped = std::tan(M_PI * cutoff_hz / sample_rate);
  BiquadCascade cascade;
  for (int k = 0; k < order / 2; ++k) {
    // Analog poles at angle theta on the unit circle, scaled by warped cutoff.
    const double theta = M_PI * (2.0 * k + 1.0) / (2.0 * order) + M_PI / 2.0;
    const double re = std::cos(theta) * warped;
    const double im = std::sin(theta) * warped;
    // Bilinear transform (K = 1 after prewarp): s = (z-1)/(z+1).
    const double a0 = 1.0 - 2.0 * re + re * re + im * im;
    Biquad q;
    q.a1 = (2.0 * (re * re + im * im) - 2.0) / a0;
    q.a2 = (1.0 + 2.0 * re + re * re + im * im) / a0;
    const double gain = (re * re + im * im) / a0;
    q.b0 = gain;
    q.b1 = 2.0 * gain;
    q.b2 = gain;
    cascade.push_back(q);
  }
  return cascade;
}

BiquadCascade butterworth_highpass(int order, double cutoff_hz, double sample_rate) {
  if (order < 2 || order % 2 != 0) throw ConfigError("butterworth order must be even >= 2");
  cutoff_hz = clamp_cutoff(cutoff_hz, sample_rate);
  const double warped = std::tan(M_PI * cutoff_hz / sample_rate);
  BiquadCascade cascade;
  for (int k = 0; k < order / 2; ++k) {
    const double theta = M_PI * (2.0 * k + 1.0) / (2.0 * order) + M_PI / 2.0;
    const double re = std::cos(theta) * warped;
    const double im = std::sin(theta) * warped;
    const double a0 = 1.0 - 2.0 * re + re * re + im * im;
    Biquad q;
    q.a1 = (2.0 * (re * re + im * im) - 2.0) / a0;
    q.a2 = (1.0 + 2.0 * re + re * re + im * im) / a0;
    // Highpass numerator (z-1)^2.
    q.b0 = 1.0 / a0;
    q.b1 = -2.0 / a0;
    q.b2 = 1.0 / a0;
    cascade.push_back(q);
  }
  return cascade;
}

BiquadCascade k_weighting_filter(double sample_rate) {
  if (sample_rate < 8000.0) throw ConfigError("K-weighting needs sample rate >= 8 kHz");
  const double K = 2.0 * sample_rate;
  const std::complex<double> complex_K{K, 0.0};

  // Stage 1: high-frequency shelf from its conjugate pole/zero pair.
  const std::complex<double> zp = (complex_K + kShelfPole) / (complex_K - kShelfPole);
  const std::complex<double> zz = (complex_K + kShelfZero) / (complex_K - kShelfZero);
  std::complex<double> y = kShelfGain;
  y /= (kShelfPole - complex_K) * (std::conj(kShelfPole) - complex_K);
  y *= (kShelfZero - complex_K) * (std::conj(kShelfZero) - complex_K);
  const double gain = std::abs(y);

  Biquad shelf;
  shelf.a1 = -2.0 * zp.real();
  shelf.a2 = std::norm(zp);
  shelf.b0 = gain;
  shelf.b1 = -2.0 * zz.real() * gain;
  shelf.b2 = std::norm(zz) * gain;

  // Stage 2: highpass from the double real pole, zeros at DC.
  const double rp = (K + kHighpassPole) / (K - kHighpassPole);
  Biquad highpass;
  highpass.a1 = -2.0 * rp;
  highpass.a2 = rp * rp;
  highpass.b0 = 1.0;
  highpass.b1 = -2.0;
  highpass.b2 = 1.0;

  BiquadCascade cascade{shelf, highpass};
  for (const Biquad& q : cascade) {
    if (!q.stable()) throw ConfigError("unstable K-weighting design");
  }
  return cascade;
}

double cascade_magnitude(const BiquadCascade& cascade, double freq_hz, double sample_rate) {
  const double w = 2.0 * M_PI * freq_hz / sample_rate;
  const std::complex<double> z = std::polar(1.0, w);
  const std::complex<double> z2 = z * z;
  std::complex<double> h{1.0, 0.0};
  for (const Biquad& q : cascade) {
    h *= (q.b0 * z2 + q.b1 * z + q.b2) / (z2 + q.a1 * z + q.a2);
  }
  return std::abs(h);
}

}  // namespace localmark
